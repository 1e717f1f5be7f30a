//! q-expansions of the normalized Weierstrass function at 2-torsion-like
//! points `z = (aτ + b)/2` of the lattice `ℤ + Nℤτ`.
//!
//! The normalization is `wpa = −4·[1/12 + Σ_x x/(1−x)²]`, summed over
//! `x = u`, `x = Qⁿu`, `x = Qⁿu⁻¹` and `−2·Qⁿ` for `n ≥ 1`, with
//! `u = (−1)^b q^(a/2)` and `Q = q^N`. With this constant
//! `−3·wpa(2,0,2)` is the unitary weight-2 form `1 + 24q + …`.

use std::fmt;

use thiserror::Error;

use crate::series::{ratio, Exponent, Grid, QSeries, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeierstrassError {
    #[error("({a}τ + {b})/2 is a lattice point for level {level}")]
    LatticePoint { a: u32, b: u32, level: u32 },
    #[error("invalid torsion point: {0}")]
    Invalid(String),
}

/// The point `(aτ + b)/2` on the lattice spanned by `1` and `Nτ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorsionPoint {
    a: u32,
    b: u32,
    level: u32,
}

impl TorsionPoint {
    pub fn new(a: u32, b: u32, level: u32) -> Result<Self, WeierstrassError> {
        if level == 0 {
            return Err(WeierstrassError::Invalid("level must be positive".into()));
        }
        if b > 1 {
            return Err(WeierstrassError::Invalid(format!("b must be 0 or 1, got {b}")));
        }
        if a > 2 * level {
            return Err(WeierstrassError::Invalid(format!("a must lie in 0..={}, got {a}", 2 * level)));
        }
        if b == 0 && a % (2 * level) == 0 {
            return Err(WeierstrassError::LatticePoint { a, b, level });
        }
        Ok(TorsionPoint { a, b, level })
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn level(&self) -> u32 {
        self.level
    }
}

impl fmt::Display for TorsionPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "wpa({},{},{})", self.a, self.b, self.level)
    }
}

/// Add `sign·Σ_{m≥1} m·xᵐ` for `x = c·q^(h/2)` into a half-grid buffer
/// indexed by half-exponent. `h = 0` contributes the constant `c/(1−c)²`.
fn add_geometric_square(buf: &mut [i64], constant: &mut Rational, c: i64, h: usize, sign: i64) {
    if h == 0 {
        // c = −1 here; c = 1 would be a lattice point
        *constant += ratio(sign * c, (1 - c) * (1 - c));
        return;
    }
    let mut m = 1usize;
    let mut cm = c;
    while m * h < buf.len() {
        buf[m * h] += sign * m as i64 * cm;
        m += 1;
        cm *= c;
    }
}

/// Expansion of `wpa` at `p` below `q^prec`; the result sits on the half
/// grid only when `a` is odd.
pub fn wpa_expand(p: TorsionPoint, prec: impl Into<Exponent>) -> QSeries {
    let prec = prec.into();
    let len = prec.halves().max(0) as usize;
    let c: i64 = if p.b == 1 { -1 } else { 1 };
    let (a, step) = (p.a as usize, 2 * p.level as usize);
    let mut buf = vec![0i64; len];
    let mut constant = ratio(1, 12);
    add_geometric_square(&mut buf, &mut constant, c, a, 1);
    let mut n = 1usize;
    while n * step < len + a {
        add_geometric_square(&mut buf, &mut constant, c, n * step + a, 1);
        add_geometric_square(&mut buf, &mut constant, c, n * step - a, 1);
        add_geometric_square(&mut buf, &mut constant, 1, n * step, -2);
        n += 1;
    }
    let mut coeffs: Vec<Rational> = buf.into_iter().map(|x| Rational::from_integer((-4 * x).into())).collect();
    if let Some(c0) = coeffs.first_mut() {
        *c0 += constant * ratio(-4, 1);
    }
    QSeries::assemble(Grid::Half, Exponent::ZERO, coeffs, prec)
}
