//! Truncated q-series with exact rational coefficients.
//!
//! A [`QSeries`] stores a dense run of coefficients starting at its leading
//! exponent, on either the integer grid or the half-integer grid, together
//! with a precision frontier: every coefficient at an exponent below the
//! frontier is known exactly, nothing at or above it is.
//!
//! All operations are pure. Precision propagates with the usual rules:
//! sums keep the smaller frontier, products keep
//! `min(prec(a) + ν(b), prec(b) + ν(a))`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number, always in lowest terms with a positive denominator.
pub type Rational = num_rational::BigRational;

/// Build a rational from a small integer.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Build `n / d` in lowest terms. Panics when `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("coefficient of q^{requested} requested but the series is only known below q^{prec}")]
    PrecisionExceeded { requested: Exponent, prec: Exponent },
    #[error("exponent {0} is not on the grid of this series")]
    OffGrid(Exponent),
    #[error("series with valuation {0} is not invertible")]
    NotAUnit(Exponent),
    #[error("series is zero below q^{0}")]
    ZeroWithinPrecision(Exponent),
}

/// An exponent of q, restricted to multiples of 1/2.
///
/// Stored as a count of half-units so that arithmetic stays exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Exponent(i64);

impl Exponent {
    pub const ZERO: Exponent = Exponent(0);

    pub const fn int(n: i64) -> Self {
        Exponent(2 * n)
    }

    pub const fn from_halves(h: i64) -> Self {
        Exponent(h)
    }

    pub const fn halves(self) -> i64 {
        self.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn as_integer(self) -> Option<i64> {
        self.is_integer().then_some(self.0 / 2)
    }

    /// Smallest integer exponent that is `>= self`.
    pub fn ceil(self) -> i64 {
        (self.0 + 1).div_euclid(2)
    }

    /// Largest integer exponent that is `<= self`.
    pub fn floor(self) -> i64 {
        self.0.div_euclid(2)
    }

    pub fn scaled(self, d: i64) -> Self {
        Exponent(self.0 * d)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Add for Exponent {
    type Output = Exponent;
    fn add(self, rhs: Exponent) -> Exponent {
        Exponent(self.0 + rhs.0)
    }
}

impl Sub for Exponent {
    type Output = Exponent;
    fn sub(self, rhs: Exponent) -> Exponent {
        Exponent(self.0 - rhs.0)
    }
}

macro_rules! exponent_from_int {
    ($($t:ty),*) => {$(
        impl From<$t> for Exponent {
            fn from(n: $t) -> Exponent {
                Exponent::int(n as i64)
            }
        }
    )*};
}
exponent_from_int!(i32, i64, u32, usize);

/// Exponent grid of a series: integer steps or half-integer steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grid {
    Integer,
    Half,
}

impl Grid {
    /// Step between consecutive stored coefficients, in half-units.
    const fn step(self) -> i64 {
        match self {
            Grid::Integer => 2,
            Grid::Half => 1,
        }
    }

    fn contains(self, e: Exponent) -> bool {
        e.halves() % self.step() == 0
    }

    fn join(self, other: Grid) -> Grid {
        if self == Grid::Half || other == Grid::Half {
            Grid::Half
        } else {
            Grid::Integer
        }
    }
}

/// Truncated formal series in `q^(1/grid)` with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QSeries {
    grid: Grid,
    lead: Exponent,
    coeffs: Vec<Rational>,
    prec: Exponent,
}

impl QSeries {
    /// Series with the given coefficients starting at `lead`; its precision
    /// frontier sits right after the last supplied coefficient.
    pub fn from_coeffs(grid: Grid, lead: Exponent, coeffs: Vec<Rational>) -> Self {
        assert!(grid.contains(lead), "lead exponent {lead} off grid");
        let prec = Exponent(lead.halves() + grid.step() * coeffs.len() as i64);
        Self::assemble(grid, lead, coeffs, prec)
    }

    /// Integer-grid series `Σ coeffs[i] q^(lead+i) + O(q^(lead+len))`.
    pub fn from_ints(lead: i64, coeffs: &[i64]) -> Self {
        Self::from_coeffs(
            Grid::Integer,
            Exponent::int(lead),
            coeffs.iter().map(|&c| rat(c)).collect(),
        )
    }

    pub fn from_bigints(lead: i64, coeffs: Vec<BigInt>) -> Self {
        Self::from_coeffs(
            Grid::Integer,
            Exponent::int(lead),
            coeffs.into_iter().map(Rational::from_integer).collect(),
        )
    }

    pub fn zero(prec: impl Into<Exponent>) -> Self {
        let prec = prec.into();
        let grid = if prec.is_integer() { Grid::Integer } else { Grid::Half };
        QSeries { grid, lead: prec, coeffs: Vec::new(), prec }
    }

    pub fn one(prec: impl Into<Exponent>) -> Self {
        Self::constant(Rational::one(), prec)
    }

    pub fn constant(c: Rational, prec: impl Into<Exponent>) -> Self {
        let prec = prec.into();
        if prec <= Exponent::ZERO {
            return Self::zero(prec);
        }
        let n = prec.ceil() as usize;
        let mut coeffs = vec![Rational::zero(); n];
        coeffs[0] = c;
        Self::assemble(Grid::Integer, Exponent::ZERO, coeffs, Exponent::int(n as i64))
    }

    /// `c·q^e + O(q^prec)`.
    pub fn monomial(c: Rational, e: Exponent, prec: impl Into<Exponent>) -> Self {
        let prec = prec.into();
        let grid = if e.is_integer() && prec.is_integer() { Grid::Integer } else { Grid::Half };
        if e >= prec {
            return Self::zero(prec);
        }
        let n = ((prec.halves() - e.halves()) / grid.step()) as usize;
        let mut coeffs = vec![Rational::zero(); n.max(1)];
        coeffs[0] = c;
        Self::assemble(grid, e, coeffs, prec)
    }

    /// Build from raw parts, trimming to `prec` and normalising.
    pub(crate) fn assemble(
        grid: Grid,
        lead: Exponent,
        mut coeffs: Vec<Rational>,
        prec: Exponent,
    ) -> Self {
        debug_assert!(grid.contains(lead));
        let span = (prec.halves() - lead.halves()).max(0);
        let keep = ((span + grid.step() - 1) / grid.step()) as usize;
        coeffs.resize(keep, Rational::zero());
        let mut s = QSeries { grid, lead, coeffs, prec };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        let first = self.coeffs.iter().position(|c| !c.is_zero());
        match first {
            None => {
                self.coeffs.clear();
                self.lead = self.prec;
            }
            Some(i) => {
                if i > 0 {
                    self.coeffs.drain(..i);
                    self.lead = Exponent(self.lead.halves() + i as i64 * self.grid.step());
                }
            }
        }
        if self.grid == Grid::Half {
            self.try_integer_grid();
        }
    }

    /// Collapse a half-grid series whose half-odd coefficients all vanish.
    fn try_integer_grid(&mut self) {
        if self.coeffs.is_empty() {
            let prec = Exponent::int(self.prec.ceil());
            *self = QSeries { grid: Grid::Integer, lead: prec, coeffs: Vec::new(), prec };
            return;
        }
        if !self.lead.is_integer() {
            return;
        }
        if self.coeffs.iter().skip(1).step_by(2).any(|c| !c.is_zero()) {
            return;
        }
        let coeffs: Vec<Rational> = self.coeffs.iter().step_by(2).cloned().collect();
        let prec = Exponent::int(self.prec.ceil());
        self.grid = Grid::Integer;
        self.coeffs = coeffs;
        self.prec = prec;
        let needed = (prec.halves() - self.lead.halves()) / 2;
        self.coeffs.resize(needed.max(0) as usize, Rational::zero());
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Precision frontier: coefficients at exponents `>= prec` are unknown.
    pub fn prec(&self) -> Exponent {
        self.prec
    }

    /// Leading stored exponent; equals the valuation for nonzero series and
    /// the precision frontier for series that vanish within precision.
    pub fn lead(&self) -> Exponent {
        self.lead
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn valuation(&self) -> Result<Exponent, SeriesError> {
        if self.is_zero() {
            Err(SeriesError::ZeroWithinPrecision(self.prec))
        } else {
            Ok(self.lead)
        }
    }

    pub fn leading_coefficient(&self) -> Option<&Rational> {
        self.coeffs.first()
    }

    /// True when the series is nonzero with leading coefficient 1.
    pub fn is_unitary(&self) -> bool {
        self.leading_coefficient().is_some_and(|c| c.is_one())
    }

    pub fn coeff(&self, e: impl Into<Exponent>) -> Result<Rational, SeriesError> {
        let e = e.into();
        if e >= self.prec {
            return Err(SeriesError::PrecisionExceeded { requested: e, prec: self.prec });
        }
        if !self.grid.contains(e) {
            // an integer-grid series has zero coefficients between the grid points
            return if self.grid == Grid::Integer {
                Ok(Rational::zero())
            } else {
                Err(SeriesError::OffGrid(e))
            };
        }
        if e < self.lead {
            return Ok(Rational::zero());
        }
        let idx = ((e.halves() - self.lead.halves()) / self.grid.step()) as usize;
        Ok(self.coeffs.get(idx).cloned().unwrap_or_else(Rational::zero))
    }

    /// Iterate over `(exponent, coefficient)` for every stored coefficient.
    pub fn terms(&self) -> impl Iterator<Item = (Exponent, &Rational)> + '_ {
        let step = self.grid.step();
        let lead = self.lead.halves();
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (Exponent(lead + i as i64 * step), c))
    }

    /// Dense integer-grid coefficients for exponents `0..n`.
    ///
    /// Panics if the series is not on the integer grid or `n` exceeds the
    /// precision frontier.
    pub fn dense(&self, n: usize) -> Vec<Rational> {
        assert_eq!(self.grid, Grid::Integer, "dense view needs an integer-grid series");
        assert!(
            Exponent::int(n as i64) <= self.prec,
            "dense view of {n} terms exceeds precision {}",
            self.prec
        );
        let mut out = vec![Rational::zero(); n];
        for (e, c) in self.terms() {
            let i = e.halves() / 2;
            if i >= 0 && (i as usize) < n {
                out[i as usize] = c.clone();
            }
        }
        out
    }

    /// Forget every coefficient at or beyond `prec`.
    pub fn truncate(&self, prec: impl Into<Exponent>) -> Self {
        let prec = prec.into().min(self.prec);
        if self.grid == Grid::Integer && !prec.is_integer() {
            return self.truncate(Exponent::int(prec.ceil()));
        }
        Self::assemble(self.grid, self.lead.min(prec_on_grid(self.grid, prec)), self.coeffs.clone(), prec)
    }

    fn on_grid(&self, grid: Grid) -> QSeries {
        if self.grid == grid {
            return self.clone();
        }
        assert_eq!(grid, Grid::Half);
        let mut coeffs = Vec::with_capacity(self.coeffs.len() * 2);
        for c in &self.coeffs {
            coeffs.push(c.clone());
            coeffs.push(Rational::zero());
        }
        coeffs.pop();
        QSeries { grid, lead: self.lead, coeffs, prec: self.prec }.padded()
    }

    /// Pad stored coefficients with zeros up to the precision frontier.
    fn padded(mut self) -> Self {
        if !self.coeffs.is_empty() {
            let n = ((self.prec.halves() - self.lead.halves() + self.grid.step() - 1)
                / self.grid.step()) as usize;
            self.coeffs.resize(n, Rational::zero());
        }
        self
    }

    pub fn scale(&self, r: &Rational) -> QSeries {
        if r.is_zero() {
            return QSeries { grid: self.grid, lead: self.prec, coeffs: Vec::new(), prec: self.prec };
        }
        QSeries {
            grid: self.grid,
            lead: self.lead,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
            prec: self.prec,
        }
    }

    pub fn add_series(&self, other: &QSeries) -> QSeries {
        let grid = self.grid.join(other.grid);
        let (a, b) = (self.on_grid(grid), other.on_grid(grid));
        let prec = a.prec.min(b.prec);
        let lead = a.lead.min(b.lead).min(prec_on_grid(grid, prec));
        let step = grid.step();
        let n = ((prec.halves() - lead.halves()).max(0) + step - 1) / step;
        let mut coeffs = vec![Rational::zero(); n as usize];
        for s in [&a, &b] {
            let off = ((s.lead.halves() - lead.halves()) / step) as usize;
            for (i, c) in s.coeffs.iter().enumerate() {
                if let Some(slot) = coeffs.get_mut(off + i) {
                    *slot += c;
                }
            }
        }
        Self::assemble(grid, lead, coeffs, prec)
    }

    pub fn sub_series(&self, other: &QSeries) -> QSeries {
        self.add_series(&other.negate())
    }

    pub fn negate(&self) -> QSeries {
        QSeries {
            grid: self.grid,
            lead: self.lead,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            prec: self.prec,
        }
    }

    fn product_frame(&self, other: &QSeries) -> (Grid, Exponent, Exponent, usize) {
        let grid = self.grid.join(other.grid);
        let lead = self.lead + other.lead;
        let prec = (self.prec + other.lead).min(other.prec + self.lead);
        let n = ((prec.halves() - lead.halves()).max(0) + grid.step() - 1) / grid.step();
        (grid, lead, prec, n as usize)
    }

    /// Exact product by clearing denominators and convolving integers.
    ///
    /// Produces exactly the same series as [`QSeries::mul_schoolbook`].
    pub fn mul_series(&self, other: &QSeries) -> QSeries {
        let (grid, lead, prec, n) = self.product_frame(other);
        if self.is_zero() || other.is_zero() || n == 0 {
            return QSeries::zero(prec).regrid(grid);
        }
        let (a, b) = (self.on_grid(grid), other.on_grid(grid));
        let (na, da) = clear_denominators(&a.coeffs[..a.coeffs.len().min(n)]);
        let (nb, db) = clear_denominators(&b.coeffs[..b.coeffs.len().min(n)]);
        let prod = convolve(&na, &nb, n);
        let denom = da * db;
        let coeffs = prod
            .into_iter()
            .map(|c| Rational::new(c, denom.clone()))
            .collect();
        Self::assemble(grid, lead, coeffs, prec)
    }

    /// Reference product: one rational multiply-add per coefficient pair.
    pub fn mul_schoolbook(&self, other: &QSeries) -> QSeries {
        let (grid, lead, prec, n) = self.product_frame(other);
        if self.is_zero() || other.is_zero() || n == 0 {
            return QSeries::zero(prec).regrid(grid);
        }
        let (a, b) = (self.on_grid(grid), other.on_grid(grid));
        let mut coeffs = vec![Rational::zero(); n];
        for (i, x) in a.coeffs.iter().enumerate().take(n) {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate().take(n - i) {
                coeffs[i + j] += x * y;
            }
        }
        Self::assemble(grid, lead, coeffs, prec)
    }

    fn regrid(self, grid: Grid) -> QSeries {
        if grid == Grid::Half && self.grid == Grid::Integer && !self.is_zero() {
            self.on_grid(grid)
        } else {
            self
        }
    }

    /// `self^n` by repeated squaring; `self^0` is one to the same precision.
    pub fn pow(&self, n: u32) -> QSeries {
        if n == 0 {
            return QSeries::one(self.prec);
        }
        let mut result: Option<QSeries> = None;
        let mut base = self.clone();
        let mut e = n;
        loop {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.mul_series(&base),
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.mul_series(&base);
        }
        result.expect("n > 0")
    }

    /// Multiplicative inverse of a series with nonzero constant term.
    ///
    /// Newton iteration `g ← g(2 − f g)`, doubling the number of correct
    /// terms each round.
    pub fn invert(&self) -> Result<QSeries, SeriesError> {
        if self.is_zero() {
            return Err(SeriesError::ZeroWithinPrecision(self.prec));
        }
        if self.lead != Exponent::ZERO {
            return Err(SeriesError::NotAUnit(self.lead));
        }
        let grid = self.grid;
        let step = grid.step();
        let total = ((self.prec.halves() + step - 1) / step) as usize;
        let c0_inv = self.coeffs[0].recip();
        let mut g = QSeries::assemble(grid, Exponent::ZERO, vec![c0_inv], Exponent(step));
        let two = rat(2);
        let mut known = 1usize;
        while known < total {
            known = (known * 2).min(total);
            let frontier = Exponent(known as i64 * step);
            let f = self.truncate(frontier);
            let g_ext = g.with_prec(frontier);
            let fg = f.mul_series(&g_ext);
            let correction = QSeries::constant(two.clone(), frontier).sub_series(&fg);
            g = g_ext.mul_series(&correction).truncate(frontier);
        }
        Ok(g.truncate(self.prec))
    }

    /// Same coefficients, reinterpreted with a larger frontier (missing
    /// terms read as zero). Only used inside Newton steps.
    fn with_prec(&self, prec: Exponent) -> QSeries {
        let mut s = self.clone();
        s.prec = prec;
        s.padded()
    }

    /// The map `f(τ) ↦ f(dτ)`: every exponent and the frontier scale by `d`.
    pub fn substitute_q_power(&self, d: u32) -> QSeries {
        assert!(d > 0, "substitution factor must be positive");
        if d == 1 {
            return self.clone();
        }
        let d = d as usize;
        let mut coeffs = Vec::with_capacity(self.coeffs.len() * d);
        for c in &self.coeffs {
            coeffs.push(c.clone());
            coeffs.extend(std::iter::repeat_n(Rational::zero(), d - 1));
        }
        let prec = self.prec.scaled(d as i64);
        QSeries::assemble(self.grid, self.lead.scaled(d as i64), coeffs, prec)
    }

    /// First exponent below `depth` (and below both frontiers) where the two
    /// series differ.
    pub fn first_difference(&self, other: &QSeries, depth: Exponent) -> Option<Exponent> {
        let diff = self.sub_series(other).truncate(depth);
        (!diff.is_zero()).then_some(diff.lead)
    }

    /// True when every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    /// Largest absolute numerator, as a rough size measure.
    pub fn max_height_bits(&self) -> u64 {
        self.coeffs.iter().map(|c| c.numer().bits().max(c.denom().bits())).max().unwrap_or(0)
    }
}

fn prec_on_grid(grid: Grid, prec: Exponent) -> Exponent {
    match grid {
        Grid::Half => prec,
        Grid::Integer => Exponent::int(prec.ceil()),
    }
}

/// Integer numerators over a common denominator.
fn clear_denominators(cs: &[Rational]) -> (Vec<BigInt>, BigInt) {
    let mut den = BigInt::one();
    for c in cs {
        if !c.denom().is_one() {
            den = den.lcm(c.denom());
        }
    }
    let nums = cs
        .iter()
        .map(|c| {
            if c.denom().is_one() {
                c.numer() * &den
            } else {
                c.numer() * (&den / c.denom())
            }
        })
        .collect();
    (nums, den)
}

/// Truncated integer convolution with an `i128` fast path when the
/// coefficient heights guarantee no overflow.
pub(crate) fn convolve(a: &[BigInt], b: &[BigInt], n: usize) -> Vec<BigInt> {
    let bits = |v: &[BigInt]| v.iter().map(|x| x.bits()).max().unwrap_or(0);
    let len_bits = 64 - (n as u64).leading_zeros() as u64;
    if bits(a) + bits(b) + len_bits < 126 {
        let a: Vec<i128> = a.iter().map(|x| x.to_i128().expect("fits")).collect();
        let b: Vec<i128> = b.iter().map(|x| x.to_i128().expect("fits")).collect();
        let mut out = vec![0i128; n];
        for (i, &x) in a.iter().enumerate().take(n) {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate().take(n - i) {
                out[i + j] += x * y;
            }
        }
        return out.into_iter().map(BigInt::from).collect();
    }
    let mut out = vec![BigInt::zero(); n];
    for (i, x) in a.iter().enumerate().take(n) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n - i) {
            out[i + j] += x * y;
        }
    }
    out
}

impl fmt::Display for QSeries {
    /// Human-readable form such as `q - 8*q^2 + 12*q^3 + O(q^4)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.terms() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let mono = match e {
                Exponent::ZERO => String::new(),
                e if e == Exponent::int(1) => "q".to_string(),
                e => format!("q^{}", fmt_exponent(e)),
            };
            if mono.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{abs}*{mono}")?;
            }
        }
        if !first {
            write!(f, " + ")?;
        }
        write!(f, "O(q^{})", fmt_exponent(self.prec))
    }
}

fn fmt_exponent(e: Exponent) -> String {
    if e.is_integer() {
        e.to_string()
    } else {
        format!("({e})")
    }
}

impl Add for &QSeries {
    type Output = QSeries;
    fn add(self, rhs: &QSeries) -> QSeries {
        self.add_series(rhs)
    }
}

impl Sub for &QSeries {
    type Output = QSeries;
    fn sub(self, rhs: &QSeries) -> QSeries {
        self.sub_series(rhs)
    }
}

impl Mul for &QSeries {
    type Output = QSeries;
    fn mul(self, rhs: &QSeries) -> QSeries {
        self.mul_series(rhs)
    }
}

impl Neg for &QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        self.negate()
    }
}
