//! Level-one Eisenstein series and the weight-2 combination
//! `(N·E2(Nτ) − E2(τ)) / (N − 1)`.

use num_bigint::BigInt;
use thiserror::Error;

use crate::series::{Exponent, QSeries, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EisensteinError {
    #[error("no Eisenstein series of weight {0} (expected 4 or 6)")]
    UnsupportedWeight(u32),
    #[error("the weight-2 combination needs level at least 2, got {0}")]
    LevelTooSmall(u32),
}

/// `E_w(dτ)` for `w ∈ {2, 4, 6}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EisensteinAtom {
    pub weight: u32,
    pub scale: u32,
}

/// `σ_k(n)`, by walking divisor pairs up to `√n`.
pub fn sigma(k: u32, n: u64) -> BigInt {
    let mut total = BigInt::from(0);
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            total += BigInt::from(d).pow(k);
            let e = n / d;
            if e != d {
                total += BigInt::from(e).pow(k);
            }
        }
        d += 1;
    }
    total
}

/// `1 + c·Σ σ_{w−1}(n) qⁿ` below `q^prec`.
fn level_one(weight: u32, prec: i64) -> QSeries {
    let c: i64 = match weight {
        2 => -24,
        4 => 240,
        6 => -504,
        _ => unreachable!("checked by callers"),
    };
    let n = prec.max(0) as u64;
    let coeffs = (0..n)
        .map(|i| if i == 0 { BigInt::from(1) } else { sigma(weight - 1, i) * c })
        .collect();
    QSeries::from_bigints(0, coeffs)
}

/// `E_4` or `E_6` below `q^prec`.
pub fn eisenstein_expand(weight: u32, prec: i64) -> Result<QSeries, EisensteinError> {
    match weight {
        4 | 6 => Ok(level_one(weight, prec)),
        w => Err(EisensteinError::UnsupportedWeight(w)),
    }
}

/// The unitary weight-2 form `(N·E2(Nτ) − E2(τ)) / (N − 1)` on Γ0(N).
pub fn weight2_level_combo(level: u32, prec: i64) -> Result<QSeries, EisensteinError> {
    if level < 2 {
        return Err(EisensteinError::LevelTooSmall(level));
    }
    let e2 = level_one(2, prec);
    let n = level as i64;
    let lifted = e2.substitute_q_power(level).truncate(Exponent::int(prec));
    let combo = lifted.scale(&Rational::from_integer(n.into())).sub_series(&e2);
    Ok(combo.scale(&Rational::new(1.into(), (n - 1).into())))
}

impl EisensteinAtom {
    /// Expansion of the atom. Weight 2 is only reachable through
    /// [`weight2_level_combo`], so it is rejected here.
    pub fn expand(&self, prec: i64) -> Result<QSeries, EisensteinError> {
        let d = self.scale.max(1) as i64;
        let inner = (prec + d - 1) / d;
        Ok(eisenstein_expand(self.weight, inner)?
            .substitute_q_power(self.scale.max(1))
            .truncate(Exponent::int(prec)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::rat;

    fn brute_sigma(k: u32, n: u64) -> i64 {
        (1..=n).filter(|d| n % d == 0).map(|d| (d as i64).pow(k)).sum()
    }

    #[test]
    fn sigma_matches_brute_force() {
        for k in 1..6 {
            for n in 1..60 {
                assert_eq!(sigma(k, n), BigInt::from(brute_sigma(k, n)), "σ_{k}({n})");
            }
        }
    }

    #[test]
    fn e4_and_e6_heads() {
        let e4 = eisenstein_expand(4, 4).unwrap();
        assert_eq!(e4, QSeries::from_ints(0, &[1, 240, 2160, 6720]));
        let e6 = eisenstein_expand(6, 3).unwrap();
        assert_eq!(e6, QSeries::from_ints(0, &[1, -504, -16632]));
        assert!(matches!(eisenstein_expand(2, 3), Err(EisensteinError::UnsupportedWeight(2))));
    }

    #[test]
    fn weight_two_level_two() {
        let s = weight2_level_combo(2, 8).unwrap();
        assert_eq!(s, QSeries::from_ints(0, &[1, 24, 24, 96, 24, 144, 96, 192]));
    }

    #[test]
    fn weight_two_level_three_lifted() {
        let s = weight2_level_combo(3, 6).unwrap().substitute_q_power(3);
        for (e, c) in [(0, 1), (3, 12), (6, 36), (9, 12), (12, 84), (15, 72), (1, 0)] {
            assert_eq!(s.coeff(e).unwrap(), rat(c), "q^{e}");
        }
    }

    #[test]
    fn weight_two_constant_term() {
        for n in 2..=10 {
            let s = weight2_level_combo(n, 5).unwrap();
            assert!(s.is_unitary());
            assert_eq!(s.valuation().unwrap(), Exponent::ZERO);
        }
        assert_eq!(weight2_level_combo(1, 5), Err(EisensteinError::LevelTooSmall(1)));
    }

    #[test]
    fn scaled_atom() {
        let a = EisensteinAtom { weight: 4, scale: 3 };
        let s = a.expand(8).unwrap();
        assert_eq!(s.prec(), Exponent::int(8));
        assert_eq!(s.coeff(3).unwrap(), rat(240));
        assert_eq!(s.coeff(6).unwrap(), rat(2160));
        assert_eq!(s.coeff(4).unwrap(), rat(0));
    }
}
