//! Dedekind eta quotients `∏ η(mτ)^(r_m)` and their q-expansions.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::series::{convolve, Exponent, Grid, QSeries, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EtaError {
    #[error("valuation {0} of the eta quotient is not a multiple of 1/2")]
    FractionalValuation(Ratio<i64>),
    #[error("precision {prec} does not exceed the valuation {valuation}")]
    PrecisionBelowValuation { prec: Exponent, valuation: Exponent },
    #[error("malformed eta term `{0}`, expected `m:r`")]
    BadTerm(String),
    #[error("scale {0} appears twice")]
    DuplicateScale(u32),
    #[error("scale must be positive")]
    ZeroScale,
}

/// A finite product `∏ η(mτ)^(r_m)`.
///
/// Terms keep the order they were written in; equality ignores that order.
#[derive(Debug, Clone, Default, Eq)]
pub struct EtaQuotient {
    terms: Vec<(u32, i32)>,
}

impl PartialEq for EtaQuotient {
    fn eq(&self, other: &Self) -> bool {
        self.sorted_terms() == other.sorted_terms()
    }
}

impl std::hash::Hash for EtaQuotient {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.sorted_terms().hash(state);
    }
}

impl EtaQuotient {
    pub fn new(terms: impl IntoIterator<Item = (u32, i32)>) -> Result<Self, EtaError> {
        let mut out: Vec<(u32, i32)> = Vec::new();
        for (m, r) in terms {
            if m == 0 {
                return Err(EtaError::ZeroScale);
            }
            if out.iter().any(|&(s, _)| s == m) {
                return Err(EtaError::DuplicateScale(m));
            }
            if r != 0 {
                out.push((m, r));
            }
        }
        Ok(EtaQuotient { terms: out })
    }

    pub fn terms(&self) -> &[(u32, i32)] {
        &self.terms
    }

    fn sorted_terms(&self) -> Vec<(u32, i32)> {
        let mut t = self.terms.clone();
        t.sort_unstable();
        t
    }

    /// `(1/2)·Σ r_m`.
    pub fn weight(&self) -> Ratio<i64> {
        Ratio::new(self.terms.iter().map(|&(_, r)| r as i64).sum(), 2)
    }

    /// Order of vanishing at infinity, `(1/24)·Σ m·r_m`.
    pub fn valuation(&self) -> Ratio<i64> {
        Ratio::new(self.terms.iter().map(|&(m, r)| m as i64 * r as i64).sum(), 24)
    }

    /// Weight and valuation at infinity.
    pub fn profile(&self) -> (Ratio<i64>, Ratio<i64>) {
        (self.weight(), self.valuation())
    }

    /// Least common multiple of the scales.
    pub fn scale_lcm(&self) -> u32 {
        use num_integer::Integer;
        self.terms.iter().fold(1, |acc, &(m, _)| acc.lcm(&m))
    }

    /// Product of two quotients (exponents add per scale).
    pub fn combine(&self, other: &EtaQuotient) -> EtaQuotient {
        let mut terms = self.terms.clone();
        for &(m, r) in &other.terms {
            match terms.iter_mut().find(|(s, _)| *s == m) {
                Some(t) => t.1 += r,
                None => terms.push((m, r)),
            }
        }
        terms.retain(|&(_, r)| r != 0);
        EtaQuotient { terms }
    }

    fn valuation_exponent(&self) -> Result<Exponent, EtaError> {
        let v = self.valuation();
        let halves = v * 2;
        if !halves.is_integer() {
            return Err(EtaError::FractionalValuation(v));
        }
        Ok(Exponent::from_halves(halves.to_integer()))
    }

    /// Expand `q^(Σ m r/24) ∏_m ∏_k (1 − q^(mk))^(r_m)` below `prec`.
    ///
    /// Positive and negative parts are expanded separately as integer
    /// products; the negative part is inverted once.
    pub fn expand(&self, prec: impl Into<Exponent>) -> Result<QSeries, EtaError> {
        let prec = prec.into();
        let valuation = self.valuation_exponent()?;
        if prec <= valuation {
            return Err(EtaError::PrecisionBelowValuation { prec, valuation });
        }
        // integer exponents j with valuation + j < prec
        let n = (prec - valuation).ceil() as usize;
        let mut numer = unit_series(n);
        let mut denom = unit_series(n);
        for &(m, r) in &self.terms {
            let base = euler_product(m as usize, n);
            let p = int_pow(&base, r.unsigned_abs(), n);
            if r > 0 {
                numer = convolve(&numer, &p, n);
            } else {
                denom = convolve(&denom, &p, n);
            }
        }
        let body = convolve(&numer, &invert_unit(&denom), n);
        let coeffs: Vec<Rational> = body.into_iter().map(Rational::from_integer).collect();
        let grid = if valuation.is_integer() { Grid::Integer } else { Grid::Half };
        let series = if grid == Grid::Integer {
            QSeries::assemble(grid, valuation, coeffs, prec)
        } else {
            let mut spread = Vec::with_capacity(2 * coeffs.len());
            for c in coeffs {
                spread.push(c);
                spread.push(Rational::zero());
            }
            QSeries::assemble(grid, valuation, spread, prec)
        };
        Ok(series)
    }
}

fn unit_series(n: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); n];
    if n > 0 {
        v[0] = BigInt::one();
    }
    v
}

/// `∏_{k>=1} (1 − q^(mk))` truncated to `n` terms, one factor at a time.
fn euler_product(m: usize, n: usize) -> Vec<BigInt> {
    let mut p = unit_series(n);
    let mut step = m;
    while step < n {
        for i in (step..n).rev() {
            if !p[i - step].is_zero() {
                let t = p[i - step].clone();
                p[i] -= t;
            }
        }
        step += m;
    }
    p
}

fn int_pow(base: &[BigInt], mut e: u32, n: usize) -> Vec<BigInt> {
    let mut result = unit_series(n);
    let mut b = base.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            result = convolve(&result, &b, n);
        }
        e >>= 1;
        if e > 0 {
            b = convolve(&b, &b, n);
        }
    }
    result
}

/// Inverse of an integer series with constant term 1.
fn invert_unit(a: &[BigInt]) -> Vec<BigInt> {
    let n = a.len();
    let mut r = vec![BigInt::zero(); n];
    if n == 0 {
        return r;
    }
    debug_assert!(a[0].is_one());
    r[0] = BigInt::one();
    for i in 1..n {
        let mut s = BigInt::zero();
        for k in 1..=i {
            if !a[k].is_zero() && !r[i - k].is_zero() {
                s += &a[k] * &r[i - k];
            }
        }
        r[i] = -s;
    }
    r
}

impl FromStr for EtaQuotient {
    type Err = EtaError;

    /// Parse `m:r` pairs separated by commas, e.g. `2:16,1:-8`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Ok(EtaQuotient::default());
        }
        let mut terms = Vec::new();
        for part in compact.split(',') {
            let (m, r) = part.split_once(':').ok_or_else(|| EtaError::BadTerm(part.to_string()))?;
            let m: u32 = m.parse().map_err(|_| EtaError::BadTerm(part.to_string()))?;
            let r: i32 = r.parse().map_err(|_| EtaError::BadTerm(part.to_string()))?;
            terms.push((m, r));
        }
        EtaQuotient::new(terms)
    }
}

impl fmt::Display for EtaQuotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (m, r)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}:{r}")?;
        }
        Ok(())
    }
}
