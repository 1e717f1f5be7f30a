//! Invariants of Γ0(N) and dimensions of M_w(Γ0(N)) and S_w(Γ0(N)).

use num_integer::Integer;
use thiserror::Error;

use crate::catalog::Catalog;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimensionError {
    #[error("weight {0} is odd; only even weights are supported")]
    OddWeight(u32),
    #[error("level {0} is not covered by the catalog (supported: 1..=10)")]
    UnsupportedLevel(u32),
    #[error("level must be positive")]
    ZeroLevel,
}

/// Index, elliptic point counts, cusp count and genus of Γ0(N).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupInvariants {
    pub level: u32,
    pub index: u64,
    pub eps2: u64,
    pub eps3: u64,
    pub cusps: u64,
    pub genus: u64,
}

/// Everything the structure theorems need to know about one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelProfile {
    pub invariants: GroupInvariants,
    /// Weight ρ_N of Δ_N.
    pub delta_weight: u32,
    /// Valuation ν(Δ_N).
    pub delta_valuation: u32,
    pub k0: u32,
    pub seed_count: usize,
    /// Catalog names of the ladder seeds, e.g. `F[6,7,1]`.
    pub seeds: Vec<String>,
}

impl LevelProfile {
    pub fn level(&self) -> u32 {
        self.invariants.level
    }
}

fn prime_factors(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn euler_phi(n: u64) -> u64 {
    prime_factors(n).iter().fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

/// `(d/p)` for the discriminants −4 and −3, as needed by the elliptic counts.
fn kronecker(d: i64, p: u64) -> i64 {
    let modulus = d.unsigned_abs();
    if p % modulus == 0 || (d == -4 && p == 2) {
        return 0;
    }
    match d {
        -4 => if p % 4 == 1 { 1 } else { -1 },
        -3 => if p % 3 == 1 { 1 } else { -1 },
        _ => unreachable!(),
    }
}

pub fn group_invariants(level: u32) -> Result<GroupInvariants, DimensionError> {
    if level == 0 {
        return Err(DimensionError::ZeroLevel);
    }
    let n = level as u64;
    let factors = prime_factors(n);
    let index = factors.iter().fold(n, |acc, &(p, _)| acc / p * (p + 1));
    let eps2 = if n % 4 == 0 {
        0
    } else {
        factors.iter().map(|&(p, _)| 1 + kronecker(-4, p)).product::<i64>() as u64
    };
    let eps3 = if n % 9 == 0 {
        0
    } else {
        factors.iter().map(|&(p, _)| 1 + kronecker(-3, p)).product::<i64>() as u64
    };
    let cusps = (1..=n).filter(|d| n % d == 0).map(|d| euler_phi(d.gcd(&(n / d)))).sum();
    let twelve_g = 12 + index as i64 - 3 * eps2 as i64 - 4 * eps3 as i64 - 6 * cusps as i64;
    debug_assert!(twelve_g >= 0 && twelve_g % 12 == 0);
    Ok(GroupInvariants { level, index, eps2, eps3, cusps, genus: (twelve_g / 12) as u64 })
}

fn check_weight(weight: u32) -> Result<(), DimensionError> {
    if weight % 2 == 1 {
        Err(DimensionError::OddWeight(weight))
    } else {
        Ok(())
    }
}

/// dim M_w(Γ0(N)) for even `w ≥ 0`.
pub fn dim_m(level: u32, weight: u32) -> Result<u64, DimensionError> {
    check_weight(weight)?;
    let g = group_invariants(level)?;
    Ok(match weight {
        0 => 1,
        2 => g.genus + g.cusps - 1,
        w => {
            let w = w as i64;
            let d = (w - 1) * (g.genus as i64 - 1)
                + (w / 4) * g.eps2 as i64
                + (w / 3) * g.eps3 as i64
                + (w / 2) * g.cusps as i64;
            d as u64
        }
    })
}

/// dim S_w(Γ0(N)) for even `w ≥ 0`.
pub fn dim_s(level: u32, weight: u32) -> Result<u64, DimensionError> {
    check_weight(weight)?;
    let g = group_invariants(level)?;
    Ok(match weight {
        0 => 0,
        2 => g.genus,
        _ => dim_m(level, weight)? - g.cusps,
    })
}

/// `⌊w·μ/12⌋ + 1`: agreement of this many leading coefficients certifies
/// equality of two forms of weight `w` on Γ0(N).
pub fn sturm_bound(level: u32, weight: u32) -> u64 {
    let index = group_invariants(level.max(1)).expect("positive level").index;
    weight as u64 * index / 12 + 1
}

/// Profile of a catalog level, with ρ_N and ν(Δ_N) read off the catalog's Δ_N.
pub fn level_profile(level: u32) -> Result<LevelProfile, DimensionError> {
    Catalog::standard().profile(level)
}

/// Outcome of the dimension-difference identity at one `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimCheck {
    pub k: u32,
    pub expected: i64,
    pub actual: i64,
}

impl DimCheck {
    pub fn passed(&self) -> bool {
        self.expected == self.actual
    }
}

/// `dim S_{2k+ρ} − dim S_{2k}` against `ν(Δ_N)` (or `ν − 1` at `k = 1`)
/// for `1 ≤ k ≤ k_max`.
pub fn lemma_dim_checks(level: u32, k_max: u32) -> Result<Vec<DimCheck>, DimensionError> {
    let p = level_profile(level)?;
    dim_difference_checks(level, p.delta_weight, p.delta_valuation, k_max)
}

pub(crate) fn dim_difference_checks(
    level: u32,
    rho: u32,
    nu: u32,
    k_max: u32,
) -> Result<Vec<DimCheck>, DimensionError> {
    (1..=k_max)
        .map(|k| {
            let actual = dim_s(level, 2 * k + rho)? as i64 - dim_s(level, 2 * k)? as i64;
            let expected = if k == 1 { nu as i64 - 1 } else { nu as i64 };
            Ok(DimCheck { k, expected, actual })
        })
        .collect()
}
