//! Exact q-expansion toolkit for the modular form spaces `M_2k(Γ0(N))` and
//! cusp form spaces `S_2k(Γ0(N))`, `1 <= N <= 10`.
//!
//! The crate builds unitary upper-triangular bases of both families for any
//! even weight from a small catalog of low-weight forms (eta quotients,
//! Eisenstein series, Weierstrass ℘ values at torsion points) and a
//! multiplication ladder driven by one strong form `Δ_N` per level. Every
//! identity is certified by exact coefficient comparison up to the Sturm
//! bound.

pub mod basis;
pub mod catalog;
pub mod dimensions;
pub mod eisenstein;
pub mod eta;
pub mod series;
pub mod verify;
pub mod weierstrass;

pub use basis::{echelonize, verify_membership, BasisEngine, BasisError, EchelonBasis, SpaceKind};
pub use catalog::{Catalog, FormExpr, LevelCatalog};
pub use dimensions::{dim_m, dim_s, level_profile, sturm_bound, LevelProfile};
pub use eta::EtaQuotient;
pub use series::{Exponent, Grid, QSeries, Rational};
pub use weierstrass::TorsionPoint;

/// Default working precision for a space: twice the Sturm bound plus four.
pub fn default_precision(level: u32, weight: u32) -> i64 {
    2 * dimensions::sturm_bound(level, weight) as i64 + 4
}
