//! Inputs shared by the benches.

use cuspbase::eisenstein::eisenstein_expand;
use cuspbase::{Catalog, EtaQuotient, QSeries};

/// The ten Δ_N quotients of the standard catalog.
pub fn deltas() -> Vec<(u32, EtaQuotient)> {
    Catalog::standard().levels().map(|lc| (lc.level, lc.delta.clone())).collect()
}

/// E4 and E6 truncated below `q^n`, a dense pair with growing integer heights.
pub fn dense_pair(n: i64) -> (QSeries, QSeries) {
    (eisenstein_expand(4, n).unwrap(), eisenstein_expand(6, n).unwrap())
}
