//! Unitary upper-triangular bases of `M_2k(Γ0(N))` and `S_2k(Γ0(N))`.
//!
//! Full spaces come either from a monomial recipe in a few generators or
//! from closing the catalog atoms under multiplication. Cusp spaces follow
//! the ladder `C_2k = (F^(u)·E^(k-k0))_{u<δ} ∪ F^(δ)·B_{2(k-k0)}` seeded by
//! the catalog forms of weight `2·k0`.
//!
//! Every basis is returned fully reduced: element `i` vanishes at the pivot
//! of every other element. The reduced form of a span is unique, so the
//! output does not depend on the order in which candidates were produced.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::catalog::{Atom, Catalog, CatalogError, Evaluator, FormExpr, FormRef, RefKind};
use crate::dimensions::{dim_m, dim_s, sturm_bound, DimensionError};
use crate::eisenstein::{eisenstein_expand, weight2_level_combo};
use crate::series::{Exponent, Grid, QSeries, Rational, SeriesError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpaceKind {
    /// `M_2k(Γ0(N))`
    Full,
    /// `S_2k(Γ0(N))`
    Cusp,
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpaceKind::Full => "full",
            SpaceKind::Cusp => "cusp",
        })
    }
}

impl FromStr for SpaceKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(SpaceKind::Full),
            "cusp" => Ok(SpaceKind::Cusp),
            other => Err(format!("unknown space `{other}` (expected cusp or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BasisError {
    #[error("found {rank} independent forms, expected {expected}")]
    RankDeficient { expected: usize, rank: usize },
    #[error("found {rank} independent forms, more than the dimension {expected}; an input is not in the space")]
    RankExcess { expected: usize, rank: usize },
    #[error("series known below q^{got}, but q^{needed} is required")]
    InsufficientPrecision { needed: i64, got: Exponent },
    #[error("a half-integer grid series cannot enter a basis")]
    HalfGrid,
    #[error("atom closure for M_{weight}(Γ0({level})) stops at rank {rank} of {expected}")]
    IncompleteSpan { level: u32, weight: u32, expected: usize, rank: usize },
    #[error(
        "ladder condition fails for S_{weight}(Γ0({level})) with k0 = {k0}: \
         dim S = {dim_s} but dim M_{{2(k-k0)}} + δ - 1 = {predicted}"
    )]
    LadderConditionFailed { level: u32, weight: u32, k0: u32, dim_s: u64, predicted: i64 },
    #[error("level {0} is not in the catalog")]
    UnsupportedLevel(u32),
    #[error("decomposition of S_{weight}(Γ0({level})) has total dimension {total}, expected {expected}")]
    DecompositionMismatch { level: u32, weight: u32, total: u64, expected: u64 },
    #[error("not in the span: first unmatched term at q^{exponent}")]
    NotInSpan { exponent: Exponent },
    #[error("{0}")]
    OutOfRange(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Dimension(#[from] DimensionError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Ordered unitary basis with strictly increasing valuations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EchelonBasis {
    pub level: u32,
    pub weight: u32,
    pub kind: SpaceKind,
    pub elements: Vec<QSeries>,
    /// Every element is known below `q^prec`.
    pub prec: i64,
}

impl EchelonBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn valuations(&self) -> Vec<i64> {
        self.elements
            .iter()
            .map(|e| e.valuation().expect("basis elements are nonzero").as_integer().expect("integer grid"))
            .collect()
    }

    pub fn truncate(&self, prec: i64) -> EchelonBasis {
        EchelonBasis {
            elements: self.elements.iter().map(|e| e.truncate(prec)).collect(),
            prec: prec.min(self.prec),
            ..self.clone()
        }
    }
}

/// Incremental fully reduced row echelon form over the rationals.
struct Reducer {
    len: usize,
    rows: Vec<(usize, Vec<Rational>)>,
}

impl Reducer {
    fn new(len: usize) -> Self {
        Reducer { len, rows: Vec::new() }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` to the span; false when it was already there.
    fn insert(&mut self, mut v: Vec<Rational>) -> bool {
        debug_assert_eq!(v.len(), self.len);
        for (p, row) in &self.rows {
            if v[*p].is_zero() {
                continue;
            }
            let c = v[*p].clone();
            for i in *p..self.len {
                if !row[i].is_zero() {
                    v[i] -= &c * &row[i];
                }
            }
        }
        let Some(p) = v.iter().position(|c| !c.is_zero()) else {
            return false;
        };
        let inv = v[p].recip();
        for c in v[p..].iter_mut() {
            if !c.is_zero() {
                *c *= &inv;
            }
        }
        for (_, row) in self.rows.iter_mut() {
            if row[p].is_zero() {
                continue;
            }
            let c = row[p].clone();
            for i in p..self.len {
                if !v[i].is_zero() {
                    row[i] -= &c * &v[i];
                }
            }
        }
        let at = self.rows.partition_point(|(q, _)| *q < p);
        self.rows.insert(at, (p, v));
        true
    }

    fn into_series(self) -> Vec<QSeries> {
        self.rows
            .into_iter()
            .map(|(_, row)| QSeries::from_coeffs(Grid::Integer, Exponent::ZERO, row))
            .collect()
    }
}

fn dense_row(s: &QSeries, len: usize) -> Result<Vec<Rational>, BasisError> {
    if s.grid() != Grid::Integer {
        return Err(BasisError::HalfGrid);
    }
    if s.prec() < Exponent::int(len as i64) {
        return Err(BasisError::InsufficientPrecision { needed: len as i64, got: s.prec() });
    }
    Ok(s.dense(len))
}

/// Row-reduce `forms` below `q^prec` into a fully reduced unitary basis,
/// requiring exactly `expected_dim` independent rows.
pub fn echelonize(forms: &[QSeries], expected_dim: usize, prec: i64) -> Result<Vec<QSeries>, BasisError> {
    let len = prec.max(0) as usize;
    let mut red = Reducer::new(len);
    for f in forms {
        red.insert(dense_row(f, len)?);
    }
    match red.rank() {
        r if r < expected_dim => Err(BasisError::RankDeficient { expected: expected_dim, rank: r }),
        r if r > expected_dim => Err(BasisError::RankExcess { expected: expected_dim, rank: r }),
        _ => Ok(red.into_series()),
    }
}

/// Coordinates of `f` in `b`, read off at the pivots.
///
/// `f` must be known at least to the Sturm bound of the space. The residual
/// is checked against every coefficient both series know.
pub fn verify_membership(f: &QSeries, b: &EchelonBasis) -> Result<Vec<Rational>, BasisError> {
    let needed = sturm_bound(b.level, b.weight) as i64;
    if f.prec() < Exponent::int(needed) {
        return Err(BasisError::InsufficientPrecision { needed, got: f.prec() });
    }
    if f.grid() != Grid::Integer {
        return Err(BasisError::HalfGrid);
    }
    let depth = f.prec().min(Exponent::int(b.prec));
    let mut residual = f.truncate(depth);
    let mut coords = Vec::with_capacity(b.len());
    for e in &b.elements {
        let pivot = e.valuation()?;
        let c = residual.coeff(pivot)?;
        if !c.is_zero() {
            residual = residual.sub_series(&e.scale(&c).truncate(depth));
        }
        coords.push(c);
    }
    if residual.is_zero() {
        Ok(coords)
    } else {
        Err(BasisError::NotInSpan { exponent: residual.lead() })
    }
}

/// Dimension-only check of the ladder identity
/// `dim S_2k = dim M_{2(k-k0)} + dim S_{2k0} - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderReport {
    pub level: u32,
    pub k0: u32,
    /// `dim S_{2k0}`, the number of seeds.
    pub seed_dim: u64,
    /// `(k, dim S_2k - dim M_{2(k-k0)})` for `k = k0+1 ..= k0+6`.
    pub differences: Vec<(u32, i64)>,
    /// The differences are constant and equal `seed_dim - 1`.
    pub holds: bool,
    /// The difference sequence is 6-periodic over the next thirty steps.
    pub periodic: bool,
}

pub fn ladder_difference(level: u32, k0: u32, k: u32) -> Result<i64, DimensionError> {
    Ok(dim_s(level, 2 * k)? as i64 - dim_m(level, 2 * (k - k0))? as i64)
}

#[allow(non_snake_case)]
pub fn lemma_lemP_check(level: u32, k0: u32) -> Result<LadderReport, DimensionError> {
    let seed_dim = dim_s(level, 2 * k0)?;
    let differences = (k0 + 1..=k0 + 6)
        .map(|k| Ok((k, ladder_difference(level, k0, k)?)))
        .collect::<Result<Vec<_>, DimensionError>>()?;
    let holds = seed_dim > 0 && differences.iter().all(|&(_, d)| d == seed_dim as i64 - 1);
    let mut periodic = true;
    for k in k0 + 1..=k0 + 30 {
        if ladder_difference(level, k0, k)? != ladder_difference(level, k0, k + 6)? {
            periodic = false;
        }
    }
    Ok(LadderReport { level, k0, seed_dim, differences, holds, periodic })
}

/// Smallest `k0 <= search` for which the ladder identity holds, if any.
pub fn find_ladder_start(level: u32, search: u32) -> Result<Option<u32>, DimensionError> {
    for k0 in 1..=search {
        if lemma_lemP_check(level, k0)?.holds {
            return Ok(Some(k0));
        }
    }
    Ok(None)
}

/// One summand of the structure decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub label: String,
    pub dim: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub level: u32,
    pub weight: u32,
    pub q: u32,
    pub r: u32,
    pub components: Vec<Component>,
    /// `dim S_2k` from the dimension formula.
    pub expected: u64,
    /// Whether the materialized pieces reduce to `s_basis`; `None` when not
    /// materialized.
    pub matches_basis: Option<bool>,
}

impl Decomposition {
    pub fn total(&self) -> u64 {
        self.components.iter().map(|c| c.dim).sum()
    }
}

type CacheKey = (u32, u32, SpaceKind);

/// Builds and memoizes bases for one catalog.
pub struct BasisEngine<'c> {
    catalog: &'c Catalog,
    eval: Evaluator<'c>,
    cache: Mutex<HashMap<CacheKey, Arc<EchelonBasis>>>,
}

impl<'c> BasisEngine<'c> {
    pub fn new(catalog: &'c Catalog) -> Self {
        BasisEngine { catalog, eval: Evaluator::new(catalog), cache: Mutex::new(HashMap::new()) }
    }

    pub fn catalog(&self) -> &'c Catalog {
        self.catalog
    }

    pub fn evaluator(&self) -> &Evaluator<'c> {
        &self.eval
    }

    /// Precision used internally for weight `2k`: the requested one, but
    /// never below `2·sturm + 4`.
    fn working_prec(level: u32, k: u32, prec: i64) -> i64 {
        prec.max(crate::default_precision(level, 2 * k))
    }

    fn check_request(&self, level: u32, k: u32, prec: i64) -> Result<(), BasisError> {
        self.catalog.level(level).map_err(|_| BasisError::UnsupportedLevel(level))?;
        let sturm = sturm_bound(level, 2 * k) as i64;
        if prec <= sturm {
            return Err(BasisError::InsufficientPrecision { needed: sturm + 1, got: Exponent::int(prec) });
        }
        Ok(())
    }

    /// Basis of `M_2k(Γ0(N))` known below `q^prec`.
    pub fn m_basis(&self, level: u32, k: u32, prec: i64) -> Result<EchelonBasis, BasisError> {
        self.check_request(level, k, prec)?;
        let w = Self::working_prec(level, k, prec);
        Ok(self.m_work(level, k, w)?.truncate(prec))
    }

    /// Basis of `S_2k(Γ0(N))` known below `q^prec`.
    pub fn s_basis(&self, level: u32, k: u32, prec: i64) -> Result<EchelonBasis, BasisError> {
        self.check_request(level, k, prec)?;
        let w = Self::working_prec(level, k, prec);
        Ok(self.s_work(level, k, w)?.truncate(prec))
    }

    pub fn basis(&self, level: u32, k: u32, kind: SpaceKind, prec: i64) -> Result<EchelonBasis, BasisError> {
        match kind {
            SpaceKind::Full => self.m_basis(level, k, prec),
            SpaceKind::Cusp => self.s_basis(level, k, prec),
        }
    }

    fn cached(&self, key: CacheKey, prec: i64) -> Option<Arc<EchelonBasis>> {
        let cache = self.cache.lock().expect("basis cache poisoned");
        cache.get(&key).filter(|b| b.prec >= prec).cloned()
    }

    fn remember(&self, b: EchelonBasis) -> Arc<EchelonBasis> {
        let key = (b.level, b.weight, b.kind);
        let b = Arc::new(b);
        let mut cache = self.cache.lock().expect("basis cache poisoned");
        match cache.get(&key) {
            Some(old) if old.prec >= b.prec => old.clone(),
            _ => {
                cache.insert(key, b.clone());
                b
            }
        }
    }

    fn eval_ref(&self, kind: RefKind, weight: u32, level: u32, index: u32, prec: i64) -> Result<QSeries, BasisError> {
        let r = FormRef { kind, weight, level, index };
        Ok(self.eval.evaluate(&FormExpr::Atom(Atom::Ref(r)), prec)?)
    }

    /// Basis of M_2k at precision at least `prec` (possibly more).
    fn m_work(&self, level: u32, k: u32, prec: i64) -> Result<Arc<EchelonBasis>, BasisError> {
        let weight = 2 * k;
        if let Some(b) = self.cached((level, weight, SpaceKind::Full), prec) {
            return Ok(b);
        }
        let lc = self.catalog.level(level).map_err(|_| BasisError::UnsupportedLevel(level))?;
        let dim = dim_m(level, weight)? as usize;
        let elements = if k == 0 {
            vec![QSeries::one(prec)]
        } else if let Some(ring) = &lc.ring {
            let monomials = self.ring_monomials(ring, weight, prec)?;
            echelonize(&monomials, dim, prec).map_err(|e| match e {
                BasisError::RankDeficient { rank, .. } => {
                    BasisError::IncompleteSpan { level, weight, expected: dim, rank }
                }
                other => other,
            })?
        } else {
            self.closure(level, k, dim, prec)?
        };
        Ok(self.remember(EchelonBasis { level, weight, kind: SpaceKind::Full, elements, prec }))
    }

    /// One monomial in the ring generators per reachable valuation, taking
    /// the lexicographically largest exponent vector.
    fn ring_monomials(&self, ring: &[FormExpr], weight: u32, prec: i64) -> Result<Vec<QSeries>, BasisError> {
        let mut gens = Vec::with_capacity(ring.len());
        for g in ring {
            let w = self
                .catalog
                .infer_weight(g)
                .ok()
                .and_then(crate::catalog::integral_weight)
                .filter(|&w| w > 0)
                .ok_or_else(|| BasisError::OutOfRange(format!("ring generator {g} has no positive even weight")))?;
            let s = self.eval.evaluate(g, prec)?;
            let v = s.valuation()?.as_integer().ok_or(BasisError::HalfGrid)?;
            gens.push((w, v, s));
        }
        let mut best: BTreeMap<i64, Vec<u32>> = BTreeMap::new();
        let mut exps = vec![0u32; gens.len()];
        fn walk(
            i: usize,
            left: u32,
            v: i64,
            gens: &[(u32, i64, QSeries)],
            exps: &mut [u32],
            best: &mut BTreeMap<i64, Vec<u32>>,
        ) {
            if i == gens.len() {
                if left == 0 {
                    let slot = best.entry(v).or_insert_with(|| exps.to_vec());
                    if *exps > **slot {
                        *slot = exps.to_vec();
                    }
                }
                return;
            }
            let (w, gv, _) = &gens[i];
            for e in 0..=left / w {
                exps[i] = e;
                walk(i + 1, left - e * w, v + e as i64 * gv, gens, exps, best);
            }
            exps[i] = 0;
        }
        walk(0, weight, 0, &gens, &mut exps, &mut best);
        best.into_values()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|e| {
                let mut m = QSeries::one(prec);
                for (g, &n) in gens.iter().zip(e) {
                    if n > 0 {
                        m = m.mul_series(&g.2.pow(n)).truncate(prec);
                    }
                }
                Ok(m)
            })
            .collect()
    }

    /// Forms of weight `w` available directly at `level`: catalog generators,
    /// Eisenstein lifts and lifted Δ_d.
    fn atoms(&self, level: u32, weight: u32, prec: i64) -> Result<Vec<QSeries>, BasisError> {
        let lc = self.catalog.level(level)?;
        let mut out = Vec::new();
        for e in lc.generators_of_weight(weight) {
            out.push(self.eval_ref(RefKind::Generator, weight, level, e.index, prec)?);
        }
        let divisors: Vec<u32> = (1..=level).filter(|d| level % d == 0).collect();
        let lift = |s: QSeries, e: u32| s.substitute_q_power(e).truncate(prec);
        let inner = |e: u32| (prec + e as i64 - 1) / e as i64;
        for &d in &divisors {
            match weight {
                2 if d > 1 => {
                    for &e in divisors.iter().filter(|&&e| level % (d * e) == 0) {
                        out.push(lift(weight2_level_combo(d, inner(e)).map_err(CatalogError::from)?, e));
                    }
                }
                4 | 6 => out.push(lift(eisenstein_expand(weight, inner(d)).map_err(CatalogError::from)?, d)),
                _ => {}
            }
        }
        for other in self.catalog.levels() {
            let d = other.level;
            if level % d != 0 || other.delta_weight() != weight {
                continue;
            }
            for &e in divisors.iter().filter(|&&e| level % (d * e) == 0) {
                let delta = self.eval.evaluate(&FormExpr::Atom(Atom::Delta(d)), inner(e))?;
                out.push(lift(delta, e));
            }
        }
        Ok(out)
    }

    /// Span the atoms of weight `2k`, then products `B_w · B_{2k-w}` for
    /// `w = 2, 4, 6`, stopping as soon as the dimension is reached.
    fn closure(&self, level: u32, k: u32, dim: usize, prec: i64) -> Result<Vec<QSeries>, BasisError> {
        let weight = 2 * k;
        let len = prec as usize;
        let mut red = Reducer::new(len);
        for a in self.atoms(level, weight, prec)? {
            red.insert(dense_row(&a, len)?);
        }
        if red.rank() > dim {
            return Err(BasisError::RankExcess { expected: dim, rank: red.rank() });
        }
        let mut pairs = Vec::new();
        for w in [2u32, 4, 6] {
            if w >= weight {
                break;
            }
            let a = self.m_work(level, w / 2, prec)?;
            let b = self.m_work(level, k - w / 2, prec)?;
            let (va, vb) = (a.valuations(), b.valuations());
            for (i, x) in a.elements.iter().enumerate() {
                for (j, y) in b.elements.iter().enumerate() {
                    pairs.push((va[i] + vb[j], x.clone(), y.clone()));
                }
            }
        }
        // one product per new valuation first: those are independent outright
        let mut seen = std::collections::BTreeSet::new();
        let (fresh, rest): (Vec<_>, Vec<_>) = pairs.into_iter().partition(|(v, _, _)| seen.insert(*v));
        for batch in [fresh, rest] {
            for chunk in batch.chunks(16) {
                if red.rank() >= dim {
                    break;
                }
                let products: Vec<QSeries> = chunk
                    .par_iter()
                    .map(|(_, x, y)| x.mul_series(y).truncate(prec))
                    .collect();
                for p in products {
                    if red.rank() >= dim {
                        break;
                    }
                    red.insert(dense_row(&p, len)?);
                }
            }
        }
        if red.rank() < dim {
            return Err(BasisError::IncompleteSpan { level, weight, expected: dim, rank: red.rank() });
        }
        Ok(red.into_series())
    }

    /// Catalog seeds of weight `2·k0`, reduced.
    fn seeds(&self, level: u32, k0: u32, prec: i64) -> Result<Vec<QSeries>, BasisError> {
        let lc = self.catalog.level(level)?;
        let weight = 2 * k0;
        let forms = lc
            .cusp_forms_of_weight(weight)
            .iter()
            .map(|e| self.eval_ref(RefKind::Cusp, weight, level, e.index, prec))
            .collect::<Result<Vec<_>, _>>()?;
        echelonize(&forms, dim_s(level, weight)? as usize, prec)
    }

    fn s_work(&self, level: u32, k: u32, prec: i64) -> Result<Arc<EchelonBasis>, BasisError> {
        let weight = 2 * k;
        if let Some(b) = self.cached((level, weight, SpaceKind::Cusp), prec) {
            return Ok(b);
        }
        let lc = self.catalog.level(level).map_err(|_| BasisError::UnsupportedLevel(level))?;
        let dim = dim_s(level, weight)? as usize;
        let k0 = lc.ladder_start(weight);
        let elements = if k == 0 {
            Vec::new()
        } else if k < k0 {
            let forms = lc
                .cusp_forms_of_weight(weight)
                .iter()
                .map(|e| self.eval_ref(RefKind::Cusp, weight, level, e.index, prec))
                .collect::<Result<Vec<_>, _>>()?;
            echelonize(&forms, dim, prec)?
        } else {
            let seed_dim = dim_s(level, 2 * k0)?;
            let predicted = dim_m(level, 2 * (k - k0))? as i64 + seed_dim as i64 - 1;
            if seed_dim == 0 || predicted != dim as i64 {
                return Err(BasisError::LadderConditionFailed { level, weight, k0, dim_s: dim as u64, predicted });
            }
            let seeds = self.seeds(level, k0, prec)?;
            let (carried, last) = seeds.split_at(seeds.len() - 1);
            let mut forms = Vec::with_capacity(dim);
            if !carried.is_empty() {
                let e = self.eval_ref(RefKind::Generator, 2, level, 0, prec)?.pow(k - k0).truncate(prec);
                forms.extend(carried.par_iter().map(|f| f.mul_series(&e).truncate(prec)).collect::<Vec<_>>());
            }
            let b = self.m_work(level, k - k0, prec)?;
            forms.extend(
                b.elements
                    .par_iter()
                    .map(|g| last[0].mul_series(g).truncate(prec))
                    .collect::<Vec<_>>(),
            );
            echelonize(&forms, dim, prec)?
        };
        Ok(self.remember(EchelonBasis { level, weight, kind: SpaceKind::Cusp, elements, prec }))
    }

    /// `E_{2j,1}^{(0)}`: `E4^(j/2)` for even `j`, `E4^((j-3)/2)·E6` for odd `j ≥ 3`.
    fn level_one_eisenstein(j: u32, prec: i64) -> Option<QSeries> {
        let e4 = eisenstein_expand(4, prec).ok()?;
        match j {
            1 => None,
            j if j % 2 == 0 => Some(e4.pow(j / 2)),
            j => Some(e4.pow((j - 3) / 2).mul_series(&eisenstein_expand(6, prec).ok()?)),
        }
    }

    /// `k = q·ρ/2 + r` with `2 <= r <= ρ/2 + 1`, and the pieces
    /// `Δ^q·S_2r ⊕ ⊕_{n<q} Δ^n·span(F_{ρ+4}^(s)·E^(k-(n+1)ρ/2-2), s <= ν)`.
    pub fn structure_decompose(&self, level: u32, k: u32, materialize: bool) -> Result<Decomposition, BasisError> {
        if k < 2 {
            return Err(BasisError::OutOfRange(format!("decomposition needs k >= 2, got {k}")));
        }
        let lc = self.catalog.level(level).map_err(|_| BasisError::UnsupportedLevel(level))?;
        let h = lc.delta_weight() / 2;
        let nu = lc.delta_valuation() as u64;
        let r = (k - 2) % h + 2;
        let q = (k - r) / h;
        let weight = 2 * k;
        let mut components = vec![Component { label: format!("Δ_{level}^{q}·S_{}", 2 * r), dim: dim_s(level, 2 * r)? }];
        for n in 0..q {
            let j = k - (n + 1) * h - 2;
            components.push(Component { label: format!("Δ_{level}^{n}·F_{}·E_2^{j}", 2 * h + 4), dim: nu });
        }
        let expected = dim_s(level, weight)?;
        let mut d = Decomposition { level, weight, q, r, components, expected, matches_basis: None };
        if d.total() != expected {
            return Err(BasisError::DecompositionMismatch { level, weight, total: d.total(), expected });
        }
        if materialize {
            let prec = Self::working_prec(level, k, 0);
            let delta = self.eval.evaluate(&FormExpr::Atom(Atom::Delta(level)), prec)?;
            let mut forms = Vec::new();
            let dq = delta.pow(q).truncate(prec);
            for f in &self.s_work(level, r, prec)?.elements {
                forms.push(f.mul_series(&dq).truncate(prec));
            }
            let head = self.s_work(level, h + 2, prec)?;
            let head: Vec<QSeries> = head.elements.iter().take(nu as usize).cloned().collect();
            for n in 0..q {
                let j = k - (n + 1) * h - 2;
                let dn = delta.pow(n).truncate(prec);
                let power = if lc.generators.contains_key(&(2, 0)) {
                    Some(self.eval_ref(RefKind::Generator, 2, level, 0, prec)?.pow(j))
                } else if level == 1 {
                    Self::level_one_eisenstein(j, prec)
                } else {
                    None
                };
                match power {
                    Some(p) => {
                        for f in &head {
                            forms.push(f.mul_series(&p).mul_series(&dn).truncate(prec));
                        }
                    }
                    None => {
                        // no weight-2j form of valuation 0 to hand: use the
                        // first ν elements of S_{2(k-nρ/2)} instead
                        let sub = self.s_work(level, k - n * h, prec)?;
                        for f in sub.elements.iter().take(nu as usize) {
                            forms.push(f.mul_series(&dn).truncate(prec));
                        }
                    }
                }
            }
            let reduced = echelonize(&forms, expected as usize, prec)?;
            let basis = self.s_work(level, k, prec)?.truncate(prec);
            d.matches_basis = Some(reduced == basis.elements);
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{rat, ratio};

    fn engine() -> BasisEngine<'static> {
        BasisEngine::new(Catalog::standard())
    }

    #[test]
    fn echelonize_reduces_and_sorts() {
        let a = QSeries::from_ints(0, &[1, 2, 3, 4]);
        let b = QSeries::from_ints(0, &[0, 1, 1, 1]);
        let c = a.add_series(&b);
        let out = echelonize(&[c, b.clone(), a.clone()], 2, 4).unwrap();
        assert_eq!(out[0], QSeries::from_ints(0, &[1, 0, 1, 2]));
        assert_eq!(out[1], QSeries::from_ints(1, &[1, 1, 1]));
        assert_eq!(echelonize(&[a.clone()], 2, 4), Err(BasisError::RankDeficient { expected: 2, rank: 1 }));
        assert_eq!(echelonize(&[a, b], 1, 4), Err(BasisError::RankExcess { expected: 1, rank: 2 }));
    }

    #[test]
    fn level_three_weight_four_from_eisenstein_lifts() {
        let prec = 12;
        let e1 = eisenstein_expand(4, prec).unwrap();
        let e3 = eisenstein_expand(4, 4).unwrap().substitute_q_power(3).truncate(prec);
        let out = echelonize(&[e1.clone(), e3.clone()], 2, prec).unwrap();
        let vals: Vec<_> = out.iter().map(|s| s.valuation().unwrap()).collect();
        assert_eq!(vals, vec![Exponent::int(0), Exponent::int(1)]);
        // the valuation-one element is (E4 - E4(3τ))/240
        let diff = e1.sub_series(&e3).scale(&ratio(1, 240));
        assert_eq!(out[1].coeff(1).unwrap(), diff.coeff(1).unwrap());
    }

    #[test]
    fn level_two_cusp_forms() {
        let b = engine().s_basis(2, 4, 8).unwrap();
        assert_eq!(b.elements, vec![QSeries::from_ints(0, &[0, 1, -8, 12, 64, -210, -96, 1016])]);
        assert!(engine().s_basis(1, 5, 10).unwrap().is_empty());
    }

    #[test]
    fn ladder_with_three_seeds() {
        let b = engine().s_basis(7, 3, 12).unwrap();
        assert_eq!(b.valuations(), vec![1, 2, 3]);
        let b = engine().s_basis(10, 5, 40).unwrap();
        assert_eq!(b.len(), 11);
        assert!(b.valuations().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn full_spaces() {
        let e = engine();
        assert_eq!(e.m_basis(1, 6, 8).unwrap().valuations(), vec![0, 1]);
        assert_eq!(e.m_basis(4, 3, 12).unwrap().valuations(), vec![0, 1, 2, 3]);
        assert_eq!(e.m_basis(2, 2, 8).unwrap().valuations(), vec![0, 1]);
        assert_eq!(e.m_basis(8, 2, 20).unwrap().valuations(), vec![0, 1, 2, 3, 4]);
        assert_eq!(e.m_basis(10, 2, 20).unwrap().len(), 7);
    }

    #[test]
    fn membership() {
        let e = engine();
        let b = e.s_basis(5, 4, 20).unwrap();
        let f = e.s_basis(5, 2, 20).unwrap().elements[0].clone();
        let sq = f.mul_series(&f);
        let coords = verify_membership(&sq, &b).unwrap();
        let mut back = QSeries::zero(20);
        for (c, g) in coords.iter().zip(&b.elements) {
            back = back.add_series(&g.scale(c));
        }
        assert_eq!(back, sq.truncate(20));
        let one = QSeries::one(20);
        assert_eq!(verify_membership(&one, &b), Err(BasisError::NotInSpan { exponent: Exponent::ZERO }));
        let short = QSeries::from_ints(1, &[1]);
        assert!(matches!(verify_membership(&short, &b), Err(BasisError::InsufficientPrecision { .. })));
        assert_eq!(verify_membership(&b.elements[1], &b).unwrap(), vec![rat(0), rat(1), rat(0)]);
    }

    #[test]
    fn ladder_reports() {
        let r = lemma_lemP_check(2, 4).unwrap();
        assert!(r.holds && r.periodic);
        assert!(r.differences.iter().all(|&(_, d)| d == 0));
        let r = lemma_lemP_check(7, 3).unwrap();
        assert!(r.holds);
        assert!(r.differences.iter().all(|&(_, d)| d == 2));
        let r = lemma_lemP_check(7, 2).unwrap();
        assert!(!r.holds);
        assert_eq!(r.differences.iter().map(|&(_, d)| d).collect::<Vec<_>>(), vec![2, 0, 0, 2, 0, 0]);
        assert!(lemma_lemP_check(10, 2).unwrap().holds);
        assert_eq!(find_ladder_start(26, 60).unwrap(), None);
        assert_eq!(find_ladder_start(7, 60).unwrap(), Some(3));
    }

    #[test]
    fn ladder_failure_is_reported() {
        let text = "level 7\ndelta = eta(7:14,1:-2)\nk0 = 2\n\
                    gen 2 0 = Ew2(7)\ncusp 4 1 = qser(1: 1,-4)\n";
        let c = Catalog::parse(text).unwrap();
        let e = BasisEngine::new(&c);
        assert!(matches!(e.s_basis(7, 6, 30), Err(BasisError::LadderConditionFailed { k0: 2, .. })));
        assert_eq!(engine().s_basis(11, 2, 10), Err(BasisError::UnsupportedLevel(11)));
    }

    #[test]
    fn decompositions() {
        let e = engine();
        let d = e.structure_decompose(1, 12, true).unwrap();
        assert_eq!((d.total(), d.expected), (2, 2));
        assert_eq!(d.matches_basis, Some(true));
        let d = e.structure_decompose(3, 5, false).unwrap();
        assert_eq!(d.components.iter().map(|c| c.dim).collect::<Vec<_>>(), vec![0, 2]);
        let d = e.structure_decompose(6, 3, true).unwrap();
        assert_eq!(d.components.iter().map(|c| c.dim).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(d.matches_basis, Some(true));
    }
}
