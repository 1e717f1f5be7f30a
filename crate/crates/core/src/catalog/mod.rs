//! Per-level data: Δ_N, named generators `E[w,N,s]`, cusp forms
//! `F[w,N,s]`, ladder parameters and the checks the verify suite runs.
//!
//! The standard catalog lives in `data/levels.cat`. Its format is one
//! directive per line, `#` starting a comment:
//!
//! ```text
//! level N
//! delta = EXPR
//! k0 = K
//! ladder M R = K          weights ≡ R (mod M) use ladder start K instead
//! ring = EXPR, EXPR, ...   monomial recipe for the full spaces
//! dims = d2 d4 d6 ...      printed dimensions of S_2, S_4, ...
//! gen W S = EXPR [reconstructed]
//! cusp W S = EXPR [reconstructed]
//! printed ID : EXPR == qser(...)
//! identity ID : EXPR == EXPR
//! distinct ID : EXPR != EXPR
//! ```

mod eval;
mod expr;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_rational::Ratio;
use thiserror::Error;

use crate::dimensions::{group_invariants, DimensionError, LevelProfile};
use crate::eta::{EtaError, EtaQuotient};
use crate::eisenstein::EisensteinError;
use crate::series::SeriesError;

pub use eval::Evaluator;
pub use expr::{parse_expr, render, Atom, ExprError, FormExpr, FormRef, Num, RefKind, Weight, WeightError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("line {line}: {source}")]
    Expr { line: usize, source: ExprError },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Weight { line: usize, source: WeightError },
    #[error("{0}")]
    WeightMismatch(String),
    #[error("line {line}: expression lives on level {hint}, which does not divide {level}")]
    LevelMismatch { line: usize, level: u32, hint: u32 },
    #[error("no catalog entry {0}")]
    UnknownReference(String),
    #[error("level {0} is not in the catalog")]
    UnsupportedLevel(u32),
    #[error("reference cycle through {0}")]
    Cycle(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Eta(#[from] EtaError),
    #[error(transparent)]
    Eisenstein(#[from] EisensteinError),
    #[error("{0}")]
    Parse(#[from] ExprError),
}

/// A named generator or cusp form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub weight: u32,
    pub index: u32,
    pub expr: FormExpr,
    /// Not stated in usable form by the source; rebuilt from other data.
    pub reconstructed: bool,
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// Left side against a printed expansion, through its last printed term.
    Printed,
    /// Two expressions of the same form, compared to certification depth.
    Identity,
    /// Two expressions that must differ (documents a misprint).
    Distinct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub id: String,
    pub kind: CheckKind,
    pub lhs: FormExpr,
    pub rhs: FormExpr,
    pub line: usize,
}

/// Ladder start override for weights `≡ residue (mod modulus)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LadderRule {
    pub modulus: u32,
    pub residue: u32,
    pub k0: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelCatalog {
    pub level: u32,
    pub delta: EtaQuotient,
    pub k0: u32,
    pub ladders: Vec<LadderRule>,
    pub ring: Option<Vec<FormExpr>>,
    /// Printed dim S_w for w = 2, 4, 6, ...
    pub dims: Vec<u64>,
    pub generators: BTreeMap<(u32, u32), Entry>,
    pub cusp_forms: BTreeMap<(u32, u32), Entry>,
    pub checks: Vec<Check>,
}

impl LevelCatalog {
    /// Ladder start for weight `2k`.
    pub fn ladder_start(&self, weight: u32) -> u32 {
        self.ladders
            .iter()
            .find(|r| weight % r.modulus == r.residue)
            .map_or(self.k0, |r| r.k0)
    }

    /// Cusp forms of the given weight, ordered by index.
    pub fn cusp_forms_of_weight(&self, weight: u32) -> Vec<&Entry> {
        self.cusp_forms.range((weight, 0)..(weight + 1, 0)).map(|(_, e)| e).collect()
    }

    pub fn generators_of_weight(&self, weight: u32) -> Vec<&Entry> {
        self.generators.range((weight, 0)..(weight + 1, 0)).map(|(_, e)| e).collect()
    }

    /// Seeds of the main ladder: the cusp forms of weight `2·k0`.
    pub fn seeds(&self) -> Vec<&Entry> {
        self.cusp_forms_of_weight(2 * self.k0)
    }

    /// Weight ρ_N of Δ_N.
    pub fn delta_weight(&self) -> u32 {
        self.delta.weight().to_integer() as u32
    }

    /// Valuation ν(Δ_N).
    pub fn delta_valuation(&self) -> u32 {
        self.delta.valuation().to_integer() as u32
    }

    /// Identities pairing two closed forms of the same series.
    pub fn identities(&self) -> Vec<(&FormExpr, &FormExpr)> {
        self.checks
            .iter()
            .filter(|c| c.kind == CheckKind::Identity)
            .map(|c| (&c.lhs, &c.rhs))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Catalog {
    levels: BTreeMap<u32, LevelCatalog>,
}

static STANDARD: OnceLock<Catalog> = OnceLock::new();

/// Source text of the standard catalog.
pub const STANDARD_SOURCE: &str = include_str!("../../data/levels.cat");

impl Catalog {
    /// The built-in catalog for levels 1 to 10.
    pub fn standard() -> &'static Catalog {
        STANDARD.get_or_init(|| Catalog::parse(STANDARD_SOURCE).expect("built-in catalog is well formed"))
    }

    pub fn level(&self, n: u32) -> Result<&LevelCatalog, CatalogError> {
        self.levels.get(&n).ok_or(CatalogError::UnsupportedLevel(n))
    }

    pub fn levels(&self) -> impl Iterator<Item = &LevelCatalog> {
        self.levels.values()
    }

    pub fn level_numbers(&self) -> Vec<u32> {
        self.levels.keys().copied().collect()
    }

    /// Identity corpus of one level.
    pub fn catalog_identities(&self, n: u32) -> Result<Vec<(&FormExpr, &FormExpr)>, CatalogError> {
        Ok(self.level(n)?.identities())
    }

    pub fn entry(&self, r: &FormRef) -> Result<&Entry, CatalogError> {
        let level = self.level(r.level).map_err(|_| CatalogError::UnknownReference(r.to_string()))?;
        let map = match r.kind {
            RefKind::Generator => &level.generators,
            RefKind::Cusp => &level.cusp_forms,
        };
        map.get(&(r.weight, r.index)).ok_or_else(|| CatalogError::UnknownReference(r.to_string()))
    }

    pub fn delta_weight(&self, n: u32) -> Option<u32> {
        self.levels.get(&n).map(|l| l.delta_weight())
    }

    /// Weight of an expression, resolving `delta(N)` through this catalog.
    pub fn infer_weight(&self, e: &FormExpr) -> Result<Weight, WeightError> {
        e.weight(&|n| self.delta_weight(n))
    }

    pub fn profile(&self, n: u32) -> Result<LevelProfile, DimensionError> {
        let lc = self.levels.get(&n).ok_or(DimensionError::UnsupportedLevel(n))?;
        let seeds = lc.seeds();
        Ok(LevelProfile {
            invariants: group_invariants(n)?,
            delta_weight: lc.delta_weight(),
            delta_valuation: lc.delta_valuation(),
            k0: lc.k0,
            seed_count: seeds.len(),
            seeds: seeds
                .iter()
                .map(|e| FormRef { kind: RefKind::Cusp, weight: e.weight, level: n, index: e.index }.to_string())
                .collect(),
        })
    }

    /// Parse catalog text and validate every entry.
    pub fn parse(text: &str) -> Result<Catalog, CatalogError> {
        let mut levels: BTreeMap<u32, LevelCatalog> = BTreeMap::new();
        let mut current: Option<LevelCatalog> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fmt_err = |msg: String| CatalogError::Format { line, msg };
            let (head, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
            let rest = rest.trim();
            if head == "level" {
                if let Some(done) = current.take() {
                    levels.insert(done.level, done);
                }
                let n: u32 = rest.parse().map_err(|_| fmt_err(format!("bad level `{rest}`")))?;
                if n == 0 || levels.contains_key(&n) {
                    return Err(fmt_err(format!("level {n} is zero or repeated")));
                }
                current = Some(LevelCatalog {
                    level: n,
                    delta: EtaQuotient::default(),
                    k0: 1,
                    ladders: Vec::new(),
                    ring: None,
                    dims: Vec::new(),
                    generators: BTreeMap::new(),
                    cusp_forms: BTreeMap::new(),
                    checks: Vec::new(),
                });
                continue;
            }
            let lc = current.as_mut().ok_or_else(|| fmt_err("directive before any `level` line".into()))?;
            let parse = |t: &str| parse_expr(t).map_err(|source| CatalogError::Expr { line, source });
            match head {
                "delta" => {
                    let t = rest.strip_prefix('=').ok_or_else(|| fmt_err("expected `delta = eta(...)`".into()))?;
                    match parse(t.trim())? {
                        FormExpr::Atom(Atom::Eta(e)) => {
                            let (w, v) = e.profile();
                            if !w.is_integer() || !v.is_integer() || v <= Ratio::from(0) {
                                return Err(fmt_err(format!("Δ must have integral weight and positive valuation, got ({w}, {v})")));
                            }
                            lc.delta = e;
                        }
                        _ => return Err(fmt_err("Δ must be a single eta quotient".into())),
                    }
                }
                "k0" => {
                    let t = rest.strip_prefix('=').ok_or_else(|| fmt_err("expected `k0 = K`".into()))?;
                    lc.k0 = t.trim().parse().map_err(|_| fmt_err(format!("bad k0 `{t}`")))?;
                }
                "ladder" => {
                    let (lhs, k) = rest.split_once('=').ok_or_else(|| fmt_err("expected `ladder M R = K`".into()))?;
                    let nums: Vec<u32> = lhs
                        .split_whitespace()
                        .chain(std::iter::once(k.trim()))
                        .map(|t| t.parse().map_err(|_| fmt_err(format!("bad number `{t}`"))))
                        .collect::<Result<_, _>>()?;
                    if nums.len() != 3 || nums[0] == 0 {
                        return Err(fmt_err("expected `ladder M R = K`".into()));
                    }
                    lc.ladders.push(LadderRule { modulus: nums[0], residue: nums[1], k0: nums[2] });
                }
                "ring" => {
                    let t = rest.strip_prefix('=').ok_or_else(|| fmt_err("expected `ring = ...`".into()))?;
                    let gens = split_top_level(t)
                        .into_iter()
                        .map(|g| parse(g.trim()))
                        .collect::<Result<Vec<_>, _>>()?;
                    lc.ring = Some(gens);
                }
                "dims" => {
                    let t = rest.strip_prefix('=').ok_or_else(|| fmt_err("expected `dims = ...`".into()))?;
                    lc.dims = t
                        .split_whitespace()
                        .map(|d| d.parse().map_err(|_| fmt_err(format!("bad dimension `{d}`"))))
                        .collect::<Result<_, _>>()?;
                }
                "gen" | "cusp" => {
                    let (lhs, body) = rest.split_once('=').ok_or_else(|| fmt_err(format!("expected `{head} W S = EXPR`")))?;
                    let nums: Vec<u32> = lhs
                        .split_whitespace()
                        .map(|t| t.parse().map_err(|_| fmt_err(format!("bad number `{t}`"))))
                        .collect::<Result<_, _>>()?;
                    if nums.len() != 2 {
                        return Err(fmt_err(format!("expected `{head} W S = EXPR`")));
                    }
                    let mut body = body.trim();
                    let mut reconstructed = false;
                    if let Some(b) = body.strip_suffix("[reconstructed]") {
                        body = b.trim();
                        reconstructed = true;
                    }
                    let entry = Entry { weight: nums[0], index: nums[1], expr: parse(body)?, reconstructed, line };
                    let map = if head == "gen" { &mut lc.generators } else { &mut lc.cusp_forms };
                    if map.insert((nums[0], nums[1]), entry).is_some() {
                        return Err(fmt_err(format!("{head} {} {} defined twice", nums[0], nums[1])));
                    }
                }
                "printed" | "identity" | "distinct" => {
                    let (id, body) = rest.split_once(':').ok_or_else(|| fmt_err(format!("expected `{head} ID : ...`")))?;
                    let op = if head == "distinct" { "!=" } else { "==" };
                    let (l, r) = body.split_once(op).ok_or_else(|| fmt_err(format!("expected `{op}`")))?;
                    let kind = match head {
                        "printed" => CheckKind::Printed,
                        "identity" => CheckKind::Identity,
                        _ => CheckKind::Distinct,
                    };
                    let rhs = parse(r.trim())?;
                    if kind == CheckKind::Printed && !matches!(rhs, FormExpr::Atom(Atom::QSer { .. })) {
                        return Err(fmt_err("printed checks need a qser(...) right side".into()));
                    }
                    let id = id.trim().to_string();
                    if id.is_empty() || id.contains(char::is_whitespace) {
                        return Err(fmt_err(format!("bad check id `{id}`")));
                    }
                    lc.checks.push(Check { id, kind, lhs: parse(l.trim())?, rhs, line });
                }
                other => return Err(fmt_err(format!("unknown directive `{other}`"))),
            }
        }
        if let Some(done) = current.take() {
            levels.insert(done.level, done);
        }
        let catalog = Catalog { levels };
        catalog.validate()?;
        Ok(catalog)
    }

    fn validate(&self) -> Result<(), CatalogError> {
        for lc in self.levels.values() {
            if lc.delta.terms().is_empty() {
                return Err(CatalogError::Format { line: 0, msg: format!("level {} has no delta", lc.level) });
            }
            let entries = lc.generators.values().chain(lc.cusp_forms.values());
            for e in entries {
                let line = e.line;
                match self.infer_weight(&e.expr).map_err(|source| CatalogError::Weight { line, source })? {
                    Weight::Known(w) if w != Ratio::from(e.weight as i64) => {
                        return Err(CatalogError::WeightMismatch(format!(
                            "line {line}: entry declared weight {} but expression has weight {w}",
                            e.weight
                        )))
                    }
                    _ => {}
                }
                let hint = e.expr.level_hint();
                if lc.level % hint != 0 {
                    return Err(CatalogError::LevelMismatch { line, level: lc.level, hint });
                }
                for atom in e.expr.atoms() {
                    if let Atom::Ref(r) = atom {
                        self.entry(r)?;
                    }
                }
            }
            for c in &lc.checks {
                let line = c.line;
                let lw = self.infer_weight(&c.lhs).map_err(|source| CatalogError::Weight { line, source })?;
                let rw = self.infer_weight(&c.rhs).map_err(|source| CatalogError::Weight { line, source })?;
                if let (Weight::Known(a), Weight::Known(b)) = (lw, rw) {
                    if a != b {
                        return Err(CatalogError::WeightMismatch(format!(
                            "line {line}: check `{}` compares weights {a} and {b}",
                            c.id
                        )));
                    }
                }
                for atom in c.lhs.atoms().into_iter().chain(c.rhs.atoms()) {
                    if let Atom::Ref(r) = atom {
                        self.entry(r)?;
                    }
                }
            }
            if let Some(ring) = &lc.ring {
                for g in ring {
                    let hint = g.level_hint();
                    if lc.level % hint != 0 {
                        return Err(CatalogError::LevelMismatch { line: 0, level: lc.level, hint });
                    }
                }
            }
            for r in &lc.ladders {
                if r.k0 == 0 {
                    return Err(CatalogError::Format { line: 0, msg: "ladder start must be positive".into() });
                }
            }
        }
        Ok(())
    }
}

/// Split on commas that are not inside brackets or parentheses.
fn split_top_level(t: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in t.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&t[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&t[start..]);
    out
}

/// Weight of a check, as an integer, when it is known.
pub fn integral_weight(w: Weight) -> Option<u32> {
    match w {
        Weight::Known(r) if r.is_integer() && r >= Ratio::from(0) => Some(r.to_integer() as u32),
        _ => None,
    }
}
