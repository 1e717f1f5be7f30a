//! Per-level verification: dimension tables, printed expansions,
//! cross-representation identities, catalog invariants and the structure
//! theorems. Every check yields one `PASS|FAIL <id> <detail>` line.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::basis::{echelonize, lemma_lemP_check, ladder_difference, verify_membership, BasisEngine, EchelonBasis};
use crate::catalog::{integral_weight, Atom, Catalog, Check, CheckKind, Entry, FormExpr, LevelCatalog, RefKind, FormRef};
use crate::dimensions::{dim_m, dim_s, group_invariants, lemma_dim_checks};
use crate::series::{Exponent, QSeries};
use crate::default_precision;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Data printed in the per-level sections.
    Paper,
    /// Dimension lemmas, ladder and structure theorems, basis validity.
    Structure,
    All,
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper" => Ok(Suite::Paper),
            "structure" => Ok(Suite::Structure),
            "all" => Ok(Suite::All),
            other => Err(format!("unknown suite `{other}` (expected paper, structure or all)")),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Paper => "paper",
            Suite::Structure => "structure",
            Suite::All => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckLine {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckLine {
    fn new(id: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckLine { id: id.into(), passed, detail: detail.into() }
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub lines: Vec<CheckLine>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckLine> {
        self.lines.iter().filter(|l| !l.passed)
    }

    /// Lines whose id starts with `prefix`.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a CheckLine> + 'a {
        self.lines.iter().filter(move |l| l.id.starts_with(prefix))
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Run `suite` over `levels`. Levels are checked concurrently; the report
/// lists them in the order given.
pub fn run(catalog: &Catalog, levels: &[u32], suite: Suite) -> Report {
    let engine = BasisEngine::new(catalog);
    let per_level: Vec<Vec<CheckLine>> = levels
        .par_iter()
        .map(|&n| match catalog.level(n) {
            Err(e) => vec![CheckLine::new(format!("catalog/{n}"), false, e.to_string())],
            Ok(lc) => {
                let mut out = Vec::new();
                if matches!(suite, Suite::Paper | Suite::All) {
                    out.extend(catalog_checks(&engine, lc));
                }
                if matches!(suite, Suite::Structure | Suite::All) {
                    out.extend(structure_checks(&engine, lc));
                }
                out
            }
        })
        .collect();
    Report { lines: per_level.into_iter().flatten().collect() }
}

fn catalog_checks(engine: &BasisEngine<'_>, lc: &LevelCatalog) -> Vec<CheckLine> {
    let n = lc.level;
    let mut out = vec![dims_table(lc), cusp_count(n), delta_profile(engine, lc)];
    out.extend(lc.checks.iter().map(|c| catalog_check(engine, lc, c)));
    for e in lc.generators.values() {
        out.push(generator_check(engine, n, e));
    }
    for e in lc.cusp_forms.values() {
        out.push(cusp_form_check(engine, n, e));
    }
    out.push(seed_check(engine, lc));
    out
}

fn dims_table(lc: &LevelCatalog) -> CheckLine {
    let n = lc.level;
    let id = format!("dims/{n}");
    for (i, &printed) in lc.dims.iter().enumerate() {
        let w = 2 * (i as u32 + 1);
        match dim_s(n, w) {
            Ok(d) if d == printed => {}
            Ok(d) => return CheckLine::new(id, false, format!("weight {w}: printed {printed}, formula {d}")),
            Err(e) => return CheckLine::new(id, false, e.to_string()),
        }
    }
    CheckLine::new(id, !lc.dims.is_empty(), format!("{} printed values of dim S_2k match", lc.dims.len()))
}

fn cusp_count(n: u32) -> CheckLine {
    let id = format!("dims-cusps/{n}");
    let cusps = match group_invariants(n) {
        Ok(g) => g.cusps,
        Err(e) => return CheckLine::new(id, false, e.to_string()),
    };
    for w in (4..=40).step_by(2) {
        let (m, s) = (dim_m(n, w).unwrap_or(0), dim_s(n, w).unwrap_or(0));
        if m - s != cusps {
            return CheckLine::new(id, false, format!("weight {w}: dim M - dim S = {} but {cusps} cusps", m - s));
        }
    }
    CheckLine::new(id, true, format!("dim M - dim S = {cusps} for weights 4..40"))
}

fn delta_profile(engine: &BasisEngine<'_>, lc: &LevelCatalog) -> CheckLine {
    let n = lc.level;
    let id = format!("delta/{n}");
    let (rho, nu) = (lc.delta_weight(), lc.delta_valuation());
    let prec = nu as i64 + 4;
    let s = match engine.evaluator().evaluate(&FormExpr::Atom(Atom::Eta(lc.delta.clone())), prec) {
        Ok(s) => s,
        Err(e) => return CheckLine::new(id, false, e.to_string()),
    };
    let ok = s.is_unitary() && s.valuation().ok() == Some(Exponent::int(nu as i64));
    CheckLine::new(id, ok, format!("eta({}) has weight {rho} and valuation {nu}, expansion {s}", lc.delta))
}

fn weight_of(engine: &BasisEngine<'_>, e: &FormExpr) -> Option<u32> {
    engine.catalog().infer_weight(e).ok().and_then(integral_weight)
}

fn mismatch_detail(lhs: &QSeries, rhs: &QSeries, at: Exponent) -> String {
    let show = |s: &QSeries| s.coeff(at).map(|c| c.to_string()).unwrap_or_else(|_| "?".into());
    format!("first mismatch at q^{at}: expected {}, got {}", show(rhs), show(lhs))
}

fn catalog_check(engine: &BasisEngine<'_>, lc: &LevelCatalog, c: &Check) -> CheckLine {
    let n = lc.level;
    let (prefix, depth) = match c.kind {
        CheckKind::Printed => ("printed", printed_depth(&c.rhs)),
        CheckKind::Identity => ("identity", identity_depth(engine, n, c)),
        CheckKind::Distinct => ("distinct", identity_depth(engine, n, c).max(printed_depth(&c.rhs))),
    };
    let id = format!("{prefix}/{n}/{}", c.id);
    let ev = engine.evaluator();
    let (lhs, rhs) = match (ev.evaluate(&c.lhs, depth), ev.evaluate(&c.rhs, depth)) {
        (Ok(l), Ok(r)) => (l, r),
        (Err(e), _) | (_, Err(e)) => return CheckLine::new(id, false, e.to_string()),
    };
    let depth = Exponent::int(depth).min(lhs.prec()).min(rhs.prec());
    let diff = lhs.first_difference(&rhs, depth);
    match (c.kind, diff) {
        (CheckKind::Distinct, Some(at)) => {
            CheckLine::new(id, true, format!("{} != {}: {}", c.lhs, c.rhs, mismatch_detail(&lhs, &rhs, at)))
        }
        (CheckKind::Distinct, None) => {
            CheckLine::new(id, false, format!("{} and {} agree below q^{depth}", c.lhs, c.rhs))
        }
        (_, Some(at)) => CheckLine::new(id, false, format!("{}: {}", c.lhs, mismatch_detail(&lhs, &rhs, at))),
        (_, None) => CheckLine::new(id, true, format!("{} == {} below q^{depth}", c.lhs, c.rhs)),
    }
}

/// One past the last printed exponent of a `qser` right side.
fn printed_depth(e: &FormExpr) -> i64 {
    match e {
        FormExpr::Atom(Atom::QSer { valuation, coeffs }) => valuation + coeffs.len() as i64,
        _ => 0,
    }
}

/// Certification depth of an identity: the default precision of its
/// weight, which exceeds the Sturm bound.
fn identity_depth(engine: &BasisEngine<'_>, n: u32, c: &Check) -> i64 {
    let w = weight_of(engine, &c.lhs).or_else(|| weight_of(engine, &c.rhs)).unwrap_or(12);
    default_precision(n, w.max(2))
}

fn entry_ref(kind: RefKind, n: u32, e: &Entry) -> FormRef {
    FormRef { kind, weight: e.weight, level: n, index: e.index }
}

fn generator_check(engine: &BasisEngine<'_>, n: u32, e: &Entry) -> CheckLine {
    let r = entry_ref(RefKind::Generator, n, e);
    let id = format!("generator/{n}/{r}");
    let prec = default_precision(n, e.weight);
    match engine.evaluator().evaluate(&FormExpr::Atom(Atom::Ref(r)), prec) {
        Ok(s) => {
            let v = s.valuation().ok();
            let ok = s.is_unitary() && v == Some(Exponent::int(e.index as i64));
            CheckLine::new(id, ok, format!("valuation {}, leading coefficient {}", fmt_opt(v), lead(&s)))
        }
        Err(err) => CheckLine::new(id, false, err.to_string()),
    }
}

fn fmt_opt(v: Option<Exponent>) -> String {
    v.map_or("none".into(), |v| v.to_string())
}

fn lead(s: &QSeries) -> String {
    s.leading_coefficient().map_or("none".into(), |c| c.to_string())
}

fn cusp_form_check(engine: &BasisEngine<'_>, n: u32, e: &Entry) -> CheckLine {
    let r = entry_ref(RefKind::Cusp, n, e);
    let id = format!("cusp-form/{n}/{r}");
    let prec = default_precision(n, e.weight);
    let s = match engine.evaluator().evaluate(&FormExpr::Atom(Atom::Ref(r)), prec) {
        Ok(s) => s,
        Err(err) => return CheckLine::new(id, false, err.to_string()),
    };
    let v = s.valuation().ok();
    if !s.is_unitary() || v != Some(Exponent::int(e.index as i64)) {
        return CheckLine::new(id, false, format!("valuation {}, leading coefficient {}", fmt_opt(v), lead(&s)));
    }
    let tag = if e.reconstructed { ", reconstructed" } else { "" };
    match engine.m_basis(n, e.weight / 2, prec) {
        Ok(b) => match verify_membership(&s, &b) {
            Ok(_) => CheckLine::new(id, true, format!("unitary, valuation {}, in M_{}{tag}", e.index, e.weight)),
            Err(err) => CheckLine::new(id, false, format!("not in M_{}: {err}", e.weight)),
        },
        Err(err) => CheckLine::new(id, false, err.to_string()),
    }
}

fn seed_check(engine: &BasisEngine<'_>, lc: &LevelCatalog) -> CheckLine {
    let n = lc.level;
    let id = format!("seeds/{n}");
    let seeds = lc.seeds();
    let weight = 2 * lc.k0;
    let expected = dim_s(n, weight).unwrap_or(0) as usize;
    let prec = default_precision(n, weight);
    let mut vals = Vec::new();
    for e in &seeds {
        match engine.evaluator().evaluate(&FormExpr::Atom(Atom::Ref(entry_ref(RefKind::Cusp, n, e))), prec) {
            Ok(s) if s.is_unitary() => vals.push(s.valuation().ok().and_then(|v| v.as_integer()).unwrap_or(-1)),
            Ok(_) => return CheckLine::new(id, false, format!("seed F[{weight},{n},{}] is not unitary", e.index)),
            Err(err) => return CheckLine::new(id, false, err.to_string()),
        }
    }
    let want: Vec<i64> = (1..=expected as i64).collect();
    CheckLine::new(
        id,
        seeds.len() == expected && vals == want,
        format!("k0 = {}, {} seeds of weight {weight} with valuations {vals:?}", lc.k0, seeds.len()),
    )
}

fn structure_checks(engine: &BasisEngine<'_>, lc: &LevelCatalog) -> Vec<CheckLine> {
    let n = lc.level;
    let mut out = vec![lemma_dims(n), ladder_check(lc)];
    out.extend(ladder_rules(lc));
    out.push(valuation_law(engine, lc));
    out.push(decomposition(engine, n));
    out.push(delta_multiplication(engine, lc));
    out.push(basis_validity(engine, n));
    out
}

fn lemma_dims(n: u32) -> CheckLine {
    let id = format!("lemma-dims/{n}");
    match lemma_dim_checks(n, 50) {
        Ok(checks) => match checks.iter().find(|c| !c.passed()) {
            None => CheckLine::new(id, true, "dim S_{2k+ρ} - dim S_2k = ν (ν - 1 at k = 1) for k <= 50"),
            Some(c) => CheckLine::new(id, false, format!("k = {}: difference {}, expected {}", c.k, c.actual, c.expected)),
        },
        Err(e) => CheckLine::new(id, false, e.to_string()),
    }
}

fn ladder_check(lc: &LevelCatalog) -> CheckLine {
    let n = lc.level;
    let id = format!("ladder/{n}");
    match lemma_lemP_check(n, lc.k0) {
        Ok(r) => {
            let diffs: Vec<i64> = r.differences.iter().map(|&(_, d)| d).collect();
            CheckLine::new(
                id,
                r.holds && r.periodic,
                format!(
                    "k0 = {}: dim S_2k - dim M_{{2(k-k0)}} over k0+1..k0+6 = {diffs:?}, dim S_{} - 1 = {}{}",
                    lc.k0,
                    2 * lc.k0,
                    r.seed_dim as i64 - 1,
                    if r.periodic { ", 6-periodic" } else { ", not 6-periodic" }
                ),
            )
        }
        Err(e) => CheckLine::new(id, false, e.to_string()),
    }
}

/// Alternate ladder starts for some weight classes, checked on the weights
/// they govern, next to the main start's behaviour on the same weights.
fn ladder_rules(lc: &LevelCatalog) -> Vec<CheckLine> {
    let n = lc.level;
    lc.ladders
        .iter()
        .map(|rule| {
            let id = format!("ladder/{n}/{}mod{}", rule.residue, rule.modulus);
            let seed = dim_s(n, 2 * rule.k0).unwrap_or(0) as i64;
            let main_seed = dim_s(n, 2 * lc.k0).unwrap_or(0) as i64;
            let ks: Vec<u32> = (rule.k0..=rule.k0 + 18)
                .filter(|k| (2 * k) % rule.modulus == rule.residue && *k > rule.k0)
                .collect();
            let ok = ks.iter().all(|&k| ladder_difference(n, rule.k0, k).ok() == Some(seed - 1));
            let main_ok = ks
                .iter()
                .filter(|&&k| k > lc.k0)
                .all(|&k| ladder_difference(n, lc.k0, k).ok() == Some(main_seed - 1));
            CheckLine::new(
                id,
                ok,
                format!(
                    "weights ≡ {} mod {} use k0 = {} (difference {} on k in {ks:?}); k0 = {} {} there",
                    rule.residue,
                    rule.modulus,
                    rule.k0,
                    seed - 1,
                    lc.k0,
                    if main_ok { "also holds" } else { "fails" }
                ),
            )
        })
        .collect()
}

fn valuation_law(engine: &BasisEngine<'_>, lc: &LevelCatalog) -> CheckLine {
    let n = lc.level;
    let id = format!("valuation-law/{n}");
    let h = lc.delta_weight() / 2;
    let nu = lc.delta_valuation() as i64;
    for k in h + 2..=h + 8 {
        let b = match engine.s_basis(n, k, default_precision(n, 2 * k)) {
            Ok(b) => b,
            Err(e) => return CheckLine::new(id, false, format!("k = {k}: {e}")),
        };
        let vals = b.valuations();
        let head: Vec<i64> = vals.iter().take(nu as usize).copied().collect();
        if head != (1..=nu).collect::<Vec<_>>() {
            return CheckLine::new(id, false, format!("k = {k}: first valuations {head:?}, expected 1..={nu}"));
        }
    }
    CheckLine::new(id, true, format!("ν(F^(s)) = s for s <= {nu}, k = {}..={}", h + 2, h + 8))
}

fn decomposition(engine: &BasisEngine<'_>, n: u32) -> CheckLine {
    let id = format!("decomposition/{n}");
    for k in 2..=12 {
        match engine.structure_decompose(n, k, true) {
            Ok(d) if d.matches_basis == Some(true) => {}
            Ok(d) => {
                return CheckLine::new(id, false, format!("k = {k}: pieces do not reduce to the basis of S_{}", d.weight))
            }
            Err(e) => return CheckLine::new(id, false, format!("k = {k}: {e}")),
        }
    }
    CheckLine::new(id, true, "dimensions sum to dim S_2k and pieces reduce to the basis, k = 2..=12")
}

fn delta_multiplication(engine: &BasisEngine<'_>, lc: &LevelCatalog) -> CheckLine {
    let n = lc.level;
    let id = format!("delta-multiplication/{n}");
    let h = lc.delta_weight() / 2;
    let nu = lc.delta_valuation() as i64;
    for k in 1..=10 {
        let target = k + h;
        let prec = default_precision(n, 2 * target);
        let (src, dst) = match (engine.s_basis(n, k, prec), engine.s_basis(n, target, prec)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return CheckLine::new(id, false, format!("k = {k}: {e}")),
        };
        let delta = match engine.evaluator().evaluate(&FormExpr::Atom(Atom::Eta(lc.delta.clone())), prec) {
            Ok(d) => d,
            Err(e) => return CheckLine::new(id, false, e.to_string()),
        };
        for (i, f) in src.elements.iter().enumerate() {
            let g = f.mul_series(&delta).truncate(prec);
            let v = g.valuation().ok().and_then(|v| v.as_integer()).unwrap_or(-1);
            if v <= nu {
                return CheckLine::new(id, false, format!("k = {k}, element {}: ν(Δf) = {v} <= {nu}", i + 1));
            }
            if let Err(e) = verify_membership(&g, &dst) {
                return CheckLine::new(id, false, format!("k = {k}, element {}: {e}", i + 1));
            }
        }
    }
    CheckLine::new(id, true, format!("Δ·S_2k lies in S_{{2k+{}}} with valuation > {nu}, k <= 10", 2 * h))
}

fn basis_problem(b: &EchelonBasis, expected: u64) -> Option<String> {
    if b.len() as u64 != expected {
        return Some(format!("{} elements, dimension {expected}", b.len()));
    }
    if !b.elements.iter().all(|e| e.is_unitary()) {
        return Some("element not unitary".into());
    }
    let vals = b.valuations();
    if vals.windows(2).any(|w| w[0] >= w[1]) {
        return Some(format!("valuations not increasing: {vals:?}"));
    }
    match echelonize(&b.elements, b.len(), b.prec) {
        Ok(again) if again == b.elements => None,
        Ok(_) => Some("re-echelonization changed the basis".into()),
        Err(e) => Some(e.to_string()),
    }
}

fn basis_validity(engine: &BasisEngine<'_>, n: u32) -> CheckLine {
    let id = format!("bases/{n}");
    for k in 1..=12 {
        let w = 2 * k;
        let prec = default_precision(n, w);
        for (label, b, dim) in [
            ("S", engine.s_basis(n, k, prec), dim_s(n, w)),
            ("M", engine.m_basis(n, k, prec), dim_m(n, w)),
        ] {
            let problem = match (b, dim) {
                (Ok(b), Ok(d)) => basis_problem(&b, d),
                (Err(e), _) => Some(e.to_string()),
                (_, Err(e)) => Some(e.to_string()),
            };
            if let Some(p) = problem {
                return CheckLine::new(id, false, format!("{label}_{w}: {p}"));
            }
        }
    }
    CheckLine::new(id, true, "S_2k and M_2k for k <= 12: dimensions, unitary, increasing valuations, idempotent")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_suite_level_two() {
        let r = run(Catalog::standard(), &[2], Suite::Paper);
        assert!(r.passed(), "{r}");
        assert!(r.with_prefix("printed/2/F8_2").next().unwrap().passed);
    }

    #[test]
    fn corrupted_printed_value_fails_at_its_exponent() {
        let text = crate::catalog::STANDARD_SOURCE.replace("qser(1: 1,-8,12,64,-210,-96,1016)", "qser(1: 1,-8,12,64,-211,-96,1016)");
        let c = Catalog::parse(&text).unwrap();
        let r = run(&c, &[2], Suite::Paper);
        let line = r.with_prefix("printed/2/F8_2").next().unwrap();
        assert!(!line.passed);
        assert!(line.detail.contains("first mismatch at q^5"), "{line}");
    }

    #[test]
    fn unknown_level_is_a_failure_line() {
        let r = run(Catalog::standard(), &[11], Suite::Paper);
        assert!(!r.passed());
        assert_eq!(r.lines.len(), 1);
    }

    #[test]
    fn report_rendering() {
        let l = CheckLine::new("dims/1", true, "ok");
        assert_eq!(l.to_string(), "PASS dims/1 ok");
        assert_eq!("structure".parse::<Suite>(), Ok(Suite::Structure));
        assert!("x".parse::<Suite>().is_err());
    }
}
