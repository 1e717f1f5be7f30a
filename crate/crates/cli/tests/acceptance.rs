//! One PASS/FAIL line per acceptance criterion.

use std::process::Command;

use cuspbase::catalog::{Atom, CheckKind, FormExpr, STANDARD_SOURCE};
use cuspbase::dimensions::group_invariants;
use cuspbase::verify::{run, Report, Suite};
use cuspbase::{dim_m, dim_s, echelonize, BasisEngine, Catalog, EtaQuotient, Exponent, QSeries, SpaceKind};
use num_bigint::BigInt;

type Outcome = Result<String, String>;

/// Cusp form dimensions as tabulated for weights 2, 4, 6, ...
const PRINTED_DIMS: [(u32, &[u64]); 10] = [
    (1, &[0, 0, 0, 0, 0, 1, 0, 1, 1]),
    (2, &[0, 0, 0, 1, 1, 2, 2, 3, 3]),
    (3, &[0, 0, 1, 1, 2, 3, 3, 4, 5, 5]),
    (4, &[0, 0, 1, 2, 3, 4, 5, 6]),
    (5, &[0, 1, 1, 3, 3, 5, 5, 7]),
    (6, &[0, 1, 3, 5, 7, 9, 11, 13]),
    (7, &[0, 1, 3, 3, 5, 7, 7, 9]),
    (8, &[0, 1, 3, 5, 7, 9, 11, 13]),
    (9, &[0, 1, 3, 5, 7, 9, 11, 13]),
    (10, &[0, 3, 5, 9, 11, 15, 17, 21]),
];

const PRINTED_SERIES: [&str; 21] = [
    "printed/2/delta2",
    "printed/2/E4_2_0",
    "printed/2/F8_2",
    "printed/3/delta3",
    "printed/4/E2_4_0",
    "printed/4/E2_4_1",
    "printed/4/F6_4",
    "printed/5/F4_5",
    "printed/6/delta6",
    "printed/6/E2_6_0",
    "printed/6/E2_6_1",
    "printed/7/E6_7_0",
    "printed/7/E6_7_1",
    "printed/7/E6_7_2",
    "printed/8/E2_8_0",
    "printed/8/E2_8_1",
    "printed/8/E2_8_2",
    "printed/9/E2_9_0",
    "printed/9/E2_9_1",
    "printed/9/E2_9_2",
    "distinct/4/E2_4_0-plus32",
];

const IDENTITIES: [&str; 4] =
    ["identity/5/delta5-wpa", "identity/2/E2_2_0-combo", "printed/6/E2_6_1", "identity/2/F8_2-eta"];

const K0: [u32; 10] = [6, 4, 3, 3, 2, 2, 3, 2, 2, 2];

fn require(report: &Report, ids: &[&str]) -> Result<usize, String> {
    for id in ids {
        match report.lines.iter().find(|l| l.id == *id) {
            None => return Err(format!("{id} missing from the report")),
            Some(l) if !l.passed => return Err(l.to_string()),
            Some(_) => {}
        }
    }
    Ok(ids.len())
}

fn all_pass(report: &Report, prefixes: &[&str]) -> Result<usize, String> {
    let lines: Vec<_> = report.lines.iter().filter(|l| prefixes.iter().any(|p| l.id.starts_with(p))).collect();
    if let Some(bad) = lines.iter().find(|l| !l.passed) {
        return Err(bad.to_string());
    }
    Ok(lines.len())
}

fn dims() -> Outcome {
    let mut count = 0;
    for (n, row) in PRINTED_DIMS {
        for (i, &want) in row.iter().enumerate() {
            let w = 2 * (i as u32 + 1);
            let got = dim_s(n, w).map_err(|e| e.to_string())?;
            if got != want {
                return Err(format!("N={n} weight {w}: tabulated {want}, formula {got}"));
            }
            count += 1;
        }
        let cusps = group_invariants(n).map_err(|e| e.to_string())?.cusps;
        for w in (4..=60).step_by(2) {
            if dim_m(n, w).unwrap() - dim_s(n, w).unwrap() != cusps {
                return Err(format!("N={n} weight {w}: dim M - dim S != {cusps}"));
            }
        }
    }
    Ok(format!("{count} tabulated dimensions match; dim M - dim S = cusps up to weight 60"))
}

fn printed(report: &Report) -> Outcome {
    let n = require(report, &PRINTED_SERIES)?;
    let all = all_pass(report, &["printed/", "distinct/"])?;
    Ok(format!("{n} required series match through their last printed term ({all} printed/distinct checks)"))
}

fn identities(report: &Report) -> Outcome {
    require(report, &IDENTITIES)?;
    let all = all_pass(report, &["identity/"])?;
    Ok(format!("{all} identities agree to default precision"))
}

fn structure(report: &Report) -> Outcome {
    let catalog = Catalog::standard();
    for (i, &k0) in K0.iter().enumerate() {
        let n = i as u32 + 1;
        let got = catalog.level(n).map_err(|e| e.to_string())?.k0;
        if got != k0 {
            return Err(format!("N={n}: ladder start {got}, expected {k0}"));
        }
    }
    let n = all_pass(
        report,
        &["lemma-dims/", "ladder/", "valuation-law/", "decomposition/", "delta-multiplication/"],
    )?;
    if n < 50 {
        return Err(format!("only {n} structure lines"));
    }
    Ok(format!("{n} structure checks pass"))
}

fn bases() -> Outcome {
    let engine = BasisEngine::new(Catalog::standard());
    let mut count = 0;
    for n in 1..=10u32 {
        for k in 1..=12u32 {
            for kind in [SpaceKind::Full, SpaceKind::Cusp] {
                let w = 2 * k;
                let prec = cuspbase::default_precision(n, w);
                let b = engine.basis(n, k, kind, prec).map_err(|e| format!("N={n} {kind} weight {w}: {e}"))?;
                let dim = match kind {
                    SpaceKind::Full => dim_m(n, w),
                    SpaceKind::Cusp => dim_s(n, w),
                }
                .unwrap();
                let vals = b.valuations();
                let ok = b.len() as u64 == dim
                    && vals.windows(2).all(|p| p[0] < p[1])
                    && b.elements.iter().all(QSeries::is_unitary)
                    && echelonize(&b.elements, b.len(), prec).as_deref() == Ok(&b.elements[..]);
                if !ok {
                    return Err(format!("N={n} {kind} weight {w}: {} elements, valuations {vals:?}", b.len()));
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} bases with correct size, increasing valuations, unit leads, idempotent"))
}

/// `∏ (1 - q^(mk))^r` by one binomial factor at a time, coefficients from the leading exponent.
fn naive_eta(terms: &[(u32, i32)], n: usize) -> Vec<BigInt> {
    let mut poly = vec![BigInt::from(0); n];
    poly[0] = BigInt::from(1);
    for &(m, r) in terms {
        for step in (1..).map(|k| k * m as usize).take_while(|&s| s < n) {
            for _ in 0..r.unsigned_abs() {
                if r > 0 {
                    for i in (step..n).rev() {
                        let t = poly[i - step].clone();
                        poly[i] -= t;
                    }
                } else {
                    for i in step..n {
                        let t = poly[i - step].clone();
                        poly[i] += t;
                    }
                }
            }
        }
    }
    poly
}

fn collect_eta(e: &FormExpr, out: &mut Vec<EtaQuotient>) {
    for a in e.atoms() {
        if let Atom::Eta(q) = a {
            if !out.contains(q) {
                out.push(q.clone());
            }
        }
    }
}

fn oracle() -> Outcome {
    let catalog = Catalog::standard();
    let mut atoms = Vec::new();
    for lc in catalog.levels() {
        if !atoms.contains(&lc.delta) {
            atoms.push(lc.delta.clone());
        }
        for e in lc.generators.values().chain(lc.cusp_forms.values()) {
            collect_eta(&e.expr, &mut atoms);
        }
        for c in &lc.checks {
            collect_eta(&c.lhs, &mut atoms);
            collect_eta(&c.rhs, &mut atoms);
        }
    }
    const N: usize = 200;
    for q in &atoms {
        let lead = q.valuation();
        if !lead.is_integer() {
            return Err(format!("eta({q}) has fractional valuation {lead}"));
        }
        let lead = lead.to_integer();
        let fast = q.expand(Exponent::int(lead + N as i64)).map_err(|e| e.to_string())?;
        let slow = QSeries::from_bigints(lead, naive_eta(q.terms(), N));
        if let Some(at) = fast.first_difference(&slow, Exponent::int(lead + N as i64)) {
            return Err(format!("eta({q}) differs at q^{at}"));
        }
    }
    Ok(format!("{} catalog eta atoms agree with the naive product to {N} coefficients", atoms.len()))
}

/// Replace coefficient `i` of the trailing `qser(...)` on `line`.
fn corrupt(line: &str, i: usize) -> Option<(String, i64)> {
    let start = line.rfind("qser(")? + 5;
    let end = start + line[start..].find(')')?;
    let (v, body) = line[start..end].split_once(':')?;
    let mut cs: Vec<String> = body.split(',').map(|c| c.trim().to_string()).collect();
    let c: i64 = cs.get(i)?.parse().ok()?;
    cs[i] = (c + 1).to_string();
    let v: i64 = v.trim().parse().ok()?;
    Some((format!("{}{v}: {}{}", &line[..start], cs.join(","), &line[end..]), v + i as i64))
}

fn negative_control() -> Outcome {
    let catalog = Catalog::standard();
    let lines: Vec<&str> = STANDARD_SOURCE.lines().collect();
    let mut tried = 0;
    for lc in catalog.levels() {
        for c in lc.checks.iter().filter(|c| c.kind == CheckKind::Printed) {
            let at = lines
                .iter()
                .position(|l| l.starts_with(&format!("printed {} ", c.id)))
                .ok_or_else(|| format!("printed {} not found in source", c.id))?;
            for i in 0.. {
                let Some((bad, exponent)) = corrupt(lines[at], i) else { break };
                let mut text = lines.clone();
                text[at] = &bad;
                let broken = Catalog::parse(&text.join("\n")).map_err(|e| e.to_string())?;
                let report = run(&broken, &[lc.level], Suite::Paper);
                let id = format!("printed/{}/{}", lc.level, c.id);
                let want = format!("first mismatch at q^{exponent}:");
                let hit = report.lines.iter().find(|l| l.id == id).filter(|l| !l.passed && l.detail.contains(&want));
                if hit.is_none() || report.passed() {
                    return Err(format!("corrupting coefficient {i} of {} did not fail at q^{exponent}", c.id));
                }
                tried += 1;
            }
        }
    }

    // and once end to end through the binary with a catalog file
    let (bad, _) = corrupt(lines.iter().find(|l| l.starts_with("printed F8_2 ")).unwrap(), 5).unwrap();
    let text = STANDARD_SOURCE.replace(
        lines.iter().find(|l| l.starts_with("printed F8_2 ")).unwrap(),
        &bad,
    );
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("broken.cat");
    std::fs::write(&path, text).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_cuspbase"))
        .args(["verify", "--level", "2", "--suite", "paper", "--catalog"])
        .arg(&path)
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    if out.status.code() != Some(1) || !stdout.contains("FAIL printed/2/F8_2") || !stdout.contains("q^6:") {
        return Err(format!("binary run: status {:?}\n{stdout}", out.status.code()));
    }
    Ok(format!("{tried} single-coefficient corruptions each fail at the corrupted exponent; binary exits 1"))
}

fn main() {
    let catalog = Catalog::standard();
    let report = run(catalog, &catalog.level_numbers(), Suite::All);
    let results: [(&str, Outcome); 7] = [
        ("dimension-tables", dims()),
        ("printed-expansions", printed(&report)),
        ("cross-representation-identities", identities(&report)),
        ("structure-suite", structure(&report)),
        ("basis-validity", bases()),
        ("oracle-equivalence", oracle()),
        ("negative-control", negative_control()),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(d) => println!("PASS {} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name}: {d}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
