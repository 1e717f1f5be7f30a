//! `cuspbase`: dimension tables, bases, expansions and the verification suite.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use cuspbase::basis::BasisError;
use cuspbase::catalog::{parse_expr, integral_weight, CatalogError, Evaluator, ExprError};
use cuspbase::verify::{self, Suite};
use cuspbase::{
    default_precision, dim_m, dim_s, sturm_bound, BasisEngine, Catalog, EtaQuotient, Exponent, FormExpr, Grid,
    QSeries, Rational, SpaceKind, TorsionPoint,
};

const FORMAT: &str = "cuspbase/1";

#[derive(Parser)]
#[command(name = "cuspbase", version, about = "Exact bases of modular and cusp form spaces on Γ0(N), N <= 10")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// dim M_w and dim S_w over a weight range
    Dims {
        #[arg(long, default_value = "all")]
        level: LevelArg,
        /// even bounds, e.g. 2..18
        #[arg(long, default_value = "2..18")]
        weights: WeightRange,
    },
    /// Reduced unitary upper-triangular basis of one space
    Basis {
        #[arg(long)]
        level: u32,
        #[arg(long)]
        weight: u32,
        #[arg(long, value_enum, default_value_t = Space::Cusp)]
        space: Space,
        /// coefficients below q^PREC (default 2·Sturm + 4)
        #[arg(long)]
        prec: Option<i64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Exact q-expansion of an eta quotient, catalog expression or wpa value
    #[command(group(ArgGroup::new("input").required(true).args(["eta", "expr", "wpa"])))]
    Expand {
        /// eta quotient as m:r pairs, e.g. 2:16,1:-8
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<String>,
        /// catalog expression, e.g. "E[2,4,0]*E[2,4,1]"
        #[arg(long, allow_hyphen_values = true)]
        expr: Option<String>,
        /// torsion point a,b,N
        #[arg(long)]
        wpa: Option<String>,
        #[arg(long)]
        prec: Option<i64>,
        /// multiply the result by a rational, e.g. -3 or 1/16
        #[arg(long, allow_hyphen_values = true)]
        scale: Option<String>,
    },
    /// Run the verification suite; exit status 1 on any failure
    Verify {
        #[arg(long, default_value = "all")]
        level: LevelArg,
        #[arg(long, default_value = "all")]
        suite: String,
        /// use this catalog file instead of the built-in one
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Print the catalog entries of one or all levels
    Catalog {
        #[arg(long, default_value = "all")]
        level: LevelArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Space {
    Cusp,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Jsonl,
}

#[derive(Clone)]
enum LevelArg {
    All,
    One(u32),
}

impl FromStr for LevelArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(LevelArg::All);
        }
        match s.parse::<u32>() {
            Ok(n) if n > 0 => Ok(LevelArg::One(n)),
            _ => Err(format!("expected a positive level or `all`, got `{s}`")),
        }
    }
}

impl LevelArg {
    fn levels(&self, catalog: &Catalog) -> Vec<u32> {
        match self {
            LevelArg::All => catalog.level_numbers(),
            LevelArg::One(n) => vec![*n],
        }
    }
}

#[derive(Clone, Copy)]
struct WeightRange(u32, u32);

impl FromStr for WeightRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
        let parse = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("bad weight `{t}`"));
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        if lo % 2 == 1 || hi % 2 == 1 || lo < 2 || lo > hi {
            return Err(format!("weights must be even with 2 <= LO <= HI, got {lo}..{hi}"));
        }
        Ok(WeightRange(lo, hi))
    }
}

/// Error with the exit status it maps to.
struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

fn internal(msg: impl Into<String>) -> Failure {
    Failure { code: 3, msg: msg.into() }
}

impl From<BasisError> for Failure {
    fn from(e: BasisError) -> Self {
        match e {
            BasisError::UnsupportedLevel(_) | BasisError::InsufficientPrecision { .. } | BasisError::OutOfRange(_) => {
                usage(e.to_string())
            }
            BasisError::Dimension(_) => usage(e.to_string()),
            other => internal(other.to_string()),
        }
    }
}

fn env_prec() -> Result<Option<i64>, Failure> {
    match std::env::var("CUSPBASE_PREC") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| usage(format!("CUSPBASE_PREC must be an integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn caret(text: &str, e: &ExprError) -> String {
    let col = text[..e.pos().min(text.len())].chars().count();
    format!("{e}\n  {text}\n  {}^", " ".repeat(col))
}

fn render_coeff(c: &Rational) -> String {
    c.to_string()
}

fn json_string(s: &str) -> String {
    let mut out = String::from("\"");
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Coefficients from `q^0` in steps of the series grid, up to the frontier.
fn coefficient_row(s: &QSeries) -> Vec<String> {
    let step = match s.grid() {
        Grid::Integer => 2,
        Grid::Half => 1,
    };
    let end = s.prec().halves();
    (0..end)
        .step_by(step as usize)
        .map(|h| s.coeff(Exponent::from_halves(h)).map(|c| render_coeff(&c)).unwrap_or_else(|_| "?".into()))
        .collect()
}

fn cmd_dims(level: LevelArg, weights: WeightRange) -> Result<String, Failure> {
    let levels = match level {
        LevelArg::All => (1..=10).collect(),
        LevelArg::One(n) => vec![n],
    };
    let mut out = format!("# {FORMAT} dims levels={} weights={}..{}\n", join(&levels), weights.0, weights.1);
    let ws: Vec<u32> = (weights.0..=weights.1).step_by(2).collect();
    for n in levels {
        let row = |f: fn(u32, u32) -> Result<u64, cuspbase::dimensions::DimensionError>| {
            ws.iter().map(|&w| f(n, w).map(|d| d.to_string())).collect::<Result<Vec<_>, _>>()
        };
        let m = row(dim_m).map_err(|e| usage(e.to_string()))?;
        let s = row(dim_s).map_err(|e| usage(e.to_string()))?;
        writeln!(out, "N={n} weight {}", join(&ws)).unwrap();
        writeln!(out, "N={n} dim_M {}", m.join(" ")).unwrap();
        writeln!(out, "N={n} dim_S {}", s.join(" ")).unwrap();
    }
    Ok(out)
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_basis(level: u32, weight: u32, space: Space, prec: Option<i64>, format: Format) -> Result<String, Failure> {
    if weight % 2 == 1 || weight < 2 {
        return Err(usage(format!("weight must be even and at least 2, got {weight}")));
    }
    let catalog = Catalog::standard();
    catalog.level(level).map_err(|e| usage(e.to_string()))?;
    let prec = match prec.or(env_prec()?) {
        Some(p) => p,
        None => default_precision(level, weight),
    };
    let sturm = sturm_bound(level, weight) as i64;
    if prec <= sturm {
        return Err(usage(format!("--prec must be at least {} (Sturm bound + 1) for weight {weight}", sturm + 1)));
    }
    let kind = match space {
        Space::Cusp => SpaceKind::Cusp,
        Space::Full => SpaceKind::Full,
    };
    let b = BasisEngine::new(catalog).basis(level, weight / 2, kind, prec)?;
    let vals = b.valuations();
    let mut out = String::new();
    match format {
        Format::Text => {
            writeln!(out, "# {FORMAT} basis level={level} weight={weight} space={kind} prec={prec} dim={}", b.len())
                .unwrap();
            for (i, (e, v)) in b.elements.iter().zip(&vals).enumerate() {
                writeln!(out, "{} {v}: {}", i + 1, coefficient_row(e).join(" ")).unwrap();
            }
        }
        Format::Jsonl => {
            for (i, (e, v)) in b.elements.iter().zip(&vals).enumerate() {
                let coeffs: Vec<String> = coefficient_row(e).iter().map(|c| json_string(c)).collect();
                writeln!(
                    out,
                    "{{\"format\":\"{FORMAT}\",\"level\":{level},\"weight\":{weight},\"space\":\"{kind}\",\
                     \"prec\":{prec},\"index\":{},\"valuation\":{v},\"coeffs\":[{}]}}",
                    i + 1,
                    coeffs.join(",")
                )
                .unwrap();
            }
        }
    }
    Ok(out)
}

fn cmd_expand(
    eta: Option<String>,
    expr: Option<String>,
    wpa: Option<String>,
    prec: Option<i64>,
    scale: Option<String>,
) -> Result<String, Failure> {
    let catalog = Catalog::standard();
    let (label, e): (String, FormExpr) = if let Some(t) = eta {
        let q: EtaQuotient = t.parse().map_err(|e| usage(format!("bad eta quotient `{t}`: {e}")))?;
        (format!("eta={q}"), FormExpr::Atom(cuspbase::catalog::Atom::Eta(q)))
    } else if let Some(t) = expr {
        let e = parse_expr(&t).map_err(|e| usage(caret(&t, &e)))?;
        (format!("expr={e}"), e)
    } else {
        let t = wpa.expect("clap requires one input");
        let nums: Vec<u32> = t
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| usage(format!("bad --wpa `{t}`, expected a,b,N"))))
            .collect::<Result<_, _>>()?;
        if nums.len() != 3 {
            return Err(usage(format!("bad --wpa `{t}`, expected a,b,N")));
        }
        let p = TorsionPoint::new(nums[0], nums[1], nums[2]).map_err(|e| usage(e.to_string()))?;
        (format!("wpa={},{},{}", nums[0], nums[1], nums[2]), FormExpr::Atom(cuspbase::catalog::Atom::Wpa(p)))
    };
    let prec = match prec.or(env_prec()?) {
        Some(p) => p,
        None => catalog
            .infer_weight(&e)
            .ok()
            .and_then(integral_weight)
            .filter(|&w| w >= 2)
            .map_or(20, |w| default_precision(e.level_hint(), w)),
    };
    if prec <= 0 {
        return Err(usage("--prec must be positive"));
    }
    let mut s = Evaluator::new(catalog).evaluate(&e, prec).map_err(|err| match err {
        CatalogError::UnknownReference(_) | CatalogError::UnsupportedLevel(_) | CatalogError::Parse(_) => {
            usage(err.to_string())
        }
        other => internal(other.to_string()),
    })?;
    let mut label = label;
    if let Some(r) = scale {
        let r: Rational = r.parse().map_err(|_| usage(format!("bad --scale `{r}`, expected p or p/q")))?;
        s = s.scale(&r);
        write!(label, " scale={r}").unwrap();
    }
    let grid = match s.grid() {
        Grid::Integer => "1",
        Grid::Half => "1/2",
    };
    Ok(format!(
        "# {FORMAT} series {label} prec={prec} grid={grid}\n{s}\ncoeffs: {}\n",
        coefficient_row(&s).join(" ")
    ))
}

fn cmd_verify(level: LevelArg, suite: &str, catalog: Option<PathBuf>) -> Result<(String, bool), Failure> {
    let suite: Suite = suite.parse().map_err(usage)?;
    let owned;
    let catalog: &Catalog = match catalog {
        None => Catalog::standard(),
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            owned = Catalog::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            &owned
        }
    };
    let levels = level.levels(catalog);
    let report = verify::run(catalog, &levels, suite);
    let failed = report.failures().count();
    let out = format!(
        "# {FORMAT} verify levels={} suite={suite}\n{report}# {} passed, {failed} failed\n",
        join(&levels),
        report.lines.len() - failed
    );
    Ok((out, report.passed()))
}

fn cmd_catalog(level: LevelArg) -> Result<String, Failure> {
    let catalog = Catalog::standard();
    let mut out = format!("# {FORMAT} catalog\n");
    for n in level.levels(catalog) {
        let lc = catalog.level(n).map_err(|e| usage(e.to_string()))?;
        let p = catalog.profile(n).map_err(|e| usage(e.to_string()))?;
        writeln!(
            out,
            "level {n}: Δ = eta({}) weight {} valuation {}, k0 = {}, seeds {}",
            lc.delta,
            p.delta_weight,
            p.delta_valuation,
            p.k0,
            p.seeds.join(" ")
        )
        .unwrap();
        for ((w, s), e) in &lc.generators {
            writeln!(out, "  E[{w},{n},{s}] = {}", e.expr).unwrap();
        }
        for ((w, s), e) in &lc.cusp_forms {
            let tag = if e.reconstructed { "  (reconstructed)" } else { "" };
            writeln!(out, "  F[{w},{n},{s}] = {}{tag}", e.expr).unwrap();
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Dims { level, weights } => cmd_dims(level, weights).map(|s| (s, true)),
        Command::Basis { level, weight, space, prec, format } => {
            cmd_basis(level, weight, space, prec, format).map(|s| (s, true))
        }
        Command::Expand { eta, expr, wpa, prec, scale } => cmd_expand(eta, expr, wpa, prec, scale).map(|s| (s, true)),
        Command::Verify { level, suite, catalog } => cmd_verify(level, &suite, catalog),
        Command::Catalog { level } => cmd_catalog(level).map(|s| (s, true)),
    };
    match result {
        Ok((out, ok)) => {
            print!("{out}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("cuspbase: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
