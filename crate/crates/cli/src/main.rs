//! `circle-lie`: analyze, reduce and verify vector fields on the circle.
//!
//! Exit codes: 0 ok, 2 bad input, 3 field not in class 𝒞, 4 not a
//! realization of `[V, W] = W`, 5 reduction residual above tolerance,
//! 6 commuting field dependent on `V` (with `--strict`).

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use circle_lie::commutant::{commutant, CommutantError, Commuting};
use circle_lie::field::Evaluate;
use circle_lie::reduction::{bracket_residual, reduce_with, ReduceOptions, Reduction, ReductionError};
use circle_lie::singularity::{analyze, SingularityOptions, SingularityReport};
use circle_lie::verify::{invariance_suite, validate_noncommutative_with, VerifyOptions};
use circle_lie::{parse, CanonicalPair, CircleMap, PeriodicFunction, VectorField};
use clap::{Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Serialize;
use serde_json::json;

const MIN_RESOLUTION: usize = 64;
const DEFAULT_SAMPLES: usize = 256;

#[derive(Parser, Debug)]
#[command(name = "circle-lie", version, about = "Vector fields on the circle and realizations of [V, W] = W")]
struct Cli {
    /// Scan resolution for zero detection, or number of sample points for
    /// `sample` and CSV output.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Zero tolerance for singular points.
    #[arg(long, global = true)]
    tol_zero: Option<f64>,
    /// Tolerance on sup |[V,W] - W|.
    #[arg(long, global = true)]
    tol_bracket: Option<f64>,
    /// Seed for random equivalence maps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Singular points of V (and W), plus structural checks when both are given.
    Analyze { v: String, w: Option<String> },
    /// Reduce a realization to its canonical pair.
    Reduce {
        v: String,
        w: String,
        /// Push both fields through this map (JSON) first.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// A field commuting with V, proportional to it between degenerate points.
    Commutant {
        v: String,
        /// Proportionality constants, one per arc between degenerate points.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        lambda: Vec<f64>,
        /// Fail with exit code 6 when the result is a multiple of V.
        #[arg(long)]
        strict: bool,
    },
    /// Structural checks on (V, W) and zero-count invariance of W.
    Verify {
        v: Option<String>,
        w: Option<String>,
        /// Canonical pair JSON (or a `reduce` result) instead of V and W.
        #[arg(long, conflicts_with_all = ["v", "w"])]
        pair: Option<PathBuf>,
        /// Number of random equivalence maps.
        #[arg(long, default_value_t = 20)]
        maps: usize,
    },
    /// Values on a uniform grid as CSV.
    Sample {
        expr: Option<String>,
        #[arg(long, conflicts_with = "expr")]
        pair: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
    /// Report to emit before failing.
    report: Option<String>,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
        report: None,
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    fail(2, message)
}

/// An expression, or a path to a JSON file holding a periodic function.
fn load_field(input: &str) -> Result<VectorField, Failure> {
    let path = Path::new(input);
    if input.ends_with(".json") || path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{input}: {e}")))?;
        let f: PeriodicFunction =
            serde_json::from_str(&text).map_err(|e| input_error(format!("{input}: {e}")))?;
        return Ok(VectorField::new(f));
    }
    parse(input)
        .map(VectorField::new)
        .map_err(|e| input_error(format!("{input}: {e} (at offset {})", e.offset())))
}

/// A canonical pair JSON file; a `reduce` result is accepted too.
fn load_pair(path: &Path) -> Result<CanonicalPair, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    if let Some(inner) = value.get_mut("pair") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load_map(path: &Path) -> Result<CircleMap, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

struct Settings {
    resolution: Option<usize>,
    singularity: SingularityOptions,
    tol_bracket: Option<f64>,
}

impl Settings {
    fn from_cli(cli: &Cli) -> Result<Self, Failure> {
        let mut singularity = SingularityOptions::default();
        if let Some(t) = cli.tol_zero {
            if !(t > 0.0) {
                return Err(input_error("--tol-zero must be positive"));
            }
            singularity.tol_zero = t;
        }
        if let Some(t) = cli.tol_bracket {
            if !(t > 0.0) {
                return Err(input_error("--tol-bracket must be positive"));
            }
        }
        if cli.resolution == Some(0) {
            return Err(input_error("--resolution must be positive"));
        }
        Ok(Settings {
            resolution: cli.resolution,
            singularity,
            tol_bracket: cli.tol_bracket,
        })
    }

    /// Options for commands that scan for zeros; those need a fine grid.
    fn scan(&self) -> Result<SingularityOptions, Failure> {
        let mut opts = self.singularity;
        if let Some(r) = self.resolution {
            if r < MIN_RESOLUTION {
                return Err(input_error(format!("--resolution must be at least {MIN_RESOLUTION} for zero scans")));
            }
            opts.resolution = r;
        }
        Ok(opts)
    }

    fn samples(&self) -> usize {
        self.resolution.unwrap_or(DEFAULT_SAMPLES)
    }
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| TAU * i as f64 / n as f64)
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn class_c_failure(reports: &[&SingularityReport]) -> Option<String> {
    reports
        .iter()
        .find(|r| !r.class_c)
        .map(|r| format!("field vanishes on {:?}; not in class 𝒞", r.interval_zero_ranges))
}

fn cmd_analyze(s: &Settings, v: &str, w: Option<&str>) -> Result<String, Failure> {
    let opts = s.scan()?;
    let v = load_field(v)?;
    let w = w.map(load_field).transpose()?;
    let rv = analyze(&v, &opts);
    let mut out = json!({ "v": rv });
    let mut reports = vec![rv];
    if let Some(w) = &w {
        let rw = analyze(w, &opts);
        let vopts = VerifyOptions {
            singularity: opts,
            tol_bracket: s.tol_bracket.unwrap_or(VerifyOptions::default().tol_bracket),
            ..VerifyOptions::default()
        };
        out["w"] = json!(rw);
        out["bracket_residual"] = json!(bracket_residual(&v, w));
        out["validation"] = json!(validate_noncommutative_with(&v, w, &vopts));
        reports.push(rw);
    }
    let text = to_json(&out);
    match class_c_failure(&reports.iter().collect::<Vec<_>>()) {
        Some(message) => Err(Failure {
            code: 3,
            message,
            report: Some(text),
        }),
        None => Ok(text),
    }
}

fn reduction_json(r: &Reduction) -> serde_json::Value {
    json!({
        "pair": r.pair,
        "map": r.map,
        "residuals": {
            "w": r.w_residual,
            "v": r.v_residual,
            "bracket": r.bracket_residual,
        },
    })
}

fn map_csv(r: &Reduction, samples: usize) -> String {
    let mut out = String::from("theta,f\n");
    for t in grid(samples) {
        let _ = writeln!(out, "{t},{}", r.map.apply(t));
    }
    out
}

fn cmd_reduce(s: &Settings, format: Format, v: &str, w: &str, map: Option<&Path>) -> Result<String, Failure> {
    let mut v = load_field(v)?;
    let mut w = load_field(w)?;
    if let Some(path) = map {
        let f = load_map(path)?;
        v = v.pushforward(&f);
        w = w.pushforward(&f);
    }
    let mut opts = ReduceOptions {
        singularity: s.scan()?,
        ..ReduceOptions::default()
    };
    if let Some(t) = s.tol_bracket {
        opts.tol_bracket = t;
    }
    let render = |r: &Reduction| match format {
        Format::Json => to_json(&reduction_json(r)),
        Format::Csv => map_csv(r, s.samples()),
    };
    match reduce_with(&v, &w, &opts) {
        Ok(r) => Ok(render(&r)),
        Err(e) => Err(match e {
            ReductionError::NotARealization { .. } | ReductionError::NoSingularPoints => fail(4, e.to_string()),
            ReductionError::NotClassC(_) => fail(3, e.to_string()),
            ReductionError::ResidualTooLarge { ref reduction, .. } => Failure {
                code: 5,
                report: Some(render(reduction)),
                message: e.to_string(),
            },
            ReductionError::Chart(_) | ReductionError::OutsideInterval { .. } => fail(5, e.to_string()),
        }),
    }
}

fn commutant_json(c: &Commuting) -> serde_json::Value {
    json!({
        "w": c.w.exact(),
        "lambda": c.lambda,
        "degenerate_points": c.decomposition.degenerate_points,
        "intervals": c.decomposition.intervals,
        "dependent": c.dependent,
        "bracket_residual": c.bracket_residual,
        "symbolic_residual": c.symbolic_residual,
        "c1_jump": c.c1_jump,
    })
}

fn cmd_commutant(v: &str, lambda: &[f64], strict: bool) -> Result<String, Failure> {
    let v = load_field(v)?;
    match commutant(&v, lambda) {
        Ok(c) => {
            let text = to_json(&commutant_json(&c));
            if c.dependent && strict {
                return Err(Failure {
                    code: 6,
                    message: "W is a constant multiple of V".into(),
                    report: Some(text),
                });
            }
            Ok(text)
        }
        Err(e @ CommutantError::NotClassC(_)) => Err(fail(3, e.to_string())),
        Err(e) => Err(input_error(e.to_string())),
    }
}

fn fields_from(v: Option<&str>, w: Option<&str>, pair: Option<&Path>) -> Result<(VectorField, VectorField), Failure> {
    match (v, w, pair) {
        (_, _, Some(path)) => Ok(load_pair(path)?.fields()),
        (Some(v), Some(w), None) => Ok((load_field(v)?, load_field(w)?)),
        _ => Err(input_error("give V and W, or --pair")),
    }
}

fn cmd_verify(s: &Settings, seed: u64, v: Option<&str>, w: Option<&str>, pair: Option<&Path>, maps: usize) -> Result<String, Failure> {
    let (v, w) = fields_from(v, w, pair)?;
    let mut opts = VerifyOptions {
        singularity: s.scan()?,
        ..VerifyOptions::default()
    };
    if let Some(t) = s.tol_bracket {
        opts.tol_bracket = t;
    }
    let report = validate_noncommutative_with(&v, &w, &opts);
    let mut rng = StdRng::seed_from_u64(seed);
    let family: Vec<CircleMap> = (0..maps).map(|_| CircleMap::random_equivalence(&mut rng, 0.4)).collect();
    let invariance = invariance_suite(&w, &family);
    let text = to_json(&json!({ "validation": report, "invariance": invariance }));
    if report.overall && invariance.overall {
        Ok(text)
    } else {
        let code = if report.check("classC").is_some_and(|c| !c.passed) { 3 } else { 4 };
        let failed: Vec<&str> = report.failed().chain(invariance.failed()).map(|c| c.name.as_str()).collect();
        Err(Failure {
            code,
            message: format!("failed checks: {}", failed.join(", ")),
            report: Some(text),
        })
    }
}

fn cmd_sample(s: &Settings, expr: Option<&str>, pair: Option<&Path>) -> Result<String, Failure> {
    let n = s.samples();
    let mut out = String::new();
    match (expr, pair) {
        (_, Some(path)) => {
            let (v, w) = load_pair(path)?.fields();
            out.push_str("theta,v,w\n");
            for t in grid(n) {
                let _ = writeln!(out, "{t},{},{}", v.value(t), w.value(t));
            }
        }
        (Some(e), None) => {
            let f = load_field(e)?;
            out.push_str("theta,value\n");
            for t in grid(n) {
                let _ = writeln!(out, "{t},{}", f.value(t));
            }
        }
        (None, None) => return Err(input_error("give an expression or --pair")),
    }
    Ok(out)
}

fn run(cli: &Cli) -> Result<String, Failure> {
    let s = Settings::from_cli(cli)?;
    match &cli.command {
        Command::Analyze { v, w } => cmd_analyze(&s, v, w.as_deref()),
        Command::Reduce { v, w, map } => cmd_reduce(&s, cli.format, v, w, map.as_deref()),
        Command::Commutant { v, lambda, strict } => cmd_commutant(v, lambda, *strict),
        Command::Verify { v, w, pair, maps } => {
            cmd_verify(&s, cli.seed, v.as_deref(), w.as_deref(), pair.as_deref(), *maps)
        }
        Command::Sample { expr, pair } => cmd_sample(&s, expr.as_deref(), pair.as_deref()),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    let text = if text.ends_with('\n') { text.to_string() } else { format!("{text}\n") };
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| input_error(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = run(&cli).and_then(|text| emit(&cli, &text));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(report) = &f.report {
                if let Err(e) = emit(&cli, report) {
                    eprintln!("error: {}", e.message);
                }
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
