//! Command-line front end. [`dispatch`] parses arguments, runs one
//! subcommand and returns the process exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use cubicwave::approx::{build_uk, ApproxCoefficients, FrequencyContext, DEFAULT_NF};
use cubicwave::bounds::{run_suite, SuiteConfig, DEFAULT_LATTICE, DEFAULT_SCAN_DEPTH, DEFAULT_SEED};
use cubicwave::constants::targets;
use cubicwave::fixed_point::{iterate, IterationOptions, DEFAULT_DEGREE_CAP, DEFAULT_MAX_ITER, DEFAULT_TOL};
use cubicwave::operators::Problem;
use cubicwave::qroot::solve_q;
use cubicwave::spectral::{SpectralField, WeightConfig};
use cubicwave::timedomain::{initial_data, integrate_period_with, IntegrationOptions, Spatial, DEFAULT_NT, DEFAULT_NX};

/// Return error and energy drift accepted by `timecheck`.
pub const RETURN_ERROR_LIMIT: f64 = 1e-4;
pub const ENERGY_DRIFT_LIMIT: f64 = 1e-6;

/// Tolerance used for `q` whenever a subcommand needs it internally.
pub const Q_TOL: f64 = 1e-14;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "cubicwave", version, about = "Time-periodic solutions of u_tt − u_xx + u³ = 0 on [0, π]")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the nome q.
    SolveQ {
        #[arg(long, default_value_t = Q_TOL)]
        tol: f64,
    },
    /// Write the approximate solution u_k as field JSON.
    BuildApprox {
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = DEFAULT_NF)]
        nf: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the fixed-point iteration and write the solution report.
    Solve {
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long, default_value_t = DEFAULT_DEGREE_CAP)]
        degree_cap: u32,
        #[command(flatten)]
        out: OutArg,
    },
    /// Check every quantitative bound; exit 0 iff all pass.
    VerifyBounds {
        #[arg(long, default_value_t = targets::H_MIN_K)]
        k: u64,
        #[arg(long, default_value_t = targets::THEOREM_K)]
        theorem_k: u64,
        #[arg(long, default_value_t = DEFAULT_SCAN_DEPTH)]
        scan_depth: u32,
        #[arg(long, default_value_t = DEFAULT_LATTICE)]
        lattice: usize,
        /// Add the exact rational checks over the whole q bracket.
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Integrate one period in time from a field or solution file.
    Timecheck {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NX)]
        nx: usize,
        #[arg(long, default_value_t = DEFAULT_NT)]
        nt: usize,
        /// Frequency index, when the input does not record one.
        #[arg(long)]
        k: Option<u64>,
        /// Use second differences instead of the sine pseudospectral scheme.
        #[arg(long)]
        finite_difference: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Sample a field on a uniform (τ, x) grid as CSV.
    ExportGrid {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 128)]
        ntau: usize,
        #[arg(long, default_value_t = 128)]
        nx: usize,
        /// Print coefficients below this magnitude as zero.
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Every setting a run used, echoed into its output.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem_k: Option<u64>,
    pub q_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree_cap: Option<u32>,
    pub nf: usize,
    pub rho: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan_depth: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nt: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spatial: Option<Spatial>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ntau: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    fn new(subcommand: &str, output: &OutArg) -> Self {
        RunConfig {
            subcommand: subcommand.into(),
            q_tol: Q_TOL,
            nf: DEFAULT_NF,
            rho: WeightConfig::default().to_string(),
            output: output.out.clone(),
            ..Default::default()
        }
    }
}

type Outcome = Result<bool, String>;

/// Parse `argv` (program name first), run, and return the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAIL,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_FAIL
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::SolveQ { tol } => {
            let r = solve_q(tol).map_err(|e| e.to_string())?;
            let mut cfg = RunConfig::new("solve-q", &OutArg { out: None });
            cfg.q_tol = tol;
            let v = json!({
                "q": r.q,
                "residual": r.residual,
                "bracket": [r.bracket.0, r.bracket.1],
                "certified_bracket": [r.certified_bracket.0, r.certified_bracket.1],
                "series_cutoff": r.series_cutoff,
                "config": cfg,
            });
            emit(&v, None)?;
            Ok(r.residual <= tol)
        }
        Command::BuildApprox { k, nf, out } => {
            let mut cfg = RunConfig::new("build-approx", &out);
            cfg.k = Some(k);
            cfg.nf = nf;
            let ctx = FrequencyContext::new(k).map_err(|e| e.to_string())?;
            let q = solve_q(Q_TOL).map_err(|e| e.to_string())?.q;
            let coeffs = ApproxCoefficients::build(q, nf).map_err(|e| e.to_string())?;
            let uk = build_uk(&ctx, &coeffs, WeightConfig::default());
            let mut v = serde_json::to_value(&uk).map_err(|e| e.to_string())?;
            extend(&mut v, json!({ "k": k, "omega": ctx.omega(), "q": q, "config": cfg }));
            emit(&v, out.out.as_deref())?;
            Ok(true)
        }
        Command::Solve { k, tol, max_iter, degree_cap, out } => {
            let mut cfg = RunConfig::new("solve", &out);
            cfg.k = Some(k);
            cfg.tol = Some(tol);
            cfg.max_iter = Some(max_iter);
            cfg.degree_cap = Some(degree_cap);
            let pr = Problem::with_defaults(k).map_err(|e| e.to_string())?;
            let report = iterate(&pr, IterationOptions { tol, max_iter, degree_cap }).map_err(|e| e.to_string())?;
            let mut v = serde_json::to_value(&report).map_err(|e| e.to_string())?;
            extend(&mut v, json!({ "config": cfg }));
            emit(&v, out.out.as_deref())?;
            Ok(report.nontrivial)
        }
        Command::VerifyBounds { k, theorem_k, scan_depth, lattice, strict, seed, out } => {
            let suite = SuiteConfig { k, theorem_k, scan_depth, lattice, seed, strict, ..Default::default() };
            let mut cfg = RunConfig::new("verify-bounds", &out);
            cfg.k = Some(k);
            cfg.theorem_k = Some(theorem_k);
            cfg.scan_depth = Some(scan_depth);
            cfg.lattice = Some(lattice);
            cfg.seed = Some(seed);
            cfg.strict = Some(strict);
            cfg.suite = Some(suite.clone());
            let pr = Problem::with_defaults(k).map_err(|e| e.to_string())?;
            let tpr = Problem::with_defaults(theorem_k).map_err(|e| e.to_string())?;
            let reports = run_suite(&pr, &tpr, &suite).map_err(|e| e.to_string())?;
            let all = reports.iter().all(|r| r.pass);
            let cfg = serde_json::to_value(&cfg).map_err(|e| e.to_string())?;
            let q = pr.coeffs.q;
            let arr: Vec<Value> = reports
                .iter()
                .map(|r| {
                    let mut v = serde_json::to_value(r).expect("reports serialize");
                    extend(&mut v, json!({ "q": q, "config": cfg }));
                    v
                })
                .collect();
            for r in reports.iter().filter(|r| !r.pass) {
                eprintln!("FAIL {} (k = {:?}): measured {:e}, bound {:e}", r.name, r.k, r.measured, r.bound);
            }
            emit(&Value::Array(arr), out.out.as_deref())?;
            Ok(all)
        }
        Command::Timecheck { input, nx, nt, k, finite_difference, out } => {
            let spatial = if finite_difference { Spatial::FiniteDifference } else { Spatial::Spectral };
            let mut cfg = RunConfig::new("timecheck", &out);
            cfg.nx = Some(nx);
            cfg.nt = Some(nt);
            cfg.spatial = Some(spatial);
            cfg.input = Some(input.clone());
            let doc = read_json(&input)?;
            let field = field_of(&doc)?;
            let k = k.or_else(|| doc.get("k").and_then(Value::as_u64));
            cfg.k = k;
            let omega = match (k, doc.get("omega").and_then(Value::as_f64)) {
                (Some(k), _) => FrequencyContext::new(k).map_err(|e| e.to_string())?.omega(),
                (None, Some(w)) => w,
                (None, None) => return Err("the input has no frequency; pass --k".into()),
            };
            let q = match doc.get("q").and_then(Value::as_f64) {
                Some(q) => q,
                None => solve_q(Q_TOL).map_err(|e| e.to_string())?.q,
            };
            let st = initial_data(&field, omega, nx).map_err(|e| e.to_string())?;
            let r = integrate_period_with(&st, omega, IntegrationOptions { nt, spatial, ..Default::default() })
                .map_err(|e| e.to_string())?;
            let pass = r.return_error <= RETURN_ERROR_LIMIT && r.energy_drift <= ENERGY_DRIFT_LIMIT;
            let v = json!({
                "return_error": r.return_error,
                "energy_drift": r.energy_drift,
                "symmetry_defect": r.symmetry_defect,
                "dt": r.dt,
                "omega": omega,
                "q": q,
                "pass": pass,
                "config": cfg,
            });
            emit(&v, out.out.as_deref())?;
            Ok(pass)
        }
        Command::ExportGrid { input, ntau, nx, threshold, out } => {
            if ntau < 2 || nx < 2 {
                return Err(format!("the grid needs at least 2 points per axis, got ntau = {ntau}, nx = {nx}"));
            }
            let mut cfg = RunConfig::new("export-grid", &out);
            cfg.ntau = Some(ntau);
            cfg.nx = Some(nx);
            cfg.threshold = threshold;
            cfg.input = Some(input.clone());
            let doc = read_json(&input)?;
            let mut field = field_of(&doc)?;
            if let Some(t) = threshold {
                let kept = field.iter().filter(|(_, c)| c.abs() >= t);
                field = SpectralField::from_modes(field.weight(), kept.map(|(k, c)| (k.m, k.n, c)));
            }
            let csv = grid_csv(&field, ntau, nx);
            match out.out.as_deref() {
                Some(p) => {
                    fs::write(p, csv).map_err(|e| format!("{}: {e}", p.display()))?;
                    let q = doc.get("q").and_then(Value::as_f64);
                    let side = sidecar_path(p);
                    let meta = json!({ "q": q, "config": cfg });
                    fs::write(&side, pretty(&meta)?).map_err(|e| format!("{}: {e}", side.display()))?;
                }
                None => {
                    std::io::stdout().write_all(csv.as_bytes()).map_err(|e| e.to_string())?;
                }
            }
            Ok(true)
        }
    }
}

/// `<file>.config.json`, holding the run configuration of a CSV export.
pub fn sidecar_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

/// Header `tau,x,u`, then `u(τ_i, x_j)` row-major in `τ`, with both axes
/// including their endpoints.
pub fn grid_csv(field: &SpectralField, ntau: usize, nx: usize) -> String {
    use std::f64::consts::PI;
    let mut s = String::from("tau,x,u\n");
    for i in 0..ntau {
        let tau = 2.0 * PI * i as f64 / (ntau - 1) as f64;
        for j in 0..nx {
            let x = PI * j as f64 / (nx - 1) as f64;
            s.push_str(&format!("{tau},{x},{}\n", field.evaluate(tau, x)));
        }
    }
    s
}

fn extend(v: &mut Value, extra: Value) {
    if let (Value::Object(a), Value::Object(b)) = (v, extra) {
        a.extend(b);
    }
}

fn pretty(v: &Value) -> Result<String, String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| e.to_string())
}

fn emit(v: &Value, out: Option<&Path>) -> Result<(), String> {
    let s = pretty(v)?;
    match out {
        Some(p) => fs::write(p, s).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(s.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn read_json(p: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))
}

/// A solution report carries its field under `"u"`; a field file is the
/// field itself.
fn field_of(doc: &Value) -> Result<SpectralField, String> {
    let v = doc.get("u").unwrap_or(doc);
    serde_json::from_value(v.clone()).map_err(|e| format!("invalid field: {e}"))
}
