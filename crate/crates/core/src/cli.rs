//! The `confidence-engine` command line.
//!
//! | exit | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | the model has diagnostics |
//! | 2 | numeric failure (singular evidence, degenerate weights, ...) |
//! | 3 | usage or I/O error |

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::dsl;
use crate::model::CompiledModel;
use crate::oracle::{exact_bayes_mc, gaussian_mc_check, OracleError, OracleEstimate};
use crate::solver::{solve, SolveError, SolveOptions, SolveReport};

pub const SEED_ENV: &str = "CONFIDENCE_ENGINE_SEED";
pub const DEFAULT_SEED: u64 = 0;
const REPORT_DIGITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Model = 1,
    Numeric = 2,
    Usage = 3,
}

#[derive(Debug, Parser)]
#[command(
    name = "confidence-engine",
    version,
    about = "Gaussian influence-diagram evidence synthesis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and check a model; print diagnostics.
    Check { model: PathBuf },
    /// Solve by iterative re-linearization.
    Solve {
        model: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Also emit the per-iteration trace as CSV.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Monte Carlo posterior without linearization.
    Oracle {
        model: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        /// Falls back to $CONFIDENCE_ENGINE_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the final working-scale posterior mean and covariance as CSV.
    Export {
        model: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

impl SolverArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            max_iters: self.max_iters,
            tol: self.tol,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Exact binomial likelihoods, exact function nodes.
    Exact,
    /// Sampling the final linearized Gaussian diagram.
    Gaussian,
}

struct Failure {
    status: ExitStatus,
    message: String,
}

impl Failure {
    fn new(status: ExitStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let status = match e {
            SolveError::Options(_) => ExitStatus::Usage,
            _ => ExitStatus::Numeric,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let status = match e {
            OracleError::TooFewSamples { .. } => ExitStatus::Usage,
            _ => ExitStatus::Numeric,
        };
        Failure::new(status, e.to_string())
    }
}

/// Runs the command line with process stdout/stderr and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    ExitStatus::Success as i32
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    ExitStatus::Usage as i32
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => ExitStatus::Success as i32,
        Err(f) => {
            if !f.message.is_empty() {
                let _ = writeln!(err, "error: {}", f.message);
            }
            f.status as i32
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Check { model } => {
            let m = load_model(&model, err)?;
            emit(
                out,
                None,
                &format!(
                    "ok: {} variables, {} studies\n",
                    m.variables().len(),
                    m.evidence().len()
                ),
            )
        }
        Command::Solve {
            model,
            solver,
            trace,
            out: path,
            format,
        } => {
            let m = load_model(&model, err)?;
            let opts = solver.options();
            let report = solve(&m, &opts)?;
            warn_unconverged(&report, err);
            let body = match format {
                Format::Json => report_to_json(&model_name(&model), &opts, &report),
                Format::Csv => summary_csv(&report),
            };
            match (&path, trace) {
                (Some(p), true) => {
                    emit(out, Some(p), &body)?;
                    emit(out, Some(&trace_path(p)), &trace_csv(&report))
                }
                (None, true) => emit(out, None, &trace_csv(&report)),
                (p, false) => emit(out, p.as_deref(), &body),
            }
        }
        Command::Oracle {
            model,
            samples,
            seed,
            method,
            solver,
            out: path,
        } => {
            let m = load_model(&model, err)?;
            let seed = match seed {
                Some(s) => s,
                None => env_seed()?,
            };
            let est = match method {
                Method::Exact => exact_bayes_mc(&m, samples, seed)?,
                Method::Gaussian => {
                    let report = solve(&m, &solver.options())?;
                    warn_unconverged(&report, err);
                    gaussian_mc_check(&report.diagram, &report.evidence, samples, seed)?
                }
            };
            emit(
                out,
                path.as_deref(),
                &to_json_text(&oracle_json(&model, &est)),
            )
        }
        Command::Export {
            model,
            solver,
            out: path,
        } => {
            let m = load_model(&model, err)?;
            let report = solve(&m, &solver.options())?;
            warn_unconverged(&report, err);
            emit(out, path.as_deref(), &export_csv(&report))
        }
    }
}

fn env_seed() -> Result<u64, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure::new(
                ExitStatus::Usage,
                format!("{SEED_ENV} must be a non-negative integer, got `{v}`"),
            )
        }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn load_model(path: &Path, err: &mut dyn Write) -> Result<CompiledModel, Failure> {
    let bytes = fs::read(path).map_err(|e| {
        Failure::new(
            ExitStatus::Usage,
            format!("cannot read {}: {e}", path.display()),
        )
    })?;
    let diags = match dsl::parse_bytes(&bytes) {
        Ok(spec) => match dsl::compile(&spec) {
            Ok(m) => return Ok(m),
            Err(d) => d,
        },
        Err(d) => d,
    };
    for d in &diags {
        let _ = writeln!(err, "{}:{d}", path.display());
    }
    Err(Failure::new(
        ExitStatus::Model,
        format!("{} diagnostic(s) in {}", diags.len(), path.display()),
    ))
}

fn warn_unconverged(report: &SolveReport, err: &mut dyn Write) {
    if !report.converged {
        let _ = writeln!(
            err,
            "warning: not converged after {} iterations (last change {:e})",
            report.iters_used,
            report.last().max_change
        );
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), Failure> {
    let res = match path {
        Some(p) => fs::write(p, text),
        None => out.write_all(text.as_bytes()),
    };
    res.map_err(|e| {
        let target = path
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "stdout".into());
        Failure::new(ExitStatus::Usage, format!("cannot write {target}: {e}"))
    })
}

/// `report.json` → `report.trace.csv`
fn trace_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    let mut name = stem;
    name.push(".trace.csv");
    out.with_file_name(name)
}

/// Rounds to [`REPORT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", REPORT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(round_sig(x))
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn model_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// The `solve` JSON document: stable key order, 10 significant digits.
pub fn report_to_json(model: &str, opts: &SolveOptions, r: &SolveReport) -> String {
    let trace: Vec<Value> = r
        .iterations
        .iter()
        .map(|it| {
            let values: Map<String, Value> = r
                .report_targets
                .iter()
                .zip(&it.report_values)
                .map(|(t, v)| (t.name.clone(), num(*v)))
                .collect();
            json!({ "iter": it.iter, "values": values })
        })
        .collect();
    let final_: Map<String, Value> = r
        .final_summary
        .iter()
        .map(|s| {
            (
                s.name.clone(),
                json!({
                    "working_mean": num(s.working_mean),
                    "working_var": num(s.working_var),
                    "natural_mean_delta": num(s.natural_mean_delta),
                    "natural_sd_delta": num(s.natural_sd_delta),
                    "natural_mean_quad": num(s.natural_mean_quad),
                    "natural_sd_quad": num(s.natural_sd_quad),
                }),
            )
        })
        .collect();
    let doc = json!({
        "model": model,
        "options": { "max_iters": opts.max_iters, "tol": opts.tol },
        "converged": r.converged,
        "iters_used": r.iters_used,
        "trace": trace,
        "final": final_,
    });
    to_json_text(&doc)
}

fn oracle_json(path: &Path, est: &OracleEstimate) -> Value {
    let vars: Map<String, Value> = est
        .variables
        .iter()
        .map(|v| {
            (
                v.name.clone(),
                json!({
                    "mean": num(v.mean),
                    "sd": num(v.sd),
                    "mean_se": num(v.mean_se),
                    "sd_se": num(v.sd_se),
                }),
            )
        })
        .collect();
    json!({
        "model": model_name(path),
        "method": est.method,
        "samples": est.samples,
        "seed": est.seed,
        "effective_sample_size": num(est.effective_sample_size),
        "variables": vars,
    })
}

fn fmt_sig(x: f64) -> String {
    format!("{}", round_sig(x))
}

/// One row per iteration: natural-scale means of the report targets.
fn trace_csv(r: &SolveReport) -> String {
    let mut s = String::from("iter");
    for t in &r.report_targets {
        write!(s, ",{}", t.name).unwrap();
    }
    s.push('\n');
    for it in &r.iterations {
        write!(s, "{}", it.iter).unwrap();
        for v in &it.report_values {
            write!(s, ",{}", fmt_sig(*v)).unwrap();
        }
        s.push('\n');
    }
    s
}

fn summary_csv(r: &SolveReport) -> String {
    let mut s = String::from(
        "name,scale,working_mean,working_var,natural_mean_delta,natural_sd_delta,natural_mean_quad,natural_sd_quad\n",
    );
    for v in &r.final_summary {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            v.name,
            v.scale,
            fmt_sig(v.working_mean),
            fmt_sig(v.working_var),
            fmt_sig(v.natural_mean_delta),
            fmt_sig(v.natural_sd_delta),
            fmt_sig(v.natural_mean_quad),
            fmt_sig(v.natural_sd_quad)
        )
        .unwrap();
    }
    s
}

/// `name,mean,<cov columns>` at full precision.
fn export_csv(r: &SolveReport) -> String {
    let post = &r.posterior;
    let mut s = String::from("name,mean");
    for id in post.ids() {
        write!(s, ",{}", id.name).unwrap();
    }
    s.push('\n');
    for (i, id) in post.ids().iter().enumerate() {
        write!(s, "{},{:?}", id.name, post.mean()[i]).unwrap();
        for j in 0..post.dim() {
            write!(s, ",{:?}", post.cov()[(i, j)]).unwrap();
        }
        s.push('\n');
    }
    s
}
