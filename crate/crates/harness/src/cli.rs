//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 validation error, 2 numerical failure,
//! 3 verification failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::RawConfig;
use crate::error::{HResult, HarnessError};
use crate::experiment::{config_for_label, fit_distance_rate, run_compare, run_experiment, RateSummary, Summary, STANDARD_LABELS};
use crate::problem::build_instance;
use crate::trace_csv::{parse_csv, to_csv_string, TraceRow};
use crate::verify::{parse_suites, verify_battery, verify_instance, Fault, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "feaslift", version, about = "Reduced product-space projection experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run one experiment and write its trace CSV.
    Run {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Where to write the JSON summary (default: stderr).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run several paired experiments into one long-format CSV.
    Compare {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Comma-separated run labels, e.g. `avg,reduced[L],reduced[M],reduced[C]`.
        #[arg(long)]
        labels: Option<String>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run identity and regularity suites on random batteries or on the
    /// configured problem.
    Verify {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Comma-separated suites, `all`, or `none`.
        #[arg(long, default_value = "all")]
        suites: String,
        /// Corrupt the lifted projector to exercise failure detection.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Re-fit convergence rates from an existing trace CSV.
    Rate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Only fit this method label.
        #[arg(long)]
        method: Option<String>,
    },
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Flat TOML file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Box half-width of the preset.
    #[arg(long)]
    alpha: Option<f64>,
    /// Set description; repeat for each set.
    #[arg(long = "set")]
    sets: Vec<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    coordinator: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    relax_alpha: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    history_stride: Option<usize>,
    /// Trace CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn raw(&self) -> HResult<RawConfig> {
        let file = match &self.config {
            Some(p) => RawConfig::from_file(p)?,
            None => RawConfig::default(),
        };
        let cli = RawConfig {
            preset: self.preset.clone(),
            n: self.n,
            m: self.m,
            d: self.d,
            alpha: self.alpha,
            sets: (!self.sets.is_empty()).then(|| self.sets.clone()),
            x0: None,
            method: self.method.clone(),
            coordinator: self.coordinator.clone(),
            lambda: self.lambda,
            mu: self.mu,
            relax_alpha: self.relax_alpha,
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            history_stride: self.history_stride,
            out: self.out.clone(),
        };
        Ok(file.overlay(&cli))
    }
}

/// Parses `args` and runs the command, returning the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.cmd, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn write_file(path: &Path, contents: &str) -> HResult<()> {
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path.display().to_string(), e))
}

fn emit(path: Option<&Path>, fallback: &mut dyn Write, contents: &str) -> HResult<()> {
    match path {
        Some(p) => write_file(p, contents),
        None => fallback.write_all(contents.as_bytes()).map_err(|e| HarnessError::io("<stream>", e)),
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable summary") + "\n"
}

#[derive(Serialize)]
struct CompareSummary<'a> {
    runs: Vec<&'a Summary>,
    /// Labels by fitted rate, fastest first. Observational only.
    rate_ordering: &'a [String],
}

fn diverged(s: &Summary) -> bool {
    s.status.starts_with("diverged")
}

fn dispatch(cmd: Cmd, stdout: &mut dyn Write, stderr: &mut dyn Write) -> HResult<i32> {
    match cmd {
        Cmd::Run { exp, summary } => {
            let cfg = exp.raw()?.resolve()?;
            let outcome = run_experiment(&cfg)?;
            emit(cfg.out.as_deref(), stdout, &to_csv_string(&outcome.rows))?;
            emit(summary.as_deref(), stderr, &json(&outcome.summary))?;
            Ok(if diverged(&outcome.summary) { 2 } else { 0 })
        }
        Cmd::Compare { exp, labels, summary } => {
            let base = exp.raw()?.resolve()?;
            let labels: Vec<String> = match labels {
                Some(l) => l.split(',').map(|s| s.trim().to_string()).collect(),
                None => STANDARD_LABELS.iter().map(|s| s.to_string()).collect(),
            };
            let runs = labels
                .iter()
                .map(|l| Ok((l.clone(), config_for_label(l, &base)?)))
                .collect::<HResult<Vec<_>>>()?;
            let cmp = run_compare(&runs)?;
            emit(base.out.as_deref(), stdout, &to_csv_string(&cmp.rows))?;
            let s = CompareSummary { runs: cmp.outcomes.iter().map(|o| &o.summary).collect(), rate_ordering: &cmp.rate_ordering };
            emit(summary.as_deref(), stderr, &json(&s))?;
            Ok(if cmp.outcomes.iter().any(|o| diverged(&o.summary)) { 2 } else { 0 })
        }
        Cmd::Verify { exp, suites, inject_fault } => {
            let raw = exp.raw()?;
            let opts = VerifyOptions {
                suites: parse_suites(&suites)?,
                seed: raw.seed.unwrap_or(0),
                fault: inject_fault.then_some(Fault::CorruptProjector),
            };
            let report = if raw.preset.is_none() && raw.sets.is_none() {
                verify_battery(&opts)
            } else {
                let inst = build_instance(&raw.resolve()?)?;
                verify_instance(&inst.sets, &inst.x0, &opts)
            };
            stdout.write_all(report.render().as_bytes()).map_err(|e| HarnessError::io("<stdout>", e))?;
            if report.passed() {
                Ok(0)
            } else {
                Err(HarnessError::Verification(format!(
                    "{} of {} suites failed",
                    report.results.iter().filter(|r| !r.passed()).count(),
                    report.results.len()
                )))
            }
        }
        Cmd::Rate { input, method } => {
            let text = std::fs::read_to_string(&input).map_err(|e| HarnessError::io(input.display().to_string(), e))?;
            let rows = parse_csv(&text)?;
            let fits = refit_rates(&rows, method.as_deref())?;
            stdout.write_all(json(&fits).as_bytes()).map_err(|e| HarnessError::io("<stdout>", e))?;
            Ok(0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefitResult {
    pub method: String,
    pub rate: Option<RateSummary>,
    pub error: Option<String>,
}

/// Fits each method's rate from CSV rows with the harness rate policy.
pub fn refit_rates(rows: &[TraceRow], only: Option<&str>) -> HResult<Vec<RefitResult>> {
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) && only.is_none_or(|m| m == r.method) {
            methods.push(&r.method);
        }
    }
    if methods.is_empty() {
        return Err(HarnessError::Validation("no matching rows".into()));
    }
    Ok(methods
        .into_iter()
        .map(|m| {
            let group: Vec<&TraceRow> = rows.iter().filter(|r| r.method == m).collect();
            let residuals: Vec<(usize, f64)> = group.iter().map(|r| (r.iter, r.residual)).collect();
            let dists: Vec<(usize, f64)> = group.iter().filter_map(|r| r.dist_to_limit.map(|d| (r.iter, d))).collect();
            match fit_distance_rate(&residuals, &dists) {
                Ok((e, floor)) => RefitResult {
                    method: m.to_string(),
                    rate: Some(RateSummary {
                        eta: e.eta,
                        m: e.m,
                        r_squared: e.r_squared,
                        window_first_iter: dists[e.fit_window.start].0,
                        window_last_iter: dists[e.fit_window.end - 1].0,
                        noise_floor: floor,
                    }),
                    error: None,
                },
                Err(e) => RefitResult { method: m.to_string(), rate: None, error: Some(e.to_string()) },
            }
        })
        .collect())
}
