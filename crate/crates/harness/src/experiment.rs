//! Running one configured experiment, or several paired ones.

use std::collections::HashSet;

use feaslift::algorithms::{
    averaged_projections_classical, fit_rate, gdr_two_sets, parallel_gdr_reduced, reduced_averaged_projections,
    History, IterationTrace, LimitStatus, OnDivergence, RateEstimate, RateFit, Status, StopRule,
};
use feaslift::spaces::embed_diagonal;
use feaslift::{Exec, Point, ReducedLift, SetDescriptor};
use serde::Serialize;

use crate::config::{Coordinator, ExperimentConfig, Method};
use crate::error::{numerical, validation, HResult, HarnessError};
use crate::problem::{build_instance, Instance};
use crate::trace_csv::{rows_from_trace, TraceRow};

/// Full history is kept up to this many state coordinates.
pub const MAX_FULL_HISTORY_DIM: usize = 65_536;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummary {
    pub eta: f64,
    pub m: f64,
    pub r_squared: f64,
    pub window_first_iter: usize,
    pub window_last_iter: usize,
    pub noise_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub label: String,
    pub method: Method,
    pub coordinator: Option<String>,
    pub seed: u64,
    pub state_dim: usize,
    pub status: String,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub limit_status: String,
    /// Distance from the recovered solution to each set, in set order.
    pub limit_set_distances: Vec<f64>,
    pub rate: Option<RateSummary>,
    pub rate_error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub trace: IterationTrace,
    pub rows: Vec<TraceRow>,
}

/// Rate of `||x_k - x*||` with the last iterate standing in for `x*`.
///
/// Using the last iterate `x_N` biases distances near the end of the run by
/// up to `||x_N - x*||`, which is bounded by `res_N eta / (1 - eta)` when the
/// residuals contract at rate `eta`. Distances within a factor 100 of that
/// bound are treated as noise, and the fit uses the last half of the
/// remaining clean window.
pub fn fit_distance_rate(residuals: &[(usize, f64)], distances: &[(usize, f64)]) -> feaslift::Result<(RateEstimate, f64)> {
    let tail = RateFit { tail_fraction: 0.5, ..RateFit::default() };
    let res_fit = fit_rate(residuals, &tail)?;
    let last = residuals.last().map_or(0.0, |&(_, r)| r);
    let bias = if res_fit.eta < 1.0 { last * res_fit.eta / (1.0 - res_fit.eta) } else { f64::INFINITY };
    let noise_floor = (100.0 * bias).max(RateFit::default().noise_floor);
    let est = fit_rate(distances, &RateFit { noise_floor, ..tail })?;
    Ok((est, noise_floor))
}

fn stop_rule(cfg: &ExperimentConfig, state_dim: usize) -> HResult<StopRule> {
    Ok(StopRule::new(cfg.tol, cfg.max_iter)
        .map_err(validation)?
        .with_history(History::for_dim(state_dim, MAX_FULL_HISTORY_DIM, cfg.history_stride))
        .with_on_divergence(OnDivergence::Stop))
}

struct RawRun {
    trace: IterationTrace,
    solution: Point,
    state_dim: usize,
}

fn execute(cfg: &ExperimentConfig, inst: &Instance) -> HResult<RawRun> {
    let n = inst.dim();
    let run_lift = |idx: usize| ReducedLift::with_coordinator(inst.sets.clone(), idx).map_err(validation);
    match cfg.method {
        Method::AvgProj => {
            let run = averaged_projections_classical(&inst.sets, &inst.x0, &stop_rule(cfg, n)?).map_err(numerical)?;
            Ok(RawRun { trace: run.trace, solution: run.limit, state_dim: n })
        }
        Method::ReducedAvgProj => {
            let lift = run_lift(cfg.coordinator_index()?)?;
            let run = reduced_averaged_projections(&lift, &inst.x0, &stop_rule(cfg, n)?).map_err(numerical)?;
            Ok(RawRun { trace: run.trace, solution: run.limit, state_dim: n })
        }
        Method::ParallelGdr => {
            let lift = run_lift(cfg.coordinator_index()?)?;
            let x0 = embed_diagonal(&inst.x0, lift.block_count()).map_err(validation)?;
            let dim = x0.total_dim();
            let run = parallel_gdr_reduced(&lift, cfg.gdr_params()?, &x0, &stop_rule(cfg, dim)?).map_err(numerical)?;
            // The recovered point is the coordinator projection of the block mean.
            let solution = lift.coordinator().project(&run.limit.mean()).map_err(numerical)?.point;
            Ok(RawRun { trace: run.trace, solution, state_dim: dim })
        }
        Method::Gdr2 | Method::Map2 | Method::Dr2 => {
            let inner_idx = cfg.coordinator_index()?;
            let inner: &SetDescriptor = &inst.sets[inner_idx];
            let outer: &SetDescriptor = &inst.sets[1 - inner_idx];
            let run = gdr_two_sets(inner, outer, cfg.gdr_params()?, &inst.x0, &stop_rule(cfg, n)?).map_err(numerical)?;
            let solution = inner.project(&run.limit).map_err(numerical)?.point;
            Ok(RawRun { trace: run.trace, solution, state_dim: n })
        }
    }
}

/// Label used in CSV output when none is given.
pub fn default_label(cfg: &ExperimentConfig) -> String {
    if cfg.method.uses_coordinator() && cfg.coordinator != Coordinator::Last {
        let name = match cfg.coordinator {
            Coordinator::Named(c) => c.to_string(),
            Coordinator::Index(i) => i.to_string(),
            Coordinator::Last => unreachable!(),
        };
        format!("{}[{name}]", cfg.method)
    } else {
        cfg.method.to_string()
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> HResult<Outcome> {
    run_labeled(&default_label(cfg), cfg)
}

pub fn run_labeled(label: &str, cfg: &ExperimentConfig) -> HResult<Outcome> {
    let inst = build_instance(cfg)?;
    let RawRun { trace, solution, state_dim } = execute(cfg, &inst)?;

    let residuals: Vec<(usize, f64)> = trace.records.iter().map(|r| (r.iter, r.residual)).collect();
    let (rate, rate_error) = match fit_distance_rate(&residuals, &trace.distances_to_limit()) {
        Ok((e, floor)) => (
            Some(RateSummary {
                eta: e.eta,
                m: e.m,
                r_squared: e.r_squared,
                window_first_iter: trace.distances_to_limit()[e.fit_window.start].0,
                window_last_iter: trace.distances_to_limit()[e.fit_window.end - 1].0,
                noise_floor: floor,
            }),
            None,
        ),
        Err(e) => (None, Some(e.to_string())),
    };
    let limit_set_distances =
        inst.sets.iter().map(|s| s.distance(&solution)).collect::<feaslift::Result<Vec<_>>>().map_err(numerical)?;
    let coordinator = if cfg.method.uses_coordinator() {
        Some(inst.names[cfg.coordinator_index()?].clone())
    } else {
        None
    };
    let status = match trace.status {
        Status::Converged => "converged".to_string(),
        Status::MaxIter => "max_iter".to_string(),
        Status::Diverged { iter } => format!("diverged at {iter}"),
    };
    let summary = Summary {
        label: label.to_string(),
        method: cfg.method,
        coordinator,
        seed: cfg.seed,
        state_dim,
        status,
        iterations: trace.iterations(),
        final_residual: trace.final_residual(),
        limit_status: match trace.limit_status {
            LimitStatus::Exact => "exact".into(),
            LimitStatus::Approx => "approx".into(),
        },
        limit_set_distances,
        rate,
        rate_error,
    };
    let rows = rows_from_trace(&trace, label, cfg.seed);
    Ok(Outcome { summary, trace, rows })
}

/// The four runs of the signal-compression comparison.
pub const STANDARD_LABELS: [&str; 4] = ["avg", "reduced[L]", "reduced[M]", "reduced[C]"];

/// Maps a comparison label onto a configuration.
///
/// `avg` is averaged projections, `reduced[X]` is reduced averaged
/// projections with coordinator `X`; any method id, optionally followed by
/// `[X]`, is also accepted.
pub fn config_for_label(label: &str, base: &ExperimentConfig) -> HResult<ExperimentConfig> {
    let (head, coord) = match label.split_once('[') {
        Some((h, rest)) => {
            let c = rest
                .strip_suffix(']')
                .ok_or_else(|| HarnessError::Validation(format!("malformed label `{label}`")))?;
            (h, Some(c.parse::<Coordinator>()?))
        }
        None => (label, None),
    };
    let method = match head {
        "avg" => Method::AvgProj,
        "reduced" => Method::ReducedAvgProj,
        other => other.parse()?,
    };
    let mut cfg = base.clone();
    cfg.method = method;
    if let Some(c) = coord {
        cfg.coordinator = c;
    }
    if method.two_set_only() && cfg.set_count() != 2 {
        return Err(HarnessError::Validation(format!("{method} needs exactly 2 sets")));
    }
    cfg.coordinator_index()?;
    Ok(cfg)
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub outcomes: Vec<Outcome>,
    pub rows: Vec<TraceRow>,
    /// Labels sorted by fitted rate, fastest first; runs without a fit last.
    pub rate_ordering: Vec<String>,
}

/// Runs labeled configurations that share problem, dimensions and seed.
pub fn run_compare(runs: &[(String, ExperimentConfig)]) -> HResult<Comparison> {
    if runs.is_empty() {
        return Err(HarnessError::Validation("nothing to compare".into()));
    }
    let mut seen = HashSet::new();
    for (label, _) in runs {
        if label.is_empty() || label.contains(',') || label.contains('\n') {
            return Err(HarnessError::Validation(format!("invalid label `{label}`")));
        }
        if !seen.insert(label.as_str()) {
            return Err(HarnessError::Validation(format!("duplicate label `{label}`")));
        }
    }
    let key = runs[0].1.pairing_key();
    if let Some((label, _)) = runs.iter().find(|(_, c)| c.pairing_key() != key) {
        return Err(HarnessError::Validation(format!("run `{label}` differs in problem, dimensions or seed")));
    }
    let outcomes = Exec::default()
        .map_slice(runs, |(label, cfg)| run_labeled(label, cfg))
        .into_iter()
        .collect::<HResult<Vec<_>>>()?;
    let rows = outcomes.iter().flat_map(|o| o.rows.iter().cloned()).collect();
    let mut ranked: Vec<(f64, String)> = outcomes
        .iter()
        .map(|o| (o.summary.rate.as_ref().map_or(f64::INFINITY, |r| r.eta), o.summary.label.clone()))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Comparison { outcomes, rows, rate_ordering: ranked.into_iter().map(|(_, l)| l).collect() })
}
