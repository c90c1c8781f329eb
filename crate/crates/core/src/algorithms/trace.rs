use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::spaces::Vector;

/// Which iterates are kept for post-hoc distance computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum History {
    None,
    Full,
    /// Keep `x_k` for `k` divisible by the stride, plus the final iterate.
    Every(usize),
}

impl History {
    /// Full history up to `max_full_dim` state coordinates, strided beyond.
    pub fn for_dim(dim: usize, max_full_dim: usize, stride: usize) -> Self {
        if dim <= max_full_dim {
            History::Full
        } else {
            History::Every(stride.max(1))
        }
    }

    fn keeps(self, k: usize) -> bool {
        match self {
            History::None => false,
            History::Full => true,
            History::Every(s) => k % s.max(1) == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnDivergence {
    /// Return [`Error::NumericalDivergence`].
    Error,
    /// Stop and return the partial run with [`Status::Diverged`].
    Stop,
}

/// Termination policy: stop once `||x_{k+1} - x_k|| < tol` or after `max_iter` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct StopRule {
    tol: f64,
    max_iter: usize,
    pub history: History,
    /// Record per-set distances of the shadow point at every step.
    pub shadow_distances: bool,
    pub on_divergence: OnDivergence,
}

impl StopRule {
    pub fn new(tol: f64, max_iter: usize) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("stop tolerance must be positive, got {tol}")));
        }
        Ok(StopRule {
            tol,
            max_iter,
            history: History::Full,
            shadow_distances: false,
            on_divergence: OnDivergence::Error,
        })
    }

    pub fn with_history(mut self, history: History) -> Self {
        self.history = history;
        self
    }

    pub fn with_shadow_distances(mut self, on: bool) -> Self {
        self.shadow_distances = on;
        self
    }

    pub fn with_on_divergence(mut self, policy: OnDivergence) -> Self {
        self.on_divergence = policy;
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::new(1e-12, 100_000).expect("valid defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    Diverged { iter: usize },
}

/// Whether `dist_to_limit` was measured against a converged limit or against
/// the last iterate of a run that did not converge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitStatus {
    Exact,
    Approx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `||x_{k+1} - x_k||` in the algorithm's native space.
    pub residual: f64,
    pub shadow_distances: Vec<f64>,
    /// `||x_k - x*||`, filled in post hoc.
    pub dist_to_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub status: Status,
    pub limit_status: LimitStatus,
    snapshots: Vec<(usize, DVector<f64>)>,
    shadows: Vec<(usize, DVector<f64>)>,
}

impl IterationTrace {
    pub(crate) fn new() -> Self {
        IterationTrace {
            records: Vec::new(),
            status: Status::MaxIter,
            limit_status: LimitStatus::Approx,
            snapshots: Vec::new(),
            shadows: Vec::new(),
        }
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual).collect()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.residual)
    }

    /// Stored iterates `(k, x_k)` flattened to the product-space coordinates.
    pub fn snapshots(&self) -> &[(usize, DVector<f64>)] {
        &self.snapshots
    }

    /// Stored shadow points `(k, shadow_k)` when recorded by the algorithm.
    pub fn shadows(&self) -> &[(usize, DVector<f64>)] {
        &self.shadows
    }

    /// Fills `dist_to_limit` for every record whose iterate was stored.
    pub fn set_reference<S: Vector>(&mut self, reference: &S) {
        let r = reference.flat();
        let n = self.records.len();
        for (k, x) in &self.snapshots {
            if *k < n {
                self.records[*k].dist_to_limit = Some((x - &r).norm());
            }
        }
    }

    /// `(k, ||x_k - x*||)` for the records with a computed distance.
    pub fn distances_to_limit(&self) -> Vec<(usize, f64)> {
        self.records.iter().filter_map(|r| r.dist_to_limit.map(|d| (r.iter, d))).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Run<S> {
    /// Last iterate; taken as the limit `x*` for post-hoc distances.
    pub limit: S,
    pub trace: IterationTrace,
}

pub(crate) struct Step<S> {
    pub next: S,
    pub shadow_distances: Vec<f64>,
    pub shadow: Option<DVector<f64>>,
}

/// Runs `step` from `x0` under `stop`, recording the trace; distances to the
/// final iterate are filled in at the end.
pub(crate) fn drive<S, F>(x0: &S, stop: &StopRule, mut step: F) -> Result<Run<S>>
where
    S: Vector,
    F: FnMut(&S) -> Result<Step<S>>,
{
    let mut trace = IterationTrace::new();
    let mut x = x0.clone();
    let keep = |trace: &mut IterationTrace, k: usize, x: &S| {
        if stop.history.keeps(k) {
            trace.snapshots.push((k, x.flat()));
        }
    };
    keep(&mut trace, 0, &x);
    let mut status = Status::MaxIter;
    for k in 0..stop.max_iter {
        let Step { next, shadow_distances, shadow } = step(&x)?;
        if !next.all_finite() {
            match stop.on_divergence {
                OnDivergence::Error => return Err(Error::NumericalDivergence { iter: k }),
                OnDivergence::Stop => {
                    status = Status::Diverged { iter: k };
                    break;
                }
            }
        }
        let residual = next.distance_to(&x);
        trace.records.push(IterationRecord { iter: k, residual, shadow_distances, dist_to_limit: None });
        if let Some(s) = shadow {
            if stop.history.keeps(k) {
                trace.shadows.push((k, s));
            }
        }
        x = next;
        keep(&mut trace, k + 1, &x);
        if residual < stop.tol {
            status = Status::Converged;
            break;
        }
    }
    let last = trace.records.len();
    if stop.history != History::None && trace.snapshots.last().map(|(k, _)| *k) != Some(last) {
        trace.snapshots.push((last, x.flat()));
    }
    trace.status = status;
    trace.limit_status = if status == Status::Converged { LimitStatus::Exact } else { LimitStatus::Approx };
    trace.set_reference(&x);
    Ok(Run { limit: x, trace })
}
