//! The generalized Douglas-Rachford family of projection algorithms.
//!
//! With relaxed projectors `R^λ_A = (1-λ) Id + λ P_A` the two-set gDR step is
//!
//! ```text
//! x+ = (1-α) x + α R^μ_B R^λ_A x
//! ```
//!
//! `λ = μ = α = 1` is alternating projections; `λ = μ = 2` is Douglas-Rachford
//! (reflect, reflect, average). Applied to the reduced lift with `A = K`,
//! `B = B` it yields the parallel componentwise scheme in [`parallel_gdr_reduced`].

mod gdr;
mod rate;
mod trace;

pub use gdr::{
    averaged_projections_classical, averaged_projections_classical_with, gdr_two_sets, parallel_gdr_reduced,
    reduced_averaged_projections,
};
pub use rate::{estimate_rate, fit_rate, RateEstimate, RateFit};
pub use trace::{History, IterationRecord, IterationTrace, LimitStatus, OnDivergence, Run, Status, StopRule};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdrParams {
    lambda: f64,
    mu: f64,
    alpha: f64,
}

impl GdrParams {
    /// `lambda, mu in (0, 2]`, `alpha in (0, 1)`; `alpha = 1` only with
    /// `lambda = mu = 1` (plain alternating/averaged projections).
    pub fn new(lambda: f64, mu: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("mu", mu)] {
            if !(v > 0.0 && v <= 2.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 2], got {v}")));
            }
        }
        let pure_projection = lambda == 1.0 && mu == 1.0;
        let alpha_ok = (alpha > 0.0 && alpha < 1.0) || (alpha == 1.0 && pure_projection);
        if !alpha_ok {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1) (1 allowed only for lambda = mu = 1), got {alpha}"
            )));
        }
        Ok(GdrParams { lambda, mu, alpha })
    }

    /// `lambda = mu = alpha = 1`.
    pub fn alternating_projections() -> Self {
        GdrParams { lambda: 1.0, mu: 1.0, alpha: 1.0 }
    }

    /// `lambda = mu = 2` with averaging weight `alpha`.
    pub fn douglas_rachford(alpha: f64) -> Result<Self> {
        Self::new(2.0, 2.0, alpha)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Linear regularity alone guarantees local R-linear convergence only
    /// when `min(lambda, mu) < 2`; otherwise strong regularity is needed.
    pub fn linear_regularity_suffices(&self) -> bool {
        self.lambda.min(self.mu) < 2.0
    }
}

impl Default for GdrParams {
    fn default() -> Self {
        GdrParams { lambda: 1.0, mu: 1.0, alpha: 0.5 }
    }
}
