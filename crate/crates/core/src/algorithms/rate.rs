//! R-linear rate fitting: `||x_k - x*|| <= M eta^k`.
//!
//! The estimate is a least-squares line through `(k, ln d_k)`; it is a fit,
//! not a certificate.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::spaces::Vector;

use super::trace::IterationTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Distances at or below this are treated as noise.
    pub noise_floor: f64,
    /// Fraction of the usable window (taken from its end) used for the fit.
    pub tail_fraction: f64,
    pub min_points: usize,
}

impl Default for RateFit {
    fn default() -> Self {
        RateFit { noise_floor: 1e-13, tail_fraction: 1.0, min_points: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub eta: f64,
    pub m: f64,
    /// Positions (into the supplied sequence) used by the fit.
    pub fit_window: Range<usize>,
    pub r_squared: f64,
}

impl RateEstimate {
    pub fn is_linear(&self) -> bool {
        self.eta < 1.0
    }
}

/// Fits the rate from `(k, d_k)` pairs with the given window policy.
///
/// Trailing points at or below the noise floor are dropped; the fit window is
/// then the largest suffix whose distances all lie above the floor, trimmed
/// to its last `tail_fraction`.
pub fn fit_rate(points: &[(usize, f64)], fit: &RateFit) -> Result<RateEstimate> {
    let above = |d: f64| d.is_finite() && d > fit.noise_floor;
    let end = points.iter().rposition(|&(_, d)| above(d)).map_or(0, |i| i + 1);
    let start = points[..end].iter().rposition(|&(_, d)| !above(d)).map_or(0, |i| i + 1);
    let usable = end - start;
    let take = ((usable as f64) * fit.tail_fraction.clamp(0.0, 1.0)).ceil() as usize;
    let take = take.max(fit.min_points).min(usable);
    if take < fit.min_points.max(2) {
        return Err(Error::InsufficientData { usable, required: fit.min_points.max(2) });
    }
    let window = (end - take)..end;
    let xs: Vec<f64> = points[window.clone()].iter().map(|&(k, _)| k as f64).collect();
    let ys: Vec<f64> = points[window.clone()].iter().map(|&(_, d)| d.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateEstimate { eta: slope.exp(), m: intercept.exp(), fit_window: window, r_squared })
}

/// Fits the rate of a recorded run against `reference_limit` with the default policy.
pub fn estimate_rate<S: Vector>(trace: &IterationTrace, reference_limit: &S) -> Result<RateEstimate> {
    let mut t = trace.clone();
    t.set_reference(reference_limit);
    fit_rate(&t.distances_to_limit(), &RateFit::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(m: f64, eta: f64, n: usize) -> Vec<(usize, f64)> {
        (0..n).map(|k| (k, m * eta.powi(k as i32))).collect()
    }

    #[test]
    fn recovers_exact_geometric_data() {
        let est = fit_rate(&geometric(1.0, 0.5, 60), &RateFit::default()).unwrap();
        assert!((est.eta - 0.5).abs() <= 1e-6);
        assert!(est.r_squared >= 0.999999);
        // 0.5^k > 1e-13 for k <= 43
        assert_eq!(est.fit_window, 0..44);

        let est = fit_rate(&geometric(3.0, 0.9, 200), &RateFit::default()).unwrap();
        assert!((est.eta - 0.9).abs() <= 1e-6);
        assert!((est.m - 3.0).abs() <= 1e-6);
    }

    #[test]
    fn drops_noise_tail_and_takes_largest_clean_suffix() {
        let mut pts = geometric(1.0, 0.7, 40);
        pts[5].1 = 0.0;
        pts.push((40, 0.0));
        pts.push((41, 1e-16));
        let est = fit_rate(&pts, &RateFit::default()).unwrap();
        assert_eq!(est.fit_window, 6..40);
        assert!((est.eta - 0.7).abs() <= 1e-9);
    }

    #[test]
    fn tail_fraction_restricts_window() {
        let mut pts = geometric(1.0, 0.2, 5);
        pts.extend((5..40).map(|k| (k, 0.2f64.powi(5) * 0.9f64.powi(k as i32 - 5))));
        let fit = RateFit { tail_fraction: 0.5, ..RateFit::default() };
        let est = fit_rate(&pts, &fit).unwrap();
        assert_eq!(est.fit_window, 20..40);
        assert!((est.eta - 0.9).abs() <= 1e-9);
    }

    #[test]
    fn too_few_points() {
        let err = fit_rate(&geometric(1.0, 0.5, 9), &RateFit::default()).unwrap_err();
        assert_eq!(err, Error::InsufficientData { usable: 9, required: 10 });
        assert!(fit_rate(&[], &RateFit::default()).is_err());
    }
}
