//! Numerical checks of regularity on instances with exact certificates.
//!
//! Normal cones are only computed where they have a finite description: for
//! a linear or affine subspace `C`, `N_C(x) = C^⊥` at every `x in C`. The
//! limiting normal cone of a general set is not computed. Super-regularity is
//! not certified numerically.
//!
//! Strong regularity of `{C_1, ..., C_r}` at `x` means the map
//! `(u_1, ..., u_r) -> sum u_i` with `u_i in N_{C_i}(x)` is injective; for
//! subspaces this is a rank computation on the stacked cone bases.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::exec::Exec;
use crate::lifting::{distance_to_lifted_intersection, IntersectionOracle, ReducedLift};
use crate::linalg::{orthogonal_complement, ThinSvd, RANK_REL_TOL};
use crate::rng::{stream, uniform_in_ball};
use crate::sets::SetDescriptor;
use crate::spaces::{embed_diagonal, BlockPoint, Point};

/// Normal cone of a subspace at a point: an orthonormal basis of the
/// orthogonal complement of its direction space.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceNormalCone {
    pub base: Point,
    pub basis: DMatrix<f64>,
}

pub fn subspace_normal_cone(set: &SetDescriptor, x: &Point) -> Result<SubspaceNormalCone> {
    let direction = set
        .subspace_basis()
        .ok_or_else(|| Error::Unsupported(format!("normal cone of a {}", set.variant_name())))?;
    check_dim(set.ambient_dim(), x.dim())?;
    if !set.contains(x, 1e-9)? {
        return Err(Error::Precondition("base point is not in the subspace".into()));
    }
    Ok(SubspaceNormalCone { base: x.clone(), basis: orthogonal_complement(direction, x.dim()) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongRegularityReport {
    pub is_strongly_regular: bool,
    pub null_space_dimension: usize,
    /// Smallest singular value of `(u_1, ..., u_r) -> sum u_i` over the cone
    /// coordinates; 0 when not injective, `None` when every cone is trivial.
    pub min_singular_value: Option<f64>,
    /// Total dimension of the cone product.
    pub domain_dimension: usize,
}

/// Strong-regularity report for the sum map over the given cone bases.
pub fn sum_map_report(cone_bases: &[DMatrix<f64>]) -> StrongRegularityReport {
    let rows = cone_bases.first().map_or(0, |b| b.nrows());
    let cols: usize = cone_bases.iter().map(|b| b.ncols()).sum();
    if cols == 0 {
        return StrongRegularityReport {
            is_strongly_regular: true,
            null_space_dimension: 0,
            min_singular_value: None,
            domain_dimension: 0,
        };
    }
    let stacked = hstack(rows, cone_bases);
    let svd = ThinSvd::new(&stacked);
    let rank = svd.rank(RANK_REL_TOL);
    let null = cols - rank;
    let min_sv = if cols > rows {
        0.0
    } else {
        svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min)
    };
    StrongRegularityReport {
        is_strongly_regular: null == 0,
        null_space_dimension: null,
        min_singular_value: Some(min_sv),
        domain_dimension: cols,
    }
}

/// Strong regularity of a collection of linear/affine subspaces at `xbar`.
pub fn strong_regularity_subspaces(sets: &[SetDescriptor], xbar: &Point) -> Result<StrongRegularityReport> {
    if sets.is_empty() {
        return Err(Error::InvalidParameter("need at least one subspace".into()));
    }
    let cones = sets.iter().map(|s| subspace_normal_cone(s, xbar).map(|c| c.basis)).collect::<Result<Vec<_>>>()?;
    Ok(sum_map_report(&cones))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedStrongRegularity {
    pub original: StrongRegularityReport,
    pub lifted: StrongRegularityReport,
}

/// Strong regularity of `{C_1, ..., C_r}` at `xbar` and of `{B, K}` at
/// `j(xbar)`, with `N_B = N_{C_1} x ... x N_{C_{r-1}}` and
/// `N_K = j(N_{C_r}) + D^⊥`.
pub fn lifted_strong_regularity_check(lift: &ReducedLift, xbar: &Point) -> Result<LiftedStrongRegularity> {
    let sets: Vec<SetDescriptor> = lift.all_sets().into_iter().cloned().collect();
    let original = strong_regularity_subspaces(&sets, xbar)?;
    let k = lift.block_count();
    let n = lift.dim();
    let component_cones = lift
        .components()
        .iter()
        .map(|s| subspace_normal_cone(s, xbar).map(|c| c.basis))
        .collect::<Result<Vec<_>>>()?;
    let n_b = block_diagonal(&component_cones);
    let coord_cone = subspace_normal_cone(lift.coordinator(), xbar)?.basis;
    let n_k = hstack(k * n, &[embed_basis(&coord_cone, k), diagonal_complement_basis(k, n)]);
    let lifted = sum_map_report(&[n_b, n_k]);
    Ok(LiftedStrongRegularity { original, lifted })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalConeReport {
    /// `dim K^⊥` computed directly from a basis of `K`.
    pub direct_dimension: usize,
    /// `dim (j(C_r^⊥) + D^⊥)`.
    pub structured_dimension: usize,
    /// `||(I - P_direct) S||_max` over the structured basis `S`.
    pub structured_in_direct: f64,
    /// `||(I - P_structured) Q||_max` over the direct basis `Q`.
    pub direct_in_structured: f64,
    /// `max_j ||sum_i u_i^{(j)}||` over the `D^⊥` basis vectors.
    pub diagonal_complement_sum: f64,
    /// Largest `|<u, d>|` between the `D^⊥` basis and a basis of `D`.
    pub diagonal_complement_orthogonality: f64,
    pub diagonal_complement_dimension: usize,
}

impl NormalConeReport {
    pub fn max_residual(&self) -> f64 {
        self.structured_in_direct
            .max(self.direct_in_structured)
            .max(self.diagonal_complement_sum)
            .max(self.diagonal_complement_orthogonality)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.direct_dimension == self.structured_dimension && self.max_residual() <= tol
    }
}

/// Checks `N_K = j(N_{C_r}) + D^⊥` for a subspace coordinator in
/// `X^{r-1}` against `K^⊥` computed directly, and that the `D^⊥` basis
/// consists of block vectors summing to zero.
pub fn lemma_ncps_subspace_check(coordinator: &SetDescriptor, r_minus_1: usize) -> Result<NormalConeReport> {
    if !coordinator.is_linear_subspace() {
        return Err(Error::Unsupported(format!("normal-cone structure check on a {}", coordinator.variant_name())));
    }
    if r_minus_1 == 0 {
        return Err(Error::InvalidParameter("need at least one block".into()));
    }
    let n = coordinator.ambient_dim();
    let big = r_minus_1 * n;
    let basis = coordinator.subspace_basis().expect("linear subspace");

    let k_basis = embed_basis(basis, r_minus_1);
    let direct = orthogonal_complement(&k_basis, big);
    let d_perp = diagonal_complement_basis(r_minus_1, n);
    let structured_raw = hstack(big, &[embed_basis(&orthogonal_complement(basis, n), r_minus_1), d_perp.clone()]);
    let structured = crate::linalg::column_space(&structured_raw);

    let outside = |q: &DMatrix<f64>, v: &DMatrix<f64>| -> f64 {
        if v.ncols() == 0 {
            return 0.0;
        }
        let resid = v - q * (q.transpose() * v);
        resid.amax()
    };

    let mut sum_resid = 0.0f64;
    for j in 0..d_perp.ncols() {
        let mut s = DVector::zeros(n);
        for i in 0..r_minus_1 {
            s += d_perp.view((i * n, j), (n, 1));
        }
        sum_resid = sum_resid.max(s.norm());
    }
    let diag_basis = embed_basis(&DMatrix::identity(n, n), r_minus_1);
    let orth = if d_perp.ncols() == 0 { 0.0 } else { (d_perp.transpose() * diag_basis).amax() };

    Ok(NormalConeReport {
        direct_dimension: direct.ncols(),
        structured_dimension: structured.ncols(),
        structured_in_direct: outside(&direct, &structured_raw),
        direct_in_structured: outside(&structured, &direct),
        diagonal_complement_sum: sum_resid,
        diagonal_complement_orthogonality: orth,
        diagonal_complement_dimension: d_perp.ncols(),
    })
}

/// Orthonormal basis of `D^⊥ = {(u_1, ..., u_k) : sum u_i = 0}` in `(R^n)^k`
/// built from Helmert contrasts; `(k-1) n` columns.
pub fn diagonal_complement_basis(k: usize, n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(k * n, (k.saturating_sub(1)) * n);
    let mut col = 0;
    for j in 1..k {
        let scale = 1.0 / ((j * (j + 1)) as f64).sqrt();
        for l in 0..n {
            for i in 0..j {
                out[(i * n + l, col)] = scale;
            }
            out[(j * n + l, col)] = -(j as f64) * scale;
            col += 1;
        }
    }
    out
}

/// `j(b) / sqrt(k)` for every column `b`: an orthonormal basis of `j(span)`.
pub fn embed_basis(basis: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = basis.nrows();
    let mut out = DMatrix::zeros(k * n, basis.ncols());
    let s = 1.0 / (k as f64).sqrt();
    for i in 0..k {
        out.view_mut((i * n, 0), (n, basis.ncols())).copy_from(&(basis * s));
    }
    out
}

fn block_diagonal(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

fn hstack(rows: usize, mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let cols: usize = mats.iter().map(|m| m.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for m in mats {
        out.columns_mut(c, m.ncols()).copy_from(m);
        c += m.ncols();
    }
    out
}

/// Sampling parameters for the κ estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Sampling {
    pub fn new(delta: f64, samples: usize, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("sampling radius must be positive, got {delta}")));
        }
        Ok(Sampling { delta, samples, seed, exec: Exec::default() })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

/// Ratios with a max-distance denominator below this are skipped.
const RATIO_FLOOR: f64 = 1e-13;

/// Heuristic estimate of the linear-regularity constant
/// `κ ≈ max d_∩(z) / max_i d_{C_i}(z)` over samples in a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRegularityEstimate {
    pub kappa_hat: f64,
    pub delta: f64,
    pub sample_count: usize,
    /// Samples whose denominator cleared the floor.
    pub used_count: usize,
    /// Flattened sample attaining `kappa_hat`.
    pub witness: Option<DVector<f64>>,
}

fn reduce_max(ratios: Vec<Option<(f64, DVector<f64>)>>, delta: f64) -> LinearRegularityEstimate {
    let sample_count = ratios.len();
    let mut used = 0;
    let mut best: Option<(f64, DVector<f64>)> = None;
    for r in ratios.into_iter().flatten() {
        used += 1;
        if best.as_ref().is_none_or(|(b, _)| r.0 > *b) {
            best = Some(r);
        }
    }
    let (kappa_hat, witness) = match best {
        Some((k, w)) => (k, Some(w)),
        None => (0.0, None),
    };
    LinearRegularityEstimate { kappa_hat, delta, sample_count, used_count: used, witness }
}

/// Samples uniformly in `B(xbar; delta)` and reports the worst ratio.
pub fn linear_regularity_sample(
    sets: &[SetDescriptor],
    oracle: &dyn IntersectionOracle,
    xbar: &Point,
    sampling: &Sampling,
) -> Result<LinearRegularityEstimate> {
    if sets.is_empty() {
        return Err(Error::InvalidParameter("need at least one set".into()));
    }
    for s in sets {
        check_dim(s.ambient_dim(), xbar.dim())?;
    }
    let ratios = sampling.exec.try_map_range(sampling.samples, |i| {
        let mut rng = stream(sampling.seed, i as u64);
        let z = Point::from_vector(uniform_in_ball(&mut rng, xbar.vector(), sampling.delta))?;
        let denom = sets.iter().map(|s| s.distance(&z)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
        if denom < RATIO_FLOOR {
            return Ok(None);
        }
        let num = oracle.distance_to_intersection(&z)?;
        Ok::<_, Error>(Some((num / denom, z.into_vector())))
    })?;
    Ok(reduce_max(ratios, sampling.delta))
}

/// Sampled κ for the lifted pair `{B, K}` around `j(xbar)`; samples are drawn
/// in the ball of radius `sqrt(r-1) delta / 2`, where the lifted bound is
/// derived from the original one on `B(xbar; delta)`.
pub fn lifted_linear_regularity_sample(
    lift: &ReducedLift,
    oracle: &dyn IntersectionOracle,
    xbar: &Point,
    sampling: &Sampling,
) -> Result<LinearRegularityEstimate> {
    let k = lift.block_count();
    let center = embed_diagonal(xbar, k)?.flatten();
    let radius = (k as f64).sqrt() * sampling.delta / 2.0;
    let ratios = sampling.exec.try_map_range(sampling.samples, |i| {
        let mut rng = stream(sampling.seed, i as u64);
        let flat = uniform_in_ball(&mut rng, &center, radius);
        let z = BlockPoint::from_flat(&flat, k)?;
        let d_b = crate::spaces::Vector::distance_to(&z, &lift.project_b(&z)?);
        let d_k = crate::spaces::Vector::distance_to(&z, &lift.project_k(&z)?);
        let denom = d_b.max(d_k);
        if denom < RATIO_FLOOR {
            return Ok(None);
        }
        let num = distance_to_lifted_intersection(lift, &z, oracle)?;
        Ok::<_, Error>(Some((num / denom, flat)))
    })?;
    Ok(reduce_max(ratios, radius))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaComparison {
    pub original: LinearRegularityEstimate,
    pub lifted: LinearRegularityEstimate,
    /// `1 + 2 κ̂_original sqrt(r-1)`.
    pub bound: f64,
    pub bound_holds: bool,
}

/// Compares sampled κ at both levels against `κ_lifted <= 1 + 2 κ sqrt(r-1)`.
/// Holding at sampled points is necessary, not sufficient.
pub fn lifted_kappa_comparison(
    lift: &ReducedLift,
    oracle: &dyn IntersectionOracle,
    xbar: &Point,
    sampling: &Sampling,
) -> Result<KappaComparison> {
    let sets: Vec<SetDescriptor> = lift.all_sets().into_iter().cloned().collect();
    let original = linear_regularity_sample(&sets, oracle, xbar, sampling)?;
    let lifted = lifted_linear_regularity_sample(lift, oracle, xbar, sampling)?;
    let bound = 1.0 + 2.0 * original.kappa_hat * (lift.block_count() as f64).sqrt();
    let bound_holds = lifted.kappa_hat <= bound + 1e-6;
    Ok(KappaComparison { original, lifted, bound, bound_holds })
}
