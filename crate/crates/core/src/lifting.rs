//! Product-space reformulations of `find x in C_1 ∩ ... ∩ C_r`.
//!
//! The reduced lift works in `X^{r-1}` with
//!
//! ```text
//! B = C_1 x ... x C_{r-1}
//! K = { (x, ..., x) : x in C_r }
//! ```
//!
//! so that `B ∩ K = j(C_1 ∩ ... ∩ C_r)`. `C_r` is the coordinator: it is the
//! only set projected at the block average. The classical Pierra lift works in
//! `X^r` with the full product and the diagonal `D_r`.

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::exec::Exec;
use crate::linalg::{column_space, orthogonal_complement};
use crate::sets::{Projector, SetDescriptor};
use crate::spaces::{embed_diagonal, project_diagonal, BlockPoint, Point, Vector};

#[derive(Debug, Clone)]
pub struct ReducedLift {
    components: Vec<SetDescriptor>,
    coordinator: SetDescriptor,
    exec: Exec,
}

impl ReducedLift {
    pub fn new(components: Vec<SetDescriptor>, coordinator: SetDescriptor) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("reduced lift needs r >= 2 sets".into()));
        }
        let n = coordinator.ambient_dim();
        for c in &components {
            check_dim(n, c.ambient_dim())?;
        }
        Ok(ReducedLift { components, coordinator, exec: Exec::default() })
    }

    /// Builds the lift from `C_1, ..., C_r` with `sets[coordinator]` as the
    /// coordinator; the remaining sets keep their relative order.
    pub fn with_coordinator(mut sets: Vec<SetDescriptor>, coordinator: usize) -> Result<Self> {
        if coordinator >= sets.len() {
            return Err(Error::InvalidParameter(format!(
                "coordinator index {coordinator} out of range for {} sets",
                sets.len()
            )));
        }
        let c = sets.remove(coordinator);
        Self::new(sets, c)
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    /// Number of original sets `r`.
    pub fn r(&self) -> usize {
        self.components.len() + 1
    }

    /// Number of blocks `r - 1`.
    pub fn block_count(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.coordinator.ambient_dim()
    }

    pub fn components(&self) -> &[SetDescriptor] {
        &self.components
    }

    pub fn coordinator(&self) -> &SetDescriptor {
        &self.coordinator
    }

    /// `C_1, ..., C_r` with the coordinator last.
    pub fn all_sets(&self) -> Vec<&SetDescriptor> {
        self.components.iter().chain(std::iter::once(&self.coordinator)).collect()
    }

    fn check_block_point(&self, x: &BlockPoint) -> Result<()> {
        check_dim(self.block_count(), x.block_count())?;
        check_dim(self.dim(), x.block_dim())
    }

    /// `P_B(x) = (P_{C_1}(x_1), ..., P_{C_{r-1}}(x_{r-1}))`.
    pub fn project_b(&self, x: &BlockPoint) -> Result<BlockPoint> {
        self.check_block_point(x)?;
        let blocks = self
            .exec
            .try_map_range(self.block_count(), |i| self.components[i].project(x.block(i)).map(|r| r.point))?;
        Ok(BlockPoint::from_blocks_unchecked(blocks))
    }

    /// `P_K(x) = j(P_{C_r}(mean of blocks))`.
    pub fn project_k(&self, x: &BlockPoint) -> Result<BlockPoint> {
        self.check_block_point(x)?;
        let p = self.coordinator.project(&x.mean())?.point;
        embed_diagonal(&p, self.block_count())
    }

    pub fn b_projector(&self) -> ProductB<'_> {
        ProductB(self)
    }

    pub fn k_projector(&self) -> DiagonalK<'_> {
        DiagonalK(self)
    }
}

/// `P_B` as a [`Projector`] on `X^{r-1}`.
#[derive(Clone, Copy)]
pub struct ProductB<'a>(&'a ReducedLift);

/// `P_K` as a [`Projector`] on `X^{r-1}`.
#[derive(Clone, Copy)]
pub struct DiagonalK<'a>(&'a ReducedLift);

impl Projector<BlockPoint> for ProductB<'_> {
    fn project_onto(&self, x: &BlockPoint) -> Result<BlockPoint> {
        self.0.project_b(x)
    }
}

impl Projector<BlockPoint> for DiagonalK<'_> {
    fn project_onto(&self, x: &BlockPoint) -> Result<BlockPoint> {
        self.0.project_k(x)
    }
}

/// The classical lift `C_1 x ... x C_r ∩ D_r` in `X^r`.
#[derive(Debug, Clone)]
pub struct PierraLift {
    sets: Vec<SetDescriptor>,
    exec: Exec,
}

impl PierraLift {
    pub fn new(sets: Vec<SetDescriptor>) -> Result<Self> {
        let first = sets.first().ok_or_else(|| Error::InvalidParameter("Pierra lift needs at least one set".into()))?;
        let n = first.ambient_dim();
        for s in &sets {
            check_dim(n, s.ambient_dim())?;
        }
        Ok(PierraLift { sets, exec: Exec::default() })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn r(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[SetDescriptor] {
        &self.sets
    }

    pub fn project_c(&self, x: &BlockPoint) -> Result<BlockPoint> {
        check_dim(self.r(), x.block_count())?;
        check_dim(self.sets[0].ambient_dim(), x.block_dim())?;
        let blocks = self.exec.try_map_range(self.r(), |i| self.sets[i].project(x.block(i)).map(|r| r.point))?;
        Ok(BlockPoint::from_blocks_unchecked(blocks))
    }

    pub fn project_d(&self, x: &BlockPoint) -> Result<BlockPoint> {
        check_dim(self.r(), x.block_count())?;
        Ok(project_diagonal(x))
    }
}

/// A projector onto `C_1 ∩ ... ∩ C_r`, supplied from outside the lift.
pub trait IntersectionOracle: Sync {
    fn project_intersection(&self, x: &Point) -> Result<Point>;

    fn distance_to_intersection(&self, x: &Point) -> Result<f64> {
        Ok(self.project_intersection(x)?.distance(x))
    }
}

impl<F> IntersectionOracle for F
where
    F: Fn(&Point) -> Result<Point> + Sync,
{
    fn project_intersection(&self, x: &Point) -> Result<Point> {
        self(x)
    }
}

/// Exact oracle for intersections of linear subspaces:
/// `(∩ C_i)^⊥ = C_1^⊥ + ... + C_r^⊥`.
#[derive(Debug, Clone)]
pub struct SubspaceIntersection {
    basis: DMatrix<f64>,
}

impl SubspaceIntersection {
    pub fn new<'a>(sets: impl IntoIterator<Item = &'a SetDescriptor>) -> Result<Self> {
        let sets: Vec<&SetDescriptor> = sets.into_iter().collect();
        let first = sets.first().ok_or_else(|| Error::Oracle("no sets given".into()))?;
        let n = first.ambient_dim();
        let mut normals: Vec<DMatrix<f64>> = Vec::new();
        for s in &sets {
            check_dim(n, s.ambient_dim())?;
            if !s.is_linear_subspace() {
                return Err(Error::Unsupported(format!("subspace oracle got a {}", s.variant_name())));
            }
            normals.push(orthogonal_complement(s.subspace_basis().expect("linear subspace"), n));
        }
        let total: usize = normals.iter().map(|m| m.ncols()).sum();
        let mut stacked = DMatrix::zeros(n, total);
        let mut col = 0;
        for m in &normals {
            stacked.columns_mut(col, m.ncols()).copy_from(m);
            col += m.ncols();
        }
        let normal_span = column_space(&stacked);
        Ok(SubspaceIntersection { basis: orthogonal_complement(&normal_span, n) })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

impl IntersectionOracle for SubspaceIntersection {
    fn project_intersection(&self, x: &Point) -> Result<Point> {
        check_dim(self.basis.nrows(), x.dim())?;
        Point::from_vector(&self.basis * (self.basis.transpose() * x.vector()))
    }
}

/// Exhaustive oracle when at least one set is finite: the intersection is the
/// set of that finite set's points lying in every other set.
#[derive(Debug, Clone)]
pub struct FiniteIntersection {
    common: Vec<Point>,
}

impl FiniteIntersection {
    pub fn new<'a>(sets: impl IntoIterator<Item = &'a SetDescriptor>, tol: f64) -> Result<Self> {
        let sets: Vec<&SetDescriptor> = sets.into_iter().collect();
        let finite = sets
            .iter()
            .find_map(|s| s.points())
            .ok_or_else(|| Error::Unsupported("finite intersection oracle needs a finite set".into()))?;
        let mut common = Vec::new();
        for p in finite {
            let mut inside = true;
            for s in &sets {
                if !s.contains(p, tol)? {
                    inside = false;
                    break;
                }
            }
            if inside {
                common.push(p.clone());
            }
        }
        if common.is_empty() {
            return Err(Error::Oracle("intersection is empty".into()));
        }
        Ok(FiniteIntersection { common })
    }

    pub fn points(&self) -> &[Point] {
        &self.common
    }
}

impl IntersectionOracle for FiniteIntersection {
    fn project_intersection(&self, x: &Point) -> Result<Point> {
        check_dim(self.common[0].dim(), x.dim())?;
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.common.iter().enumerate() {
            let d = p.distance(x);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        Ok(self.common[best].clone())
    }
}

/// Dykstra's cyclic projection algorithm: converges to the projection onto
/// the intersection of closed convex sets with nonempty intersection.
#[derive(Debug, Clone)]
pub struct DykstraIntersection {
    sets: Vec<SetDescriptor>,
    tol: f64,
    max_sweeps: usize,
}

impl DykstraIntersection {
    pub fn new(sets: Vec<SetDescriptor>) -> Result<Self> {
        let first = sets.first().ok_or_else(|| Error::Oracle("no sets given".into()))?;
        let n = first.ambient_dim();
        for s in &sets {
            check_dim(n, s.ambient_dim())?;
            if !s.is_convex() {
                return Err(Error::Unsupported(format!("Dykstra oracle needs convex sets, got {}", s.variant_name())));
            }
        }
        Ok(DykstraIntersection { sets, tol: 1e-15, max_sweeps: 200_000 })
    }

    pub fn with_tolerance(mut self, tol: f64, max_sweeps: usize) -> Self {
        self.tol = tol;
        self.max_sweeps = max_sweeps;
        self
    }
}

impl IntersectionOracle for DykstraIntersection {
    fn project_intersection(&self, x: &Point) -> Result<Point> {
        check_dim(self.sets[0].ambient_dim(), x.dim())?;
        let scale = 1.0 + x.norm();
        let mut y = x.clone();
        let mut increments = vec![Point::zeros(x.dim()); self.sets.len()];
        for _ in 0..self.max_sweeps {
            let start = y.clone();
            let mut max_inc_change = 0.0f64;
            for (set, inc) in self.sets.iter().zip(increments.iter_mut()) {
                let shifted = Point::combine(1.0, &y, 1.0, inc);
                let p = set.project(&shifted)?.point;
                let new_inc = Point::combine(1.0, &shifted, -1.0, &p);
                max_inc_change = max_inc_change.max(new_inc.distance(inc));
                *inc = new_inc;
                y = p;
            }
            if y.distance(&start) <= self.tol * scale && max_inc_change <= self.tol * scale {
                return Ok(y);
            }
        }
        let worst = self.sets.iter().map(|s| s.distance(&y)).collect::<Result<Vec<_>>>()?;
        if worst.iter().all(|&d| d <= 1e-9 * scale) {
            Ok(y)
        } else {
            Err(Error::Oracle("Dykstra iteration did not converge".into()))
        }
    }
}

/// `P_{B∩K}(j(x)) = j(P_{∩C_i}(x))` for diagonal arguments.
pub fn project_intersection_on_diagonal(
    lift: &ReducedLift,
    x: &Point,
    oracle: &dyn IntersectionOracle,
) -> Result<BlockPoint> {
    check_dim(lift.dim(), x.dim())?;
    embed_diagonal(&oracle.project_intersection(x)?, lift.block_count())
}

/// Distance from an arbitrary block point `z` to `B ∩ K = j(∩C_i)`.
///
/// `||z - j(x)||^2 = (r-1) ||mean(z) - x||^2 + ||z - P_D(z)||^2`, so the
/// nearest point is `j(P_∩(mean(z)))`.
pub fn distance_to_lifted_intersection(
    lift: &ReducedLift,
    z: &BlockPoint,
    oracle: &dyn IntersectionOracle,
) -> Result<f64> {
    check_dim(lift.block_count(), z.block_count())?;
    let target = project_intersection_on_diagonal(lift, &z.mean(), oracle)?;
    Ok(z.distance_to(&target))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceIdentityReport {
    /// `| d^2_{B∩K}(j q) - (r-1) d^2_∩(q) |`
    pub intersection: f64,
    /// `| d^2_B(j q) - sum_{i<r} d^2_{C_i}(q) |`
    pub product: f64,
    /// `| d^2_K(j q) - (r-1) d^2_{C_r}(q) |`
    pub diagonal: f64,
}

impl DistanceIdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.intersection.max(self.product).max(self.diagonal)
    }
}

/// Residuals of the three squared-distance identities at `j_{r-1}(q)`.
pub fn distance_identities(
    lift: &ReducedLift,
    q: &Point,
    oracle: &dyn IntersectionOracle,
) -> Result<DistanceIdentityReport> {
    let k = lift.block_count() as f64;
    let jq = embed_diagonal(q, lift.block_count())?;

    let d_bk = jq.distance_to(&project_intersection_on_diagonal(lift, q, oracle)?);
    let d_cap = oracle.distance_to_intersection(q)?;

    let d_b = jq.distance_to(&lift.project_b(&jq)?);
    let sum_components: f64 = lift
        .components()
        .iter()
        .map(|c| c.distance(q).map(|d| d * d))
        .sum::<Result<f64>>()?;

    let d_k = jq.distance_to(&lift.project_k(&jq)?);
    let d_coord = lift.coordinator().distance(q)?;

    Ok(DistanceIdentityReport {
        intersection: (d_bk * d_bk - k * d_cap * d_cap).abs(),
        product: (d_b * d_b - sum_components).abs(),
        diagonal: (d_k * d_k - k * d_coord * d_coord).abs(),
    })
}
