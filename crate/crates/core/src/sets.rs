//! Projectable sets.
//!
//! Every [`SetDescriptor`] is nonempty and closed and exposes a projector
//! selection, a distance, and a membership test. Convex variants return the
//! unique nearest point; the nonconvex ones (`OrthonormalRows`,
//! `FinitePointSet`) return a deterministic selection and flag ties.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{column_space, orthonormality_defect, ThinSvd, RANK_REL_TOL};
use crate::spaces::{row_major, Point};

/// Default membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Below this ratio `sigma_min / sigma_max` the orthonormal-rows projection is set-valued.
const POLAR_TIE_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Point,
    pub dist: f64,
    /// False when a set-valued projector had to break a tie.
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Variant {
    InfBox { alpha: f64, rows: usize, cols: usize },
    AffineRowSpace { dictionary: DMatrix<f64>, rows: usize, row_basis: DMatrix<f64> },
    OrthonormalRows { rows: usize, cols: usize },
    LinearSubspace { basis: DMatrix<f64> },
    AffineSubspace { basis: DMatrix<f64>, offset: Point },
    HalfSpace { normal: Point, offset: f64 },
    Ball { center: Point, radius: f64 },
    FinitePointSet { points: Vec<Point> },
}

/// A closed, nonempty, projectable subset of `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SetDescriptor {
    variant: Variant,
}

impl SetDescriptor {
    /// `{x in R^n : |x_j| <= alpha}` viewed as a `1 x n` matrix.
    pub fn inf_box(alpha: f64, n: usize) -> Result<Self> {
        Self::inf_box_matrix(alpha, 1, n)
    }

    /// `{U in R^{rows x cols} : ||U||_inf <= alpha}` (entrywise).
    pub fn inf_box_matrix(alpha: f64, rows: usize, cols: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("box half-width must be positive, got {alpha}")));
        }
        positive_shape(rows, cols)?;
        Ok(SetDescriptor { variant: Variant::InfBox { alpha, rows, cols } })
    }

    /// `{U in R^{rows x m} : U = P W for some P in R^{rows x n}}` for a
    /// dictionary `W in R^{n x m}` of full row rank.
    pub fn affine_row_space(dictionary: DMatrix<f64>, rows: usize) -> Result<Self> {
        let (n, m) = dictionary.shape();
        positive_shape(rows, m)?;
        if n == 0 {
            return Err(Error::InvalidParameter("dictionary needs at least one row".into()));
        }
        if !dictionary.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("dictionary"));
        }
        let svd = ThinSvd::new(&dictionary);
        let smax = svd.sigma_max();
        let smin = if n > m { 0.0 } else { svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min) };
        if n > m || smax == 0.0 || smin < RANK_REL_TOL * smax {
            let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
            return Err(Error::RankDeficient { ratio });
        }
        // Rows of V^T span the row space of W.
        let row_basis = svd.v_t.rows(0, n).transpose();
        Ok(SetDescriptor { variant: Variant::AffineRowSpace { dictionary, rows, row_basis } })
    }

    /// `{U in R^{rows x cols} : U U^T = I}` with `rows <= cols`.
    pub fn orthonormal_rows(rows: usize, cols: usize) -> Result<Self> {
        positive_shape(rows, cols)?;
        if rows > cols {
            return Err(Error::InvalidParameter(format!("orthonormal rows need rows <= cols, got {rows} x {cols}")));
        }
        Ok(SetDescriptor { variant: Variant::OrthonormalRows { rows, cols } })
    }

    /// Linear subspace spanned by the orthonormal columns of `basis` (`n x k`, `k` may be 0).
    pub fn linear_subspace(basis: DMatrix<f64>) -> Result<Self> {
        check_basis(&basis)?;
        Ok(SetDescriptor { variant: Variant::LinearSubspace { basis } })
    }

    /// Linear span of arbitrary vectors in `R^n`; orthonormalized internally.
    pub fn span(n: usize, vectors: &[Point]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("ambient dimension must be positive".into()));
        }
        let mut m = DMatrix::zeros(n, vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            check_dim(n, v.dim())?;
            m.set_column(j, v.vector());
        }
        Ok(SetDescriptor { variant: Variant::LinearSubspace { basis: column_space(&m) } })
    }

    pub fn full_space(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("ambient dimension must be positive".into()));
        }
        Ok(SetDescriptor { variant: Variant::LinearSubspace { basis: DMatrix::identity(n, n) } })
    }

    /// The singleton `{0}`.
    pub fn zero_subspace(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("ambient dimension must be positive".into()));
        }
        Ok(SetDescriptor { variant: Variant::LinearSubspace { basis: DMatrix::zeros(n, 0) } })
    }

    /// `offset + span(basis)` with orthonormal basis columns.
    pub fn affine_subspace(basis: DMatrix<f64>, offset: Point) -> Result<Self> {
        check_basis(&basis)?;
        check_dim(basis.nrows(), offset.dim())?;
        Ok(SetDescriptor { variant: Variant::AffineSubspace { basis, offset } })
    }

    /// `{x : <normal, x> <= offset}`.
    pub fn half_space(normal: Point, offset: f64) -> Result<Self> {
        if normal.norm() == 0.0 {
            return Err(Error::InvalidParameter("half-space normal must be nonzero".into()));
        }
        if !offset.is_finite() {
            return Err(Error::NonFinite("half-space offset"));
        }
        Ok(SetDescriptor { variant: Variant::HalfSpace { normal, offset } })
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidParameter(format!("ball radius must be >= 0, got {radius}")));
        }
        Ok(SetDescriptor { variant: Variant::Ball { center, radius } })
    }

    pub fn finite_points(points: Vec<Point>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidParameter("finite point set must be nonempty".into()))?;
        let n = first.dim();
        for p in &points {
            check_dim(n, p.dim())?;
        }
        Ok(SetDescriptor { variant: Variant::FinitePointSet { points } })
    }

    pub fn ambient_dim(&self) -> usize {
        match &self.variant {
            Variant::InfBox { rows, cols, .. } | Variant::OrthonormalRows { rows, cols } => rows * cols,
            Variant::AffineRowSpace { dictionary, rows, .. } => rows * dictionary.ncols(),
            Variant::LinearSubspace { basis } | Variant::AffineSubspace { basis, .. } => basis.nrows(),
            Variant::HalfSpace { normal, .. } => normal.dim(),
            Variant::Ball { center, .. } => center.dim(),
            Variant::FinitePointSet { points } => points[0].dim(),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match &self.variant {
            Variant::InfBox { .. } => "InfBox",
            Variant::AffineRowSpace { .. } => "AffineRowSpace",
            Variant::OrthonormalRows { .. } => "OrthonormalRows",
            Variant::LinearSubspace { .. } => "LinearSubspace",
            Variant::AffineSubspace { .. } => "AffineSubspace",
            Variant::HalfSpace { .. } => "HalfSpace",
            Variant::Ball { .. } => "Ball",
            Variant::FinitePointSet { .. } => "FinitePointSet",
        }
    }

    pub fn is_convex(&self) -> bool {
        match &self.variant {
            Variant::OrthonormalRows { .. } => false,
            Variant::FinitePointSet { points } => points.len() == 1,
            _ => true,
        }
    }

    /// Orthonormal basis of the direction space for linear and affine subspaces.
    pub fn subspace_basis(&self) -> Option<&DMatrix<f64>> {
        match &self.variant {
            Variant::LinearSubspace { basis } | Variant::AffineSubspace { basis, .. } => Some(basis),
            _ => None,
        }
    }

    pub fn is_linear_subspace(&self) -> bool {
        matches!(self.variant, Variant::LinearSubspace { .. })
    }

    pub fn points(&self) -> Option<&[Point]> {
        match &self.variant {
            Variant::FinitePointSet { points } => Some(points),
            _ => None,
        }
    }

    /// Box half-width, for `InfBox` sets.
    pub fn box_alpha(&self) -> Option<f64> {
        match self.variant {
            Variant::InfBox { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    pub fn ball_params(&self) -> Option<(&Point, f64)> {
        match &self.variant {
            Variant::Ball { center, radius } => Some((center, *radius)),
            _ => None,
        }
    }

    pub fn half_space_params(&self) -> Option<(&Point, f64)> {
        match &self.variant {
            Variant::HalfSpace { normal, offset } => Some((normal, *offset)),
            _ => None,
        }
    }

    pub fn project(&self, x: &Point) -> Result<ProjectionResult> {
        check_dim(self.ambient_dim(), x.dim())?;
        let (v, unique) = match &self.variant {
            Variant::InfBox { alpha, .. } => (x.vector().map(|c| c.max(-alpha).min(*alpha)), true),
            Variant::AffineRowSpace { dictionary, rows, row_basis } => {
                let u = DMatrix::from_row_slice(*rows, dictionary.ncols(), x.as_slice());
                let coeffs = &u * row_basis;
                (DVector::from_vec(row_major(&(coeffs * row_basis.transpose()))), true)
            }
            Variant::OrthonormalRows { rows, cols } => {
                let u = DMatrix::from_row_slice(*rows, *cols, x.as_slice());
                let (p, unique) = polar_rows(&u);
                (DVector::from_vec(row_major(&p)), unique)
            }
            Variant::LinearSubspace { basis } => (basis * (basis.transpose() * x.vector()), true),
            Variant::AffineSubspace { basis, offset } => {
                let shifted = x.vector() - offset.vector();
                (offset.vector() + basis * (basis.transpose() * shifted), true)
            }
            Variant::HalfSpace { normal, offset } => {
                let a = normal.vector();
                let excess = a.dot(x.vector()) - offset;
                if excess <= 0.0 {
                    (x.vector().clone(), true)
                } else {
                    (x.vector() - a * (excess / a.norm_squared()), true)
                }
            }
            Variant::Ball { center, radius } => {
                let diff = x.vector() - center.vector();
                let r = diff.norm();
                if r <= *radius {
                    (x.vector().clone(), true)
                } else {
                    (center.vector() + diff * (radius / r), true)
                }
            }
            Variant::FinitePointSet { points } => {
                let d2: Vec<f64> = points.iter().map(|p| (p.vector() - x.vector()).norm_squared()).collect();
                let mut best = 0;
                for (i, &d) in d2.iter().enumerate() {
                    if d < d2[best] {
                        best = i;
                    }
                }
                let tie_tol = 1e-12 * (1.0 + d2[best]);
                let ties = d2.iter().filter(|&&d| d - d2[best] <= tie_tol).count();
                (points[best].vector().clone(), ties == 1)
            }
        };
        let point = Point::from_raw(v);
        let dist = point.distance(x);
        Ok(ProjectionResult { point, dist, unique })
    }

    pub fn distance(&self, x: &Point) -> Result<f64> {
        Ok(self.project(x)?.dist)
    }

    pub fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        if !(tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("membership tolerance must be >= 0, got {tol}")));
        }
        Ok(self.distance(x)? <= tol)
    }
}

/// Nearest matrix with orthonormal rows: `P Q^T` from a thin SVD `P S Q^T`.
/// Returns `false` in the second slot when the projection is set-valued.
fn polar_rows(u: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let svd = ThinSvd::new(u);
    let smax = svd.sigma_max();
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let unique = smax > 0.0 && smin >= POLAR_TIE_REL * smax;
    let mut p = &svd.u * &svd.v_t;
    if !unique && orthonormality_defect(&p.transpose()) > 1e-12 {
        complete_rows(&mut p);
    }
    (p, unique)
}

/// Modified Gram-Schmidt over the rows; degenerate rows are replaced by the
/// first standard basis vector that is independent of the rows kept so far.
fn complete_rows(p: &mut DMatrix<f64>) {
    let (rows, cols) = p.shape();
    let mut next_unit = 0;
    for i in 0..rows {
        let mut row = p.row(i).transpose();
        for _ in 0..2 {
            for k in 0..i {
                let q = p.row(k).transpose();
                row -= &q * q.dot(&row);
            }
        }
        let mut nrm = row.norm();
        while nrm < 1e-8 && next_unit < cols {
            row = DVector::zeros(cols);
            row[next_unit] = 1.0;
            next_unit += 1;
            for _ in 0..2 {
                for k in 0..i {
                    let q = p.row(k).transpose();
                    row -= &q * q.dot(&row);
                }
            }
            nrm = row.norm();
        }
        p.set_row(i, &(row / nrm).transpose());
    }
}

fn positive_shape(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(format!("shape must be positive, got {rows} x {cols}")));
    }
    Ok(())
}

fn check_basis(basis: &DMatrix<f64>) -> Result<()> {
    if basis.nrows() == 0 {
        return Err(Error::InvalidParameter("ambient dimension must be positive".into()));
    }
    if !basis.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("subspace basis"));
    }
    let defect = orthonormality_defect(basis);
    if defect > 1e-10 {
        return Err(Error::InvalidParameter(format!("basis columns not orthonormal (defect {defect:e})")));
    }
    Ok(())
}

pub fn project(set: &SetDescriptor, x: &Point) -> Result<ProjectionResult> {
    set.project(x)
}

pub fn distance(set: &SetDescriptor, x: &Point) -> Result<f64> {
    set.distance(x)
}

pub fn contains(set: &SetDescriptor, x: &Point, tol: f64) -> Result<bool> {
    set.contains(x, tol)
}

/// A (selection of a) projector on an iteration state space.
pub trait Projector<S>: Sync {
    fn project_onto(&self, x: &S) -> Result<S>;
}

impl Projector<Point> for SetDescriptor {
    fn project_onto(&self, x: &Point) -> Result<Point> {
        Ok(self.project(x)?.point)
    }
}

impl<S, F> Projector<S> for F
where
    F: Fn(&S) -> Result<S> + Sync,
{
    fn project_onto(&self, x: &S) -> Result<S> {
        self(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> Point {
        Point::from_slice(c).unwrap()
    }

    #[test]
    fn inf_box_clips_entrywise() {
        let set = SetDescriptor::inf_box_matrix(0.1, 1, 2).unwrap();
        let r = set.project(&p(&[0.25, -0.03])).unwrap();
        assert_eq!(r.point.as_slice(), &[0.1, -0.03]);
        assert!(r.unique);
        assert!(set.contains(&Point::zeros(2), MEMBERSHIP_TOL).unwrap());
        assert!(SetDescriptor::inf_box(0.0, 2).is_err());
    }

    #[test]
    fn orthonormal_rows_unit_sphere_case() {
        // 1x2 matrix: U = sigma * p * q^T with sigma = 5, q = (0.6, 0.8).
        let set = SetDescriptor::orthonormal_rows(1, 2).unwrap();
        let r = set.project(&p(&[3.0, 4.0])).unwrap();
        assert_abs_diff_eq!(r.point.as_slice()[0], 0.6, epsilon = 1e-14);
        assert_abs_diff_eq!(r.point.as_slice()[1], 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(r.dist, 4.0, epsilon = 1e-12);
        assert!(r.unique);
    }

    #[test]
    fn orthonormal_rows_membership_of_identity() {
        let set = SetDescriptor::orthonormal_rows(2, 3).unwrap();
        assert!(set.contains(&p(&[1., 0., 0., 0., 1., 0.]), 1e-10).unwrap());
        assert!(!set.contains(&p(&[1., 0., 0., 0., 2., 0.]), 1e-10).unwrap());
        assert!(SetDescriptor::orthonormal_rows(3, 2).is_err());
    }

    #[test]
    fn orthonormal_rows_rank_deficient_tie_break() {
        let set = SetDescriptor::orthonormal_rows(2, 3).unwrap();
        for x in [p(&[1., 0., 0., 0., 0., 0.]), p(&[1., 2., 0., 2., 4., 0.]), Point::zeros(6)] {
            let r = set.project(&x).unwrap();
            assert!(!r.unique);
            let m = DMatrix::from_row_slice(2, 3, r.point.as_slice());
            let g = &m * m.transpose() - DMatrix::<f64>::identity(2, 2);
            assert!(g.norm() <= 1e-9, "defect {}", g.norm());
            // deterministic
            assert_eq!(set.project(&x).unwrap(), r);
        }
    }

    #[test]
    fn subspace_examples() {
        let line = SetDescriptor::span(2, &[p(&[1., 0.])]).unwrap();
        let r = line.project(&p(&[3., 4.])).unwrap();
        assert_abs_diff_eq!(r.point.as_slice()[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.point.as_slice()[1], 0.0, epsilon = 1e-14);
        assert!(SetDescriptor::linear_subspace(DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).is_err());
    }

    #[test]
    fn finite_set_examples() {
        let set = SetDescriptor::finite_points(vec![p(&[0.]), p(&[10.])]).unwrap();
        // Exhaustive: |4-0| = 4 < |4-10| = 6.
        let r = set.project(&p(&[4.])).unwrap();
        assert_eq!(r.point, p(&[0.]));
        assert_eq!(set.distance(&p(&[4.])).unwrap(), 4.0);
        // Tie: lowest index wins, flagged.
        let r = set.project(&p(&[5.])).unwrap();
        assert_eq!(r.point, p(&[0.]));
        assert!(!r.unique);
        assert!(SetDescriptor::finite_points(vec![]).is_err());
    }

    #[test]
    fn ball_and_halfspace_examples() {
        let ball = SetDescriptor::ball(Point::zeros(2), 1.0).unwrap();
        assert_eq!(ball.distance(&p(&[2., 0.])).unwrap(), 1.0);
        let hs = SetDescriptor::half_space(p(&[1., 0.]), 0.0).unwrap();
        assert!(hs.contains(&p(&[-1., 0.]), 1e-9).unwrap());
        assert!(!hs.contains(&p(&[1., 0.]), 1e-9).unwrap());
        assert!(SetDescriptor::half_space(p(&[0., 0.]), 1.0).is_err());
        assert!(SetDescriptor::ball(Point::zeros(1), -1.0).is_err());
    }

    #[test]
    fn affine_row_space_rank_and_projection() {
        let w = DMatrix::from_row_slice(2, 3, &[1., 0., 0., 0., 1., 0.]);
        let set = SetDescriptor::affine_row_space(w, 1).unwrap();
        let r = set.project(&p(&[1., 2., 3.])).unwrap();
        assert_abs_diff_eq!(r.point.vector(), &DVector::from_vec(vec![1., 2., 0.]), epsilon = 1e-14);
        let deficient = DMatrix::from_row_slice(2, 3, &[1., 2., 3., 2., 4., 6.]);
        assert!(matches!(SetDescriptor::affine_row_space(deficient, 1), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn dimension_mismatch_and_tolerance_errors() {
        let set = SetDescriptor::inf_box(1.0, 3).unwrap();
        assert!(matches!(set.project(&p(&[1.])), Err(Error::DimensionMismatch { .. })));
        assert!(set.contains(&p(&[0., 0., 0.]), -1.0).is_err());
    }

    #[test]
    fn affine_row_space_matches_normal_equation_formula() {
        // U W^T (W W^T)^{-1} W, formed explicitly.
        let w = DMatrix::from_row_slice(2, 4, &[1., 2., 0., -1., 0.5, -1., 3., 2.]);
        let u = DMatrix::from_row_slice(2, 4, &[0.3, -1., 2., 0.7, 1., 1., -0.5, 0.]);
        let explicit = &u * w.transpose() * (&w * w.transpose()).try_inverse().unwrap() * &w;
        let set = SetDescriptor::affine_row_space(w, 2).unwrap();
        let r = set.project(&Point::new(row_major(&u)).unwrap()).unwrap();
        let got = DMatrix::from_row_slice(2, 4, r.point.as_slice());
        assert!((got - explicit).amax() < 1e-12);
    }

    fn random_sets(n: usize, seed: &[f64]) -> Vec<SetDescriptor> {
        let v = |k: usize| Point::new((0..n).map(|j| seed[(k * n + j) % seed.len()]).collect()).unwrap();
        let a = v(0);
        let normal = if a.norm() > 1e-3 { a.clone() } else { Point::new(vec![1.0; n]).unwrap() };
        vec![
            SetDescriptor::inf_box(0.7, n).unwrap(),
            SetDescriptor::ball(v(1), 1.3).unwrap(),
            SetDescriptor::half_space(normal, 0.4).unwrap(),
            SetDescriptor::span(n, &[v(2), v(3)]).unwrap(),
            SetDescriptor::affine_subspace(
                crate::linalg::column_space(&DMatrix::from_column_slice(n, 1, v(4).as_slice())),
                v(5),
            )
            .unwrap(),
            SetDescriptor::finite_points(vec![v(6), v(7), v(8)]).unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn projectors_are_idempotent(seed in proptest::collection::vec(-5.0f64..5.0, 40), x in proptest::collection::vec(-20.0f64..20.0, 4)) {
            let x = Point::new(x).unwrap();
            for set in random_sets(4, &seed) {
                let r = set.project(&x).unwrap();
                prop_assert!((r.dist - r.point.distance(&x)).abs() <= 1e-12 * (1.0 + r.dist));
                prop_assert!(set.contains(&r.point, 1e-9).unwrap());
                let rr = set.project(&r.point).unwrap();
                prop_assert!(rr.point.distance(&r.point) <= 1e-10, "{}", set.variant_name());
            }
        }

        #[test]
        fn convex_projectors_are_firmly_nonexpansive(seed in proptest::collection::vec(-5.0f64..5.0, 40), x in proptest::collection::vec(-20.0f64..20.0, 4), y in proptest::collection::vec(-20.0f64..20.0, 4)) {
            let (x, y) = (Point::new(x).unwrap(), Point::new(y).unwrap());
            for set in random_sets(4, &seed).into_iter().filter(|s| s.is_convex()) {
                let px = set.project(&x).unwrap().point;
                let py = set.project(&y).unwrap().point;
                let dp = px.vector() - py.vector();
                let dx = x.vector() - y.vector();
                prop_assert!(dp.norm_squared() <= dp.dot(&dx) + 1e-10, "{}", set.variant_name());
            }
        }

        #[test]
        fn orthonormal_rows_output_is_orthonormal(v in proptest::collection::vec(-3.0f64..3.0, 15)) {
            let set = SetDescriptor::orthonormal_rows(3, 5).unwrap();
            let r = set.project(&Point::new(v).unwrap()).unwrap();
            let m = DMatrix::from_row_slice(3, 5, r.point.as_slice());
            prop_assert!((&m * m.transpose() - DMatrix::<f64>::identity(3, 3)).norm() <= 1e-9);
            let rr = set.project(&r.point).unwrap();
            prop_assert!(rr.point.distance(&r.point) <= 1e-10);
        }

        #[test]
        fn row_space_output_refits_exactly(w in proptest::collection::vec(-3.0f64..3.0, 12), u in proptest::collection::vec(-3.0f64..3.0, 12)) {
            let w = DMatrix::from_row_slice(2, 6, &w);
            if let Ok(set) = SetDescriptor::affine_row_space(w.clone(), 2) {
                let r = set.project(&Point::new(u).unwrap()).unwrap();
                let got = DMatrix::from_row_slice(2, 6, r.point.as_slice());
                // Least-squares refit of got = P W.
                let coeffs = (&w * w.transpose()).try_inverse().map(|g| &got * w.transpose() * g);
                if let Some(c) = coeffs {
                    prop_assert!((c * &w - &got).amax() <= 1e-9);
                }
            }
        }
    }
}
