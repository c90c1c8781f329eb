//! Euclidean and block-Euclidean arithmetic.
//!
//! A [`Point`] lives in `X = R^n`; a [`BlockPoint`] is an element of the
//! product space `X^{r-1}` with the inner product `<x, y> = sum_i <x_i, y_i>`.
//! The diagonal `D_{r-1}` collects the block points whose blocks coincide.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// A finite vector of `f64` coordinates with positive dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(DVector<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(coords))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidParameter("point dimension must be positive".into()));
        }
        if !v.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Point(v))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    /// Wraps an internally computed vector without the finiteness scan.
    /// Iteration loops check finiteness themselves and report divergence.
    pub(crate) fn from_raw(v: DVector<f64>) -> Self {
        Point(v)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(DVector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn dot(&self, other: &Point) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.dot(&other.0))
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

/// A `rows x cols` matrix stored as a row-major flattened [`Point`].
///
/// The Frobenius inner product of two matrices equals the [`Point`] inner
/// product of their flattenings.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPoint {
    rows: usize,
    cols: usize,
    point: Point,
}

impl MatrixPoint {
    pub fn new(rows: usize, cols: usize, row_major: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("matrix shape must be positive".into()));
        }
        check_dim(rows * cols, row_major.len())?;
        Ok(MatrixPoint { rows, cols, point: Point::new(row_major)? })
    }

    pub fn from_point(rows: usize, cols: usize, point: Point) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("matrix shape must be positive".into()));
        }
        check_dim(rows * cols, point.dim())?;
        Ok(MatrixPoint { rows, cols, point })
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        Self::new(rows, cols, row_major(m))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn point(&self) -> &Point {
        &self.point
    }

    pub fn into_point(self) -> Point {
        self.point
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, self.point.as_slice())
    }
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// An element `(x_1, ..., x_{r-1})` of the product space `X^{r-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPoint {
    blocks: Vec<Point>,
}

impl BlockPoint {
    pub fn new(blocks: Vec<Point>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidParameter("block point needs at least one block".into()))?;
        let dim = first.dim();
        for b in &blocks {
            check_dim(dim, b.dim())?;
        }
        Ok(BlockPoint { blocks })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(rows.iter().map(|r| Point::from_slice(r)).collect::<Result<_>>()?)
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<Point>) -> Self {
        debug_assert!(!blocks.is_empty());
        BlockPoint { blocks }
    }

    pub fn zeros(block_count: usize, dim: usize) -> Self {
        BlockPoint { blocks: vec![Point::zeros(dim); block_count.max(1)] }
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn total_dim(&self) -> usize {
        self.block_count() * self.block_dim()
    }

    pub fn blocks(&self) -> &[Point] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &Point {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<Point> {
        self.blocks
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.vector().norm_squared()).sum::<f64>().sqrt()
    }

    /// Arithmetic mean of the blocks, summed in index order.
    pub fn mean(&self) -> Point {
        let mut acc = self.blocks[0].vector().clone();
        for b in &self.blocks[1..] {
            acc += b.vector();
        }
        acc /= self.block_count() as f64;
        Point::from_raw(acc)
    }

    /// Concatenation of the blocks; its Euclidean norm is the product-space norm.
    pub fn flatten(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.total_dim());
        let n = self.block_dim();
        for (i, b) in self.blocks.iter().enumerate() {
            out.rows_mut(i * n, n).copy_from(b.vector());
        }
        out
    }

    pub fn from_flat(flat: &DVector<f64>, block_count: usize) -> Result<Self> {
        if block_count == 0 || flat.len() % block_count != 0 || flat.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "cannot split length {} into {block_count} blocks",
                flat.len()
            )));
        }
        let n = flat.len() / block_count;
        Self::new(
            (0..block_count)
                .map(|i| Point::from_vector(flat.rows(i * n, n).into_owned()))
                .collect::<Result<_>>()?,
        )
    }

    fn check_shape(&self, other: &BlockPoint) -> Result<()> {
        check_dim(self.block_count(), other.block_count())?;
        check_dim(self.block_dim(), other.block_dim())
    }
}

/// Product-space inner product `sum_i <x_i, y_i>`.
pub fn inner(x: &BlockPoint, y: &BlockPoint) -> Result<f64> {
    x.check_shape(y)?;
    Ok(x.blocks.iter().zip(&y.blocks).map(|(a, b)| a.vector().dot(b.vector())).sum())
}

/// The canonical embedding `x -> (x, ..., x)` into `X^{r-1}`.
pub fn embed_diagonal(x: &Point, r_minus_1: usize) -> Result<BlockPoint> {
    if r_minus_1 == 0 {
        return Err(Error::InvalidParameter("diagonal needs at least one block".into()));
    }
    Ok(BlockPoint { blocks: vec![x.clone(); r_minus_1] })
}

/// Orthogonal projection onto the diagonal: embed the block mean.
pub fn project_diagonal(x: &BlockPoint) -> BlockPoint {
    BlockPoint { blocks: vec![x.mean(); x.block_count()] }
}

/// The diagonal subspace `D_{r-1}` of `X^{r-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagonalSubspace {
    pub block_count: usize,
    pub dim: usize,
}

impl DiagonalSubspace {
    pub fn new(block_count: usize, dim: usize) -> Result<Self> {
        if block_count == 0 || dim == 0 {
            return Err(Error::InvalidParameter("diagonal needs positive block count and dim".into()));
        }
        Ok(DiagonalSubspace { block_count, dim })
    }

    /// All blocks pairwise equal within `tol` (Euclidean distance).
    pub fn contains(&self, x: &BlockPoint, tol: f64) -> bool {
        x.block_count() == self.block_count
            && x.block_dim() == self.dim
            && x.blocks.iter().all(|b| b.distance(&x.blocks[0]) <= tol)
    }

    pub fn project(&self, x: &BlockPoint) -> Result<BlockPoint> {
        check_dim(self.block_count, x.block_count())?;
        check_dim(self.dim, x.block_dim())?;
        Ok(project_diagonal(x))
    }
}

/// Vector-space operations required of an iteration state.
pub trait Vector: Clone + Send + Sync {
    /// `a * x + b * y`; both operands share one shape.
    fn combine(a: f64, x: &Self, b: f64, y: &Self) -> Self;
    fn distance_to(&self, other: &Self) -> f64;
    fn all_finite(&self) -> bool;
    fn flat(&self) -> DVector<f64>;
}

impl Vector for Point {
    fn combine(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        Point(x.vector() * a + y.vector() * b)
    }

    fn distance_to(&self, other: &Self) -> f64 {
        self.distance(other)
    }

    fn all_finite(&self) -> bool {
        self.is_finite()
    }

    fn flat(&self) -> DVector<f64> {
        self.0.clone()
    }
}

impl Vector for BlockPoint {
    fn combine(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        BlockPoint {
            blocks: x.blocks.iter().zip(&y.blocks).map(|(p, q)| Point::combine(a, p, b, q)).collect(),
        }
    }

    fn distance_to(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(p, q)| (p.vector() - q.vector()).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    fn all_finite(&self) -> bool {
        self.blocks.iter().all(Point::is_finite)
    }

    fn flat(&self) -> DVector<f64> {
        self.flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bp(rows: &[&[f64]]) -> BlockPoint {
        BlockPoint::from_rows(rows).unwrap()
    }

    #[test]
    fn inner_examples() {
        assert_eq!(inner(&bp(&[&[1., 0.], &[0., 1.]]), &bp(&[&[0., 1.], &[1., 0.]])).unwrap(), 0.0);
        let ones = bp(&[&[1., 1.], &[1., 1.]]);
        assert_eq!(inner(&ones, &ones).unwrap(), 4.0);
        // 2*5 + 3*7
        assert_eq!(inner(&bp(&[&[2.], &[3.]]), &bp(&[&[5.], &[7.]])).unwrap(), 31.0);
    }

    #[test]
    fn inner_rejects_mismatch() {
        let a = bp(&[&[1.], &[2.]]);
        let b = bp(&[&[1.], &[2.], &[3.]]);
        assert!(matches!(inner(&a, &b), Err(Error::DimensionMismatch { .. })));
        let c = bp(&[&[1., 0.], &[2., 0.]]);
        assert!(matches!(inner(&a, &c), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn embed_examples() {
        let x = Point::from_slice(&[1., 2.]).unwrap();
        let e = embed_diagonal(&x, 3).unwrap();
        assert_eq!(e, bp(&[&[1., 2.], &[1., 2.], &[1., 2.]]));
        let z = embed_diagonal(&Point::zeros(2), 4).unwrap();
        assert_eq!(z.norm(), 0.0);
        let e = embed_diagonal(&Point::from_slice(&[3., 4.]).unwrap(), 2).unwrap();
        assert_abs_diff_eq!(e.norm(), 2f64.sqrt() * 5.0, epsilon = 1e-14);
        assert!(embed_diagonal(&x, 0).is_err());
    }

    #[test]
    fn project_diagonal_examples() {
        // Brute-force oracle: nearest (t, t) to (3, 5) over a fine grid.
        let (mut best_t, mut best) = (0.0, f64::INFINITY);
        for k in 0..=80_000 {
            let t = k as f64 * 1e-4;
            let d = (3.0 - t) * (3.0 - t) + (5.0 - t) * (5.0 - t);
            if d < best {
                best = d;
                best_t = t;
            }
        }
        let p = project_diagonal(&bp(&[&[3.], &[5.]]));
        assert_abs_diff_eq!(p.block(0).as_slice()[0], best_t, epsilon = 1e-4);
        assert_eq!(p, bp(&[&[4.], &[4.]]));

        let d = bp(&[&[1.5, -2.], &[1.5, -2.]]);
        assert_eq!(project_diagonal(&d), d);
        assert_eq!(project_diagonal(&bp(&[&[1., 0.], &[0., 1.]])), bp(&[&[0.5, 0.5], &[0.5, 0.5]]));
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert_eq!(Point::new(vec![1.0, f64::NAN]), Err(Error::NonFinite("point coordinates")));
        assert!(Point::new(vec![f64::INFINITY]).is_err());
        assert!(Point::new(vec![]).is_err());
        assert!(BlockPoint::new(vec![]).is_err());
        assert!(MatrixPoint::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn matrix_point_is_row_major() {
        let m = MatrixPoint::new(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let dm = m.to_matrix();
        assert_eq!(dm[(0, 2)], 3.0);
        assert_eq!(dm[(1, 0)], 4.0);
        assert_eq!(MatrixPoint::from_matrix(&dm).unwrap(), m);
        // Frobenius inner product equals the flattened dot product.
        let n = MatrixPoint::new(2, 3, vec![0.5, -1., 2., 0., 1., -3.]).unwrap();
        let frob = dm.component_mul(&n.to_matrix()).sum();
        assert_abs_diff_eq!(frob, m.point().dot(n.point()).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn diagonal_membership() {
        let d = DiagonalSubspace::new(2, 1).unwrap();
        assert!(d.contains(&bp(&[&[1.], &[1. + 1e-13]]), 1e-12));
        assert!(!d.contains(&bp(&[&[1.], &[2.]]), 1e-12));
    }

    fn block_point_strategy() -> impl Strategy<Value = BlockPoint> {
        (1usize..6, 1usize..6).prop_flat_map(|(k, n)| {
            proptest::collection::vec(proptest::collection::vec(-100.0f64..100.0, n), k)
                .prop_map(|rows| BlockPoint::new(rows.into_iter().map(|r| Point::new(r).unwrap()).collect()).unwrap())
        })
    }

    proptest! {
        #[test]
        fn inner_is_positive_definite(x in block_point_strategy()) {
            let q = inner(&x, &x).unwrap();
            prop_assert!(q >= 0.0);
            prop_assert_eq!(q == 0.0, x.blocks().iter().all(|b| b.norm() == 0.0));
            let zero = BlockPoint::zeros(x.block_count(), x.block_dim());
            prop_assert_eq!(inner(&zero, &zero).unwrap(), 0.0);
        }

        #[test]
        fn project_diagonal_is_idempotent_and_orthogonal(x in block_point_strategy(), c in proptest::collection::vec(-10.0f64..10.0, 6)) {
            let p = project_diagonal(&x);
            let pp = project_diagonal(&p);
            prop_assert!(p.distance_to(&pp) <= 1e-14 * (1.0 + p.norm()));
            let base = Point::new(c[..x.block_dim()].to_vec()).unwrap();
            let d = embed_diagonal(&base, x.block_count()).unwrap();
            let resid = BlockPoint::combine(1.0, &x, -1.0, &p);
            prop_assert!(inner(&resid, &d).unwrap().abs() <= 1e-10 * (1.0 + x.norm() * d.norm()));
        }

        #[test]
        fn embed_norm_identity(v in proptest::collection::vec(-1e3f64..1e3, 1..8), k in 1usize..7) {
            let x = Point::new(v).unwrap();
            let e = embed_diagonal(&x, k).unwrap();
            let lhs = e.norm().powi(2);
            let rhs = k as f64 * x.norm().powi(2);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }

        #[test]
        fn flatten_roundtrip(x in block_point_strategy()) {
            let back = BlockPoint::from_flat(&x.flatten(), x.block_count()).unwrap();
            prop_assert_eq!(back, x.clone());
            prop_assert!((x.flatten().norm() - x.norm()).abs() <= 1e-12 * (1.0 + x.norm()));
        }
    }
}
