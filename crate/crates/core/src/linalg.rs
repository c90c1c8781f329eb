//! Dense linear-algebra helpers.
//!
//! Matrices are nalgebra types throughout; the SVD itself is computed by
//! faer, single-threaded so results do not depend on scheduling.

use nalgebra::{DMatrix, DVector};

/// Relative threshold below which a singular value counts as zero.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Thin SVD `m = U diag(s) V^T`, singular values sorted descending, with each
/// left singular vector sign-normalized so its largest-magnitude entry is
/// positive (the matching row of `V^T` is flipped with it).
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl ThinSvd {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let k = rows.min(cols);
        if k == 0 {
            return ThinSvd { u: DMatrix::zeros(rows, 0), singular_values: DVector::zeros(0), v_t: DMatrix::zeros(0, cols) };
        }
        let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
        let svd = fm.thin_svd().expect("SVD iteration converges for finite input");
        let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
        let mut u = DMatrix::from_fn(rows, k, |i, j| fu[(i, j)]);
        let mut v_t = DMatrix::from_fn(k, cols, |i, j| fv[(j, i)]);
        let singular_values = DVector::from_fn(k, |i, _| fs[i]);
        for j in 0..u.ncols() {
            let col = u.column(j);
            let lead = col.iter().fold(0.0f64, |best, &x| if x.abs() > best.abs() { x } else { best });
            if lead < 0.0 {
                u.column_mut(j).neg_mut();
                v_t.row_mut(j).neg_mut();
            }
        }
        ThinSvd { u, singular_values, v_t }
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.iter().copied().fold(0.0, f64::max)
    }

    /// Number of singular values above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let cutoff = rel_tol * self.sigma_max();
        self.singular_values.iter().filter(|&&s| s > cutoff && s > 0.0).count()
    }
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn column_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if m.ncols() == 0 || m.iter().all(|&x| x == 0.0) {
        return DMatrix::zeros(n, 0);
    }
    let svd = ThinSvd::new(m);
    let k = svd.rank(RANK_REL_TOL);
    svd.u.columns(0, k).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns of `basis` in `R^n`.
pub fn orthogonal_complement(basis: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let k = basis.ncols();
    if k == 0 {
        return DMatrix::identity(n, n);
    }
    if k >= n {
        return DMatrix::zeros(n, 0);
    }
    let proj = DMatrix::identity(n, n) - basis * basis.transpose();
    // The singular values of an orthogonal projector are exactly 0 or 1.
    let svd = ThinSvd::new(&proj);
    let r = svd.singular_values.iter().filter(|&&s| s > 0.5).count();
    svd.u.columns(0, r).into_owned()
}

/// `max |B^T B - I|` entrywise.
pub fn orthonormality_defect(basis: &DMatrix<f64>) -> f64 {
    let k = basis.ncols();
    if k == 0 {
        return 0.0;
    }
    let g = basis.transpose() * basis - DMatrix::<f64>::identity(k, k);
    g.amax()
}
