//! Shared dense-linear-algebra helpers on top of faer.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

/// Reduced SVD with singular values below `rel_tol * sigma_max` dropped.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// Left singular vectors, `m x q`.
    pub u: Mat<c64>,
    /// Kept singular values, descending, length `q`.
    pub sigma: Vec<f64>,
    /// Right singular vectors, `n x q`.
    pub v: Mat<c64>,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Applies the pseudoinverse: `V Σ⁻¹ U* b`.
    pub fn pinv_apply(&self, b: MatRef<'_, c64>) -> Mat<c64> {
        let mut tmp = self.u.adjoint() * b;
        for (i, &s) in self.sigma.iter().enumerate() {
            for j in 0..tmp.ncols() {
                tmp[(i, j)] /= s;
            }
        }
        &self.v * &tmp
    }

    /// Applies the pseudoinverse from the right: `b V Σ⁻¹ U*`.
    pub fn pinv_apply_right(&self, b: MatRef<'_, c64>) -> Mat<c64> {
        let mut tmp = b * &self.v;
        for (j, &s) in self.sigma.iter().enumerate() {
            for i in 0..tmp.nrows() {
                tmp[(i, j)] /= s;
            }
        }
        &tmp * self.u.adjoint()
    }
}

/// Thin SVD of `a` truncated at relative tolerance `rel_tol`. A zero matrix
/// yields rank 0.
pub fn thin_svd_trunc(a: MatRef<'_, c64>, rel_tol: f64) -> Result<ThinSvd> {
    let svd = a.thin_svd().map_err(|_| Error::Backend("svd"))?;
    let min_dim = usize::min(a.nrows(), a.ncols());
    let sigma_max = if min_dim > 0 { svd.S()[0].re } else { 0.0 };
    let mut q = 0;
    for i in 0..min_dim {
        if svd.S()[i].re > rel_tol * sigma_max && svd.S()[i].re > 0.0 {
            q += 1;
        } else {
            break;
        }
    }
    Ok(ThinSvd {
        u: svd.U().get(.., 0..q).to_owned(),
        sigma: (0..q).map(|i| svd.S()[i].re).collect(),
        v: svd.V().get(.., 0..q).to_owned(),
    })
}

/// All singular values of `a`, descending.
pub fn singular_values(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let svd = a.thin_svd().map_err(|_| Error::Backend("svd"))?;
    Ok((0..usize::min(a.nrows(), a.ncols()))
        .map(|i| svd.S()[i].re)
        .collect())
}

/// Eigendecomposition of a square complex matrix: `(values, vectors)` with
/// vectors in columns.
pub fn eig(a: MatRef<'_, c64>) -> Result<(Vec<c64>, Mat<c64>)> {
    let e = a.eigen().map_err(|_| Error::Backend("eigendecomposition"))?;
    let n = a.nrows();
    let values = (0..n).map(|i| e.S()[i]).collect();
    Ok((values, e.U().to_owned()))
}

/// Stacks the columns of `a` into a single column (column-major vec).
pub fn stack_columns(a: MatRef<'_, c64>) -> Mat<c64> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut out = Mat::<c64>::zeros(m * n, 1);
    for j in 0..n {
        for i in 0..m {
            out[(j * m + i, 0)] = a[(i, j)];
        }
    }
    out
}

/// 2-condition number estimate from the singular values of `a`.
pub fn condition_number(a: MatRef<'_, c64>) -> Result<f64> {
    let s = singular_values(a)?;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => Ok(hi / lo),
        _ => Ok(f64::INFINITY),
    }
}

/// Inverse of a small square matrix via LU; callers are expected to have
/// checked conditioning beforehand.
pub fn small_inverse(a: MatRef<'_, c64>) -> Result<Mat<c64>> {
    use faer::linalg::solvers::Solve;
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::ShapeMismatch("inverse of a non-square matrix".into()));
    }
    let inv = a.partial_piv_lu().solve(Mat::<c64>::identity(n, n));
    if !all_finite(inv.as_ref()) {
        return Err(Error::SingularSystem);
    }
    Ok(inv)
}

/// Stacks `top` over `bottom`.
pub fn vstack(top: MatRef<'_, c64>, bottom: MatRef<'_, c64>) -> Mat<c64> {
    assert_eq!(top.ncols(), bottom.ncols());
    let mut out = Mat::<c64>::zeros(top.nrows() + bottom.nrows(), top.ncols());
    for j in 0..top.ncols() {
        for i in 0..top.nrows() {
            out[(i, j)] = top[(i, j)];
        }
        for i in 0..bottom.nrows() {
            out[(top.nrows() + i, j)] = bottom[(i, j)];
        }
    }
    out
}

/// True when every entry of `a` is finite.
pub fn all_finite(a: MatRef<'_, c64>) -> bool {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return false;
            }
        }
    }
    true
}
