//! Dense real matrix kernels.
//!
//! [`Matrix`] is a column-major `f64` matrix. Column access is a contiguous
//! slice, which is what the coordinate-descent solver iterates over. The heavy
//! factorizations (SVD, QR, Cholesky, symmetric eigenvalues) and products are
//! delegated to `faer` through zero-copy views.

use std::ops::{Index, IndexMut};

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Projectors with more rows than this are never materialized.
pub const DEFAULT_PROJECTOR_CAP: usize = 5000;

/// Relative residual below which a column is treated as linearly dependent
/// during orthonormalization.
pub const ORTHO_DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from a slice of rows, all of the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().position(|r| r.as_ref().len() != p) {
            return Err(Error::dim(format!(
                "row {bad} has {} entries, expected {p}",
                rows[bad].as_ref().len()
            )));
        }
        Ok(Matrix::from_fn(n, p, |i, j| rows[i].as_ref()[j]))
    }

    pub fn from_columns<C: AsRef<[f64]>>(rows: usize, columns: &[C]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::dim(format!("column {j} has {} entries, expected {rows}", c.len())));
            }
            data.extend_from_slice(c);
        }
        Ok(Matrix {
            rows,
            cols: columns.len(),
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn as_col_major(&self) -> &[f64] {
        &self.data
    }

    pub fn view(&self) -> MatRef<'_, f64> {
        MatRef::from_column_major_slice(&self.data, self.rows, self.cols)
    }

    pub(crate) fn from_faer(m: MatRef<'_, f64>) -> Self {
        Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        if self.rows == 0 || rhs.cols == 0 || self.cols == 0 {
            return Matrix::zeros(self.rows, rhs.cols);
        }
        let prod: Mat<f64> = self.view() * rhs.view();
        Matrix::from_faer(prod.as_ref())
    }

    /// `selfᵀ · rhs` without forming the transpose.
    pub fn tr_matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows, rhs.rows, "tr_matmul shape mismatch");
        if self.cols == 0 || rhs.cols == 0 || self.rows == 0 {
            return Matrix::zeros(self.cols, rhs.cols);
        }
        let prod: Mat<f64> = self.view().transpose() * rhs.view();
        Matrix::from_faer(prod.as_ref())
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        let mut out = vec![0.0; self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                axpy(vj, self.col(j), &mut out);
            }
        }
        out
    }

    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tr_mul_vec shape mismatch");
        (0..self.cols).map(|j| dot(self.col(j), v)).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)])
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "sub shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix { data, ..*self }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "add shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { data, ..*self }
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix {
            data: self.data.iter().map(|a| a * c).collect(),
            ..*self
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn mean(a: &[f64]) -> f64 {
    a.iter().sum::<f64>() / a.len() as f64
}

/// Thin singular value decomposition truncated at the numerical rank.
#[derive(Clone, Debug)]
pub struct ThinSvd {
    pub u: Matrix,
    pub d: Vec<f64>,
    pub v: Matrix,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.d.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut ud = self.u.clone();
        for (k, &dk) in self.d.iter().enumerate() {
            ud.col_mut(k).iter_mut().for_each(|x| *x *= dk);
        }
        if self.d.is_empty() {
            return Matrix::zeros(self.u.nrows(), self.v.nrows());
        }
        let vt = self.v.transpose();
        ud.matmul(&vt)
    }

    /// The first `q` left singular vectors.
    pub fn leading_u(&self, q: usize) -> Matrix {
        let cols: Vec<&[f64]> = (0..q).map(|k| self.u.col(k)).collect();
        Matrix::from_columns(self.u.nrows(), &cols).expect("consistent shapes")
    }
}

/// Default rank tolerance `max(rows, cols) · ε · d₁`.
pub fn rank_tolerance(rows: usize, cols: usize, d1: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * d1
}

pub fn thin_svd(a: &Matrix) -> Result<ThinSvd> {
    thin_svd_with_tol(a, 0.0)
}

/// Thin SVD keeping singular values above `rel_tol · d₁` (or the default rank
/// tolerance when `rel_tol` is 0).
pub fn thin_svd_with_tol(a: &Matrix, rel_tol: f64) -> Result<ThinSvd> {
    let (n, p) = a.shape();
    if !a.is_finite() {
        return Err(Error::arg("matrix has non-finite entries"));
    }
    if n == 0 || p == 0 {
        return Ok(ThinSvd {
            u: Matrix::zeros(n, 0),
            d: Vec::new(),
            v: Matrix::zeros(p, 0),
        });
    }
    let svd = a.view().thin_svd().map_err(|_| Error::Factorization {
        what: "svd",
        residual: f64::NAN,
    })?;
    let s = svd.S().column_vector();
    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let d1 = order.first().map_or(0.0, |&i| s[i]);
    let cutoff = if rel_tol > 0.0 {
        rel_tol * d1
    } else {
        rank_tolerance(n, p, d1)
    };
    let keep: Vec<usize> = order.into_iter().filter(|&i| s[i] > cutoff && s[i] > 0.0).collect();
    let u_full = svd.U();
    let v_full = svd.V();
    let u = Matrix::from_fn(n, keep.len(), |i, k| u_full[(i, keep[k])]);
    let v = Matrix::from_fn(p, keep.len(), |i, k| v_full[(i, keep[k])]);
    let d = keep.iter().map(|&i| s[i]).collect();
    let out = ThinSvd { u, d, v };

    let scale = a.frobenius_norm();
    if scale > 0.0 {
        let residual = a.sub(&out.reconstruct()).frobenius_norm() / scale;
        if !(residual <= 1e-8) {
            return Err(Error::Factorization { what: "svd", residual });
        }
    }
    Ok(out)
}

/// Orthogonal projector onto the column space of `z`, materialized as an
/// `n×n` matrix. `rel_tol` follows [`thin_svd_with_tol`].
pub fn projector(z: &Matrix, rel_tol: f64) -> Result<Matrix> {
    projector_with_cap(z, rel_tol, DEFAULT_PROJECTOR_CAP)
}

pub fn projector_with_cap(z: &Matrix, rel_tol: f64, cap: usize) -> Result<Matrix> {
    let n = z.nrows();
    if n > cap {
        return Err(Error::arg(format!(
            "refusing to materialize a {n}x{n} projector (cap {cap}); use the factored form"
        )));
    }
    if rel_tol < 0.0 {
        return Err(Error::arg("projector tolerance must be non-negative"));
    }
    if z.ncols() == 0 || z.max_abs() == 0.0 {
        return Ok(Matrix::zeros(n, n));
    }
    let svd = thin_svd_with_tol(z, rel_tol)?;
    let u = &svd.u;
    Ok(u.matmul(&u.transpose()))
}

/// Column means removed from a design and its response.
#[derive(Clone, Debug, PartialEq)]
pub struct CenteringInfo {
    pub column_means: Vec<f64>,
    pub response_mean: f64,
}

impl CenteringInfo {
    /// Centers new data with the stored means.
    pub fn apply(&self, x: &Matrix, y: &[f64]) -> (Matrix, Vec<f64>) {
        let mut xc = x.clone();
        for (j, m) in self.column_means.iter().enumerate() {
            xc.col_mut(j).iter_mut().for_each(|v| *v -= m);
        }
        let yc = y.iter().map(|v| v - self.response_mean).collect();
        (xc, yc)
    }

    /// Intercept implied by coefficients fitted on centered data.
    pub fn intercept(&self, beta: &[f64]) -> f64 {
        self.response_mean - dot(&self.column_means, beta)
    }

    /// Prediction on the original (uncentered) scale.
    pub fn predict(&self, x: &Matrix, beta: &[f64]) -> Vec<f64> {
        let b0 = self.intercept(beta);
        x.mul_vec(beta).into_iter().map(|v| v + b0).collect()
    }
}

pub fn center_columns(x: &Matrix, y: &[f64]) -> Result<(Matrix, Vec<f64>, CenteringInfo)> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::arg("centering needs at least two rows"));
    }
    if y.len() != n {
        return Err(Error::dim(format!("response has {} entries, design has {n} rows", y.len())));
    }
    let column_means: Vec<f64> = (0..x.ncols()).map(|j| mean(x.col(j))).collect();
    let info = CenteringInfo {
        column_means,
        response_mean: mean(y),
    };
    let (xc, yc) = info.apply(x, y);
    Ok((xc, yc, info))
}

/// Subtracts each column's mean in place.
pub fn center_in_place(x: &mut Matrix) {
    for j in 0..x.ncols() {
        let col = x.col_mut(j);
        let m = mean(col);
        col.iter_mut().for_each(|v| *v -= m);
    }
}

/// Orthonormal basis of the column space of `z`, in Gram–Schmidt order.
///
/// Columns whose residual after removing the earlier directions is below
/// [`ORTHO_DEPENDENCE_TOL`] times their own norm are dropped, so a
/// rank-deficient input yields fewer columns. Signs follow Gram–Schmidt
/// (positive diagonal of R).
pub fn orthonormalize(z: &Matrix) -> Matrix {
    let (n, q) = z.shape();
    if q == 0 || n == 0 {
        return Matrix::zeros(n, 0);
    }
    let norms: Vec<f64> = (0..q).map(|j| norm2(z.col(j))).collect();
    if q <= n && norms.iter().all(|&s| s > 0.0) {
        let qr = z.view().qr();
        let r = qr.thin_R();
        let full_rank = (0..q).all(|j| r[(j, j)].abs() > ORTHO_DEPENDENCE_TOL * norms[j]);
        if full_rank {
            let qm = qr.compute_thin_Q();
            return Matrix::from_fn(n, q, |i, j| if r[(j, j)] < 0.0 { -qm[(i, j)] } else { qm[(i, j)] });
        }
    }
    gram_schmidt(z, &norms)
}

fn gram_schmidt(z: &Matrix, norms: &[f64]) -> Matrix {
    let n = z.nrows();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for (j, &norm) in norms.iter().enumerate() {
        if norm == 0.0 {
            continue;
        }
        let mut v = z.col(j).to_vec();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &v);
                axpy(-c, b, &mut v);
            }
        }
        let r = norm2(&v);
        if r > ORTHO_DEPENDENCE_TOL * norm {
            v.iter_mut().for_each(|x| *x /= r);
            basis.push(v);
        }
        if basis.len() == n {
            break;
        }
    }
    Matrix::from_columns(n, &basis).expect("consistent shapes")
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let llt = a
        .view()
        .llt(Side::Lower)
        .map_err(|_| Error::arg("matrix is not positive definite"))?;
    let l = llt.L();
    Ok(Matrix::from_fn(a.nrows(), a.ncols(), |i, j| if i >= j { l[(i, j)] } else { 0.0 }))
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    let llt = a
        .view()
        .llt(Side::Lower)
        .map_err(|_| Error::arg("matrix is not positive definite"))?;
    let inv = llt.solve(Mat::<f64>::identity(a.nrows(), a.nrows()));
    Ok(Matrix::from_faer(inv.as_ref()))
}

/// Solves `a · x = b` for symmetric positive definite `a` and several
/// right-hand sides.
pub fn spd_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let llt = a
        .view()
        .llt(Side::Lower)
        .map_err(|_| Error::arg("matrix is not positive definite"))?;
    let x = llt.solve(b.view());
    Ok(Matrix::from_faer(x.as_ref()))
}

/// Eigenvalues of a symmetric matrix in nondecreasing order.
pub fn sym_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    a.view().self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Factorization {
        what: "symmetric eigenvalue",
        residual: f64::NAN,
    })
}
