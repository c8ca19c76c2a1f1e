use std::fmt;
use std::ops::Index;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex double-precision scalar used throughout the crate.
pub type C64 = Complex64;

/// Relative singular-value threshold below which a column direction counts as lost.
pub const FULL_RANK_RTOL: f64 = 1e-10;
/// Relative singular-value cutoff used by every pseudoinverse.
pub const PINV_RCOND: f64 = 1e-12;
/// Entries with modulus below this are treated as exact zeros.
pub const ZERO_TOL: f64 = 1e-14;

/// Dense complex matrix with at least one row and one column and finite entries.
///
/// Real inputs are embedded with zero imaginary part; there is a single code path for both.
#[derive(Clone, PartialEq)]
pub struct Matrix(DMatrix<C64>);

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix({}x{})", self.rows(), self.cols())?;
        if self.rows() * self.cols() <= 64 {
            write!(f, " {:?}", self.to_rows())?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn new(inner: DMatrix<C64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::Shape(format!(
                "matrix must be at least 1x1, got {}x{}",
                inner.nrows(),
                inner.ncols()
            )));
        }
        if inner.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Shape("matrix entries must be finite".into()));
        }
        Ok(Matrix(inner))
    }

    /// Wraps a matrix produced by an internal operation whose shape is already known to be valid.
    pub(crate) fn wrap(inner: DMatrix<C64>) -> Self {
        debug_assert!(inner.nrows() > 0 && inner.ncols() > 0);
        Matrix(inner)
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries given for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Matrix::new(DMatrix::from_row_slice(rows, cols, &data))
    }

    pub fn from_real_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Matrix::from_row_major(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Builds a real matrix from nested rows, e.g. `Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]])`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != ncols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Matrix::from_real_row_major(nrows, ncols, &flat)
    }

    pub fn from_complex_rows<R: AsRef<[C64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != ncols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let flat: Vec<C64> = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Matrix::from_row_major(nrows, ncols, flat)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        Matrix::new(DMatrix::from_fn(rows, cols, f))
    }

    pub fn identity(n: usize) -> Self {
        Matrix::wrap(DMatrix::identity(n.max(1), n.max(1)))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::wrap(DMatrix::zeros(rows.max(1), cols.max(1)))
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Matrix::wrap(DMatrix::from_element(rows.max(1), cols.max(1), C64::new(1.0, 0.0)))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[(r, c)]
    }

    pub fn row(&self, r: usize) -> Vec<C64> {
        (0..self.cols()).map(|c| self.0[(r, c)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows()).map(|r| self.row(r)).collect()
    }

    pub fn as_inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|z| z.im == 0.0)
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix::wrap(self.0.adjoint())
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols() != rhs.rows() {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(Matrix::wrap(&self.0 * &rhs.0))
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols() {
            return Err(Error::Shape(format!(
                "vector of length {} for a matrix with {} columns",
                v.len(),
                self.cols()
            )));
        }
        Ok((0..self.rows())
            .map(|r| (0..self.cols()).map(|c| self.0[(r, c)] * v[c]).sum())
            .collect())
    }

    /// Gathers the listed rows in the given order (the action of a selection matrix).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Matrix> {
        if rows.is_empty() {
            return Err(Error::InvalidSelection("empty row selection".into()));
        }
        if let Some(&r) = rows.iter().find(|&&r| r >= self.rows()) {
            return Err(Error::InvalidSelection(format!(
                "row {r} out of range for {} rows",
                self.rows()
            )));
        }
        Ok(Matrix::wrap(self.0.select_rows(rows.iter())))
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entrywise modulus of `self - other`, relative to the largest modulus of `other`.
    pub fn relative_error(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        let scale = other.0.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.0.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn numerical_rank(&self, rtol: f64) -> usize {
        let s = self.singular_values();
        let Some(&top) = s.first() else { return 0 };
        if top == 0.0 {
            return 0;
        }
        s.iter().filter(|&&x| x > rtol * top).count()
    }

    /// Full column rank under the `FULL_RANK_RTOL` rule: smallest singular value above
    /// `1e-10` times the largest.
    pub fn has_full_column_rank(&self) -> bool {
        self.rows() >= self.cols() && self.numerical_rank(FULL_RANK_RTOL) == self.cols()
    }

    /// Moore-Penrose pseudoinverse via SVD, dropping singular values at or below
    /// `rcond` times the largest.
    pub fn pinv(&self, rcond: f64) -> Matrix {
        let svd = self.0.clone().svd(true, true);
        let u = svd.u.expect("left singular vectors requested");
        let v_t = svd.v_t.expect("right singular vectors requested");
        let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let mut out = DMatrix::<C64>::zeros(self.cols(), self.rows());
        for (k, &sigma) in svd.singular_values.iter().enumerate() {
            if top == 0.0 || sigma <= rcond * top {
                continue;
            }
            let inv = 1.0 / sigma;
            // out += v_k * inv * u_k^H
            for c in 0..self.rows() {
                let uc = u[(c, k)].conj() * inv;
                for r in 0..self.cols() {
                    out[(r, c)] += v_t[(k, r)].conj() * uc;
                }
            }
        }
        Matrix::wrap(out)
    }

    /// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is trusted.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        if self.rows() != self.cols() {
            return Err(Error::Shape("eigenvalues need a square matrix".into()));
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}
