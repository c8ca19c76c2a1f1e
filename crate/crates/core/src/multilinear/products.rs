//! Kronecker, Khatri-Rao and Hadamard products, Grammians and frame potentials.
//!
//! Row indices of a product follow the row-major multi-index convention: row `(i, k)` of
//! `A ⊗ B` or `A ⊙ B` is stored at `i * B.rows() + k`.

use nalgebra::DMatrix;

use super::matrix::{Matrix, C64};
use crate::error::{Error, Result};

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = DMatrix::<C64>::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Matrix::wrap(out)
}

/// Column-wise Kronecker product.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::Shape(format!(
            "Khatri-Rao product needs equal column counts, got {} and {}",
            a.cols(),
            b.cols()
        )));
    }
    let (ra, rb) = (a.rows(), b.rows());
    let out = DMatrix::from_fn(ra * rb, a.cols(), |r, c| a[(r / rb, c)] * b[(r % rb, c)]);
    Ok(Matrix::wrap(out))
}

pub fn hadamard(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "Hadamard product needs equal shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(Matrix::wrap(a.as_inner().component_mul(b.as_inner())))
}

/// Chains a binary product over a non-empty list, left to right.
pub fn kron_all(factors: &[Matrix]) -> Result<Matrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Shape("empty factor list".into()))?;
    Ok(rest.iter().fold(first.clone(), |acc, f| kron(&acc, f)))
}

pub fn khatri_rao_all(factors: &[Matrix]) -> Result<Matrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Shape("empty factor list".into()))?;
    rest.iter().try_fold(first.clone(), |acc, f| khatri_rao(&acc, f))
}

pub fn hadamard_all(factors: &[Matrix]) -> Result<Matrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Shape("empty factor list".into()))?;
    rest.iter().try_fold(first.clone(), |acc, f| hadamard(&acc, f))
}

/// Grammian `Ψ^H Ψ`.
pub fn grammian(psi: &Matrix) -> Matrix {
    let rows: Vec<usize> = (0..psi.rows()).collect();
    grammian_of_rows(psi, &rows)
}

/// Grammian of the rows of `u` listed in `rows`, accumulated as rank-1 outer products
/// `conj(u_r)^T u_r` in ascending row order. An empty list gives the zero matrix.
pub fn grammian_of_rows(u: &Matrix, rows: &[usize]) -> Matrix {
    let k = u.cols();
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    let mut t = DMatrix::<C64>::zeros(k, k);
    for &r in &sorted {
        add_row_outer(&mut t, u, r, 1.0);
    }
    Matrix::wrap(t)
}

/// `t += sign * conj(u_r)^T u_r`.
pub(crate) fn add_row_outer(t: &mut DMatrix<C64>, u: &Matrix, r: usize, sign: f64) {
    let k = u.cols();
    for b in 0..k {
        let ub = u[(r, b)] * sign;
        for a in 0..k {
            t[(a, b)] += u[(r, a)].conj() * ub;
        }
    }
}

/// Complement Grammian `T(N ∖ S) = T(N) − T(S)`.
pub fn complement_grammian(u: &Matrix, removed: &[usize]) -> Matrix {
    let full = grammian(u);
    let mut t = full.into_inner();
    let mut sorted = removed.to_vec();
    sorted.sort_unstable();
    for &r in &sorted {
        add_row_outer(&mut t, u, r, -1.0);
    }
    Matrix::wrap(t)
}

/// Frame potential `tr(T^H T) = ‖Ψ^H Ψ‖²_F`.
pub fn frame_potential(psi: &Matrix) -> f64 {
    grammian(psi).frobenius_norm_sq()
}

/// Entrywise squared modulus `|A|^{∘2}`; equals `A ∘ A` for real matrices.
pub fn elementwise_abs_sq(a: &Matrix) -> Matrix {
    Matrix::wrap(a.as_inner().map(|z| C64::new(z.norm_sqr(), 0.0)))
}

/// Real inner product `Re Σ_ab A_ab conj(B_ab)`.
pub fn frobenius_inner(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.as_inner()
        .iter()
        .zip(b.as_inner().iter())
        .map(|(x, y)| (x * y.conj()).re)
        .sum()
}

/// Precomputed inner products `⟨u_a, u_b⟩ = Σ_k u_a[k] conj(u_b[k])` between all rows of a factor.
#[derive(Clone, Debug)]
pub struct RowTable {
    n: usize,
    inner: Vec<C64>,
    abs_sq: Vec<f64>,
}

impl RowTable {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn inner(&self, a: usize, b: usize) -> C64 {
        self.inner[a * self.n + b]
    }

    /// `|⟨u_a, u_b⟩|²`
    pub fn abs_sq(&self, a: usize, b: usize) -> f64 {
        self.abs_sq[a * self.n + b]
    }

    pub fn abs_sq_row(&self, a: usize) -> &[f64] {
        &self.abs_sq[a * self.n..(a + 1) * self.n]
    }

    /// Frame potential of the factor restricted to `rows`: `Σ_{a,b} |⟨u_a, u_b⟩|²`.
    pub fn frame_potential_of(&self, rows: &[usize]) -> f64 {
        rows.iter()
            .map(|&a| {
                let row = self.abs_sq_row(a);
                rows.iter().map(|&b| row[b]).sum::<f64>()
            })
            .sum()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::wrap(DMatrix::from_row_slice(self.n, self.n, &self.inner))
    }
}

pub fn row_inner_products(u: &Matrix) -> RowTable {
    let n = u.rows();
    let rows = u.to_rows();
    let mut inner = vec![C64::new(0.0, 0.0); n * n];
    for a in 0..n {
        for b in a..n {
            let v: C64 = rows[a].iter().zip(&rows[b]).map(|(x, y)| x * y.conj()).sum();
            inner[a * n + b] = v;
            inner[b * n + a] = v.conj();
        }
    }
    let abs_sq = inner.iter().map(|z| z.norm_sqr()).collect();
    RowTable { n, inner, abs_sq }
}
