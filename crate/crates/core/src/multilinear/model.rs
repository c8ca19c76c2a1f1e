use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, C64, ZERO_TOL};
use crate::error::{Error, Result};

/// Structure of the core tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreKind {
    /// Fully populated `K_1 × … × K_R` core; the sampled factor is a Kronecker product.
    Dense,
    /// Hyperdiagonal core with edge `K_c`; the sampled factor is a Khatri-Rao product.
    Diagonal(usize),
}

/// Ordered factor matrices `U_1 … U_R` relating a tensor signal to its core.
#[derive(Clone, Debug)]
pub struct MultilinearModel {
    factors: Vec<Matrix>,
    core: CoreKind,
}

impl MultilinearModel {
    /// Dense-core model. Every factor must be tall and have full column rank.
    pub fn dense(factors: Vec<Matrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidModel("a model needs at least one factor".into()));
        }
        for (i, u) in factors.iter().enumerate() {
            if u.rows() <= u.cols() {
                return Err(Error::InvalidModel(format!(
                    "factor {i} is {}x{}, dense-core factors must be tall",
                    u.rows(),
                    u.cols()
                )));
            }
            if !u.has_full_column_rank() {
                return Err(Error::InvalidModel(format!("factor {i} is rank deficient")));
            }
        }
        Ok(MultilinearModel {
            factors,
            core: CoreKind::Dense,
        })
    }

    /// Diagonal-core model. All factors share the column count `K_c` and none has an
    /// all-zero column.
    pub fn diagonal(factors: Vec<Matrix>) -> Result<Self> {
        let kc = factors
            .first()
            .ok_or_else(|| Error::InvalidModel("a model needs at least one factor".into()))?
            .cols();
        for (i, u) in factors.iter().enumerate() {
            if u.cols() != kc {
                return Err(Error::InvalidModel(format!(
                    "factor {i} has {} columns, expected {kc}",
                    u.cols()
                )));
            }
            if let Some(c) = zero_column(u) {
                return Err(Error::InvalidModel(format!("factor {i} has an all-zero column {c}")));
            }
        }
        Ok(MultilinearModel {
            factors,
            core: CoreKind::Diagonal(kc),
        })
    }

    /// A model built from already-sampled factors. Sampled factors may be square or short,
    /// so only the structural invariants are kept.
    pub(crate) fn sampled(factors: Vec<Matrix>, core: CoreKind) -> Self {
        MultilinearModel { factors, core }
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &Matrix {
        &self.factors[i]
    }

    pub fn core_kind(&self) -> CoreKind {
        self.core
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.core, CoreKind::Diagonal(_))
    }

    /// Tensor order `R`.
    pub fn order(&self) -> usize {
        self.factors.len()
    }

    /// `N_i` per domain.
    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    /// Core edge lengths: `K_i` for a dense core, `K_c` repeated for a diagonal one.
    pub fn core_dims(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::cols).collect()
    }

    /// Total candidate sensors `N = Σ N_i`.
    pub fn total_sensors(&self) -> usize {
        self.factors.iter().map(Matrix::rows).sum()
    }

    /// Number of tensor entries `Ñ = ∏ N_i`.
    pub fn tensor_len(&self) -> usize {
        self.factors.iter().map(Matrix::rows).product()
    }

    /// Length of the core vector: `K̃ = ∏ K_i` or `K_c`.
    pub fn core_len(&self) -> usize {
        match self.core {
            CoreKind::Dense => self.factors.iter().map(Matrix::cols).product(),
            CoreKind::Diagonal(kc) => kc,
        }
    }
}

pub(crate) fn zero_column(u: &Matrix) -> Option<usize> {
    (0..u.cols()).find(|&c| (0..u.rows()).all(|r| u[(r, c)].norm() < ZERO_TOL))
}

fn validate_index_sets(sets: &mut [Vec<usize>], dims: &[usize], what: &str) -> Result<()> {
    if sets.len() != dims.len() {
        return Err(Error::InvalidSelection(format!(
            "{what} has {} domains, model has {}",
            sets.len(),
            dims.len()
        )));
    }
    for (i, (set, &n)) in sets.iter_mut().zip(dims).enumerate() {
        set.sort_unstable();
        if let Some(&bad) = set.iter().find(|&&x| x >= n) {
            return Err(Error::InvalidSelection(format!(
                "{what}: index {bad} out of range in domain {i} of size {n}"
            )));
        }
        if set.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSelection(format!("{what}: duplicate index in domain {i}")));
        }
    }
    Ok(())
}

/// Per-domain kept row sets `L_1 … L_R`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    dims: Vec<usize>,
    kept: Vec<Vec<usize>>,
}

impl Selection {
    pub fn new(dims: &[usize], mut kept: Vec<Vec<usize>>) -> Result<Self> {
        validate_index_sets(&mut kept, dims, "selection")?;
        Ok(Selection {
            dims: dims.to_vec(),
            kept,
        })
    }

    pub fn full(dims: &[usize]) -> Self {
        Selection {
            dims: dims.to_vec(),
            kept: dims.iter().map(|&n| (0..n).collect()).collect(),
        }
    }

    pub fn from_complement(complement: &Complement) -> Self {
        let kept = complement
            .dims
            .iter()
            .zip(&complement.removed)
            .map(|(&n, removed)| (0..n).filter(|x| removed.binary_search(x).is_err()).collect())
            .collect();
        Selection {
            dims: complement.dims.clone(),
            kept,
        }
    }

    pub fn complement(&self) -> Complement {
        let removed = self
            .dims
            .iter()
            .zip(&self.kept)
            .map(|(&n, kept)| (0..n).filter(|x| kept.binary_search(x).is_err()).collect())
            .collect();
        Complement {
            dims: self.dims.clone(),
            removed,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn kept(&self) -> &[Vec<usize>] {
        &self.kept
    }

    pub fn domain(&self, i: usize) -> &[usize] {
        &self.kept[i]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.kept.iter().map(Vec::len).collect()
    }

    /// Number of selected sensors `L = Σ |L_i|`.
    pub fn sensors(&self) -> usize {
        self.kept.iter().map(Vec::len).sum()
    }

    /// Number of acquired samples `L̃ = ∏ |L_i|`.
    pub fn samples(&self) -> u64 {
        self.kept.iter().map(|k| k.len() as u64).product()
    }

    pub(crate) fn check_against(&self, model: &MultilinearModel) -> Result<()> {
        if self.dims != model.dims() {
            return Err(Error::InvalidSelection(format!(
                "selection dims {:?} do not match model dims {:?}",
                self.dims,
                model.dims()
            )));
        }
        Ok(())
    }
}

/// Per-domain removed row sets `S_1 … S_R`, the complement of a [`Selection`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Complement {
    dims: Vec<usize>,
    removed: Vec<Vec<usize>>,
}

impl Complement {
    pub fn new(dims: &[usize], mut removed: Vec<Vec<usize>>) -> Result<Self> {
        validate_index_sets(&mut removed, dims, "complement")?;
        Ok(Complement {
            dims: dims.to_vec(),
            removed,
        })
    }

    pub fn empty(dims: &[usize]) -> Self {
        Complement {
            dims: dims.to_vec(),
            removed: vec![Vec::new(); dims.len()],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn removed(&self) -> &[Vec<usize>] {
        &self.removed
    }

    pub fn domain(&self, i: usize) -> &[usize] {
        &self.removed[i]
    }

    /// `|S|`
    pub fn len(&self) -> usize {
        self.removed.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `S ∪ {x}` with `x` in domain `d`. Returns `None` if `x` is already removed.
    pub fn with(&self, d: usize, x: usize) -> Option<Complement> {
        let pos = self.removed[d].binary_search(&x).err()?;
        let mut out = self.clone();
        out.removed[d].insert(pos, x);
        Some(out)
    }

    pub(crate) fn check_against(&self, model: &MultilinearModel) -> Result<()> {
        if self.dims != model.dims() {
            return Err(Error::InvalidSelection(format!(
                "complement dims {:?} do not match model dims {:?}",
                self.dims,
                model.dims()
            )));
        }
        Ok(())
    }
}

/// Vectorized core: `vec(G)` for a dense core, its main diagonal for a diagonal one.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreVector(pub Vec<C64>);

impl CoreVector {
    pub fn from_real(values: &[f64]) -> Self {
        CoreVector(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }
}

/// Applies `factors[d]` along mode `d` of a row-major tensor with the given shape.
/// Factor `d` must have `shape[d]` columns; the result has shape `factors[d].rows()`.
pub fn mode_products(data: &[C64], shape: &[usize], factors: &[&Matrix]) -> Result<Vec<C64>> {
    if factors.len() != shape.len() {
        return Err(Error::Shape(format!(
            "{} factors for a tensor of order {}",
            factors.len(),
            shape.len()
        )));
    }
    if data.len() != shape.iter().product::<usize>() {
        return Err(Error::Shape(format!(
            "tensor data of length {} does not match shape {shape:?}",
            data.len()
        )));
    }
    let mut shape = shape.to_vec();
    let mut cur = data.to_vec();
    for (d, f) in factors.iter().enumerate() {
        if f.cols() != shape[d] {
            return Err(Error::Shape(format!(
                "mode {d}: factor has {} columns, tensor edge is {}",
                f.cols(),
                shape[d]
            )));
        }
        let pre: usize = shape[..d].iter().product();
        let post: usize = shape[d + 1..].iter().product();
        let (k, n) = (shape[d], f.rows());
        let mut next = vec![C64::new(0.0, 0.0); pre * n * post];
        for p in 0..pre {
            for r in 0..n {
                let out = &mut next[(p * n + r) * post..(p * n + r + 1) * post];
                for c in 0..k {
                    let w = f[(r, c)];
                    if w == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let src = &cur[(p * k + c) * post..(p * k + c + 1) * post];
                    for (o, s) in out.iter_mut().zip(src) {
                        *o += w * s;
                    }
                }
            }
        }
        shape[d] = n;
        cur = next;
    }
    Ok(cur)
}

/// `vec(X) = (U_1 ⊗ … ⊗ U_R) g` or `(U_1 ⊙ … ⊙ U_R) g`, without forming the full product.
pub fn multilinear_apply(model: &MultilinearModel, g: &CoreVector) -> Result<Vec<C64>> {
    if g.len() != model.core_len() {
        return Err(Error::Shape(format!(
            "core vector of length {} for a core of {} entries",
            g.len(),
            model.core_len()
        )));
    }
    match model.core_kind() {
        CoreKind::Dense => {
            let refs: Vec<&Matrix> = model.factors().iter().collect();
            mode_products(g.as_slice(), &model.core_dims(), &refs)
        }
        CoreKind::Diagonal(kc) => {
            let factors = model.factors();
            let (last, head) = factors.split_last().expect("model has at least one factor");
            // rows of U_1 ⊙ … ⊙ U_{R-1} scaled by g, row-major with kc columns
            let mut acc: Vec<C64> = g.as_slice().to_vec();
            let mut acc_rows = 1;
            for u in head {
                let mut next = Vec::with_capacity(acc_rows * u.rows() * kc);
                for r in 0..acc_rows {
                    for s in 0..u.rows() {
                        next.extend((0..kc).map(|c| acc[r * kc + c] * u[(s, c)]));
                    }
                }
                acc = next;
                acc_rows *= u.rows();
            }
            let mut x = Vec::with_capacity(acc_rows * last.rows());
            for r in 0..acc_rows {
                let row = &acc[r * kc..(r + 1) * kc];
                for s in 0..last.rows() {
                    x.push((0..kc).map(|c| row[c] * last[(s, c)]).sum());
                }
            }
            Ok(x)
        }
    }
}

/// Sampled model with factors `Ψ_i = Φ_i U_i`; selection matrices act as row gathers.
pub fn subselect(model: &MultilinearModel, sel: &Selection) -> Result<MultilinearModel> {
    sel.check_against(model)?;
    let factors = model
        .factors()
        .iter()
        .zip(sel.kept())
        .enumerate()
        .map(|(i, (u, kept))| {
            if kept.is_empty() {
                Err(Error::InvalidSelection(format!("domain {i} has no selected rows")))
            } else {
                u.select_rows(kept)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultilinearModel::sampled(factors, model.core_kind()))
}

/// Flat index of each sample on the grid `L_1 × … × L_R`, in row-major order.
pub fn sample_indices(sel: &Selection) -> Vec<usize> {
    let dims = sel.dims();
    let mut out = vec![0usize];
    for (d, kept) in sel.kept().iter().enumerate() {
        out = out
            .iter()
            .flat_map(|&base| kept.iter().map(move |&i| base * dims[d] + i))
            .collect();
    }
    out
}

/// `y = (Φ_1 ⊗ … ⊗ Φ_R) x`.
pub fn sample_tensor(x: &[C64], sel: &Selection) -> Result<Vec<C64>> {
    let total: usize = sel.dims().iter().product();
    if x.len() != total {
        return Err(Error::Shape(format!(
            "signal of length {} for a tensor of {total} entries",
            x.len()
        )));
    }
    Ok(sample_indices(sel).into_iter().map(|i| x[i]).collect())
}
