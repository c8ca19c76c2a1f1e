use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::multilinear::{subselect, Matrix, MultilinearModel, Selection, C64};
use crate::recon::metrics;

/// Redraw limit of [`random_kron_sampler`].
pub const MAX_ATTEMPTS: usize = 10_000;

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_real_row_major(rows, cols, &data).expect("gaussian entries are finite")
}

pub fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Scales every row to unit Euclidean norm; zero rows are left alone.
pub fn normalize_rows(u: &Matrix) -> Matrix {
    let mut m = u.as_inner().clone();
    for mut row in m.row_iter_mut() {
        let norm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.unscale_mut(norm);
        }
    }
    Matrix::new(m).expect("row scaling keeps entries finite")
}

fn gaussian_factor<R: Rng + ?Sized>(rows: usize, cols: usize, unit_rows: bool, rng: &mut R) -> Matrix {
    let u = gaussian_matrix(rows, cols, rng);
    if unit_rows {
        normalize_rows(&u)
    } else {
        u
    }
}

/// Dense-core model with i.i.d. standard Gaussian factors, optionally row-normalized.
pub fn random_dense_model<R: Rng + ?Sized>(
    dims: &[usize],
    ranks: &[usize],
    unit_rows: bool,
    rng: &mut R,
) -> Result<MultilinearModel> {
    let factors = dims
        .iter()
        .zip(ranks)
        .map(|(&n, &k)| gaussian_factor(n, k, unit_rows, rng))
        .collect();
    MultilinearModel::dense(factors)
}

/// Diagonal-core model with i.i.d. standard Gaussian factors, optionally row-normalized.
pub fn random_diag_model<R: Rng + ?Sized>(
    dims: &[usize],
    kc: usize,
    unit_rows: bool,
    rng: &mut R,
) -> Result<MultilinearModel> {
    let factors = dims.iter().map(|&n| gaussian_factor(n, kc, unit_rows, rng)).collect();
    MultilinearModel::diagonal(factors)
}

/// Uniform draw among the compositions `l_1 + … + l_R = budget` with
/// `min_kept[i] ≤ l_i ≤ N_i`. Counts are drawn domain by domain, each weighted by the number
/// of ways the remaining domains can complete the budget.
fn random_split<R: Rng + ?Sized>(
    dims: &[usize],
    min_kept: &[usize],
    budget: usize,
    rng: &mut R,
) -> Vec<usize> {
    let r = dims.len();
    // ways[d][s]: compositions of s over domains d..r
    let mut ways = vec![vec![0u128; budget + 1]; r + 1];
    ways[r][0] = 1;
    for d in (0..r).rev() {
        for s in 0..=budget {
            ways[d][s] = (min_kept[d]..=dims[d].min(s)).map(|l| ways[d + 1][s - l]).sum();
        }
    }
    let mut left = budget;
    let mut counts = Vec::with_capacity(r);
    for d in 0..r {
        let mut pick = rng.random_range(0..ways[d][left]);
        for l in min_kept[d]..=dims[d].min(left) {
            let w = ways[d + 1][left - l];
            if pick < w {
                counts.push(l);
                left -= l;
                break;
            }
            pick -= w;
        }
    }
    counts
}

/// Random Kronecker-structured selection of `budget` sensors with at least `min_kept[i]` rows
/// per domain. Draws that leave the sampled system unidentifiable are rejected.
pub fn random_kron_sampler<R: Rng + ?Sized>(
    model: &MultilinearModel,
    min_kept: &[usize],
    budget: usize,
    rng: &mut R,
) -> Result<Selection> {
    let dims = model.dims();
    if min_kept.len() != dims.len() {
        return Err(Error::Infeasible(format!(
            "{} lower bounds for {} domains",
            min_kept.len(),
            dims.len()
        )));
    }
    if let Some(i) = (0..dims.len()).find(|&i| min_kept[i] > dims[i]) {
        return Err(Error::Infeasible(format!("domain {i} cannot keep {} rows", min_kept[i])));
    }
    let floor: usize = min_kept.iter().sum();
    let n: usize = dims.iter().sum();
    if budget < floor || budget > n {
        return Err(Error::Infeasible(format!(
            "budget L = {budget} outside the feasible range [{floor}, {n}]"
        )));
    }
    for _ in 0..MAX_ATTEMPTS {
        let counts = random_split(&dims, min_kept, budget, rng);
        let kept = dims
            .iter()
            .zip(&counts)
            .map(|(&n, &l)| index::sample(rng, n, l).into_vec())
            .collect();
        let sel = Selection::new(&dims, kept)?;
        if !metrics(&subselect(model, &sel)?)?.unidentifiable {
            return Ok(sel);
        }
    }
    Err(Error::SamplingExhausted(MAX_ATTEMPTS))
}
