//! Exhaustive search over all feasible Kronecker-structured selections of a given budget.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dense::DenseConstraints;
use crate::diag::DiagConstraints;
use crate::error::{Error, Result};
use crate::multilinear::{
    frame_potential, grammian, grammian_of_rows, row_inner_products, CoreKind, MultilinearModel,
    Selection, C64,
};

/// Default bound on the number of enumerated selections.
pub const SEARCH_LIMIT: u128 = 1_000_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleResult {
    pub selection: Selection,
    /// Optimal `G` (dense core) or `Q` (diagonal core).
    pub objective: f64,
    /// Frame potential of the optimal selection, `F(L)` or `P(L)`.
    pub fp: f64,
    pub searched: u128,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn splits(dims: &[usize], min_kept: &[usize], budget: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, left: usize, dims: &[usize], lo: &[usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if d == dims.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let rest_lo: usize = lo[d + 1..].iter().sum();
        let rest_hi: usize = dims[d + 1..].iter().sum();
        for l in lo[d]..=dims[d].min(left) {
            if left - l < rest_lo || left - l > rest_hi {
                continue;
            }
            cur.push(l);
            rec(d + 1, left - l, dims, lo, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, budget, dims, min_kept, &mut Vec::new(), &mut out);
    out
}

/// Number of selections with `budget` sensors and at least `min_kept[i]` rows per domain.
pub fn search_space_size(dims: &[usize], min_kept: &[usize], budget: usize) -> u128 {
    splits(dims, min_kept, budget)
        .iter()
        .map(|s| dims.iter().zip(s).map(|(&n, &l)| binomial(n, l)).product::<u128>())
        .sum()
}

enum DomainValue {
    Fp(f64),
    Gram(DMatrix<C64>),
}

/// Maximizes `G` or `Q` (by core kind) over every selection with `budget` sensors and at
/// least `min_kept[i]` rows per domain. Ties keep the lexicographically first selection.
pub fn exhaustive_oracle(
    model: &MultilinearModel,
    min_kept: &[usize],
    budget: usize,
    limit: u128,
) -> Result<OracleResult> {
    let dims = model.dims();
    if min_kept.len() != dims.len() || min_kept.iter().zip(&dims).any(|(l, n)| l > n || *l == 0) {
        return Err(Error::Infeasible(format!("invalid per-domain minima {min_kept:?}")));
    }
    let size = search_space_size(&dims, min_kept, budget);
    if size == 0 {
        return Err(Error::Infeasible(format!("no selection of {budget} sensors is feasible")));
    }
    if size > limit {
        return Err(Error::SearchSpace { size, limit });
    }
    let diag = model.is_diagonal();
    let tables: Vec<_> = model.factors().iter().map(row_inner_products).collect();
    let full = if diag {
        let grams: Vec<_> = model.factors().iter().map(grammian).collect();
        crate::multilinear::hadamard_all(&grams)?.frobenius_norm_sq()
    } else {
        model.factors().iter().map(frame_potential).product()
    };

    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    for split in splits(&dims, min_kept, budget) {
        let options: Vec<Vec<(Vec<usize>, DomainValue)>> = split
            .iter()
            .enumerate()
            .map(|(d, &l)| {
                combinations(dims[d], l)
                    .into_iter()
                    .map(|kept| {
                        let v = if diag {
                            DomainValue::Gram(grammian_of_rows(model.factor(d), &kept).into_inner())
                        } else {
                            DomainValue::Fp(tables[d].frame_potential_of(&kept))
                        };
                        (kept, v)
                    })
                    .collect()
            })
            .collect();
        let mut choice = vec![0usize; options.len()];
        search(&options, 0, None, 1.0, &mut choice, &mut |fp, choice| {
            if best.as_ref().is_none_or(|(b, _)| fp < *b) {
                let kept = choice.iter().enumerate().map(|(d, &c)| options[d][c].0.clone()).collect();
                best = Some((fp, kept));
            }
        });
    }
    let (fp, kept) = best.expect("search space is nonempty");
    Ok(OracleResult {
        selection: Selection::new(&dims, kept)?,
        objective: full - fp,
        fp,
        searched: size,
    })
}

fn search(
    options: &[Vec<(Vec<usize>, DomainValue)>],
    d: usize,
    acc: Option<&DMatrix<C64>>,
    prod: f64,
    choice: &mut Vec<usize>,
    visit: &mut impl FnMut(f64, &[usize]),
) {
    if d == options.len() {
        let fp = match acc {
            Some(t) => t.iter().map(|z| z.norm_sqr()).sum(),
            None => prod,
        };
        visit(fp, choice);
        return;
    }
    for (c, (_, value)) in options[d].iter().enumerate() {
        choice[d] = c;
        match value {
            DomainValue::Fp(f) => search(options, d + 1, None, prod * f, choice, visit),
            DomainValue::Gram(t) => {
                let next = match acc {
                    Some(a) => a.component_mul(t),
                    None => t.clone(),
                };
                search(options, d + 1, Some(&next), prod, choice, visit);
            }
        }
    }
}

/// Oracle under the same per-domain minima the dense greedy designer uses.
pub fn exhaustive_dense(model: &MultilinearModel, cons: &DenseConstraints, limit: u128) -> Result<OracleResult> {
    if model.core_kind() != CoreKind::Dense {
        return Err(Error::InvalidModel("expected a dense-core model".into()));
    }
    let min_kept = cons.min_kept(model)?;
    exhaustive_oracle(model, &min_kept, cons.budget, limit)
}

/// Oracle under the diagonal designer's identifiability bounds.
pub fn exhaustive_diag(model: &MultilinearModel, cons: &DiagConstraints, limit: u128) -> Result<OracleResult> {
    let bounds = cons.min_kept(model)?;
    exhaustive_oracle(model, &bounds.min_kept, cons.budget, limit)
}
