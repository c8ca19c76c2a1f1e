//! Sampling design for dense-core models.
//!
//! With a Kronecker-structured sampler the frame potential of the sampled factor factorizes
//! over domains, `F(L) = ∏ F_i(L_i)`. The greedy designer maximizes the complement surrogate
//! `G(S) = F(N) − F(N ∖ S)` subject to `|S| = N − L` and `|S_i| ≤ N_i − K_i − α_i`.
//!
//! Removal gains are `O(1)` per candidate: for each domain the designer keeps the current
//! `F_i` and, for every row `x`, the sum `Σ_{b kept} |⟨u_x, u_b⟩|²`, so that
//! `F_i(kept ∖ {x}) = F_i(kept) − 2·rowsum(x) + |⟨u_x, u_x⟩|²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::{complement_from_steps, run_greedy, GreedyTrace, RemovalObjective};
use crate::multilinear::{
    frame_potential, row_inner_products, subselect, Complement, CoreKind, MultilinearModel,
    RowTable, Selection,
};

/// Sensor budget `L` and per-domain slack `α_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseConstraints {
    pub budget: usize,
    /// Empty means zero slack in every domain.
    #[serde(default)]
    pub slack: Vec<usize>,
}

impl DenseConstraints {
    pub fn new(budget: usize) -> Self {
        DenseConstraints {
            budget,
            slack: Vec::new(),
        }
    }

    pub fn with_slack(mut self, slack: Vec<usize>) -> Self {
        self.slack = slack;
        self
    }

    /// Fewest rows each domain may keep: `K_i + α_i`.
    pub fn min_kept(&self, model: &MultilinearModel) -> Result<Vec<usize>> {
        let r = model.order();
        if !self.slack.is_empty() && self.slack.len() != r {
            return Err(Error::Infeasible(format!(
                "{} slack values for {r} domains",
                self.slack.len()
            )));
        }
        model
            .dims()
            .iter()
            .zip(model.core_dims())
            .enumerate()
            .map(|(i, (&n, k))| {
                let need = k + self.slack.get(i).copied().unwrap_or(0);
                if need > n {
                    Err(Error::Infeasible(format!(
                        "domain {i} needs {need} rows but has only {n}"
                    )))
                } else {
                    Ok(need)
                }
            })
            .collect()
    }

    /// Removal caps `N_i − K_i − α_i`, after checking `Σ(K_i + α_i) ≤ L ≤ N`.
    pub fn caps(&self, model: &MultilinearModel) -> Result<Vec<usize>> {
        let min_kept = self.min_kept(model)?;
        let floor: usize = min_kept.iter().sum();
        let n = model.total_sensors();
        if self.budget < floor {
            return Err(Error::Infeasible(format!(
                "budget L = {} is below the identifiability floor {floor}",
                self.budget
            )));
        }
        if self.budget > n {
            return Err(Error::Infeasible(format!(
                "budget L = {} exceeds the {n} available sensors",
                self.budget
            )));
        }
        Ok(model.dims().iter().zip(min_kept).map(|(&n, m)| n - m).collect())
    }
}

/// `F(L) = ∏ FP(Ψ_i(L_i))`.
pub fn fp_factorized(model: &MultilinearModel, sel: &Selection) -> Result<f64> {
    let sampled = subselect(model, sel)?;
    Ok(sampled.factors().iter().map(frame_potential).product())
}

/// Row-inner-product tables for evaluating `G` without rebuilding matrices.
#[derive(Clone, Debug)]
pub struct DenseObjective {
    tables: Vec<RowTable>,
    full_fp: Vec<f64>,
}

impl DenseObjective {
    pub fn new(model: &MultilinearModel) -> Self {
        let tables: Vec<RowTable> = model.factors().iter().map(row_inner_products).collect();
        let full_fp = tables
            .iter()
            .map(|t| t.frame_potential_of(&(0..t.len()).collect::<Vec<_>>()))
            .collect();
        DenseObjective { tables, full_fp }
    }

    pub fn tables(&self) -> &[RowTable] {
        &self.tables
    }

    /// `F_i(N_i)` per domain.
    pub fn full_domain_fp(&self) -> &[f64] {
        &self.full_fp
    }

    /// `F(N)`
    pub fn full_fp(&self) -> f64 {
        self.full_fp.iter().product()
    }

    pub fn domain_fp(&self, d: usize, kept: &[usize]) -> f64 {
        self.tables[d].frame_potential_of(kept)
    }

    /// `F(L)` for kept sets.
    pub fn fp(&self, sel: &Selection) -> f64 {
        sel.kept()
            .iter()
            .enumerate()
            .map(|(d, k)| self.domain_fp(d, k))
            .product()
    }

    /// `G(S) = F(N) − F(N ∖ S)`.
    pub fn g(&self, comp: &Complement) -> f64 {
        if comp.is_empty() {
            return 0.0;
        }
        self.full_fp() - self.fp(&Selection::from_complement(comp))
    }
}

/// `G(S)`. Emptying a domain drops its frame potential to 0, so `G` is defined on every `S`.
pub fn objective_g(model: &MultilinearModel, comp: &Complement) -> Result<f64> {
    comp.check_against(model)?;
    Ok(DenseObjective::new(model).g(comp))
}

struct DenseState<'a> {
    obj: &'a DenseObjective,
    kept: Vec<Vec<bool>>,
    fp: Vec<f64>,
    row_sums: Vec<Vec<f64>>,
    others: f64,
}

impl<'a> DenseState<'a> {
    fn new(obj: &'a DenseObjective) -> Self {
        let row_sums = obj
            .tables
            .iter()
            .map(|t| (0..t.len()).map(|x| t.abs_sq_row(x).iter().sum()).collect())
            .collect();
        DenseState {
            obj,
            kept: obj.tables.iter().map(|t| vec![true; t.len()]).collect(),
            fp: obj.full_fp.clone(),
            row_sums,
            others: 1.0,
        }
    }

    fn fp_without(&self, d: usize, x: usize) -> f64 {
        self.fp[d] - 2.0 * self.row_sums[d][x] + self.obj.tables[d].abs_sq(x, x)
    }
}

impl RemovalObjective for DenseState<'_> {
    fn domains(&self) -> usize {
        self.kept.len()
    }

    fn domain_len(&self, d: usize) -> usize {
        self.kept[d].len()
    }

    fn is_kept(&self, d: usize, x: usize) -> bool {
        self.kept[d][x]
    }

    fn begin_domain(&mut self, d: usize) {
        self.others = self
            .fp
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != d)
            .map(|(_, f)| f)
            .product();
    }

    fn score_removal(&self, d: usize, x: usize) -> f64 {
        // maximizing G(S ∪ {x}) is minimizing the remaining product
        -(self.fp_without(d, x) * self.others)
    }

    fn commit(&mut self, d: usize, x: usize) {
        self.fp[d] = self.fp_without(d, x);
        self.kept[d][x] = false;
        let table = &self.obj.tables[d];
        for (y, s) in self.row_sums[d].iter_mut().enumerate() {
            *s -= table.abs_sq(y, x);
        }
    }

    fn objective(&self) -> f64 {
        self.obj.full_fp() - self.fp.iter().product::<f64>()
    }
}

fn require_dense(model: &MultilinearModel) -> Result<()> {
    if model.core_kind() != CoreKind::Dense {
        return Err(Error::InvalidModel("expected a dense-core model".into()));
    }
    Ok(())
}

/// Greedy removal path down to the smallest feasible budget.
///
/// `selection_after(N − L)` on the result is the greedy design for every budget `L`
/// allowed by the slack.
pub fn greedy_dense_path(model: &MultilinearModel, slack: &[usize]) -> Result<GreedyTrace> {
    let min_kept = DenseConstraints::new(0).with_slack(slack.to_vec()).min_kept(model)?;
    let floor = min_kept.iter().sum();
    greedy_dense(model, &DenseConstraints::new(floor).with_slack(slack.to_vec()))
}

/// Greedy design of the kept sets for a dense-core model.
pub fn greedy_dense(model: &MultilinearModel, cons: &DenseConstraints) -> Result<GreedyTrace> {
    require_dense(model)?;
    let caps = cons.caps(model)?;
    let removals = model.total_sensors() - cons.budget;
    let obj = DenseObjective::new(model);
    let mut state = DenseState::new(&obj);
    let steps = run_greedy(&mut state, &caps, removals);
    debug_assert_eq!(steps.len(), removals);

    let comp = complement_from_steps(&model.dims(), &steps);
    let selection = Selection::from_complement(&comp);
    let sampled = subselect(model, &selection)?;
    for (i, psi) in sampled.factors().iter().enumerate() {
        if !psi.has_full_column_rank() {
            return Err(Error::unidentifiable(
                i,
                format!("greedy selection leaves a rank-deficient {}x{} factor", psi.rows(), psi.cols()),
            ));
        }
    }
    let fp_per_domain: Vec<f64> = selection
        .kept()
        .iter()
        .enumerate()
        .map(|(d, k)| obj.domain_fp(d, k))
        .collect();
    Ok(GreedyTrace {
        objective_final: steps.last().map_or(0.0, |s| s.objective),
        fp_final: fp_per_domain.iter().product(),
        fp_per_domain,
        gamma: fp_near_optimality_gamma(model, &selection)?,
        steps,
        selection,
        rank_check: None,
    })
}

/// Smallest squared row norm among the selected rows of the full Kronecker factor,
/// `∏_d min_{i ∈ L_d} ‖u_{d,i}‖²`.
pub(crate) fn min_row_norm_sq(model: &MultilinearModel, sel: &Selection) -> Result<f64> {
    sel.check_against(model)?;
    Ok(model
        .factors()
        .iter()
        .zip(sel.kept())
        .map(|(u, kept)| {
            kept.iter()
                .map(|&r| u.row(r).iter().map(|z| z.norm_sqr()).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .product())
}

/// Frame-potential approximation factor `γ = ½(K · L_min⁻² · ∏ F_i(N_i) + 1)` with
/// `K = Σ K_i`.
pub fn fp_near_optimality_gamma(model: &MultilinearModel, sel: &Selection) -> Result<f64> {
    let l_min = min_row_norm_sq(model, sel)?;
    let k: usize = model.core_dims().iter().sum();
    let full: f64 = model.factors().iter().map(frame_potential).product();
    Ok(0.5 * (k as f64 * full / (l_min * l_min) + 1.0))
}
