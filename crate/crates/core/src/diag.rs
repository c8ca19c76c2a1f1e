//! Sampling design for diagonal-core models.
//!
//! The Grammian of a sampled Khatri-Rao factor is the Hadamard product of the per-domain
//! Grammians, so its frame potential is `P(L) = ‖T_1(L_1) ∘ … ∘ T_R(L_R)‖²_F`. The greedy
//! designer maximizes `Q(S) = P(N) − P(N ∖ S)` under the identifiability caps `β_i`.
//!
//! A candidate removal `x` from domain `i` is scored against the leave-one-out product
//! `𝕋_{−i}` of the other domains: `P' = Σ_ab |𝕋_{−i}[a,b]|² · |T_i[a,b] − conj(u_a) u_b|²`,
//! which costs `O(K_c²)` per candidate.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dense::min_row_norm_sq;
use crate::error::{Error, Result};
use crate::greedy::{complement_from_steps, run_greedy, GreedyTrace, RemovalObjective};
use crate::multilinear::{
    add_row_outer, complement_grammian, frame_potential, grammian, grammian_of_rows,
    hadamard_all, subselect, Complement, CoreKind, Matrix, MultilinearModel, Selection, C64,
    FULL_RANK_RTOL, ZERO_TOL,
};

/// Largest number of (near-)zero entries in any column.
pub fn zero_count(u: &Matrix) -> usize {
    (0..u.cols())
        .map(|c| (0..u.rows()).filter(|&r| u[(r, c)].norm() < ZERO_TOL).count())
        .max()
        .unwrap_or(0)
}

/// Sensor budget, privileged domain `j` and optional extra slack per domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagConstraints {
    pub budget: usize,
    /// Domain that must reach rank `K_c`; defaults to the largest domain.
    #[serde(default)]
    pub privileged: Option<usize>,
    #[serde(default)]
    pub extra_slack: Vec<usize>,
}

/// Resolved per-domain bounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagBounds {
    pub privileged: usize,
    /// `z_i`
    pub zero_counts: Vec<usize>,
    /// Removal caps `β_i`.
    pub caps: Vec<usize>,
    /// `N_i − β_i`
    pub min_kept: Vec<usize>,
}

impl DiagConstraints {
    pub fn new(budget: usize) -> Self {
        DiagConstraints {
            budget,
            privileged: None,
            extra_slack: Vec::new(),
        }
    }

    pub fn with_privileged(mut self, j: usize) -> Self {
        self.privileged = Some(j);
        self
    }

    pub fn with_slack(mut self, slack: Vec<usize>) -> Self {
        self.extra_slack = slack;
        self
    }

    /// Per-domain minima: `max{K_c, z_j + 1}` for the privileged domain and
    /// `max{1, z_i + 1}` elsewhere, plus any extra slack.
    pub fn min_kept(&self, model: &MultilinearModel) -> Result<DiagBounds> {
        let CoreKind::Diagonal(kc) = model.core_kind() else {
            return Err(Error::InvalidModel("expected a diagonal-core model".into()));
        };
        let dims = model.dims();
        let r = dims.len();
        let j = match self.privileged {
            Some(j) if j >= r => {
                return Err(Error::Infeasible(format!("privileged domain {j} out of range")))
            }
            Some(j) => j,
            // first maximal N_i
            None => (0..r).fold(0, |best, i| if dims[i] > dims[best] { i } else { best }),
        };
        if !self.extra_slack.is_empty() && self.extra_slack.len() != r {
            return Err(Error::Infeasible(format!(
                "{} slack values for {r} domains",
                self.extra_slack.len()
            )));
        }
        let zero_counts: Vec<usize> = model.factors().iter().map(zero_count).collect();
        let mut min_kept = Vec::with_capacity(r);
        let mut caps = Vec::with_capacity(r);
        for i in 0..r {
            let base = if i == j { kc.max(zero_counts[i] + 1) } else { zero_counts[i] + 1 };
            let need = base + self.extra_slack.get(i).copied().unwrap_or(0);
            if need > dims[i] {
                return Err(Error::Infeasible(format!(
                    "domain {i} needs {need} rows but has only {}",
                    dims[i]
                )));
            }
            min_kept.push(need);
            caps.push(dims[i] - need);
        }
        Ok(DiagBounds {
            privileged: j,
            zero_counts,
            caps,
            min_kept,
        })
    }

    /// Bounds after checking `Σ(N_i − β_i) ≤ L ≤ N`.
    pub fn bounds(&self, model: &MultilinearModel) -> Result<DiagBounds> {
        let b = self.min_kept(model)?;
        let floor: usize = b.min_kept.iter().sum();
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
        Ok(b)
    }
}

/// Per-domain Grammians of the current kept sets, updated by rank-1 downdates.
#[derive(Clone, Debug)]
pub struct HadamardGramCache<'a> {
    model: &'a MultilinearModel,
    grams: Vec<DMatrix<C64>>,
    kept: Vec<Vec<bool>>,
}

impl<'a> HadamardGramCache<'a> {
    /// Cache for the full selection.
    pub fn new(model: &'a MultilinearModel) -> Self {
        HadamardGramCache {
            model,
            grams: model.factors().iter().map(|u| grammian(u).into_inner()).collect(),
            kept: model.dims().iter().map(|&n| vec![true; n]).collect(),
        }
    }

    /// Cache for `N ∖ S`, reached by downdating the full Grammians.
    pub fn from_complement(model: &'a MultilinearModel, comp: &Complement) -> Result<Self> {
        comp.check_against(model)?;
        let mut cache = HadamardGramCache::new(model);
        for (d, removed) in comp.removed().iter().enumerate() {
            for &x in removed {
                cache.remove(d, x);
            }
        }
        Ok(cache)
    }

    pub fn is_kept(&self, d: usize, x: usize) -> bool {
        self.kept[d][x]
    }

    /// `T_d ← T_d − conj(u_x)^T u_x`.
    pub fn remove(&mut self, d: usize, x: usize) {
        debug_assert!(self.kept[d][x]);
        add_row_outer(&mut self.grams[d], self.model.factor(d), x, -1.0);
        self.kept[d][x] = false;
    }

    pub fn grammian(&self, d: usize) -> Matrix {
        Matrix::wrap(self.grams[d].clone())
    }

    /// `𝕋 = T_1 ∘ … ∘ T_R`
    pub fn hadamard(&self) -> Matrix {
        let mut acc = self.grams[0].clone();
        for g in &self.grams[1..] {
            acc.component_mul_assign(g);
        }
        Matrix::wrap(acc)
    }

    /// `𝕋_{−d}`, the product of all Grammians except domain `d` (all-ones when `R = 1`).
    pub fn leave_one_out(&self, d: usize) -> Matrix {
        let kc = self.grams[0].nrows();
        let mut acc = DMatrix::from_element(kc, kc, C64::new(1.0, 0.0));
        for (i, g) in self.grams.iter().enumerate() {
            if i != d {
                acc.component_mul_assign(g);
            }
        }
        Matrix::wrap(acc)
    }

    /// `P = ‖𝕋‖²_F`
    pub fn frame_potential(&self) -> f64 {
        self.hadamard().frobenius_norm_sq()
    }
}

/// `P(L) = ‖T_1(L_1) ∘ … ∘ T_R(L_R)‖²_F`.
pub fn objective_p(model: &MultilinearModel, sel: &Selection) -> Result<f64> {
    sel.check_against(model)?;
    if let Some(i) = sel.kept().iter().position(Vec::is_empty) {
        return Err(Error::InvalidSelection(format!("domain {i} has no selected rows")));
    }
    let grams: Vec<Matrix> = model
        .factors()
        .iter()
        .zip(sel.kept())
        .map(|(u, k)| grammian_of_rows(u, k))
        .collect();
    Ok(hadamard_all(&grams)?.frobenius_norm_sq())
}

/// `Q(S) = P(N) − P(N ∖ S)`, with `T_i(N_i ∖ S_i)` obtained by downdating `T_i(N_i)`.
pub fn objective_q(model: &MultilinearModel, comp: &Complement) -> Result<f64> {
    comp.check_against(model)?;
    if comp.is_empty() {
        return Ok(0.0);
    }
    let full: Vec<Matrix> = model.factors().iter().map(grammian).collect();
    let reduced: Vec<Matrix> = model
        .factors()
        .iter()
        .zip(comp.removed())
        .map(|(u, s)| complement_grammian(u, s))
        .collect();
    Ok(hadamard_all(&full)?.frobenius_norm_sq() - hadamard_all(&reduced)?.frobenius_norm_sq())
}

struct DiagState<'a> {
    cache: HadamardGramCache<'a>,
    rows: Vec<Vec<Vec<C64>>>,
    full_p: f64,
    weights: Vec<f64>,
}

impl<'a> DiagState<'a> {
    fn new(model: &'a MultilinearModel) -> Self {
        let cache = HadamardGramCache::new(model);
        let full_p = cache.frame_potential();
        DiagState {
            rows: model.factors().iter().map(Matrix::to_rows).collect(),
            cache,
            full_p,
            weights: Vec::new(),
        }
    }
}

impl RemovalObjective for DiagState<'_> {
    fn domains(&self) -> usize {
        self.rows.len()
    }

    fn domain_len(&self, d: usize) -> usize {
        self.rows[d].len()
    }

    fn is_kept(&self, d: usize, x: usize) -> bool {
        self.cache.is_kept(d, x)
    }

    fn begin_domain(&mut self, d: usize) {
        // column-major, matching the Grammian storage
        self.weights = self
            .cache
            .leave_one_out(d)
            .as_inner()
            .iter()
            .map(|z| z.norm_sqr())
            .collect();
    }

    fn score_removal(&self, d: usize, x: usize) -> f64 {
        let t = &self.cache.grams[d];
        let u = &self.rows[d][x];
        let k = u.len();
        let mut p = 0.0;
        for b in 0..k {
            let ub = u[b];
            let col = b * k;
            for a in 0..k {
                let v = t[col + a] - u[a].conj() * ub;
                p += self.weights[col + a] * v.norm_sqr();
            }
        }
        -p
    }

    fn commit(&mut self, d: usize, x: usize) {
        self.cache.remove(d, x);
    }

    fn objective(&self) -> f64 {
        self.full_p - self.cache.frame_potential()
    }
}

/// Identifiability diagnostics for a Khatri-Rao sampled factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    /// Sufficient condition met: no all-zero column anywhere and `rank(Ψ_j) = K_c`.
    pub full_rank: bool,
    pub privileged: usize,
    pub privileged_rank: usize,
    pub required_rank: usize,
    /// `(domain, column)` pairs of all-zero columns in the sampled factors.
    pub zero_columns: Vec<(usize, usize)>,
}

pub fn kr_rank_check(model: &MultilinearModel, sel: &Selection, j: usize) -> Result<RankReport> {
    sel.check_against(model)?;
    if j >= model.order() {
        return Err(Error::InvalidSelection(format!("privileged domain {j} out of range")));
    }
    let kc = model.core_dims()[0];
    let mut zero_columns = Vec::new();
    let mut privileged_rank = 0;
    for (d, (u, kept)) in model.factors().iter().zip(sel.kept()).enumerate() {
        if kept.is_empty() {
            zero_columns.extend((0..kc).map(|c| (d, c)));
            continue;
        }
        let psi = u.select_rows(kept)?;
        zero_columns.extend(
            (0..kc)
                .filter(|&c| (0..psi.rows()).all(|r| psi[(r, c)].norm() < ZERO_TOL))
                .map(|c| (d, c)),
        );
        if d == j {
            privileged_rank = psi.numerical_rank(FULL_RANK_RTOL);
        }
    }
    Ok(RankReport {
        full_rank: zero_columns.is_empty() && privileged_rank == kc,
        privileged: j,
        privileged_rank,
        required_rank: kc,
        zero_columns,
    })
}

/// Greedy design of the kept sets for a diagonal-core model.
pub fn greedy_diag(model: &MultilinearModel, cons: &DiagConstraints) -> Result<GreedyTrace> {
    let bounds = cons.bounds(model)?;
    let removals = model.total_sensors() - cons.budget;
    let mut state = DiagState::new(model);
    let steps = run_greedy(&mut state, &bounds.caps, removals);
    debug_assert_eq!(steps.len(), removals);

    let comp = complement_from_steps(&model.dims(), &steps);
    let selection = Selection::from_complement(&comp);
    let report = kr_rank_check(model, &selection, bounds.privileged)?;
    if !report.full_rank {
        return Err(Error::unidentifiable(
            bounds.privileged,
            format!(
                "privileged factor has rank {} of {}, {} all-zero columns",
                report.privileged_rank,
                report.required_rank,
                report.zero_columns.len()
            ),
        ));
    }
    let sampled = subselect(model, &selection)?;
    Ok(GreedyTrace {
        objective_final: steps.last().map_or(0.0, |s| s.objective),
        fp_final: state.cache.frame_potential(),
        fp_per_domain: sampled.factors().iter().map(frame_potential).collect(),
        gamma: fp_near_optimality_gamma_diag(model, &selection)?,
        steps,
        selection,
        rank_check: Some(report),
    })
}

/// Greedy removal path down to the smallest feasible budget.
pub fn greedy_diag_path(
    model: &MultilinearModel,
    privileged: Option<usize>,
    extra_slack: &[usize],
) -> Result<GreedyTrace> {
    let mut cons = DiagConstraints::new(0).with_slack(extra_slack.to_vec());
    cons.privileged = privileged;
    cons.budget = cons.min_kept(model)?.min_kept.iter().sum();
    greedy_diag(model, &cons)
}

/// `γ = ½(P(N) · K_c · L_min⁻² + 1)`, with `L_min` the smallest squared norm among the
/// selected rows of the full Khatri-Rao factor.
pub fn fp_near_optimality_gamma_diag(model: &MultilinearModel, sel: &Selection) -> Result<f64> {
    let l_min = min_row_norm_sq(model, sel)?;
    let kc = model.core_len() as f64;
    let full = objective_p(model, &Selection::full(&model.dims()))?;
    Ok(0.5 * (full * kc / (l_min * l_min) + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_model() -> MultilinearModel {
        let u1 = Matrix::from_rows(&[[1.0, 0.5], [0.2, 1.0], [1.0, -1.0], [0.7, 0.3]]).unwrap();
        let u2 = Matrix::from_rows(&[
            [0.3, 1.0],
            [1.0, 0.1],
            [-0.4, 0.8],
            [1.2, 1.0],
            [0.5, -0.6],
        ])
        .unwrap();
        MultilinearModel::diagonal(vec![u1, u2]).unwrap()
    }

    #[test]
    fn zero_count_cases() {
        assert_eq!(zero_count(&Matrix::ones(3, 2)), 0);
        assert_eq!(zero_count(&Matrix::identity(3)), 2);
        let u = Matrix::from_rows(&[[1.0, 0.0], [0.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(zero_count(&u), 1);
    }

    #[test]
    fn bounds_default_to_largest_domain() {
        let m = diag_model();
        let b = DiagConstraints::new(4).bounds(&m).unwrap();
        assert_eq!(b.privileged, 1);
        assert_eq!(b.min_kept, vec![1, 2]);
        assert_eq!(b.caps, vec![3, 3]);
        assert!(DiagConstraints::new(2).bounds(&m).is_err());
        assert!(DiagConstraints::new(4).with_privileged(2).bounds(&m).is_err());
    }

    #[test]
    fn q_of_empty_is_zero_and_full_budget_is_identity() {
        let m = diag_model();
        assert_eq!(objective_q(&m, &Complement::empty(&[4, 5])).unwrap(), 0.0);
        let t = greedy_diag(&m, &DiagConstraints::new(9)).unwrap();
        assert!(t.steps.is_empty());
        assert_eq!(t.objective_final, 0.0);
    }

    #[test]
    fn p_of_single_unit_rows_is_one() {
        let u1 = Matrix::from_rows(&[[0.6, 0.8], [1.0, 1.0]]).unwrap();
        let u2 = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]).unwrap();
        // rank-1 Grammians; ‖T_1 ∘ T_2‖² = Σ |u_a v_a|² |u_b v_b|² = (Σ_a u_a² v_a²)²
        let m = MultilinearModel::diagonal(vec![u1, u2]).unwrap();
        let sel = Selection::new(&[2, 3], vec![vec![0], vec![0]]).unwrap();
        assert!((objective_p(&m, &sel).unwrap() - 0.36f64.powi(2)).abs() < 1e-15);
        let one = MultilinearModel::diagonal(vec![Matrix::from_rows(&[[0.6, 0.8]]).unwrap()]).unwrap();
        let sel = Selection::full(&[1]);
        assert!((objective_p(&one, &sel).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_check_cases() {
        let m = diag_model();
        assert!(kr_rank_check(&m, &Selection::full(&[4, 5]), 1).unwrap().full_rank);
        let short = Selection::new(&[4, 5], vec![vec![0], vec![2]]).unwrap();
        let r = kr_rank_check(&m, &short, 1).unwrap();
        assert!(!r.full_rank);
        assert_eq!(r.privileged_rank, 1);

        let u1 = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0]]).unwrap();
        let u2 = Matrix::from_rows(&[[1.0, 2.0], [3.0, 1.0], [0.0, 1.0]]).unwrap();
        let m = MultilinearModel::diagonal(vec![u1, u2]).unwrap();
        let sel = Selection::new(&[2, 3], vec![vec![0], vec![0, 1]]).unwrap();
        let r = kr_rank_check(&m, &sel, 1).unwrap();
        assert_eq!(r.zero_columns, vec![(0, 1)]);
        assert!(!r.full_rank);
    }
}
