//! Greedy maximization under a truncated partition matroid.
//!
//! Both samplers maximize a normalized, monotone, submodular surrogate over the set `S` of
//! *removed* rows. Each iteration adds to `S` the feasible element with the largest
//! objective value; an element of domain `i` is feasible while `|S_i|` is below that
//! domain's cap. Running `N − L` iterations leaves exactly `L` kept sensors.

use serde::{Deserialize, Serialize};

use crate::diag::RankReport;
use crate::error::Result;
use crate::multilinear::{Complement, Selection};

/// One committed removal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub domain: usize,
    pub element: usize,
    /// Increase of the surrogate caused by this removal.
    pub gain: f64,
    /// Surrogate value after the removal.
    pub objective: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreedyTrace {
    #[serde(rename = "iterations")]
    pub steps: Vec<GreedyStep>,
    pub selection: Selection,
    /// Surrogate (`G` or `Q`) at termination.
    pub objective_final: f64,
    /// Frame potential of the sampled Kronecker or Khatri-Rao factor.
    pub fp_final: f64,
    /// Frame potential of every sampled per-domain factor.
    pub fp_per_domain: Vec<f64>,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_check: Option<RankReport>,
}

impl GreedyTrace {
    /// Kept sets after only the first `removals` iterations.
    ///
    /// The uniform-matroid bound only caps the iteration count, so this is exactly the
    /// greedy answer for a budget of `N − removals` sensors.
    pub fn selection_after(&self, removals: usize) -> Selection {
        let dims = self.selection.dims();
        let mut removed = vec![Vec::new(); dims.len()];
        for step in self.steps.iter().take(removals) {
            removed[step.domain].push(step.element);
        }
        let comp = Complement::new(dims, removed).expect("trace steps are valid removals");
        Selection::from_complement(&comp)
    }

    pub fn objective_values(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.objective).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Incremental surrogate over removals, driven by [`run_greedy`].
pub(crate) trait RemovalObjective {
    fn domains(&self) -> usize;
    fn domain_len(&self, d: usize) -> usize;
    fn is_kept(&self, d: usize, x: usize) -> bool;
    /// Refresh per-domain caches before scoring candidates of domain `d`.
    fn begin_domain(&mut self, _d: usize) {}
    /// Score of removing `x` from domain `d`; larger means a larger surrogate afterwards.
    fn score_removal(&self, d: usize, x: usize) -> f64;
    fn commit(&mut self, d: usize, x: usize);
    /// Current surrogate value.
    fn objective(&self) -> f64;
}

/// Runs up to `removals` iterations. Ties go to the lowest domain, then the lowest element.
pub(crate) fn run_greedy<O: RemovalObjective>(
    obj: &mut O,
    caps: &[usize],
    removals: usize,
) -> Vec<GreedyStep> {
    let mut removed = vec![0usize; obj.domains()];
    let mut steps = Vec::with_capacity(removals);
    let mut current = obj.objective();
    for _ in 0..removals {
        let mut best: Option<(f64, usize, usize)> = None;
        for d in 0..obj.domains() {
            if removed[d] >= caps[d] {
                continue;
            }
            obj.begin_domain(d);
            for x in 0..obj.domain_len(d) {
                if !obj.is_kept(d, x) {
                    continue;
                }
                let s = obj.score_removal(d, x);
                if best.is_none_or(|(b, _, _)| s > b) {
                    best = Some((s, d, x));
                }
            }
        }
        let Some((_, d, x)) = best else { break };
        obj.commit(d, x);
        removed[d] += 1;
        let next = obj.objective();
        steps.push(GreedyStep {
            domain: d,
            element: x,
            gain: next - current,
            objective: next,
        });
        current = next;
    }
    steps
}

pub(crate) fn complement_from_steps(dims: &[usize], steps: &[GreedyStep]) -> Complement {
    let mut removed = vec![Vec::new(); dims.len()];
    for s in steps {
        removed[s.domain].push(s.element);
    }
    Complement::new(dims, removed).expect("greedy removals are distinct and in range")
}
