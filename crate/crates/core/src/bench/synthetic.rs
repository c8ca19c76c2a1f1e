//! Greedy versus random sampling on random Gaussian factor models.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::output::{db, median, percentile_index, ResultRow};
use super::random::{random_dense_model, random_diag_model, random_kron_sampler};
use crate::dense::greedy_dense_path;
use crate::diag::{greedy_diag_path, DiagConstraints};
use crate::error::{Error, Result};
use crate::greedy::GreedyTrace;
use crate::multilinear::{subselect, MultilinearModel, Selection};
use crate::recon::metrics;

/// Random-baseline percentiles emitted per budget.
pub const PERCENTILES: [(f64, &str); 3] = [(10.0, "random-p10"), (50.0, "random-p50"), (90.0, "random-p90")];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DesignPoint {
    pub sensors: usize,
    pub samples: u64,
    pub kept: Vec<Vec<usize>>,
    pub fp: f64,
    pub mse: f64,
    pub mse_db_norm: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RealizationReport {
    pub realization: usize,
    pub seed: u64,
    pub unsampled_mse: f64,
    /// Greedy removal path down to the smallest budget; every design point is a prefix.
    pub trace: GreedyTrace,
    pub points: Vec<DesignPoint>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticOutcome {
    pub rows: Vec<ResultRow>,
    pub realizations: Vec<RealizationReport>,
}

pub fn realization_seed(base: u64, m: usize) -> u64 {
    base.wrapping_add(m as u64)
}

fn random_model(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<MultilinearModel> {
    match cfg.kind {
        ExperimentKind::SyntheticDense => random_dense_model(&cfg.dims, &cfg.ranks, cfg.unit_rows, rng),
        _ => random_diag_model(&cfg.dims, cfg.core_rank.unwrap_or(1), cfg.unit_rows, rng),
    }
}

fn greedy_path(cfg: &ExperimentConfig, model: &MultilinearModel) -> Result<GreedyTrace> {
    if model.is_diagonal() {
        greedy_diag_path(model, cfg.privileged, &cfg.slack)
    } else {
        greedy_dense_path(model, &cfg.slack)
    }
}

/// Per-domain minima for random draws: bare identifiability, no slack.
pub fn random_min_kept(cfg: &ExperimentConfig, model: &MultilinearModel) -> Result<Vec<usize>> {
    if model.is_diagonal() {
        let mut cons = DiagConstraints::new(0);
        cons.privileged = cfg.privileged;
        Ok(cons.min_kept(model)?.min_kept)
    } else {
        Ok(model.core_dims())
    }
}

/// Budgets of the sweep, checked against the greedy path's range.
pub fn sweep_values(cfg: &ExperimentConfig, floor: usize, n: usize) -> Result<Vec<usize>> {
    let values = match &cfg.l_sweep {
        Some(s) => s.values(),
        None => (floor..=n).collect(),
    };
    if let Some(&l) = values.iter().find(|&&l| l < floor || l > n) {
        return Err(Error::Infeasible(format!(
            "sweep budget L = {l} outside the feasible range [{floor}, {n}]"
        )));
    }
    Ok(values)
}

fn run_realization(cfg: &ExperimentConfig, m: usize) -> Result<(Vec<ResultRow>, RealizationReport)> {
    let start = Instant::now();
    let seed = realization_seed(cfg.seed, m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = random_model(cfg, &mut rng)?;
    let dims = model.dims();
    let n = model.total_sensors();
    let trace = greedy_path(cfg, &model)?;
    let floor = n - trace.steps.len();
    let sweep = sweep_values(cfg, floor, n)?;
    let unsampled = metrics(&subselect(&model, &Selection::full(&dims))?)?.mse;

    let row = |sel: &Selection, method: &str, mse: f64| ResultRow {
        experiment: cfg.label().to_string(),
        realization: m,
        sensors: sel.sensors(),
        samples: sel.samples(),
        method: method.to_string(),
        snr_db: None,
        mse,
        mse_db_norm: db(mse / unsampled),
    };

    let mut rows = Vec::new();
    let mut points = Vec::with_capacity(sweep.len());
    for &l in &sweep {
        let sel = trace.selection_after(n - l);
        let met = metrics(&subselect(&model, &sel)?)?;
        if met.unidentifiable {
            return Err(Error::unidentifiable(None, format!("greedy design for L = {l}")));
        }
        rows.push(row(&sel, "greedy", met.mse));
        points.push(DesignPoint {
            sensors: l,
            samples: sel.samples(),
            kept: sel.kept().to_vec(),
            fp: met.fp,
            mse: met.mse,
            mse_db_norm: db(met.mse / unsampled),
        });
    }

    if cfg.random_draws > 0 {
        let min_kept = random_min_kept(cfg, &model)?;
        for &l in &sweep {
            let mut draws = Vec::with_capacity(cfg.random_draws);
            for _ in 0..cfg.random_draws {
                let sel = random_kron_sampler(&model, &min_kept, l, &mut rng)?;
                let mse = metrics(&subselect(&model, &sel)?)?.mse;
                rows.push(row(&sel, "random", mse));
                draws.push((sel, mse));
            }
            let mses: Vec<f64> = draws.iter().map(|d| d.1).collect();
            for (p, name) in PERCENTILES {
                let (sel, mse) = &draws[percentile_index(&mses, p)];
                rows.push(row(sel, name, *mse));
            }
        }
    }

    Ok((
        rows,
        RealizationReport {
            realization: m,
            seed,
            unsampled_mse: unsampled,
            trace,
            points,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    ))
}

/// Runs every realization on the current rayon pool; results come back in realization order.
pub fn run_synthetic(cfg: &ExperimentConfig) -> Result<SyntheticOutcome> {
    if !matches!(cfg.kind, ExperimentKind::SyntheticDense | ExperimentKind::SyntheticDiag) {
        return Err(Error::Config(format!("{} is not a synthetic experiment", cfg.kind.as_str())));
    }
    let parts = (0..cfg.realizations)
        .into_par_iter()
        .map(|m| run_realization(cfg, m))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut realizations = Vec::new();
    for (r, rep) in parts {
        rows.extend(r);
        realizations.push(rep);
    }
    Ok(SyntheticOutcome { rows, realizations })
}

/// Greedy versus random at (nearly) equal sample counts for one budget.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepComparison {
    pub sensors: usize,
    /// Median `L̃` of the greedy designs across realizations.
    pub samples: u64,
    pub greedy_db: f64,
    /// Median normalized MSE of random draws whose `L̃` lies within the ratio window.
    pub random_db: Option<f64>,
    pub random_count: usize,
}

impl SweepComparison {
    pub fn greedy_not_worse(&self) -> Option<bool> {
        self.random_db.map(|r| self.greedy_db <= r)
    }
}

/// Pools all random draws and, for each greedy budget, compares the greedy median against
/// the median of draws with `L̃ ∈ [L̃_g / window, L̃_g · window]`. Points with fewer than
/// `min_draws` matches get no random reference.
pub fn compare_with_random(rows: &[ResultRow], window: f64, min_draws: usize) -> Vec<SweepComparison> {
    let random: Vec<&ResultRow> = rows.iter().filter(|r| r.method == "random").collect();
    let mut budgets: Vec<usize> = rows.iter().filter(|r| r.method == "greedy").map(|r| r.sensors).collect();
    budgets.sort_unstable();
    budgets.dedup();
    budgets
        .into_iter()
        .map(|l| {
            let greedy: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.method == "greedy" && r.sensors == l)
                .collect();
            let samples: Vec<f64> = greedy.iter().map(|r| r.samples as f64).collect();
            let target = median(&samples);
            let greedy_db = median(&greedy.iter().map(|r| r.mse_db_norm).collect::<Vec<_>>());
            let near: Vec<f64> = random
                .iter()
                .filter(|r| {
                    let s = r.samples as f64;
                    s >= target / window && s <= target * window
                })
                .map(|r| r.mse_db_norm)
                .collect();
            SweepComparison {
                sensors: l,
                samples: target as u64,
                greedy_db,
                random_db: (near.len() >= min_draws).then(|| median(&near)),
                random_count: near.len(),
            }
        })
        .collect()
}

/// Shape of one greedy MSE-versus-`L` curve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StaircaseReport {
    pub realization: usize,
    pub non_increasing: bool,
    /// Budgets where the per-step dB decrease at least doubles: a new domain starts growing.
    pub bumps: Vec<usize>,
}

/// Finds the bumps of a curve given as `(L, dB)` pairs sorted by `L`. A bump at `L_{k+1}` means
/// the decrease from `L_k` to `L_{k+1}` is at least twice the previous one and above `min_drop` dB.
pub fn staircase(realization: usize, curve: &[(usize, f64)], min_drop: f64) -> StaircaseReport {
    let drops: Vec<f64> = curve.windows(2).map(|w| w[0].1 - w[1].1).collect();
    let bumps = (1..drops.len())
        .filter(|&i| drops[i] > min_drop && drops[i] >= 2.0 * drops[i - 1])
        .map(|i| curve[i + 1].0)
        .collect();
    StaircaseReport {
        realization,
        // tolerance for the rounding of tr(T⁻¹) between equal designs
        non_increasing: drops.iter().all(|&d| d >= -1e-9),
        bumps,
    }
}

/// Staircase reports of the greedy curves in `rows`, one per realization.
pub fn greedy_staircases(rows: &[ResultRow]) -> Vec<StaircaseReport> {
    let mut curves: std::collections::BTreeMap<usize, Vec<(usize, f64)>> = Default::default();
    for r in rows.iter().filter(|r| r.method == "greedy") {
        curves.entry(r.realization).or_default().push((r.sensors, r.mse_db_norm));
    }
    curves
        .into_iter()
        .map(|(m, mut c)| {
            c.sort_by_key(|p| p.0);
            staircase(m, &c, 0.05)
        })
        .collect()
}
