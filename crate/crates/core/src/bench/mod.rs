//! Experiment harness: random baselines, the exhaustive oracle, synthetic sweeps and the
//! multiuser array experiment, with CSV and JSON output.

pub mod config;
pub mod mimo;
pub mod oracle;
pub mod output;
pub mod random;
pub mod synthetic;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, ExperimentKind, LSweep, MimoParams};
pub use mimo::{build_mimo_model, run_mimo, MimoScene};
pub use oracle::{exhaustive_diag, exhaustive_dense, exhaustive_oracle, OracleResult, SEARCH_LIMIT};
pub use output::{sort_rows, write_results, ResultRow};
pub use random::random_kron_sampler;
pub use synthetic::{compare_with_random, greedy_staircases, run_synthetic, staircase, StaircaseReport, SweepComparison};

use crate::dense::{greedy_dense, DenseConstraints};
use crate::diag::{greedy_diag, DiagConstraints};
use crate::error::{Error, Result};
use crate::greedy::GreedyTrace;
use crate::multilinear::{subselect, CoreKind, MultilinearModel, Selection};
use crate::recon::metrics;
use output::{db, median};
use random::{random_dense_model, random_diag_model};

/// Greedy against the exhaustive optimum on one random instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleInstance {
    pub instance: usize,
    pub core: CoreKind,
    pub budget: usize,
    pub greedy_objective: f64,
    pub optimal_objective: f64,
    /// `greedy / optimal`, 1 when the optimum is 0.
    pub ratio: f64,
    pub greedy_fp: f64,
    pub optimal_fp: f64,
    pub gamma: f64,
    /// `FP(greedy) ≤ γ · FP(optimal)`
    pub fp_bound_holds: bool,
    pub greedy_selection: Selection,
    pub optimal_selection: Selection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleSummary {
    pub core: CoreKind,
    pub instances: usize,
    pub min_ratio: f64,
    pub median_ratio: f64,
    pub below_half: usize,
    pub fp_bound_violations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleComparison {
    pub summaries: Vec<OracleSummary>,
    pub records: Vec<OracleInstance>,
}

fn compare_one(model: &MultilinearModel, budget: usize, cfg: &ExperimentConfig, instance: usize) -> Result<OracleInstance> {
    let (trace, opt): (GreedyTrace, OracleResult) = if model.is_diagonal() {
        let mut cons = DiagConstraints::new(budget).with_slack(cfg.slack.clone());
        cons.privileged = cfg.privileged;
        (greedy_diag(model, &cons)?, exhaustive_diag(model, &cons, SEARCH_LIMIT)?)
    } else {
        let cons = DenseConstraints::new(budget).with_slack(cfg.slack.clone());
        (greedy_dense(model, &cons)?, exhaustive_dense(model, &cons, SEARCH_LIMIT)?)
    };
    let ratio = if opt.objective > 0.0 { trace.objective_final / opt.objective } else { 1.0 };
    Ok(OracleInstance {
        instance,
        core: model.core_kind(),
        budget,
        greedy_objective: trace.objective_final,
        optimal_objective: opt.objective,
        ratio,
        greedy_fp: trace.fp_final,
        optimal_fp: opt.fp,
        gamma: trace.gamma,
        fp_bound_holds: trace.fp_final <= trace.gamma * opt.fp * (1.0 + 1e-12),
        greedy_selection: trace.selection,
        optimal_selection: opt.selection,
    })
}

fn summarize(core: CoreKind, records: &[&OracleInstance]) -> OracleSummary {
    let ratios: Vec<f64> = records.iter().map(|r| r.ratio).collect();
    OracleSummary {
        core,
        instances: records.len(),
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        median_ratio: median(&ratios),
        below_half: ratios.iter().filter(|&&r| r < 0.5).count(),
        fp_bound_violations: records.iter().filter(|r| !r.fp_bound_holds).count(),
    }
}

/// Greedy versus exhaustive search on `cfg.instances` random models per configured core kind.
/// Budgets come from `budget`, else the sweep, else one sensor above the floor.
pub fn run_oracle_compare(cfg: &ExperimentConfig) -> Result<OracleComparison> {
    let mut kinds = Vec::new();
    if cfg.ranks.len() == cfg.dims.len() {
        kinds.push(None);
    }
    if let Some(kc) = cfg.core_rank {
        kinds.push(Some(kc));
    }
    if kinds.is_empty() {
        return Err(Error::Config("oracle comparison needs ranks and/or core_rank".into()));
    }
    let mut records = Vec::new();
    for kc in kinds {
        let part = (0..cfg.instances)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(synthetic::realization_seed(cfg.seed, i));
                let model = match kc {
                    None => random_dense_model(&cfg.dims, &cfg.ranks, cfg.unit_rows, &mut rng)?,
                    Some(kc) => random_diag_model(&cfg.dims, kc, cfg.unit_rows, &mut rng)?,
                };
                let floor: usize = match kc {
                    None => DenseConstraints::new(0).with_slack(cfg.slack.clone()).min_kept(&model)?.iter().sum(),
                    Some(_) => {
                        let mut c = DiagConstraints::new(0).with_slack(cfg.slack.clone());
                        c.privileged = cfg.privileged;
                        c.min_kept(&model)?.min_kept.iter().sum()
                    }
                };
                let budgets = match (cfg.budget, &cfg.l_sweep) {
                    (Some(b), _) => vec![b],
                    (None, Some(s)) => s.values(),
                    (None, None) => vec![(floor + 1).min(model.total_sensors())],
                };
                budgets
                    .into_iter()
                    .map(|b| compare_one(&model, b, cfg, i))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        records.extend(part.into_iter().flatten());
    }
    let mut summaries = Vec::new();
    for core in [CoreKind::Dense, CoreKind::Diagonal(cfg.core_rank.unwrap_or(0))] {
        let mine: Vec<&OracleInstance> = records.iter().filter(|r| r.core == core).collect();
        if !mine.is_empty() {
            summaries.push(summarize(core, &mine));
        }
    }
    Ok(OracleComparison { summaries, records })
}

fn oracle_rows(cfg: &ExperimentConfig, cmp: &OracleComparison) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for r in &cmp.records {
        // rebuild the instance to score both selections by reconstruction MSE
        let mut rng = ChaCha8Rng::seed_from_u64(synthetic::realization_seed(cfg.seed, r.instance));
        let model = match r.core {
            CoreKind::Dense => random_dense_model(&cfg.dims, &cfg.ranks, cfg.unit_rows, &mut rng)?,
            CoreKind::Diagonal(kc) => random_diag_model(&cfg.dims, kc, cfg.unit_rows, &mut rng)?,
        };
        let unsampled = metrics(&model)?.mse;
        let label = match r.core {
            CoreKind::Dense => "dense",
            CoreKind::Diagonal(_) => "diag",
        };
        for (sel, method) in [(&r.greedy_selection, "greedy"), (&r.optimal_selection, "oracle")] {
            let mse = metrics(&subselect(&model, sel)?)?.mse;
            rows.push(ResultRow {
                experiment: format!("{}-{label}", cfg.label()),
                realization: r.instance,
                sensors: sel.sensors(),
                samples: sel.samples(),
                method: method.to_string(),
                snr_db: None,
                mse,
                mse_db_norm: db(mse / unsampled),
            });
        }
    }
    Ok(rows)
}

/// Everything an experiment run produces.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub report: serde_json::Value,
}

/// Runs the configured experiment on the current rayon pool. Rows come back sorted.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let start = Instant::now();
    let (mut rows, details) = match cfg.kind {
        ExperimentKind::SyntheticDense | ExperimentKind::SyntheticDiag => {
            let out = run_synthetic(cfg)?;
            let comparison = compare_with_random(&out.rows, 1.2, 5);
            let details = serde_json::json!({
                "realizations": out.realizations,
                "comparison": comparison,
                "staircase": greedy_staircases(&out.rows),
            });
            (out.rows, details)
        }
        ExperimentKind::Mimo => {
            let out = run_mimo(cfg)?;
            (out.rows, serde_json::json!({ "realizations": out.realizations }))
        }
        ExperimentKind::OracleCompare => {
            let cmp = run_oracle_compare(cfg)?;
            (oracle_rows(cfg, &cmp)?, serde_json::to_value(&cmp)?)
        }
    };
    sort_rows(&mut rows);
    let report = serde_json::json!({
        "experiment": cfg.label(),
        "kind": cfg.kind,
        "seed": cfg.seed,
        "config": cfg,
        "wall_time_s": start.elapsed().as_secs_f64(),
        "designs": details,
    });
    Ok(ExperimentOutput { rows, report })
}

/// Runs `cfg` on a pool of `threads` workers (0 = rayon default) and writes
/// `results.csv` and `report.json` into `out_dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, out_dir: &Path, threads: usize) -> Result<ExperimentOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let out = pool.install(|| run_experiment(cfg))?;
    fs::create_dir_all(out_dir)?;
    write_results(&out.rows, BufWriter::new(File::create(out_dir.join("results.csv"))?))?;
    let json = serde_json::to_string_pretty(&out.report)?;
    fs::write(out_dir.join("report.json"), json + "\n")?;
    Ok(out)
}
