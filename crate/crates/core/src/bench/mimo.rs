//! Multiuser source separation with a uniform rectangular array and binary spreading codes.
//!
//! User `k` transmits BPSK symbols with power `p_k`. The array response along each axis is a
//! steering vector and the third domain is the user's ±1 spreading code, so one symbol period
//! is a rank-`K_c` tensor with a diagonal core `√p_k · s_k`.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, MimoParams};
use super::output::{db, percentile_index, ResultRow};
use super::random::{complex_gaussian, random_kron_sampler};
use super::synthetic::realization_seed;
use crate::diag::{greedy_diag, DiagConstraints};
use crate::error::{Error, Result};
use crate::greedy::GreedyTrace;
use crate::multilinear::{
    multilinear_apply, subselect, CoreVector, Matrix, MultilinearModel, Selection, C64,
};
use crate::recon::{metrics, LsEstimator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MimoScene {
    /// Elevation `θ_k` in radians, one per user.
    pub elevation: Vec<f64>,
    /// Azimuth `φ_k` in radians.
    pub azimuth: Vec<f64>,
    /// Element spacings in wavelengths.
    pub delta_x: f64,
    pub delta_y: f64,
    /// Array grid `N_1 × N_2`.
    pub grid: (usize, usize),
    /// `N_3 × K_c` matrix of ±1 chips, row-major.
    pub codes: Vec<Vec<f64>>,
    pub powers: Vec<f64>,
}

/// `K` angles equispaced strictly inside `(−max, max)`.
pub fn equispaced_angles(k: usize, max_rad: f64) -> Vec<f64> {
    (0..k)
        .map(|i| -max_rad + 2.0 * max_rad * (i + 1) as f64 / (k + 1) as f64)
        .collect()
}

impl MimoScene {
    /// Equispaced users (azimuth in reverse order of elevation) with random codes and
    /// log-uniform powers.
    pub fn random<R: Rng + ?Sized>(
        dims: &[usize],
        users: usize,
        params: &MimoParams,
        rng: &mut R,
    ) -> Self {
        let elevation = equispaced_angles(users, params.max_angle_deg.to_radians());
        let azimuth = elevation.iter().rev().copied().collect();
        let [lo, hi] = params.power_range;
        let powers = (0..users)
            .map(|_| (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp())
            .collect();
        let codes = (0..dims[2])
            .map(|_| (0..users).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
            .collect();
        MimoScene {
            elevation,
            azimuth,
            delta_x: params.delta_x,
            delta_y: params.delta_y,
            grid: (dims[0], dims[1]),
            codes,
            powers,
        }
    }

    pub fn users(&self) -> usize {
        self.powers.len()
    }

    /// Per-sample signal power `Σ p_k` (all factor entries have unit modulus).
    pub fn signal_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.signal_power() / 10f64.powf(snr_db / 10.0)
    }
}

fn steering(n: usize, delta: f64, angles: &[f64]) -> Result<Matrix> {
    Matrix::from_fn(n, angles.len(), |i, k| {
        C64::from_polar(1.0, 2.0 * PI * i as f64 * delta * angles[k].sin())
    })
}

/// Diagonal-core model with `U_1` and `U_2` the array responses and `U_3` the codes.
pub fn build_mimo_model(scene: &MimoScene) -> Result<MultilinearModel> {
    let u1 = steering(scene.grid.0, scene.delta_x, &scene.elevation)?;
    let u2 = steering(scene.grid.1, scene.delta_y, &scene.azimuth)?;
    let u3 = Matrix::from_rows(&scene.codes)?;
    MultilinearModel::diagonal(vec![u1, u2, u3])
}

/// Monte-Carlo symbol MSE, `mean |ĝ_k − g_k|²` over users and periods.
pub fn simulate_symbol_mse<R: Rng + ?Sized>(
    scene: &MimoScene,
    sampled: &MultilinearModel,
    noise_variance: f64,
    periods: usize,
    rng: &mut R,
) -> Result<f64> {
    let est = LsEstimator::new(sampled)?;
    let amps: Vec<f64> = scene.powers.iter().map(|p| p.sqrt()).collect();
    let mut err = 0.0;
    for _ in 0..periods {
        let g = CoreVector(
            amps.iter()
                .map(|&a| C64::new(if rng.random::<bool>() { a } else { -a }, 0.0))
                .collect(),
        );
        let mut y = multilinear_apply(sampled, &g)?;
        for v in &mut y {
            *v += complex_gaussian(noise_variance, rng);
        }
        let g_hat = est.estimate(&y)?;
        err += g_hat
            .as_slice()
            .iter()
            .zip(g.as_slice())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>();
    }
    Ok(err / (periods * scene.users()) as f64)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub noise_variance: f64,
    pub greedy_mse: f64,
    pub unsampled_mse: f64,
    pub random_best: Option<f64>,
    pub random_median: Option<f64>,
    pub random_worst: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MimoReport {
    pub realization: usize,
    pub seed: u64,
    pub scene: MimoScene,
    pub trace: GreedyTrace,
    pub points: Vec<SnrPoint>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MimoOutcome {
    pub rows: Vec<ResultRow>,
    pub realizations: Vec<MimoReport>,
}

fn run_realization(cfg: &ExperimentConfig, m: usize) -> Result<(Vec<ResultRow>, MimoReport)> {
    let start = Instant::now();
    let seed = realization_seed(cfg.seed, m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kc = cfg.core_rank.expect("validated config");
    let budget = cfg.budget.expect("validated config");
    let scene = MimoScene::random(&cfg.dims, kc, &cfg.mimo, &mut rng);
    let model = build_mimo_model(&scene)?;

    let mut cons = DiagConstraints::new(budget).with_slack(cfg.slack.clone());
    cons.privileged = cfg.privileged;
    let trace = greedy_diag(&model, &cons)?;
    let greedy = subselect(&model, &trace.selection)?;
    // unsampled reference: σ² tr(T⁻¹) / K_c
    let full_trace = metrics(&model)?.mse / kc as f64;

    let mut random_min = DiagConstraints::new(budget);
    random_min.privileged = cfg.privileged;
    let min_kept = random_min.min_kept(&model)?.min_kept;
    let draws = (0..cfg.random_draws)
        .map(|_| {
            let sel = random_kron_sampler(&model, &min_kept, budget, &mut rng)?;
            let sampled = subselect(&model, &sel)?;
            Ok((sel, sampled))
        })
        .collect::<Result<Vec<(Selection, MultilinearModel)>>>()?;

    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &snr in &cfg.snr_db {
        let sigma2 = scene.noise_variance(snr);
        let unsampled_mse = sigma2 * full_trace;
        let row = |sel: &Selection, method: &str, mse: f64| ResultRow {
            experiment: cfg.label().to_string(),
            realization: m,
            sensors: sel.sensors(),
            samples: sel.samples(),
            method: method.to_string(),
            snr_db: Some(snr),
            mse,
            mse_db_norm: db(mse / unsampled_mse),
        };
        let greedy_mse = simulate_symbol_mse(&scene, &greedy, sigma2, cfg.symbol_periods, &mut rng)?;
        rows.push(row(&trace.selection, "greedy", greedy_mse));
        rows.push(row(&Selection::full(&cfg.dims), "unsampled", unsampled_mse));

        let mut point = SnrPoint {
            snr_db: snr,
            noise_variance: sigma2,
            greedy_mse,
            unsampled_mse,
            random_best: None,
            random_median: None,
            random_worst: None,
        };
        if !draws.is_empty() {
            let mses = draws
                .iter()
                .map(|(_, s)| simulate_symbol_mse(&scene, s, sigma2, cfg.symbol_periods, &mut rng))
                .collect::<Result<Vec<f64>>>()?;
            let best = percentile_index(&mses, 0.0);
            let mid = percentile_index(&mses, 50.0);
            let worst = percentile_index(&mses, 100.0);
            rows.push(row(&draws[best].0, "random-best", mses[best]));
            rows.push(row(&draws[mid].0, "random-median", mses[mid]));
            rows.push(row(&draws[worst].0, "random-worst", mses[worst]));
            point.random_best = Some(mses[best]);
            point.random_median = Some(mses[mid]);
            point.random_worst = Some(mses[worst]);
        }
        points.push(point);
    }
    Ok((
        rows,
        MimoReport {
            realization: m,
            seed,
            scene,
            trace,
            points,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    ))
}

pub fn run_mimo(cfg: &ExperimentConfig) -> Result<MimoOutcome> {
    if cfg.kind != ExperimentKind::Mimo {
        return Err(Error::Config(format!("{} is not a mimo experiment", cfg.kind.as_str())));
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
    Ok(MimoOutcome { rows, realizations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::zero_count;

    fn scene() -> MimoScene {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        MimoScene::random(&[4, 5, 6], 3, &MimoParams::default(), &mut rng)
    }

    #[test]
    fn angles_are_interior_and_equispaced() {
        let a = equispaced_angles(3, 60f64.to_radians());
        let deg: Vec<f64> = a.iter().map(|x| x.to_degrees()).collect();
        for (got, want) in deg.iter().zip([-30.0, 0.0, 30.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn model_structure() {
        let s = scene();
        let m = build_mimo_model(&s).unwrap();
        assert_eq!(m.dims(), vec![4, 5, 6]);
        for u in m.factors() {
            assert_eq!(zero_count(u), 0);
            for r in 0..u.rows() {
                for c in 0..u.cols() {
                    assert!((u[(r, c)].norm() - 1.0).abs() < 1e-12);
                }
            }
        }
        // the middle user sits at zero elevation: all-ones steering column
        for r in 0..4 {
            assert!((m.factor(0)[(r, 1)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(s.powers.iter().all(|&p| (0.25..=4.0).contains(&p)));
    }

    #[test]
    fn noiseless_symbols_are_exact() {
        let s = scene();
        let m = build_mimo_model(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mse = simulate_symbol_mse(&s, &m, 0.0, 10, &mut rng).unwrap();
        assert!(mse < 1e-20);
    }
}
