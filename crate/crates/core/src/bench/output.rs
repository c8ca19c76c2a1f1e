use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const CSV_HEADER: [&str; 8] = [
    "experiment",
    "realization",
    "L",
    "L_tilde",
    "method",
    "snr_db",
    "mse",
    "mse_db_norm",
];

/// One line of `results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub realization: usize,
    pub sensors: usize,
    pub samples: u64,
    pub method: String,
    pub snr_db: Option<f64>,
    pub mse: f64,
    /// `10·log10(mse / unsampled mse)`
    pub mse_db_norm: f64,
}

/// Stable ordering by realization, budget, method and SNR; rows that tie (the individual
/// random draws) keep their generation order.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.experiment
            .cmp(&b.experiment)
            .then(a.realization.cmp(&b.realization))
            .then(a.sensors.cmp(&b.sensors))
            .then(a.method.cmp(&b.method))
            .then(
                a.snr_db
                    .unwrap_or(f64::NEG_INFINITY)
                    .total_cmp(&b.snr_db.unwrap_or(f64::NEG_INFINITY)),
            )
    });
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.realization.to_string(),
            r.sensors.to_string(),
            r.samples.to_string(),
            r.method.clone(),
            r.snr_db.map(|s| s.to_string()).unwrap_or_default(),
            r.mse.to_string(),
            r.mse_db_norm.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Nearest-rank percentile: the `⌈p/100 · n⌉`-th smallest value (1-based).
pub fn nearest_rank(n: usize, p: f64) -> usize {
    let rank = (p / 100.0 * n as f64).ceil() as usize;
    rank.clamp(1, n) - 1
}

/// Index of the nearest-rank percentile of `values` (ties broken by position).
pub fn percentile_index(values: &[f64], p: f64) -> usize {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order[nearest_rank(values.len(), p)]
}

pub fn median(values: &[f64]) -> f64 {
    values[percentile_index(values, 50.0)]
}

pub fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}
