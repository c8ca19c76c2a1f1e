use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SyntheticDense,
    SyntheticDiag,
    Mimo,
    OracleCompare,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::SyntheticDense => "synthetic-dense",
            ExperimentKind::SyntheticDiag => "synthetic-diag",
            ExperimentKind::Mimo => "mimo",
            ExperimentKind::OracleCompare => "oracle-compare",
        }
    }
}

/// Either an explicit list of budgets or an inclusive range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LSweep {
    List(Vec<usize>),
    Range {
        from: usize,
        to: usize,
        #[serde(default = "one")]
        step: usize,
    },
}

fn one() -> usize {
    1
}

impl LSweep {
    pub fn values(&self) -> Vec<usize> {
        match self {
            LSweep::List(v) => v.clone(),
            LSweep::Range { from, to, step } => (*from..=*to).step_by((*step).max(1)).collect(),
        }
    }
}

/// Array geometry and source statistics of the multiuser experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MimoParams {
    #[serde(default = "half")]
    pub delta_x: f64,
    #[serde(default = "half")]
    pub delta_y: f64,
    /// Users are spread over `(−max, max)` in both angles.
    #[serde(default = "sixty")]
    pub max_angle_deg: f64,
    #[serde(default = "power_range")]
    pub power_range: [f64; 2],
}

fn half() -> f64 {
    0.5
}

fn sixty() -> f64 {
    60.0
}

fn power_range() -> [f64; 2] {
    [0.25, 4.0]
}

impl Default for MimoParams {
    fn default() -> Self {
        MimoParams {
            delta_x: half(),
            delta_y: half(),
            max_angle_deg: sixty(),
            power_range: power_range(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Label for the `experiment` CSV column; defaults to the kind.
    #[serde(default)]
    pub name: Option<String>,
    /// `N_i`
    pub dims: Vec<usize>,
    /// `K_i` (dense core).
    #[serde(default)]
    pub ranks: Vec<usize>,
    /// `K_c` (diagonal core).
    #[serde(default)]
    pub core_rank: Option<usize>,
    /// `α_i` for the dense designer, extra slack for the diagonal one.
    #[serde(default)]
    pub slack: Vec<usize>,
    #[serde(default)]
    pub privileged: Option<usize>,
    /// Budgets to sweep; defaults to every feasible `L`.
    #[serde(default)]
    pub l_sweep: Option<LSweep>,
    /// Single budget for the multiuser experiment.
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default = "one")]
    pub realizations: usize,
    #[serde(default)]
    pub random_draws: usize,
    /// Scale the rows of random factors to unit norm. The frame potential weighs rows by
    /// their energy, so on raw Gaussian rows the greedy designer favors weak rows.
    #[serde(default)]
    pub unit_rows: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default = "symbol_periods")]
    pub symbol_periods: usize,
    #[serde(default)]
    pub mimo: MimoParams,
    /// Random instances for the oracle comparison.
    #[serde(default = "instances")]
    pub instances: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub long_running: bool,
}

fn symbol_periods() -> usize {
    200
}

fn instances() -> usize {
    50
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(self.kind.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("dims must be a nonempty list of positive counts".into());
        }
        if self.realizations == 0 {
            return bad("realizations must be positive".into());
        }
        if !self.slack.is_empty() && self.slack.len() != self.dims.len() {
            return bad(format!("{} slack values for {} domains", self.slack.len(), self.dims.len()));
        }
        if let Some(sweep) = &self.l_sweep {
            if sweep.values().is_empty() {
                return bad("l_sweep is empty".into());
            }
        }
        let dense_ok = self.ranks.len() == self.dims.len() && !self.ranks.contains(&0);
        let diag_ok = self.core_rank.is_some_and(|k| k > 0);
        match self.kind {
            ExperimentKind::SyntheticDense if !dense_ok => {
                bad("synthetic-dense needs one positive rank per domain".into())
            }
            ExperimentKind::SyntheticDiag if !diag_ok => {
                bad("synthetic-diag needs a positive core_rank".into())
            }
            ExperimentKind::Mimo => {
                if self.dims.len() != 3 {
                    return bad("mimo needs dims = [N_1, N_2, N_3]".into());
                }
                if !diag_ok || self.budget.is_none() {
                    return bad("mimo needs core_rank and budget".into());
                }
                if self.snr_db.is_empty() || self.symbol_periods == 0 {
                    return bad("mimo needs a nonempty snr_db sweep and symbol_periods > 0".into());
                }
                let [lo, hi] = self.mimo.power_range;
                if !(lo > 0.0 && hi >= lo) {
                    return bad("power_range must be positive and ordered".into());
                }
                if !(self.mimo.max_angle_deg > 0.0 && self.mimo.max_angle_deg < 90.0) {
                    return bad("max_angle_deg must lie in (0, 90)".into());
                }
                Ok(())
            }
            ExperimentKind::OracleCompare => {
                if !dense_ok && !diag_ok {
                    return bad("oracle-compare needs ranks and/or core_rank".into());
                }
                if self.instances == 0 {
                    return bad("instances must be positive".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}
