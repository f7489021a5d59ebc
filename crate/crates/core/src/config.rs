//! Experiment configuration files.
//!
//! Grammar (TOML):
//!
//! ```toml
//! name = "evaluation"       # experiment id, used in file names
//! seed = 1                  # master seed
//! out_dir = "results"       # relative paths resolve against the working directory
//! slots = 20000
//! repetitions = 200
//!
//! [channel]
//! mean = 0.3                # loss probability ~ N(mean, std_dev^2) clamped to [0, 1]
//! std_dev = 0.2
//! coherence = 30            # slots per fading block
//!
//! [sweep]
//! horizons = [1, 2, 3, 4, 5]
//! policies = ["fh", "greedy", "round_robin", "random", "max_aoi"]
//! dedup = "parent"          # optional; "parent" or "level"
//!
//! [[subsystem]]             # one table per control loop
//! a = [[1.0]]               # matrices are row-major nested arrays
//! b = [[1.0]]
//! noise_cov = [[1.0]]
//! q = [[1.0]]
//! r = [[0.0]]
//! period = 3                # sampling period in slots
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::channel::ChannelParams;
use crate::control::PlantModel;
use crate::error::{invalid, Error, Result};
use crate::scheduler::{Dedup, Policy};
use crate::sim::{SimConfig, SubsystemSpec};

/// The configuration shipped as `configs/evaluation.toml`.
pub const EVALUATION_CONFIG: &str = include_str!("../configs/evaluation.toml");

/// A base simulation plus the horizons and policies to sweep over.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    /// `base.horizon` and `base.policy` are overridden per sweep cell;
    /// `base.seed` is the master seed.
    pub base: SimConfig,
    pub horizons: Vec<usize>,
    pub policies: Vec<Policy>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    seed: u64,
    out_dir: PathBuf,
    slots: u64,
    repetitions: u64,
    channel: ChannelParams,
    sweep: RawSweep,
    subsystem: Vec<RawSubsystem>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    horizons: Vec<usize>,
    policies: Vec<String>,
    #[serde(default)]
    dedup: Dedup,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubsystem {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    noise_cov: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    period: i64,
}

fn matrix(field: String, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(invalid(field, "matrix must be non-empty"));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(invalid(field, "rows have different lengths"));
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        cols,
        rows.iter().flatten().copied(),
    ))
}

impl RawSubsystem {
    fn build(&self, i: usize) -> Result<SubsystemSpec> {
        let field = |name: &str| format!("subsystem[{i}].{name}");
        let model = PlantModel::new(
            matrix(field("a"), &self.a)?,
            matrix(field("b"), &self.b)?,
            matrix(field("noise_cov"), &self.noise_cov)?,
            matrix(field("q"), &self.q)?,
            matrix(field("r"), &self.r)?,
        )
        .map_err(|e| match e {
            Error::InvalidParameter { field: f, reason } => invalid(field(&f), reason),
            other => invalid(format!("subsystem[{i}]"), other.to_string()),
        })?;
        Ok(SubsystemSpec {
            model,
            period: self.period,
        })
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.sweep.horizons.is_empty() {
            return Err(invalid("sweep.horizons", "must list at least one horizon"));
        }
        if let Some(h) = raw.sweep.horizons.iter().find(|&&h| h == 0) {
            return Err(invalid(
                "sweep.horizons",
                format!("horizons must be >= 1, got {h}"),
            ));
        }
        if raw.sweep.policies.is_empty() {
            return Err(invalid("sweep.policies", "must list at least one policy"));
        }
        let policies = raw
            .sweep
            .policies
            .iter()
            .map(|p| {
                p.parse::<Policy>().map_err(|e| match e {
                    Error::InvalidParameter { reason, .. } => invalid("sweep.policies", reason),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let subsystems = raw
            .subsystem
            .iter()
            .enumerate()
            .map(|(i, s)| s.build(i))
            .collect::<Result<Vec<_>>>()?;
        let base = SimConfig {
            subsystems,
            horizon: raw.sweep.horizons[0],
            policy: policies[0],
            dedup: raw.sweep.dedup,
            slots: raw.slots,
            repetitions: raw.repetitions,
            channel: raw.channel,
            seed: raw.seed,
        };
        base.validate()?;
        Ok(Self {
            name: raw.name,
            base,
            horizons: raw.sweep.horizons,
            policies,
            out_dir: raw.out_dir,
        })
    }

    pub fn evaluation() -> Self {
        Self::from_toml(EVALUATION_CONFIG).expect("shipped config is valid")
    }
}

/// Reads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    ExperimentSpec::from_toml(&text)
}
