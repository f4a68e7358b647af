//! JSON experiment configuration shared by every pipeline stage.
//!
//! Unknown fields are rejected at every level.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsr::RegressionConfig;
use crate::env::Units;
use crate::eval::{GridSpec, PhaseSpec};
use crate::netsim::Scenario;
use crate::policy::ExternalSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Units in which `x1` and `x2` are fed to expressions.
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub collect: CollectSection,
    #[serde(default)]
    pub regression: RegressionConfig,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default)]
    pub analyze: AnalyzeSection,
    /// Process serving actions for the policy name `external`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external: Option<ExternalSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub policy: String,
    pub seed: u64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            policy: "sp1".into(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollectSection {
    pub expert: String,
    pub epsilon: f64,
    /// One collection run per entry; empty means the scenario's own pair count.
    pub pair_counts: Vec<usize>,
    /// Seed of the first run; later runs use `seed + index`.
    pub seed: u64,
}

impl Default for CollectSection {
    fn default() -> Self {
        Self {
            expert: "scripted-expert".into(),
            epsilon: 0.5,
            pair_counts: Vec::new(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    pub phase: PhaseSpec,
    /// Seed of the held-out collection used for behavioural-cloning fitness.
    pub holdout_seed: u64,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self {
            phase: PhaseSpec::phase_one(),
            holdout_seed: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeSection {
    /// The minimum RTT of each capacity's default topology sets `c`.
    pub capacities_bps: Vec<f64>,
    pub grid: GridSpec,
    /// RTT ratios of the curve families.
    pub rtt_ratios: Vec<f64>,
    pub points: usize,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        Self {
            capacities_bps: vec![100e6, 250e6, 500e6, 1000e6],
            grid: GridSpec::default(),
            rtt_ratios: vec![1.0, 2.0, 4.0],
            points: 200,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, path: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: shown.clone(),
            source,
        })?;
        Self::from_json(&text, &shown)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |prefix: &str, field: &str, reason: String| ConfigError::Invalid {
            field: format!("{prefix}.{field}"),
            reason,
        };
        self.scenario.validate().map_err(|e| match e {
            crate::netsim::SimError::ConfigInvalid { field, reason } => {
                let prefix = if Self::is_timing(field) {
                    "scenario"
                } else {
                    "scenario.topology"
                };
                invalid(prefix, field, reason)
            }
            other => invalid("scenario", "?", other.to_string()),
        })?;
        if !(0.0..=1.0).contains(&self.collect.epsilon) {
            return Err(invalid(
                "collect",
                "epsilon",
                format!("must lie in [0, 1], got {}", self.collect.epsilon),
            ));
        }
        if self.collect.pair_counts.contains(&0) {
            return Err(invalid(
                "collect",
                "pair_counts",
                "pair counts must be positive".into(),
            ));
        }
        self.regression.validate().map_err(|e| match e {
            crate::dsr::DsrError::Config { field, reason } => invalid("regression", field, reason),
            other => invalid("regression", "tokens", other.to_string()),
        })?;
        self.evaluate.phase.validate().map_err(|e| match e {
            crate::eval::EvalError::Spec { field, reason } => {
                invalid("evaluate.phase", field, reason)
            }
            other => invalid("evaluate", "phase", other.to_string()),
        })?;
        if self.analyze.points == 0 {
            return Err(invalid("analyze", "points", "must be at least 1".into()));
        }
        if self
            .analyze
            .capacities_bps
            .iter()
            .any(|c| !(c.is_finite() && *c > 0.0))
        {
            return Err(invalid(
                "analyze",
                "capacities_bps",
                "capacities must be positive".into(),
            ));
        }
        Ok(())
    }

    fn is_timing(field: &str) -> bool {
        matches!(
            field,
            "duration_s" | "window_s" | "warmup_fraction" | "initial_intersend_s"
        )
    }

    /// Pair counts of the collection runs.
    pub fn collect_pairs(&self) -> Vec<usize> {
        if self.collect.pair_counts.is_empty() {
            vec![self.scenario.topology.pair_count]
        } else {
            self.collect.pair_counts.clone()
        }
    }
}
