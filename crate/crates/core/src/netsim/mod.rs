//! Discrete-event simulation of a dumbbell network with rate-based senders.

mod event;
mod queue;
mod sim;
mod topology;
mod trace;

use serde::{Deserialize, Serialize};

pub use event::{EventKind, EventQueue};
pub use queue::{DropTailQueue, Enqueue};
pub use sim::{run, FlowState};
pub use topology::Topology;
pub use trace::{FlowSummary, PortSummary, RunSummary, SimTrace, WindowRecord};

use crate::policy::PolicyError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid `{field}`: {reason}")]
    ConfigInvalid { field: &'static str, reason: String },
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// A topology plus the timing of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub topology: Topology,
    pub duration_s: f64,
    /// Control window; one observation and action per flow per window.
    #[serde(default = "default_window")]
    pub window_s: f64,
    /// Leading fraction of the run left out of utilization, RTT and
    /// throughput statistics.
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
    /// Starting intersend time; defaults to [`Topology::default_initial_intersend`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_intersend_s: Option<f64>,
}

fn default_window() -> f64 {
    1e-3
}

fn default_warmup() -> f64 {
    0.1
}

impl Scenario {
    pub fn new(topology: Topology, duration_s: f64) -> Self {
        Self {
            topology,
            duration_s,
            window_s: default_window(),
            warmup_fraction: default_warmup(),
            initial_intersend_s: None,
        }
    }

    pub fn with_initial_intersend(mut self, x1: f64) -> Self {
        self.initial_intersend_s = Some(x1);
        self
    }

    pub fn initial_intersend(&self) -> f64 {
        self.initial_intersend_s
            .unwrap_or_else(|| self.topology.default_initial_intersend())
    }

    /// Number of window ticks in the run.
    pub fn window_count(&self) -> u64 {
        (self.duration_s / self.window_s + 1e-9).floor() as u64
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.topology.validate()?;
        let invalid = |field, reason: String| Err(SimError::ConfigInvalid { field, reason });
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return invalid(
                "duration_s",
                format!("must be positive, got {}", self.duration_s),
            );
        }
        if !(self.window_s.is_finite() && self.window_s > 0.0) {
            return invalid(
                "window_s",
                format!("must be positive, got {}", self.window_s),
            );
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return invalid(
                "warmup_fraction",
                format!("must lie in [0, 1), got {}", self.warmup_fraction),
            );
        }
        if let Some(x1) = self.initial_intersend_s {
            if !(x1.is_finite() && x1 > 0.0) {
                return invalid("initial_intersend_s", format!("must be positive, got {x1}"));
            }
        }
        Ok(())
    }
}
