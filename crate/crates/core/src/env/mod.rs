//! The control loop seen from a sender: observations, actions, rewards and
//! experience collection.

mod collect;
mod dataset;
mod mdp;

pub use collect::{collect, CollectSpec};
pub use dataset::{ExperienceDataset, ExperienceRow, Provenance};
pub use mdp::{
    apply_action, build_observation, reward, ActionValue, Bounds, IntersendBounds, Observation,
    RewardSpec, Units, WindowStats, ACTION_MAX, ACTION_MIN,
};

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("observation violates its invariants: {0:?}")]
    InvalidObservation(Observation),
    #[error("action {0} outside [0.8, 1.5]")]
    ActionOutOfRange(f64),
    #[error("invalid bounds: need finite lo < hi, got ({lo}, {hi})")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("epsilon {0} outside [0, 1]")]
    InvalidEpsilon(f64),
    #[error("expert unavailable: {0}")]
    ExpertUnavailable(String),
    #[error(transparent)]
    Sim(#[from] crate::netsim::SimError),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
