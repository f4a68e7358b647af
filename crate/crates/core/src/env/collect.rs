use serde::{Deserialize, Serialize};

use super::{EnvError, ExperienceDataset, ExperienceRow, Provenance};
use crate::netsim::{self, Scenario, SimError};
use crate::policy::{EpsilonGreedy, PolicyError, PolicyHandle};

/// Parameters of one collection run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectSpec {
    pub scenario: Scenario,
    /// Probability of executing a uniform random action instead of the expert's.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub seed: u64,
}

fn default_epsilon() -> f64 {
    0.5
}

// Decorrelates the exploration stream from the simulator's start offsets.
const EXPLORATION_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Runs the scenario under ε-greedy control and records, for every flow and
/// window, the visited state paired with the expert's proposed action.
pub fn collect(expert: &PolicyHandle, spec: &CollectSpec) -> Result<ExperienceDataset, EnvError> {
    if !(0.0..=1.0).contains(&spec.epsilon) {
        return Err(EnvError::InvalidEpsilon(spec.epsilon));
    }
    let policy = expert
        .build()
        .map_err(|e| EnvError::ExpertUnavailable(e.to_string()))?;
    let mut agent = EpsilonGreedy::new(policy, spec.epsilon, spec.seed ^ EXPLORATION_SALT);
    let trace = match netsim::run(&spec.scenario, &mut agent, spec.seed) {
        Ok(t) => t,
        Err(SimError::Policy(e)) => return Err(expert_failure(e)),
        Err(e) => return Err(e.into()),
    };
    let rows: Vec<ExperienceRow> = trace
        .records
        .iter()
        .map(|r| ExperienceRow::new(r.observation, r.proposed))
        .collect();
    let provenance = Provenance {
        scenario: spec.scenario.clone(),
        seed: spec.seed,
        epsilon: spec.epsilon,
        expert: expert.describe(),
        reward_bounds: trace.reward_spec,
        rows: rows.len(),
    };
    Ok(ExperienceDataset {
        rows,
        provenance: vec![provenance],
    })
}

fn expert_failure(e: PolicyError) -> EnvError {
    EnvError::ExpertUnavailable(e.to_string())
}
