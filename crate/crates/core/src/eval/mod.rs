//! Experiment grids, performance metrics and policy analyses.

mod analysis;
mod metrics;
mod phase;

pub use analysis::{
    contour_grid, cosine_span, intersend_response, linspace, max_action_gap, write_rows,
    AnalysisGrid, Axis, GridCell, GridSpec, ResponsePoint, Slice, SpanPoint,
};
pub use metrics::{aggregate, jain_index, MetricAggregate, MetricsRow, AGGREGATION_FORMULA};
pub use phase::{run_phase, run_scenario, scenario_id, PhaseResult, PhaseSpec};

use crate::netsim::SimError;
use crate::policy::PolicyError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no flows to rate")]
    NoFlows,
    #[error("all throughputs are zero")]
    AllZero,
    #[error("throughput {0} is negative or not finite")]
    NegativeThroughput(f64),
    #[error("`{0}` is not rooted at cos")]
    NotCosineRooted(String),
    #[error("invalid `{field}`: {reason}")]
    Spec { field: &'static str, reason: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}
