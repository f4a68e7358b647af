use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{aggregate, jain_index, MetricAggregate, MetricsRow, AGGREGATION_FORMULA};
use super::EvalError;
use crate::netsim::{self, Scenario, SimTrace, Topology};
use crate::policy::{PolicyHandle, SharedPolicy};

/// A grid of scenarios sharing one duration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub name: String,
    pub duration_s: f64,
    pub capacities_bps: Vec<f64>,
    pub pair_counts: Vec<usize>,
    /// One repetition per seed.
    pub seeds: Vec<u64>,
    /// Template for everything except capacity and pair count.
    #[serde(default = "default_template")]
    pub topology: Topology,
    #[serde(default = "default_window")]
    pub window_s: f64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
}

fn default_template() -> Topology {
    Topology::new(1e9, 1)
}

fn default_window() -> f64 {
    1e-3
}

fn default_warmup() -> f64 {
    0.1
}

const PHASE_CAPACITIES: [f64; 3] = [250e6, 500e6, 1000e6];

impl PhaseSpec {
    /// 1 s runs over C ∈ {250, 500, 1000} Mbps and p ∈ {1, 5, 10, 15, 20}.
    pub fn phase_one() -> Self {
        Self {
            name: "phase-1".into(),
            duration_s: 1.0,
            capacities_bps: PHASE_CAPACITIES.to_vec(),
            pair_counts: vec![1, 5, 10, 15, 20],
            seeds: vec![0],
            topology: default_template(),
            window_s: default_window(),
            warmup_fraction: default_warmup(),
        }
    }

    /// 20 s runs over the same capacities and p ∈ {1, 5, 10, ..., 40}.
    pub fn phase_two() -> Self {
        let mut pairs = vec![1];
        pairs.extend((5..=40).step_by(5));
        Self {
            name: "phase-2".into(),
            duration_s: 20.0,
            pair_counts: pairs,
            ..Self::phase_one()
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |field, reason: &str| {
            Err(EvalError::Spec {
                field,
                reason: reason.into(),
            })
        };
        if self.capacities_bps.is_empty() {
            return bad("capacities_bps", "grid is empty");
        }
        if self.pair_counts.is_empty() {
            return bad("pair_counts", "grid is empty");
        }
        if self.seeds.is_empty() {
            return bad("seeds", "need at least one repetition");
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return bad("seeds", "seeds must be distinct");
        }
        for s in self.scenarios() {
            s.1.validate()?;
        }
        Ok(())
    }

    /// `(id, scenario, seed)` in grid order: capacity, then pairs, then seed.
    pub fn scenarios(&self) -> Vec<(String, Scenario, u64)> {
        let mut out = Vec::new();
        for &c in &self.capacities_bps {
            for &p in &self.pair_counts {
                for &seed in &self.seeds {
                    let topology = Topology {
                        bottleneck_capacity_bps: c,
                        pair_count: p,
                        ..self.topology.clone()
                    };
                    let scenario = Scenario {
                        topology,
                        duration_s: self.duration_s,
                        window_s: self.window_s,
                        warmup_fraction: self.warmup_fraction,
                        initial_intersend_s: None,
                    };
                    out.push((scenario_id(c, p, seed), scenario, seed));
                }
            }
        }
        out
    }
}

pub fn scenario_id(capacity_bps: f64, pairs: usize, seed: u64) -> String {
    format!("C{}M-p{pairs:02}-s{seed}", capacity_bps / 1e6)
}

/// Simulates one scenario under `policy` and condenses it into a row.
pub fn run_scenario(
    id: &str,
    scenario: &Scenario,
    seed: u64,
    policy: &PolicyHandle,
) -> Result<(MetricsRow, SimTrace), EvalError> {
    let mut agent = SharedPolicy::from_handle(policy)?;
    let trace = netsim::run(scenario, &mut agent, seed)?;
    let (lo, hi) = trace
        .records
        .iter()
        .map(|r| r.executed.get())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
            (lo.min(a), hi.max(a))
        });
    let row = MetricsRow {
        scenario: id.to_string(),
        capacity_bps: scenario.topology.bottleneck_capacity_bps,
        pairs: scenario.topology.pair_count,
        seed,
        utilization: trace.summary.utilization,
        mean_rtt_s: trace.summary.mean_rtt,
        loss_count: trace.summary.loss_count,
        jain: jain_index(&trace.throughputs()).ok(),
        min_action: lo,
        max_action: hi,
        conservation_violations: trace.summary.conservation_violations,
    };
    Ok((row, trace))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    pub phase: String,
    pub policy: String,
    pub rows: Vec<MetricsRow>,
    pub aggregate: Vec<MetricAggregate>,
    pub aggregation: String,
}

impl PhaseResult {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Runs every scenario of `spec` (in parallel on the current rayon pool) and
/// returns rows in grid order plus the normalized aggregate.
pub fn run_phase(spec: &PhaseSpec, policy: &PolicyHandle) -> Result<PhaseResult, EvalError> {
    spec.validate()?;
    let rows = spec
        .scenarios()
        .par_iter()
        .map(|(id, scenario, seed)| {
            log::info!("{}: running {id}", spec.name);
            run_scenario(id, scenario, *seed, policy).map(|(row, _)| row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PhaseResult {
        phase: spec.name.clone(),
        policy: policy.describe(),
        aggregate: aggregate(&rows),
        aggregation: AGGREGATION_FORMULA.into(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ActionValue;

    #[test]
    fn grid_sizes() {
        assert_eq!(PhaseSpec::phase_one().scenarios().len(), 15);
        let two = PhaseSpec::phase_two();
        assert_eq!(two.pair_counts, [1, 5, 10, 15, 20, 25, 30, 35, 40]);
        assert_eq!(two.scenarios().len(), 27);
        assert_eq!(two.name, "phase-2");
    }

    #[test]
    fn repeated_seeds_rejected() {
        let spec = PhaseSpec {
            seeds: vec![1, 1],
            ..PhaseSpec::phase_one()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn capacity_matched_single_flow() {
        let t = Topology::new(250e6, 1);
        let scenario =
            Scenario::new(t.clone(), 0.2).with_initial_intersend(t.bottleneck_serialization());
        let policy = PolicyHandle::Constant(ActionValue::NEUTRAL);
        let (row, _) = run_scenario("x", &scenario, 0, &policy).unwrap();
        assert!(row.utilization >= 0.99);
        assert_eq!(row.jain, Some(1.0));
        assert_eq!(row.loss_count, 0);
    }

    #[test]
    fn rows_keep_grid_order_and_are_deterministic() {
        let spec = PhaseSpec {
            duration_s: 0.02,
            pair_counts: vec![1, 3],
            capacities_bps: vec![250e6, 1e9],
            seeds: vec![4, 5],
            ..PhaseSpec::phase_one()
        };
        let p = PolicyHandle::from_name("sp1", Default::default()).unwrap();
        let a = run_phase(&spec, &p).unwrap();
        let b = run_phase(&spec, &p).unwrap();
        assert_eq!(a, b);
        let ids: Vec<_> = a.rows.iter().map(|r| r.scenario.as_str()).collect();
        assert_eq!(ids[0], "C250M-p01-s4");
        assert_eq!(ids[7], "C1000M-p03-s5");
    }
}
