use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::env::{ActionValue, Observation, RewardSpec};

/// One flow's view of one control window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    /// End of the window, seconds.
    pub time_s: f64,
    pub flow: usize,
    pub observation: Observation,
    pub executed: ActionValue,
    pub proposed: ActionValue,
    /// Reward earned by the window that just ended.
    pub reward: f64,
    pub sent: u64,
    pub acks: u64,
    pub losses: u64,
    pub in_flight: u64,
    /// Whether sent == acked + lost + in flight held at this tick.
    pub conserved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub flow: usize,
    pub packets_sent: u64,
    pub packets_acked: u64,
    pub packets_lost: u64,
    pub packets_in_flight: u64,
    /// Timeout declarations later contradicted by an ACK.
    pub spurious_losses: u64,
    /// Packets of this flow discarded by full queues.
    pub queue_drops: u64,
    pub min_rtt_observed: f64,
    /// ACKed payload over the measurement interval, bits/s.
    pub throughput_bps: f64,
    pub final_intersend: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortSummary {
    pub name: String,
    pub max_occupancy: usize,
    pub drops: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Bits leaving the forward bottleneck over `C` times the measurement interval.
    pub utilization: f64,
    /// Mean of all RTT samples in the measurement interval, seconds. `None`
    /// if nothing was acknowledged.
    pub mean_rtt: Option<f64>,
    /// Packets dropped by any queue over the whole run.
    pub loss_count: u64,
    pub measure_start_s: f64,
    pub measure_end_s: f64,
    pub analytic_min_rtt: f64,
    pub conservation_violations: u64,
    pub events: u64,
    pub ports: Vec<PortSummary>,
}

/// Everything a run produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub records: Vec<WindowRecord>,
    pub flows: Vec<FlowSummary>,
    pub summary: RunSummary,
    pub reward_spec: RewardSpec,
}

#[derive(Serialize)]
struct CsvRow {
    time_s: f64,
    flow_id: usize,
    x1: f64,
    x2: f64,
    x3: f64,
    x4: f64,
    action: f64,
    reward: f64,
    acks: u64,
    losses: u64,
}

impl SimTrace {
    /// One row per (flow, window), times in seconds.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        if self.records.is_empty() {
            out.write_record([
                "time_s", "flow_id", "x1", "x2", "x3", "x4", "action", "reward", "acks", "losses",
            ])?;
        }
        for r in &self.records {
            out.serialize(CsvRow {
                time_s: r.time_s,
                flow_id: r.flow,
                x1: r.observation.x1,
                x2: r.observation.x2,
                x3: r.observation.x3,
                x4: r.observation.x4,
                action: r.executed.get(),
                reward: r.reward,
                acks: r.acks,
                losses: r.losses,
            })?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn flow_records(&self, flow: usize) -> impl Iterator<Item = &WindowRecord> {
        self.records.iter().filter(move |r| r.flow == flow)
    }

    pub fn throughputs(&self) -> Vec<f64> {
        self.flows.iter().map(|f| f.throughput_bps).collect()
    }
}
