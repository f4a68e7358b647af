use serde::{Deserialize, Serialize};

use super::SimError;

/// Dumbbell parameters: `pair_count` senders and receivers hanging off two
/// switches joined by one full-duplex bottleneck link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    /// Bottleneck capacity in bits/s.
    pub bottleneck_capacity_bps: f64,
    pub pair_count: usize,
    /// Access link capacity in bits/s.
    #[serde(default = "defaults::access_capacity_bps")]
    pub access_capacity_bps: f64,
    /// Per-port drop-tail limit in packets.
    #[serde(default = "defaults::queue_capacity")]
    pub queue_capacity: usize,
    #[serde(default = "defaults::data_packet_bytes")]
    pub data_packet_bytes: f64,
    #[serde(default = "defaults::ack_packet_bytes")]
    pub ack_packet_bytes: f64,
    /// One-way propagation of each access link, seconds.
    #[serde(default = "defaults::access_propagation_s")]
    pub access_propagation_s: f64,
    /// One-way propagation of the bottleneck link, seconds.
    #[serde(default = "defaults::bottleneck_propagation_s")]
    pub bottleneck_propagation_s: f64,
}

pub mod defaults {
    pub fn access_capacity_bps() -> f64 {
        20e9
    }
    pub fn queue_capacity() -> usize {
        100
    }
    pub fn data_packet_bytes() -> f64 {
        1500.0
    }
    pub fn ack_packet_bytes() -> f64 {
        64.0
    }
    pub fn access_propagation_s() -> f64 {
        1e-6
    }
    pub fn bottleneck_propagation_s() -> f64 {
        10e-6
    }
}

impl Topology {
    pub fn new(bottleneck_capacity_bps: f64, pair_count: usize) -> Self {
        Self {
            bottleneck_capacity_bps,
            pair_count,
            access_capacity_bps: defaults::access_capacity_bps(),
            queue_capacity: defaults::queue_capacity(),
            data_packet_bytes: defaults::data_packet_bytes(),
            ack_packet_bytes: defaults::ack_packet_bytes(),
            access_propagation_s: defaults::access_propagation_s(),
            bottleneck_propagation_s: defaults::bottleneck_propagation_s(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("bottleneck_capacity_bps", self.bottleneck_capacity_bps),
            ("access_capacity_bps", self.access_capacity_bps),
            ("data_packet_bytes", self.data_packet_bytes),
            ("ack_packet_bytes", self.ack_packet_bytes),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::ConfigInvalid {
                    field,
                    reason: format!("must be a positive finite number, got {v}"),
                });
            }
        }
        for (field, v) in [
            ("access_propagation_s", self.access_propagation_s),
            ("bottleneck_propagation_s", self.bottleneck_propagation_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::ConfigInvalid {
                    field,
                    reason: format!("must be a non-negative finite number, got {v}"),
                });
            }
        }
        if self.pair_count == 0 {
            return Err(SimError::ConfigInvalid {
                field: "pair_count",
                reason: "need at least one sender/receiver pair".into(),
            });
        }
        if self.queue_capacity == 0 {
            return Err(SimError::ConfigInvalid {
                field: "queue_capacity",
                reason: "must hold at least one packet".into(),
            });
        }
        Ok(())
    }

    pub fn data_bits(&self) -> f64 {
        self.data_packet_bytes * 8.0
    }

    pub fn ack_bits(&self) -> f64 {
        self.ack_packet_bytes * 8.0
    }

    /// Time to put one data packet on the bottleneck.
    pub fn bottleneck_serialization(&self) -> f64 {
        self.data_bits() / self.bottleneck_capacity_bps
    }

    /// Time to put one data packet on an access link.
    pub fn access_serialization(&self) -> f64 {
        self.data_bits() / self.access_capacity_bps
    }

    /// Intersend time at which one sender exactly fills the bottleneck.
    pub fn capacity_matched_intersend(&self) -> f64 {
        self.bottleneck_serialization()
    }

    /// Default start: each pair offers 10% of capacity split `p` ways.
    pub fn default_initial_intersend(&self) -> f64 {
        self.data_bits() * self.pair_count as f64 / (0.1 * self.bottleneck_capacity_bps)
    }

    /// RTT of a data packet and its ACK through empty queues: serialization
    /// plus propagation on all three forward hops and all three reverse hops.
    pub fn analytic_min_rtt(&self) -> f64 {
        let hop = |bits: f64, cap: f64, prop: f64| bits / cap + prop;
        let path = |bits: f64| {
            hop(bits, self.access_capacity_bps, self.access_propagation_s)
                + hop(
                    bits,
                    self.bottleneck_capacity_bps,
                    self.bottleneck_propagation_s,
                )
                + hop(bits, self.access_capacity_bps, self.access_propagation_s)
        };
        path(self.data_bits()) + path(self.ack_bits())
    }
}
