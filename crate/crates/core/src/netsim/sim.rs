use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::event::{EventKind, EventQueue};
use super::queue::{DropTailQueue, Enqueue};
use super::trace::{FlowSummary, PortSummary, RunSummary, SimTrace, WindowRecord};
use super::{Scenario, SimError};
use crate::env::{
    apply_action, build_observation, reward, IntersendBounds, RewardSpec, WindowStats,
};
use crate::policy::Agent;

/// Loss timeout in multiples of the smallest RTT seen so far.
const LOSS_TIMEOUT_RTTS: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PacketKind {
    Data,
    Ack,
}

#[derive(Clone, Copy, Debug)]
struct Packet {
    flow: usize,
    seq: u64,
    kind: PacketKind,
    sent_at: f64,
    hop: u8,
}

#[derive(Debug)]
enum Payload {
    Arrival(Packet),
    Departure(usize),
    Send { flow: usize, generation: u64 },
    Tick(u64),
    End,
}

struct Port {
    name: String,
    queue: DropTailQueue<Packet>,
    in_service: Option<Packet>,
    rate_bps: f64,
    propagation_s: f64,
}

/// Sender-side bookkeeping of one flow.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub flow_id: usize,
    pub packets_sent: u64,
    pub packets_acked: u64,
    pub packets_lost: u64,
    pub spurious_losses: u64,
    pub queue_drops: u64,
    /// Smallest RTT sample so far; infinite before the first ACK.
    pub min_rtt_observed: f64,
    pub intersend: f64,
    pub window: WindowStats,
    last_rtt: f64,
    in_flight: BTreeMap<u64, f64>,
    declared_lost: BTreeSet<u64>,
    next_seq: u64,
    last_send: Option<f64>,
    generation: u64,
    acked_bits_measured: f64,
}

impl FlowState {
    fn new(flow_id: usize, intersend: f64, initial_rtt: f64) -> Self {
        Self {
            flow_id,
            packets_sent: 0,
            packets_acked: 0,
            packets_lost: 0,
            spurious_losses: 0,
            queue_drops: 0,
            min_rtt_observed: f64::INFINITY,
            intersend,
            window: WindowStats::default(),
            last_rtt: initial_rtt,
            in_flight: BTreeMap::new(),
            declared_lost: BTreeSet::new(),
            next_seq: 0,
            last_send: None,
            generation: 0,
            acked_bits_measured: 0.0,
        }
    }

    pub fn packets_in_flight(&self) -> u64 {
        self.in_flight.len() as u64
    }

    pub fn is_conserved(&self) -> bool {
        self.packets_sent == self.packets_acked + self.packets_lost + self.packets_in_flight()
    }

    fn min_rtt_or(&self, fallback: f64) -> f64 {
        if self.min_rtt_observed.is_finite() {
            self.min_rtt_observed
        } else {
            fallback
        }
    }

    fn expire(&mut self, now: f64, timeout: f64) {
        while let Some((&seq, &sent_at)) = self.in_flight.first_key_value() {
            if now - sent_at <= timeout {
                break;
            }
            self.in_flight.remove(&seq);
            self.declared_lost.insert(seq);
            self.packets_lost += 1;
            self.window.losses += 1;
        }
    }
}

struct Sim<'a> {
    scenario: &'a Scenario,
    agent: &'a mut dyn Agent,
    events: EventQueue<Payload>,
    ports: Vec<Port>,
    flows: Vec<FlowState>,
    records: Vec<WindowRecord>,
    reward_spec: RewardSpec,
    bounds: IntersendBounds,
    analytic_rtt: f64,
    data_bits: f64,
    ack_bits: f64,
    measure_start: f64,
    bottleneck_bits: f64,
    rtt_sum: f64,
    rtt_samples: u64,
    drops: u64,
    conservation_violations: u64,
    processed: u64,
}

const FWD: usize = 0;
const REV: usize = 1;

fn route(kind: PacketKind, flow: usize, hop: u8) -> usize {
    let base = 2 + 4 * flow;
    match (kind, hop) {
        (PacketKind::Data, 0) => base,
        (PacketKind::Data, 1) => FWD,
        (PacketKind::Data, 2) => base + 1,
        (PacketKind::Ack, 0) => base + 2,
        (PacketKind::Ack, 1) => REV,
        (PacketKind::Ack, 2) => base + 3,
        _ => unreachable!("packet beyond its last hop"),
    }
}

impl<'a> Sim<'a> {
    fn new(scenario: &'a Scenario, agent: &'a mut dyn Agent, seed: u64) -> Self {
        let t = &scenario.topology;
        let port = |name: String, rate_bps: f64, propagation_s: f64| Port {
            name,
            queue: DropTailQueue::new(t.queue_capacity),
            in_service: None,
            rate_bps,
            propagation_s,
        };
        let mut ports = vec![
            port(
                "bottleneck L->R".into(),
                t.bottleneck_capacity_bps,
                t.bottleneck_propagation_s,
            ),
            port(
                "bottleneck R->L".into(),
                t.bottleneck_capacity_bps,
                t.bottleneck_propagation_s,
            ),
        ];
        for i in 0..t.pair_count {
            let (acc, pa) = (t.access_capacity_bps, t.access_propagation_s);
            ports.push(port(format!("sender {i} -> L"), acc, pa));
            ports.push(port(format!("R -> receiver {i}"), acc, pa));
            ports.push(port(format!("receiver {i} -> R"), acc, pa));
            ports.push(port(format!("L -> sender {i}"), acc, pa));
        }

        let analytic_rtt = t.analytic_min_rtt();
        let x1 = scenario.initial_intersend();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut events = EventQueue::new();
        let mut flows = Vec::with_capacity(t.pair_count);
        for i in 0..t.pair_count {
            flows.push(FlowState::new(i, x1, analytic_rtt));
            let offset = rng.random::<f64>() * x1;
            events.schedule(
                offset,
                EventKind::SendTimer,
                Payload::Send {
                    flow: i,
                    generation: 0,
                },
            );
        }
        let windows = scenario.window_count();
        if windows > 0 {
            events.schedule(scenario.window_s, EventKind::WindowTick, Payload::Tick(1));
        }
        let end = scenario.duration_s.max(windows as f64 * scenario.window_s);
        events.schedule(end, EventKind::SimEnd, Payload::End);

        Self {
            scenario,
            agent,
            events,
            ports,
            flows,
            records: Vec::with_capacity(windows as usize * t.pair_count),
            reward_spec: RewardSpec::for_scenario(
                scenario.window_s,
                t.bottleneck_serialization(),
                analytic_rtt,
            ),
            bounds: IntersendBounds {
                min: t.access_serialization(),
                max: IntersendBounds::DEFAULT_MAX,
            },
            analytic_rtt,
            data_bits: t.data_bits(),
            ack_bits: t.ack_bits(),
            measure_start: scenario.warmup_fraction * scenario.duration_s,
            bottleneck_bits: 0.0,
            rtt_sum: 0.0,
            rtt_samples: 0,
            drops: 0,
            conservation_violations: 0,
            processed: 0,
        }
    }

    fn bits(&self, p: &Packet) -> f64 {
        match p.kind {
            PacketKind::Data => self.data_bits,
            PacketKind::Ack => self.ack_bits,
        }
    }

    fn offer(&mut self, port: usize, pkt: Packet) {
        let now = self.events.now();
        if self.ports[port].in_service.is_none() {
            let done = now + self.bits(&pkt) / self.ports[port].rate_bps;
            self.ports[port].in_service = Some(pkt);
            self.events
                .schedule(done, EventKind::PacketDeparture, Payload::Departure(port));
            return;
        }
        if let Enqueue::Dropped(p) = self.ports[port].queue.enqueue(pkt) {
            self.drops += 1;
            self.flows[p.flow].queue_drops += 1;
        }
    }

    fn depart(&mut self, port: usize) {
        let now = self.events.now();
        let mut pkt = self.ports[port]
            .in_service
            .take()
            .expect("departure from an idle port");
        if port == FWD && now > self.measure_start {
            self.bottleneck_bits += self.bits(&pkt);
        }
        pkt.hop += 1;
        let arrive = now + self.ports[port].propagation_s;
        self.events
            .schedule(arrive, EventKind::PacketArrival, Payload::Arrival(pkt));
        if let Some(next) = self.ports[port].queue.dequeue() {
            let done = now + self.bits(&next) / self.ports[port].rate_bps;
            self.ports[port].in_service = Some(next);
            self.events
                .schedule(done, EventKind::PacketDeparture, Payload::Departure(port));
        }
    }

    fn arrive(&mut self, pkt: Packet) {
        if pkt.hop < 3 {
            self.offer(route(pkt.kind, pkt.flow, pkt.hop), pkt);
            return;
        }
        match pkt.kind {
            PacketKind::Data => {
                let ack = Packet {
                    kind: PacketKind::Ack,
                    hop: 0,
                    ..pkt
                };
                self.offer(route(PacketKind::Ack, ack.flow, 0), ack);
            }
            PacketKind::Ack => self.on_ack(pkt),
        }
    }

    fn on_ack(&mut self, pkt: Packet) {
        let now = self.events.now();
        let measured = now > self.measure_start;
        let data_bits = self.data_bits;
        let f = &mut self.flows[pkt.flow];
        if f.in_flight.remove(&pkt.seq).is_some() {
            f.packets_acked += 1;
        } else if f.declared_lost.remove(&pkt.seq) {
            f.packets_lost -= 1;
            f.packets_acked += 1;
            f.spurious_losses += 1;
        } else {
            return;
        }
        // ACKs come back in order, so anything older still marked lost was dropped.
        f.declared_lost = f.declared_lost.split_off(&pkt.seq);
        let rtt = now - pkt.sent_at;
        f.window.acks += 1;
        f.window.rtt_sum += rtt;
        f.min_rtt_observed = f.min_rtt_observed.min(rtt);
        if measured {
            f.acked_bits_measured += data_bits;
            self.rtt_sum += rtt;
            self.rtt_samples += 1;
        }
    }

    fn send(&mut self, flow: usize, generation: u64) {
        if self.flows[flow].generation != generation {
            return;
        }
        let now = self.events.now();
        let f = &mut self.flows[flow];
        let seq = f.next_seq;
        f.next_seq += 1;
        f.packets_sent += 1;
        f.window.sent += 1;
        f.in_flight.insert(seq, now);
        f.last_send = Some(now);
        let next = now + f.intersend;
        let pkt = Packet {
            flow,
            seq,
            kind: PacketKind::Data,
            sent_at: now,
            hop: 0,
        };
        self.offer(route(PacketKind::Data, flow, 0), pkt);
        self.events.schedule(
            next,
            EventKind::SendTimer,
            Payload::Send { flow, generation },
        );
    }

    fn tick(&mut self, index: u64) -> Result<(), SimError> {
        let now = self.events.now();
        for i in 0..self.flows.len() {
            let fallback = self.analytic_rtt;
            let f = &mut self.flows[i];
            let min_rtt = f.min_rtt_or(fallback);
            f.expire(now, LOSS_TIMEOUT_RTTS * min_rtt);
            let stats = f.window;
            let obs = build_observation(&stats, f.intersend, min_rtt, f.last_rtt);
            f.last_rtt = obs.x2;
            let r = reward(
                stats.acks as f64,
                obs.x2,
                stats.losses as f64,
                &self.reward_spec,
            );
            let conserved = f.is_conserved();
            if !conserved {
                self.conservation_violations += 1;
            }
            let in_flight = f.packets_in_flight();
            let decision = self.agent.decide(i, &obs)?;

            let f = &mut self.flows[i];
            f.intersend = apply_action(f.intersend, decision.executed, self.bounds);
            f.window = WindowStats::default();
            if let Some(last) = f.last_send {
                f.generation += 1;
                let at = (last + f.intersend).max(now);
                let generation = f.generation;
                self.events.schedule(
                    at,
                    EventKind::SendTimer,
                    Payload::Send {
                        flow: i,
                        generation,
                    },
                );
            }
            self.records.push(WindowRecord {
                time_s: now,
                flow: i,
                observation: obs,
                executed: decision.executed,
                proposed: decision.proposed,
                reward: r,
                sent: stats.sent,
                acks: stats.acks,
                losses: stats.losses,
                in_flight,
                conserved,
            });
        }
        if index < self.scenario.window_count() {
            let at = (index + 1) as f64 * self.scenario.window_s;
            self.events
                .schedule(at, EventKind::WindowTick, Payload::Tick(index + 1));
        }
        Ok(())
    }

    fn run(mut self) -> Result<SimTrace, SimError> {
        while let Some((_, _, payload)) = self.events.pop() {
            self.processed += 1;
            match payload {
                Payload::Arrival(p) => self.arrive(p),
                Payload::Departure(port) => self.depart(port),
                Payload::Send { flow, generation } => self.send(flow, generation),
                Payload::Tick(k) => self.tick(k)?,
                Payload::End => break,
            }
        }
        Ok(self.finish())
    }

    fn finish(self) -> SimTrace {
        let end = self.events.now();
        let interval = end - self.measure_start;
        let capacity = self.scenario.topology.bottleneck_capacity_bps;
        let flows = self
            .flows
            .iter()
            .map(|f| FlowSummary {
                flow: f.flow_id,
                packets_sent: f.packets_sent,
                packets_acked: f.packets_acked,
                packets_lost: f.packets_lost,
                packets_in_flight: f.packets_in_flight(),
                spurious_losses: f.spurious_losses,
                queue_drops: f.queue_drops,
                min_rtt_observed: f.min_rtt_observed,
                throughput_bps: f.acked_bits_measured / interval,
                final_intersend: f.intersend,
            })
            .collect();
        let ports = self
            .ports
            .iter()
            .map(|p| PortSummary {
                name: p.name.clone(),
                max_occupancy: p.queue.max_occupancy(),
                drops: p.queue.drops(),
            })
            .collect();
        SimTrace {
            records: self.records,
            flows,
            summary: RunSummary {
                utilization: self.bottleneck_bits / (capacity * interval),
                mean_rtt: (self.rtt_samples > 0).then(|| self.rtt_sum / self.rtt_samples as f64),
                loss_count: self.drops,
                measure_start_s: self.measure_start,
                measure_end_s: end,
                analytic_min_rtt: self.analytic_rtt,
                conservation_violations: self.conservation_violations,
                events: self.processed,
                ports,
            },
            reward_spec: self.reward_spec,
        }
    }
}

/// Simulates `scenario` with `agent` deciding every flow's action at each
/// window tick. Equal inputs and seed give a bit-identical trace.
pub fn run(scenario: &Scenario, agent: &mut dyn Agent, seed: u64) -> Result<SimTrace, SimError> {
    scenario.validate()?;
    Sim::new(scenario, agent, seed).run()
}
