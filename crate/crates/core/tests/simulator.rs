use symcc_core::env::ActionValue;
use symcc_core::eval::{run_phase, PhaseSpec};
use symcc_core::netsim::{self, Scenario, Topology};
use symcc_core::policy::{ConstantPolicy, PolicyHandle, SharedPolicy};

fn hold() -> SharedPolicy {
    SharedPolicy::new(Box::new(ConstantPolicy(ActionValue::NEUTRAL)))
}

#[test]
fn capacity_matched_sender_fills_the_link_without_loss() {
    for c in [100e6, 250e6, 1e9] {
        let t = Topology::new(c, 1);
        let s = Scenario::new(t.clone(), 0.5).with_initial_intersend(t.bottleneck_serialization());
        let trace = netsim::run(&s, &mut hold(), 1).unwrap();
        assert!(
            trace.summary.utilization >= 0.99,
            "{c}: {}",
            trace.summary.utilization
        );
        assert_eq!(trace.summary.loss_count, 0);
    }
}

#[test]
fn double_rate_overflows_the_queue_persistently() {
    let t = Topology::new(250e6, 1);
    let s =
        Scenario::new(t.clone(), 0.5).with_initial_intersend(t.bottleneck_serialization() / 2.0);
    let trace = netsim::run(&s, &mut hold(), 1).unwrap();
    let fwd = &trace.summary.ports[0];
    assert_eq!(fwd.max_occupancy, t.queue_capacity);
    assert!(fwd.drops > 1000, "drops {}", fwd.drops);
    // Losses keep arriving in the second half of the run.
    let late: u64 = trace
        .records
        .iter()
        .filter(|r| r.time_s > 0.25)
        .map(|r| r.losses)
        .sum();
    assert!(late > 0);
}

#[test]
fn unloaded_rtt_is_the_analytic_minimum() {
    for c in [1e6, 100e6, 1e9] {
        let t = Topology::new(c, 1);
        // One packet every ten RTTs keeps the path empty.
        let s = Scenario::new(t.clone(), 0.2).with_initial_intersend(10.0 * t.analytic_min_rtt());
        let trace = netsim::run(&s, &mut hold(), 0).unwrap();
        let rtt = trace.flows[0].min_rtt_observed;
        assert!((rtt - t.analytic_min_rtt()).abs() <= 1e-12, "{c}: {rtt}");
    }
}

#[test]
fn phase_one_conserves_packets_and_keeps_actions_in_range() {
    let policy = PolicyHandle::from_name("sp1", Default::default()).unwrap();
    let result = run_phase(&PhaseSpec::phase_one(), &policy).unwrap();
    assert_eq!(result.rows.len(), 15);
    for r in &result.rows {
        assert_eq!(r.conservation_violations, 0, "{}", r.scenario);
        assert!(r.min_action >= 0.8 && r.max_action <= 1.5, "{}", r.scenario);
        println!("{} losses {}", r.scenario, r.loss_count);
    }
}
