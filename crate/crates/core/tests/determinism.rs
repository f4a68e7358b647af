use symcc_core::dsr::{run_regression, FitnessData, RegressionConfig};
use symcc_core::env::{collect, CollectSpec, Units};
use symcc_core::netsim::{self, Scenario, Topology};
use symcc_core::policy::{PolicyHandle, SharedPolicy};

fn trace_csv(seed: u64) -> Vec<u8> {
    let s = Scenario::new(Topology::new(500e6, 3), 0.2);
    let handle = PolicyHandle::from_name("sp1", Units::Milliseconds).unwrap();
    let trace = netsim::run(&s, &mut SharedPolicy::from_handle(&handle).unwrap(), seed).unwrap();
    let mut out = Vec::new();
    trace.write_csv(&mut out).unwrap();
    out
}

#[test]
fn traces_are_byte_identical_per_seed() {
    assert_eq!(trace_csv(9), trace_csv(9));
    assert_ne!(trace_csv(9), trace_csv(10));
}

fn hall_of_fame(seed: u64) -> String {
    let spec = CollectSpec {
        scenario: Scenario::new(Topology::new(500e6, 2), 0.2),
        epsilon: 0.5,
        seed: 3,
    };
    let expert = PolicyHandle::from_name("scripted-expert", Units::Milliseconds).unwrap();
    let ds = collect(&expert, &spec).unwrap();
    let data = FitnessData::from_dataset(&ds, Units::Milliseconds, Default::default()).unwrap();
    let cfg = RegressionConfig {
        seed,
        batch_size: 200,
        max_iterations: 10,
        ..Default::default()
    };
    let result = run_regression(&data, &cfg).unwrap();
    let mut out = Vec::new();
    result.write_hall_of_fame(&cfg, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

#[test]
fn hall_of_fame_is_reproducible_per_seed() {
    let a = hall_of_fame(5);
    assert_eq!(a, hall_of_fame(5));
    assert_ne!(a, hall_of_fame(6));
}

#[test]
fn collection_is_reproducible_per_seed() {
    let spec = CollectSpec {
        scenario: Scenario::new(Topology::new(250e6, 2), 0.1),
        epsilon: 0.5,
        seed: 21,
    };
    let expert = PolicyHandle::from_name("scripted-expert", Units::Milliseconds).unwrap();
    let a = collect(&expert, &spec).unwrap();
    let b = collect(&expert, &spec).unwrap();
    assert_eq!(a.rows, b.rows);
}
