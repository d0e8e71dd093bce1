use mfcc::experiments::{
    run_once, run_with_replications, scenario_disjoint, scenario_shared, scenario_xyz, write_runs_csv,
};
use mfcc::sim::shares_from_bytes;
use proptest::prelude::*;

proptest! {
    #[test]
    fn shares_sum_to_one(bytes in prop::collection::vec(0u64..1 << 40, 1..12)) {
        prop_assume!(bytes.iter().any(|&b| b > 0));
        let tagged: Vec<_> = bytes.iter().copied().enumerate().collect();
        let shares = shares_from_bytes(&tagged).unwrap();
        let sum: f64 = shares.iter().map(|s| s.fraction).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn scenario_shares_sum_to_one() {
    for s in [scenario_shared(2, 0.0), scenario_disjoint(true, 2), scenario_xyz(1, 1, 1).unwrap()] {
        let run = run_once(&s.with_duration(4.0), 3).unwrap();
        let sum: f64 = run.shares.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9, "{sum}");
    }
}

#[test]
fn swapping_single_flow_paths_keeps_shares() {
    let base = scenario_shared(2, 0.0).with_duration(10.0).with_replications(4);
    let mut swapped = base.clone();
    let (a, b) = (swapped.flows[1].paths.clone(), swapped.flows[2].paths.clone());
    swapped.flows[1].paths = b;
    swapped.flows[2].paths = a;
    let (x, y) = (run_with_replications(&base).unwrap(), run_with_replications(&swapped).unwrap());
    let tolerance = x.share_margin[0].max(y.share_margin[0]).max(0.01);
    assert!(
        (x.mean_share[0] - y.mean_share[0]).abs() <= tolerance,
        "{} vs {} (tolerance {tolerance})",
        x.mean_share[0],
        y.mean_share[0]
    );
}

#[test]
fn outputs_are_pure_functions_of_the_seed() {
    let s = scenario_shared(1, 0.0).with_duration(4.0).with_replications(2);
    let csv = || {
        let mut buf = Vec::new();
        write_runs_csv(&mut buf, &[run_with_replications(&s).unwrap()]).unwrap();
        buf
    };
    assert_eq!(csv(), csv());
    let other = run_with_replications(&s.clone().with_seed(9)).unwrap();
    assert_ne!(other.runs[0].trace_digest, run_once(&s, 1).unwrap().trace_digest);
}
