use mfcc::cc::Algorithm;
use mfcc::sim::{
    bandwidth_share, run_simulation, run_simulation_with, EventKind, FlowSpec, SimConfig,
    SimError, SimReport,
};
use mfcc::topology::{LinkId, LinkParams, PathDescriptor, Topology};

const RATE: f64 = 11.7e6;

/// `a -> b` plus its reverse.
fn single_link(params: LinkParams) -> (Topology, LinkId) {
    let mut t = Topology::new();
    let a = t.add_node("a").unwrap();
    let b = t.add_node("b").unwrap();
    let (ab, _) = t.add_duplex("ab", a, b, params).unwrap();
    (t, ab)
}

fn reno(link: LinkId) -> FlowSpec {
    FlowSpec::new(Algorithm::Reno, vec![PathDescriptor::new(vec![link])])
}

fn assert_conserved(r: &SimReport) {
    for f in &r.flows {
        assert_eq!(
            f.data_bytes_sent,
            f.data_bytes_received + f.data_bytes_dropped + f.data_bytes_in_network,
            "connection {}",
            f.conn
        );
    }
    for l in &r.links {
        assert_eq!(
            l.bytes_offered,
            l.bytes_departed + l.bytes_dropped_tail + l.bytes_dropped_random + l.bytes_queued_at_end
        );
    }
}

#[test]
fn lone_reno_flow_fills_the_link() {
    let (t, ab) = single_link(LinkParams::new(RATE, 0.00025));
    let r = run_simulation(&t, &[reno(ab)], 20.0, 1).unwrap();
    let goodput = r.flows[0].bytes_delivered as f64 / 20.0;
    assert!((goodput / RATE - 1.0).abs() < 0.03, "goodput {goodput}");
    assert_conserved(&r);
}

#[test]
fn zero_flows_give_empty_stats() {
    let (t, _) = single_link(LinkParams::new(RATE, 0.00025));
    let r = run_simulation(&t, &[], 1.0, 1).unwrap();
    assert!(r.flows.is_empty());
}

#[test]
fn two_reno_flows_split_a_bottleneck() {
    let (t, ab) = single_link(LinkParams::new(RATE, 0.00025));
    let r = run_simulation(&t, &[reno(ab), reno(ab)], 20.0, 3).unwrap();
    let shares = bandwidth_share(&r.flows, None).unwrap();
    for s in &shares {
        assert!((s.fraction - 0.5).abs() <= 0.05, "{shares:?}");
    }
    assert_conserved(&r);
}

#[test]
fn bad_inputs_are_rejected() {
    let (t, ab) = single_link(LinkParams::new(RATE, 0.00025));
    assert!(matches!(
        run_simulation(&t, &[reno(ab).starting_at(-1.0)], 1.0, 0),
        Err(SimError::BadStart(0))
    ));
    assert!(matches!(
        run_simulation(&t, &[reno(LinkId(9))], 1.0, 0),
        Err(SimError::Route { flow: 0, .. })
    ));
    assert_eq!(
        run_simulation(&t, &[], 0.0, 0).unwrap_err(),
        SimError::BadDuration
    );
}

#[test]
fn lossy_runs_are_deterministic_and_conserve_bytes() {
    let (t, ab) = single_link(LinkParams::new(RATE, 0.005).with_loss(0.02));
    let flows = [reno(ab), reno(ab).starting_at(0.3)];
    let a = run_simulation(&t, &flows, 5.0, 11).unwrap();
    let b = run_simulation(&t, &flows, 5.0, 11).unwrap();
    assert_eq!(a, b);
    assert!(a.flows.iter().all(|f| f.retransmissions > 0));
    assert_conserved(&a);
    let c = run_simulation(&t, &flows, 5.0, 12).unwrap();
    assert_ne!(a.trace_digest, c.trace_digest);
}

#[test]
fn links_are_fifo_and_work_conserving() {
    let (t, ab) = single_link(LinkParams::new(RATE, 0.00025).with_queue(16));
    let cfg = SimConfig {
        record_trace: true,
        ..SimConfig::default()
    };
    let r = run_simulation_with(&t, &[reno(ab), reno(ab)], 2.0, 5, &cfg).unwrap();
    let queued: Vec<u64> = r
        .trace
        .iter()
        .filter(|e| e.link == Some(ab) && e.kind == EventKind::PktArrival)
        .map(|e| e.uid)
        .collect();
    let departed: Vec<u64> = r
        .trace
        .iter()
        .filter(|e| e.link == Some(ab) && e.kind == EventKind::PktDeparture)
        .map(|e| e.uid)
        .collect();
    assert_eq!(&queued[..departed.len()], &departed[..]);

    // a departing packet starts service as soon as both it and the
    // transmitter are available
    let ser = 1500.0 / RATE;
    let mut arrived = std::collections::HashMap::new();
    let mut last_departure = 0.0f64;
    for e in r.trace.iter().filter(|e| e.link == Some(ab)) {
        let t = e.time.as_secs_f64();
        match e.kind {
            EventKind::PktArrival => {
                arrived.insert(e.uid, t);
            }
            EventKind::PktDeparture => {
                let ready = arrived[&e.uid].max(last_departure);
                assert!((t - ready - ser).abs() < 1e-8, "idle gap {}", t - ready);
                last_departure = t;
            }
            _ => {}
        }
    }
    let carried = r.links[ab.index()].bytes_departed as f64;
    assert!(carried <= RATE * 2.0 + 1500.0);
}

#[test]
fn send_jitter_keeps_runs_deterministic_and_bounded() {
    let (t, ab) = single_link(LinkParams::new(RATE, 0.002).with_queue(32));
    let cfg = SimConfig {
        send_jitter: 0.0005,
        ..SimConfig::default()
    };
    let flows = [reno(ab), reno(ab), reno(ab).starting_at(1.0)];
    let a = run_simulation_with(&t, &flows, 4.0, 5, &cfg).unwrap();
    assert_eq!(a, run_simulation_with(&t, &flows, 4.0, 5, &cfg).unwrap());
    assert_ne!(a.trace_digest, run_simulation_with(&t, &flows, 4.0, 6, &cfg).unwrap().trace_digest);
    assert_conserved(&a);
    for (l, st) in t.links().iter().zip(&a.links) {
        assert!(st.bytes_departed as f64 <= l.bandwidth * 4.0 + 1500.0);
    }
    assert!(a.flows.iter().all(|f| f.bytes_delivered > 0));
}
