//! Exact property suites with independent oracles. Each suite draws its
//! cases from a fixed seed and reports how many cases disagreed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{catalog, Scenario};
use crate::cc::{
    build_connection, estimate_m, increase_window, Algorithm, Phase, SubflowState, DEFAULT_MSS,
};
use crate::sim::{run_simulation_with, SimReport};
use crate::topology::{
    assign_group_ids, yen_k_shortest, LinkId, LinkParams, NodeId, PathDescriptor, Topology,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// First disagreement, if any.
    pub detail: Option<String>,
}

impl SuiteOutcome {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            detail: None,
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.detail.is_none() {
                self.detail = Some(detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

const MSS: f64 = DEFAULT_MSS as f64;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// A subflow with one RTT sample, so `srtt == rtt`.
pub fn sampled_subflow(phase: Phase, cwnd: f64, rtt: f64) -> SubflowState {
    let mut s = SubflowState::new(PathDescriptor::new(vec![LinkId(0)]), 0, MSS);
    s.cwnd = cwnd;
    s.phase = phase;
    s.rtt.on_sample(rtt);
    s
}

/// `m = min RTT · Σ 1/RTT_i` in congestion avoidance and
/// `Σ (w_i/RTT_i) / max (w_i/RTT_i)` in slow start.
pub fn estimate_m_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("estimate_m closed forms");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let n = rng.gen_range(1..=8);
        let slow = case % 2 == 1;
        let rtts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.001..0.5)).collect();
        let cwnds: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..200.0) * MSS).collect();
        let phase = if slow { Phase::SlowStart } else { Phase::CongAvoid };
        let subs: Vec<_> = rtts
            .iter()
            .zip(&cwnds)
            .map(|(&r, &w)| sampled_subflow(phase, w, r))
            .collect();
        let got = estimate_m(&subs, MSS).expect("non-empty");
        let want = if slow {
            let rates: Vec<f64> = cwnds.iter().zip(&rtts).map(|(w, r)| w / r).collect();
            rates.iter().sum::<f64>() / rates.iter().cloned().fold(0.0, f64::max)
        } else {
            let min_rtt = rtts.iter().cloned().fold(f64::INFINITY, f64::min);
            min_rtt * rtts.iter().map(|r| 1.0 / r).sum::<f64>()
        };
        out.record(rel_close(got, want, 1e-9), || {
            format!("rtts {rtts:?} cwnds {cwnds:?}: got {got}, want {want}")
        });
    }
    out
}

/// The two worked examples: RTTs {50, 100} ms give 1.5, {10, 100} ms give 1.1.
pub fn worked_examples() -> SuiteOutcome {
    let mut out = SuiteOutcome::new("worked m examples");
    for (rtts, want) in [([0.050, 0.100], 1.5), ([0.010, 0.100], 1.1)] {
        let subs = rtts.map(|r| sampled_subflow(Phase::CongAvoid, 10.0 * MSS, r));
        let got = estimate_m(&subs, MSS).expect("non-empty");
        out.record(rel_close(got, want, 1e-9), || format!("{rtts:?}: {got}"));
    }
    out
}

/// Union-find over paths joined whenever they share a link.
pub fn union_find_groups(paths: &[PathDescriptor]) -> Vec<usize> {
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut parent: Vec<usize> = (0..paths.len()).collect();
    for i in 0..paths.len() {
        for j in i + 1..paths.len() {
            if paths[i].links.iter().any(|l| paths[j].links.contains(l)) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    (0..paths.len()).map(|i| find(&mut parent, i)).collect()
}

pub fn random_path_set(rng: &mut impl Rng) -> Vec<PathDescriptor> {
    let n_links = rng.gen_range(1..=16u32);
    let n_paths = rng.gen_range(1..=10);
    (0..n_paths)
        .map(|_| {
            let hops = rng.gen_range(1..=4);
            PathDescriptor::new((0..hops).map(|_| LinkId(rng.gen_range(0..n_links))).collect())
        })
        .collect()
}

/// Group ids induce the same partition as the union-find oracle.
pub fn grouping_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("group_id vs union-find");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let paths = random_path_set(&mut rng);
        let labelled = assign_group_ids(&paths);
        let roots = union_find_groups(&paths);
        let n = paths.len();
        let ok = (0..n).all(|i| {
            (0..n).all(|j| (labelled[i].group_id == labelled[j].group_id) == (roots[i] == roots[j]))
        });
        out.record(ok, || format!("{paths:?}"));
    }
    out
}

/// Every simple path from `src` to `dst`, sorted by `(hops, link ids)`.
pub fn all_simple_paths(topo: &Topology, src: NodeId, dst: NodeId) -> Vec<Vec<LinkId>> {
    fn dfs(
        topo: &Topology,
        at: NodeId,
        dst: NodeId,
        seen: &mut Vec<bool>,
        stack: &mut Vec<LinkId>,
        out: &mut Vec<Vec<LinkId>>,
    ) {
        if at == dst {
            out.push(stack.clone());
            return;
        }
        for &l in topo.out_links(at) {
            let next = topo.link(l).dst;
            if !seen[next.index()] {
                seen[next.index()] = true;
                stack.push(l);
                dfs(topo, next, dst, seen, stack, out);
                stack.pop();
                seen[next.index()] = false;
            }
        }
    }
    let mut seen = vec![false; topo.nodes().len()];
    seen[src.index()] = true;
    let mut out = Vec::new();
    dfs(topo, src, dst, &mut seen, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    out
}

/// A random directed graph on 2 to 6 nodes, parallel links allowed.
pub fn random_graph(rng: &mut impl Rng) -> Topology {
    let mut t = Topology::new();
    let n = rng.gen_range(2..=6);
    let nodes: Vec<NodeId> = (0..n).map(|i| t.add_node(&format!("n{i}")).expect("fresh")).collect();
    let mut k = 0;
    for &a in &nodes {
        for &b in &nodes {
            if a == b {
                continue;
            }
            let copies = match rng.gen_range(0..10) {
                0..=5 => 0,
                6..=8 => 1,
                _ => 2,
            };
            for _ in 0..copies {
                t.add_link(&format!("l{k}"), a, b, LinkParams::new(1e6, 0.001))
                    .expect("valid");
                k += 1;
            }
        }
    }
    t
}

/// Yen's output equals the first `k` paths of the sorted enumeration.
pub fn yen_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("yen vs brute force");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let t = random_graph(&mut rng);
        let n = t.nodes().len() as u32;
        let src = NodeId(rng.gen_range(0..n));
        let dst = NodeId((src.0 + rng.gen_range(1..n)) % n);
        let k = rng.gen_range(1..=8);
        let got: Vec<Vec<LinkId>> = yen_k_shortest(&t, src, dst, k)
            .expect("valid query")
            .into_iter()
            .map(|p| p.links)
            .collect();
        let mut want = all_simple_paths(&t, src, dst);
        want.truncate(k);
        out.record(got == want, || {
            format!("{}\n{src:?}->{dst:?} k={k}: got {got:?}, want {want:?}", t.to_text())
        });
    }
    out
}

/// One step of a synthetic event script.
#[derive(Debug, Clone, Copy)]
enum Step {
    Ack,
    DupAcks,
    Timeout,
}

/// Drives single-path NMCC and Reno connections through the same random
/// script of ACKs, loss episodes and timeouts and compares their windows.
pub fn single_subflow_trace_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("single-subflow NMCC trace = Reno trace");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let path = vec![PathDescriptor::new(vec![LinkId(0)])];
    let mss = DEFAULT_MSS as u64;
    for _ in 0..cases {
        let mut conns = [Algorithm::Nmcc, Algorithm::Reno]
            .map(|a| build_connection(&path, a, DEFAULT_MSS, None, true).expect("one path"));
        let mut ok = true;
        let mut fail_at = 0;
        for step in 0..400 {
            let ev = match rng.gen_range(0..100) {
                0..=89 => Step::Ack,
                90..=97 => Step::DupAcks,
                _ => Step::Timeout,
            };
            let rtt = rng.gen_range(0.001..0.3);
            for c in &mut conns {
                let s = c.subflow(0);
                let (una, cwnd) = (s.snd_una, s.cwnd);
                // keep a full window outstanding
                let target = una + (cwnd as u64).max(mss) + 4 * mss;
                if s.snd_max < target {
                    c.record_send(0, s.snd_max, target - s.snd_max);
                }
                match ev {
                    Step::Ack => {
                        c.on_ack(0, una + mss, Some(rtt));
                    }
                    Step::DupAcks => {
                        for _ in 0..3 {
                            c.on_ack(0, una, None);
                        }
                    }
                    Step::Timeout => c.on_timeout(0),
                }
            }
            let (a, b) = (conns[0].subflow(0), conns[1].subflow(0));
            if a.cwnd != b.cwnd || a.ssthresh != b.ssthresh || a.phase != b.phase {
                ok = false;
                fail_at = step;
                break;
            }
        }
        out.record(ok, || format!("diverged at step {fail_at}"));
    }
    out
}

/// Aggregate per-RTT slow-start growth of `n` equal NMCC subflows, with
/// each ACK's increment evaluated on the round-start state, against one
/// Reno flow holding the subflows' shadow window. Every round is compared;
/// returns the largest relative gap.
pub fn slow_start_growth_gap(initial_segments: f64, rounds: usize, n: usize) -> f64 {
    let w0 = initial_segments * MSS;
    let mut subs: Vec<SubflowState> = (0..n)
        .map(|_| {
            let mut s = sampled_subflow(Phase::SlowStart, w0, 0.05);
            s.ssthresh = f64::INFINITY;
            s.shadow.cwnd = w0;
            s.shadow.ssthresh = f64::INFINITY;
            s
        })
        .collect();
    let mut worst: f64 = 0.0;
    for _ in 0..rounds {
        // one Reno flow with window w gets w/MSS ACKs per RTT, +MSS each
        let reno = subs[0].shadow.cwnd;
        let reno_growth = (reno / MSS) * MSS;
        let m = estimate_m(&subs, MSS).expect("non-empty");
        let mut growth = 0.0;
        for s in &mut subs {
            let acks = s.cwnd / MSS;
            let mut probe = s.clone();
            increase_window(&mut probe, m, MSS, true);
            let step = probe.cwnd - s.cwnd;
            growth += acks * step;
            s.cwnd += acks * step;
            s.shadow.cwnd += acks * MSS;
        }
        worst = worst.max((growth - reno_growth).abs() / reno_growth);
    }
    worst
}

pub fn slow_start_growth_suite() -> SuiteOutcome {
    let mut out = SuiteOutcome::new("equal-subflow slow-start growth = Reno");
    for w in [1.0, 2.0, 3.0, 10.0] {
        let gap = slow_start_growth_gap(w, 12, 2);
        out.record(gap < 1e-9, || format!("initial {w} segments: gap {gap}"));
    }
    out
}

/// Checks byte conservation per connection and per link.
pub fn conserved(r: &SimReport) -> bool {
    r.flows.iter().all(|f| {
        f.data_bytes_sent == f.data_bytes_received + f.data_bytes_dropped + f.data_bytes_in_network
    }) && r.links.iter().all(|l| {
        l.bytes_offered
            == l.bytes_departed + l.bytes_dropped_tail + l.bytes_dropped_random + l.bytes_queued_at_end
    })
}

/// Runs every scenario twice with the same seed: byte conservation must
/// hold and the event digests must match. `duration` shortens runs.
pub fn conservation_suite(scenarios: &[Scenario], duration: Option<f64>) -> SuiteOutcome {
    use rayon::prelude::*;
    let mut out = SuiteOutcome::new("simulator conservation and determinism");
    let results: Vec<(String, bool)> = scenarios
        .par_iter()
        .map(|s| {
            let s = match duration {
                Some(d) => s.clone().with_duration(d),
                None => s.clone(),
            };
            let run = || run_simulation_with(&s.topology, &s.flows, s.duration, s.seed_base, &s.config);
            let ok = match (run(), run()) {
                (Ok(a), Ok(b)) => conserved(&a) && a.trace_digest == b.trace_digest && a == b,
                _ => false,
            };
            (s.name.clone(), ok)
        })
        .collect();
    for (name, ok) in results {
        out.record(ok, || name.clone());
    }
    out
}

/// Every property suite at acceptance size.
pub fn all_suites(seed: u64) -> Vec<SuiteOutcome> {
    vec![
        estimate_m_suite(10_000, seed),
        worked_examples(),
        grouping_suite(1_000, seed + 1),
        yen_suite(1_000, seed + 2),
        single_subflow_trace_suite(200, seed + 3),
        slow_start_growth_suite(),
        conservation_suite(&catalog(), Some(5.0)),
    ]
}
