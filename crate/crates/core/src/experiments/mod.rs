//! Scenario catalog, replication control and figure-ready outputs.
//!
//! Every scenario is a pure value: a topology, flow schedule, duration and
//! seed base. [`run_with_replications`] turns it into an
//! [`AggregateResult`], and [`reproduce`] scores the whole catalog against
//! the acceptance bands.

mod output;
mod replicate;
pub mod reproduce;
mod spec;
pub mod validation;

pub use output::{
    write_aggregate_csv, write_runs_csv, write_timeseries_csv, AggregateRow, RunRow, SeriesRow,
};
pub use replicate::{mean_and_margin, run_once, run_with_replications, AggregateResult, RunOutcome};
pub use reproduce::{reproduce, Check, ReproduceOptions, Reproduction};
pub use spec::{parse_scenario_spec, ScenarioSpec};

use crate::cc::Algorithm;
use crate::sim::{FlowSpec, SimConfig, SimError};
use crate::topology::{LinkId, LinkParams, PathDescriptor, Topology, TopologyError};

/// Testbed link rate in bytes/s.
pub const LINK_RATE: f64 = 11.7e6;
/// Per-hop propagation delay in seconds.
pub const HOP_DELAY: f64 = 0.00025;
/// Host send jitter applied in every scenario: two hop delays.
pub const SEND_JITTER: f64 = 2.0 * HOP_DELAY;
pub const TRANSFER_SECS: f64 = 20.0;
pub const STAGGER_SECS: f64 = 7.0;
pub const SHORT_OBJECT_BYTES: u64 = 10_000_000;
pub const HETERO_SECS: f64 = 60.0;
pub const MIN_QUEUE: u32 = 64;
/// Wire size of a full data packet.
pub const PACKET_BYTES: f64 = 1500.0;
/// Target 95% margin of error on shares.
pub const CI_TARGET: f64 = 0.01;

/// The X:Y:Z configurations of the multiflow comparison.
pub const XYZ_CONFIGS: [(usize, usize, usize); 10] = [
    (1, 3, 3),
    (1, 2, 2),
    (1, 1, 1),
    (2, 1, 1),
    (3, 1, 1),
    (4, 1, 1),
    (5, 1, 1),
    (6, 1, 1),
    (7, 1, 1),
    (8, 1, 1),
];

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("scenario spec: {0}")]
    Spec(String),
    #[error("scenario {0}: no connection delivered any data in the measurement window")]
    NoData(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyBuilder {
    Disjoint,
    Shared,
    Xyz,
    Heterogeneous,
    Custom,
}

impl TopologyBuilder {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Disjoint => "disjoint",
            Self::Shared => "shared",
            Self::Xyz => "xyz",
            Self::Heterogeneous => "hetero",
            Self::Custom => "custom",
        }
    }
}

/// Which stretch of a run the shares are computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// From one sample tick after the last flow starts to the first stop.
    Overlap,
    /// From time zero to the first completed transfer.
    FirstCompletion,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub builder: TopologyBuilder,
    pub topology: Topology,
    pub flows: Vec<FlowSpec>,
    /// One label per connection, e.g. `nmcc` or `single-2`.
    pub labels: Vec<String>,
    pub duration: f64,
    pub replications: usize,
    /// Cap for automatic extension towards the CI target.
    pub max_replications: usize,
    pub seed_base: u64,
    pub window: Window,
    /// Link whose data-packet rate is reported as a time series.
    pub probe: Option<LinkId>,
    pub config: SimConfig,
}

impl Scenario {
    fn new(name: String, builder: TopologyBuilder, topology: Topology, duration: f64) -> Self {
        Self {
            name,
            builder,
            topology,
            flows: Vec::new(),
            labels: Vec::new(),
            duration,
            replications: 4,
            max_replications: 16,
            seed_base: 1,
            window: Window::Overlap,
            probe: None,
            config: SimConfig {
                send_jitter: SEND_JITTER,
                ..SimConfig::default()
            },
        }
    }

    fn push(&mut self, label: impl Into<String>, flow: FlowSpec) {
        self.labels.push(label.into());
        self.flows.push(flow);
    }

    pub fn with_seed(mut self, seed_base: u64) -> Self {
        self.seed_base = seed_base;
        self
    }

    /// Sets the initial replication count; the cap never drops below it.
    pub fn with_replications(mut self, n: usize) -> Self {
        self.replications = n.max(1);
        self.max_replications = self.max_replications.max(self.replications);
        self
    }

    /// Rescales every flow's schedule to a run of `duration` seconds.
    pub fn with_duration(mut self, duration: f64) -> Self {
        let k = duration / self.duration;
        for f in &mut self.flows {
            f.start *= k;
            f.stop = f.stop.map(|s| s * k);
        }
        self.duration = duration;
        self
    }

    pub fn connection_count(&self) -> usize {
        self.flows.len()
    }
}

/// Queue capacity for a path: its bandwidth-delay product in full packets,
/// at least [`MIN_QUEUE`].
pub fn bdp_queue(bandwidth: f64, rtt: f64) -> u32 {
    ((bandwidth * rtt / PACKET_BYTES).ceil() as u32).max(MIN_QUEUE)
}

fn params(rate_multiple: f64) -> LinkParams {
    LinkParams::new(LINK_RATE * rate_multiple, HOP_DELAY)
}

fn path(t: &Topology, names: &[&str]) -> PathDescriptor {
    PathDescriptor::new(
        names
            .iter()
            .map(|n| t.link_id(n).unwrap_or_else(|| panic!("catalog link {n}")))
            .collect(),
    )
}

fn duplex(t: &mut Topology, a: &str, b: &str, p: LinkParams) {
    let (na, nb) = (node(t, a), node(t, b));
    t.add_duplex(&format!("{a}-{b}"), na, nb, p)
        .expect("catalog links are valid");
}

fn node(t: &mut Topology, name: &str) -> crate::topology::NodeId {
    match t.node_id(name) {
        Ok(id) => id,
        Err(_) => t.add_node(name).expect("fresh node"),
    }
}

/// Two disjoint publisher→subscriber paths `P1-R1-S1` and `P2-R2-S1`, plus
/// `R2-S2` for the second competitor.
pub fn disjoint_topology() -> Topology {
    let mut t = Topology::new();
    for (a, b) in [("P1", "R1"), ("R1", "S1"), ("P2", "R2"), ("R2", "S1"), ("R2", "S2")] {
        duplex(&mut t, a, b, params(1.0));
    }
    t
}

/// Two paths from `P` through `A` and `B` that merge on the bottleneck
/// `X-Y`; every other link runs at twice the bottleneck rate.
pub fn shared_topology() -> Topology {
    let mut t = Topology::new();
    for (a, b) in [("P", "A"), ("P", "B"), ("A", "X"), ("B", "X")] {
        duplex(&mut t, a, b, params(2.0));
    }
    duplex(&mut t, "X", "Y", params(1.0));
    duplex(&mut t, "Y", "S", params(2.0));
    t
}

/// Single flows run `P1-A-B-C-S1`; multiflow connections run
/// `P2-A-B-C-S2` and `P2-D-B-C-S2`. `B-C` is the only bottleneck.
pub fn xyz_topology() -> Topology {
    let mut t = Topology::new();
    for (a, b) in [("P1", "A"), ("P2", "A"), ("P2", "D"), ("A", "B"), ("D", "B")] {
        duplex(&mut t, a, b, params(2.0));
    }
    duplex(&mut t, "B", "C", params(1.0));
    for (a, b) in [("C", "S1"), ("C", "S2")] {
        duplex(&mut t, a, b, params(2.0));
    }
    t
}

pub const WIFI_DELAY: f64 = 0.010;
pub const WIFI_LOSS: f64 = 0.04;
pub const CELL_DELAY: f64 = 0.100;
pub const CELL_LOSS: f64 = 0.01;

/// A shared core hop `P-H`, then a WiFi hop `H-W` and a 3G hop `H-G` that
/// both reach `S`. Delay and loss apply in the data direction only.
pub fn heterogeneous_topology() -> Topology {
    let mut t = Topology::new();
    let wifi_rtt = 2.0 * HOP_DELAY * 2.0 + WIFI_DELAY + HOP_DELAY;
    let cell_rtt = 2.0 * HOP_DELAY * 2.0 + CELL_DELAY + HOP_DELAY;
    let q = bdp_queue(LINK_RATE, cell_rtt).max(bdp_queue(LINK_RATE, wifi_rtt));
    duplex(&mut t, "P", "H", params(4.0).with_queue(q));
    let (h, w, g) = (node(&mut t, "H"), node(&mut t, "W"), node(&mut t, "G"));
    let wifi = LinkParams::new(LINK_RATE, WIFI_DELAY)
        .with_loss(WIFI_LOSS)
        .with_queue(bdp_queue(LINK_RATE, wifi_rtt));
    let cell = LinkParams::new(LINK_RATE, CELL_DELAY)
        .with_loss(CELL_LOSS)
        .with_queue(bdp_queue(LINK_RATE, cell_rtt));
    t.add_link("H-W", h, w, wifi).expect("valid");
    t.add_link("H-W'", w, h, params(1.0)).expect("valid");
    t.add_link("H-G", h, g, cell).expect("valid");
    t.add_link("H-G'", g, h, params(1.0)).expect("valid");
    duplex(&mut t, "W", "S", params(2.0).with_queue(q));
    duplex(&mut t, "G", "S", params(2.0).with_queue(q));
    t
}

/// A multiflow connection over the two disjoint paths, against
/// `n_competitors` single flows pinned to path 1 and then path 2.
pub fn scenario_disjoint(assistance_on: bool, n_competitors: usize) -> Scenario {
    let t = disjoint_topology();
    let p1 = path(&t, &["P1-R1", "R1-S1"]);
    let p2 = path(&t, &["P2-R2", "R2-S1"]);
    let c2 = path(&t, &["P2-R2", "R2-S2"]);
    let name = format!(
        "disjoint:assist={},n={n_competitors}",
        if assistance_on { "on" } else { "off" }
    );
    let mut s = Scenario::new(name, TopologyBuilder::Disjoint, t, TRANSFER_SECS);
    s.push(
        "nmcc",
        FlowSpec::new(Algorithm::Nmcc, vec![p1.clone(), p2]).with_assistance(assistance_on),
    );
    for (i, p) in [p1, c2].into_iter().take(n_competitors).enumerate() {
        s.push(format!("single-{}", i + 1), FlowSpec::new(Algorithm::Reno, vec![p]));
    }
    s
}

/// One single-path flow alone on path 1 of the disjoint topology.
pub fn scenario_single_path() -> Scenario {
    let t = disjoint_topology();
    let p1 = path(&t, &["P1-R1", "R1-S1"]);
    let mut s = Scenario::new("disjoint:single".into(), TopologyBuilder::Disjoint, t, TRANSFER_SECS);
    s.push("single-1", FlowSpec::new(Algorithm::Reno, vec![p1]));
    s
}

fn shared_paths(t: &Topology) -> [PathDescriptor; 2] {
    [
        path(t, &["P-A", "A-X", "X-Y", "Y-S"]),
        path(t, &["P-B", "B-X", "X-Y", "Y-S"]),
    ]
}

/// One NMCC connection over both shared paths against `n_singles` single
/// flows alternating between them. With a non-zero `stagger` every flow
/// lasts [`TRANSFER_SECS`] and the NMCC flow starts `stagger` seconds after
/// the competitors (before them when negative).
pub fn scenario_shared(n_singles: usize, stagger: f64) -> Scenario {
    let t = shared_topology();
    let paths = shared_paths(&t);
    let (nmcc_start, single_start) = if stagger >= 0.0 {
        (stagger, 0.0)
    } else {
        (0.0, -stagger)
    };
    let name = if stagger == 0.0 {
        format!("shared:n={n_singles}")
    } else {
        format!("shared:n={n_singles},stagger={stagger:+}")
    };
    let duration = TRANSFER_SECS + stagger.abs();
    let mut s = Scenario::new(name, TopologyBuilder::Shared, t, duration);
    s.push(
        "nmcc",
        FlowSpec::new(Algorithm::Nmcc, paths.to_vec())
            .starting_at(nmcc_start)
            .stopping_at(nmcc_start + TRANSFER_SECS),
    );
    for i in 0..n_singles {
        s.push(
            format!("single-{}", i + 1),
            FlowSpec::new(Algorithm::Reno, vec![paths[i % 2].clone()])
                .starting_at(single_start)
                .stopping_at(single_start + TRANSFER_SECS),
        );
    }
    s
}

/// Every connection moves one [`SHORT_OBJECT_BYTES`] object over the
/// shared topology; shares are taken up to the first completion.
pub fn scenario_short_transfer(friendly_ss: bool, n_singles: usize) -> Scenario {
    let t = shared_topology();
    let paths = shared_paths(&t);
    let alg = if friendly_ss {
        Algorithm::Nmcc
    } else {
        Algorithm::NmccNoFriendlySs
    };
    let name = format!(
        "short:friendly_ss={},n={n_singles}",
        if friendly_ss { "on" } else { "off" }
    );
    let mut s = Scenario::new(name, TopologyBuilder::Shared, t, TRANSFER_SECS);
    s.window = Window::FirstCompletion;
    s.push(
        "nmcc",
        FlowSpec::new(alg, paths.to_vec()).with_size(SHORT_OBJECT_BYTES),
    );
    for i in 0..n_singles {
        s.push(
            format!("single-{}", i + 1),
            FlowSpec::new(Algorithm::Reno, vec![paths[i % 2].clone()]).with_size(SHORT_OBJECT_BYTES),
        );
    }
    s
}

/// `x` single flows, `y` coupled MPTCP and `z` NMCC connections, all
/// crossing the `B-C` bottleneck.
pub fn scenario_xyz(x: usize, y: usize, z: usize) -> Result<Scenario, ExperimentError> {
    if x + y + z < 2 {
        return Err(ExperimentError::Spec(format!(
            "xyz needs at least two connections, got {x}:{y}:{z}"
        )));
    }
    let t = xyz_topology();
    let single = path(&t, &["P1-A", "A-B", "B-C", "C-S1"]);
    let multi = vec![
        path(&t, &["P2-A", "A-B", "B-C", "C-S2"]),
        path(&t, &["P2-D", "D-B", "B-C", "C-S2"]),
    ];
    let mut s = Scenario::new(format!("xyz:{x}:{y}:{z}"), TopologyBuilder::Xyz, t, TRANSFER_SECS);
    for i in 0..x {
        s.push(format!("single-{}", i + 1), FlowSpec::new(Algorithm::Reno, vec![single.clone()]));
    }
    for i in 0..y {
        s.push(format!("coupled-{}", i + 1), FlowSpec::new(Algorithm::MptcpCoupled, multi.clone()));
    }
    for i in 0..z {
        s.push(format!("nmcc-{}", i + 1), FlowSpec::new(Algorithm::Nmcc, multi.clone()));
    }
    Ok(s)
}

/// One multiflow connection over a lossy WiFi path and a long 3G path for
/// [`HETERO_SECS`]; the WiFi link is the probe.
pub fn scenario_heterogeneous(algorithm: Algorithm) -> Result<Scenario, ExperimentError> {
    if !matches!(
        algorithm,
        Algorithm::Nmcc | Algorithm::MptcpCoupled | Algorithm::MptcpUncoupled
    ) {
        return Err(ExperimentError::Spec(format!(
            "heterogeneous scenario needs a multiflow algorithm, got {algorithm}"
        )));
    }
    let t = heterogeneous_topology();
    let wifi = path(&t, &["P-H", "H-W", "W-S"]);
    let cell = path(&t, &["P-H", "H-G", "G-S"]);
    let probe = wifi.links[1];
    let mut s = Scenario::new(
        format!("hetero:alg={algorithm}"),
        TopologyBuilder::Heterogeneous,
        t,
        HETERO_SECS,
    );
    s.push(algorithm.as_str(), FlowSpec::new(algorithm, vec![wifi, cell]));
    s.probe = Some(probe);
    s.replications = 5;
    s.max_replications = 20;
    Ok(s)
}

/// The full reproduction catalog in a fixed order.
pub fn catalog() -> Vec<Scenario> {
    let mut out = Vec::new();
    out.push(scenario_single_path());
    for assist in [true, false] {
        for n in 0..=2 {
            out.push(scenario_disjoint(assist, n));
        }
    }
    for stagger in [0.0, STAGGER_SECS, -STAGGER_SECS] {
        for n in [1, 2, 4, 9] {
            out.push(scenario_shared(n, stagger));
        }
    }
    for friendly in [true, false] {
        for n in [1, 2] {
            out.push(scenario_short_transfer(friendly, n));
        }
    }
    for (x, y, z) in XYZ_CONFIGS {
        out.push(scenario_xyz(x, y, z).expect("catalog configs are valid"));
    }
    for alg in [Algorithm::Nmcc, Algorithm::MptcpCoupled, Algorithm::MptcpUncoupled] {
        out.push(scenario_heterogeneous(alg).expect("multiflow algorithm"));
    }
    out
}
