//! Deterministic packet-level discrete-event simulator.
//!
//! Data packets follow explicit source routes through droptail FIFO link
//! queues; every data packet is acknowledged by a 40-byte cumulative ACK
//! that travels the reverse route. Events are ordered by `(time, insertion
//! sequence)`, and random loss draws from one seeded stream per link, so a
//! run is a pure function of its inputs and seed.

mod link;
mod sender;
mod stats;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use link::{EnqueueOutcome, LinkQueue, LinkStats};
pub use sender::{drive_sender, ConnDriver, Emission, SubflowReceiver};
pub use stats::{bandwidth_share, shares_from_bytes, FlowStats, Share};

use crate::cc::{build_connection, AckKind, Algorithm, CcError, DEFAULT_MSS};
use crate::topology::{LinkId, PathDescriptor, Topology, TopologyError};

pub const HEADER_BYTES: u32 = 40;
pub const ACK_BYTES: u32 = 40;
pub const SAMPLE_INTERVAL: f64 = 0.1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("flow {flow}: {source}")]
    Route {
        flow: usize,
        #[source]
        source: TopologyError,
    },
    #[error("flow {flow}: {source}")]
    Connection {
        flow: usize,
        #[source]
        source: CcError,
    },
    #[error("flow {0}: start time must be finite and non-negative")]
    BadStart(usize),
    #[error("flow {0}: stop time must follow the start time")]
    BadStop(usize),
    #[error("duration must be positive")]
    BadDuration,
    #[error("no bytes were delivered, shares are undefined")]
    ZeroTotalBytes,
}

/// Simulated time in integer nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs_f64(s: f64) -> Self {
        SimTime((s * 1e9).round() as u64)
    }

    pub fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    pub fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 * 1e-9
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

/// A packet on the wire. `route` indexes the simulator's route table and
/// `hop` is the position of the next link to traverse.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Packet {
    pub uid: u64,
    pub conn: u32,
    pub subflow: u16,
    /// Data: first payload byte. ACK: cumulative acknowledgment.
    pub seq: u64,
    pub payload: u32,
    pub size: u32,
    pub is_ack: bool,
    pub route: u32,
    pub hop: u16,
    pub send_time: SimTime,
    /// On ACKs, the send time of the data packet that triggered them.
    pub ts_echo: SimTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub algorithm: Algorithm,
    pub paths: Vec<PathDescriptor>,
    pub assistance: bool,
    /// Seconds.
    pub start: f64,
    /// Seconds; the flow sends until the end of the run when `None`.
    pub stop: Option<f64>,
    /// Bytes; unbounded when `None`.
    pub transfer_size: Option<u64>,
}

impl FlowSpec {
    pub fn new(algorithm: Algorithm, paths: Vec<PathDescriptor>) -> Self {
        Self {
            algorithm,
            paths,
            assistance: true,
            start: 0.0,
            stop: None,
            transfer_size: None,
        }
    }

    pub fn starting_at(mut self, start: f64) -> Self {
        self.start = start;
        self
    }

    pub fn stopping_at(mut self, stop: f64) -> Self {
        self.stop = Some(stop);
        self
    }

    pub fn with_size(mut self, bytes: u64) -> Self {
        self.transfer_size = Some(bytes);
        self
    }

    pub fn with_assistance(mut self, on: bool) -> Self {
        self.assistance = on;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mss: u32,
    pub header_bytes: u32,
    pub ack_bytes: u32,
    /// Seconds between throughput samples.
    pub sample_interval: f64,
    /// Subject ACKs to the links' random loss as well.
    pub ack_random_loss: bool,
    /// Upper bound of a uniform random delay, in seconds, between a
    /// sender's decision to transmit and the packet reaching its first
    /// link. Models host processing time; order within a subflow is kept.
    pub send_jitter: f64,
    pub record_trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            mss: DEFAULT_MSS,
            header_bytes: HEADER_BYTES,
            ack_bytes: ACK_BYTES,
            sample_interval: SAMPLE_INTERVAL,
            ack_random_loss: false,
            send_jitter: 0.0,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    PktArrival,
    PktDeparture,
    AckArrival,
    Timeout,
    FlowStart,
    FlowStop,
    SampleTick,
    /// A packet was refused by a link queue.
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub time: SimTime,
    pub kind: EventKind,
    pub link: Option<LinkId>,
    pub uid: u64,
    pub conn: u32,
}

/// Delivered bytes of every connection at the moment one completed.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionSnapshot {
    pub time: f64,
    pub conn: usize,
    pub delivered: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub flows: Vec<FlowStats>,
    pub links: Vec<LinkStats>,
    /// Tick times matching the per-tick series in the stats.
    pub sample_times: Vec<f64>,
    pub completions: Vec<CompletionSnapshot>,
    pub events_processed: u64,
    /// FNV-1a digest over every processed event.
    pub trace_digest: u64,
    pub trace: Vec<TraceEntry>,
    pub duration: f64,
}

pub fn run_simulation(
    topo: &Topology,
    flows: &[FlowSpec],
    duration: f64,
    seed: u64,
) -> Result<SimReport, SimError> {
    run_simulation_with(topo, flows, duration, seed, &SimConfig::default())
}

pub fn run_simulation_with(
    topo: &Topology,
    flows: &[FlowSpec],
    duration: f64,
    seed: u64,
    cfg: &SimConfig,
) -> Result<SimReport, SimError> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(SimError::BadDuration);
    }
    let mut sim = Simulator::new(topo, cfg, duration, seed);
    for (i, f) in flows.iter().enumerate() {
        sim.add_flow(i, f)?;
    }
    sim.run();
    Ok(sim.finish())
}

enum Event {
    Arrival(Packet),
    Departure(LinkId),
    Timeout { conn: usize, sub: usize },
    FlowStart(usize),
    FlowStop(usize),
    SampleTick(usize),
}

struct Scheduled {
    time: SimTime,
    order: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.order) == (other.time, other.order)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.order).cmp(&(self.time, self.order))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct RtoTimer {
    deadline: Option<SimTime>,
    pending: Option<SimTime>,
}

struct Conn {
    driver: ConnDriver,
    fwd: Vec<u32>,
    rev: Vec<u32>,
    receivers: Vec<SubflowReceiver>,
    timers: Vec<RtoTimer>,
    /// Latest release time per subflow, so jitter never reorders.
    released: Vec<SimTime>,
    rng: ChaCha8Rng,
    stats: FlowStats,
}

struct Simulator<'a> {
    cfg: &'a SimConfig,
    seed: u64,
    topo: &'a Topology,
    end: SimTime,
    now: SimTime,
    heap: BinaryHeap<Scheduled>,
    order: u64,
    next_uid: u64,
    links: Vec<LinkQueue>,
    routes: Vec<Vec<LinkId>>,
    conns: Vec<Conn>,
    sample_times: Vec<f64>,
    completions: Vec<CompletionSnapshot>,
    events: u64,
    digest: u64,
    trace: Vec<TraceEntry>,
}

/// Random streams `0..` belong to links; connections use their own range.
const JITTER_STREAM: u64 = 1 << 40;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

impl<'a> Simulator<'a> {
    fn new(topo: &'a Topology, cfg: &'a SimConfig, duration: f64, seed: u64) -> Self {
        let mut sim = Self {
            cfg,
            seed,
            topo,
            end: SimTime::from_secs_f64(duration),
            now: SimTime::ZERO,
            heap: BinaryHeap::new(),
            order: 0,
            next_uid: 0,
            links: topo.links().iter().map(|l| LinkQueue::new(l, seed)).collect(),
            routes: Vec::new(),
            conns: Vec::new(),
            sample_times: Vec::new(),
            completions: Vec::new(),
            events: 0,
            digest: FNV_OFFSET,
            trace: Vec::new(),
        };
        let first_tick = SimTime::from_secs_f64(cfg.sample_interval);
        sim.schedule(first_tick, Event::SampleTick(1));
        sim
    }

    fn add_flow(&mut self, idx: usize, spec: &FlowSpec) -> Result<(), SimError> {
        if !(spec.start >= 0.0 && spec.start.is_finite()) {
            return Err(SimError::BadStart(idx));
        }
        if let Some(stop) = spec.stop {
            if stop.is_nan() || stop <= spec.start {
                return Err(SimError::BadStop(idx));
            }
        }
        let route_err = |source| SimError::Route { flow: idx, source };
        let mut fwd = Vec::new();
        let mut rev = Vec::new();
        for p in &spec.paths {
            self.topo.validate_route(&p.links).map_err(route_err)?;
            let back = self.topo.reverse_route(&p.links).map_err(route_err)?;
            fwd.push(self.routes.len() as u32);
            self.routes.push(p.links.clone());
            rev.push(self.routes.len() as u32);
            self.routes.push(back);
        }
        let cc = build_connection(
            &spec.paths,
            spec.algorithm,
            self.cfg.mss,
            spec.transfer_size,
            spec.assistance,
        )
        .map_err(|source| SimError::Connection { flow: idx, source })?;
        let n = spec.paths.len();
        self.conns.push(Conn {
            driver: ConnDriver::new(cc),
            fwd,
            rev,
            receivers: vec![SubflowReceiver::default(); n],
            timers: vec![RtoTimer::default(); n],
            released: vec![SimTime::ZERO; n],
            rng: {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(JITTER_STREAM + idx as u64);
                rng
            },
            stats: FlowStats::new(idx, spec.algorithm),
        });
        self.schedule(SimTime::from_secs_f64(spec.start), Event::FlowStart(idx));
        if let Some(stop) = spec.stop {
            self.schedule(SimTime::from_secs_f64(stop), Event::FlowStop(idx));
        }
        Ok(())
    }

    fn schedule(&mut self, time: SimTime, event: Event) {
        self.order += 1;
        self.heap.push(Scheduled {
            time,
            order: self.order,
            event,
        });
    }

    fn note(&mut self, kind: EventKind, link: Option<LinkId>, uid: u64, conn: u32) {
        self.events += 1;
        let words = [
            self.now.as_nanos(),
            kind as u64,
            link.map_or(u64::MAX, |l| l.0 as u64),
            uid,
            conn as u64,
        ];
        for w in words {
            for b in w.to_le_bytes() {
                self.digest ^= b as u64;
                self.digest = self.digest.wrapping_mul(FNV_PRIME);
            }
        }
        if self.cfg.record_trace {
            self.trace.push(TraceEntry {
                time: self.now,
                kind,
                link,
                uid,
                conn,
            });
        }
    }

    fn run(&mut self) {
        while let Some(Scheduled { time, event, .. }) = self.heap.pop() {
            if time > self.end {
                // keep in-flight packets visible to the final accounting
                self.heap.push(Scheduled {
                    time,
                    order: 0,
                    event,
                });
                break;
            }
            self.now = time;
            match event {
                Event::Arrival(pkt) => self.on_arrival(pkt),
                Event::Departure(link) => self.on_departure(link),
                Event::Timeout { conn, sub } => self.on_timer(conn, sub, time),
                Event::FlowStart(c) => {
                    self.note(EventKind::FlowStart, None, 0, c as u32);
                    self.conns[c].driver.active = true;
                    self.pump(c);
                }
                Event::FlowStop(c) => {
                    self.note(EventKind::FlowStop, None, 0, c as u32);
                    let conn = &mut self.conns[c];
                    conn.driver.active = false;
                    for t in &mut conn.timers {
                        t.deadline = None;
                    }
                }
                Event::SampleTick(k) => self.on_tick(k),
            }
        }
    }

    fn on_tick(&mut self, k: usize) {
        self.note(EventKind::SampleTick, None, k as u64, 0);
        let t = self.now.as_secs_f64();
        let interval = self.cfg.sample_interval;
        self.sample_times.push(t);
        for conn in &mut self.conns {
            let s = &mut conn.stats;
            let prev = s.delivered_series.last().copied().unwrap_or(0);
            s.delivered_series.push(s.bytes_delivered);
            s.throughput
                .push((t, (s.bytes_delivered - prev) as f64 / interval));
            s.m_series
                .push(conn.driver.cc.groups().iter().map(|g| g.m).collect());
        }
        for q in &mut self.links {
            q.stats.data_packets_series.push(q.stats.data_packets_departed);
        }
        let next = SimTime::from_secs_f64((k + 1) as f64 * interval);
        if next <= self.end {
            self.schedule(next, Event::SampleTick(k + 1));
        }
    }

    /// Sends whatever the windows allow on connection `c`.
    fn pump(&mut self, c: usize) {
        let emissions = drive_sender(&mut self.conns[c].driver, self.now);
        for e in emissions {
            self.emit(c, e);
        }
    }

    fn emit(&mut self, c: usize, e: Emission) {
        let size = e.len + self.cfg.header_bytes;
        let uid = self.next_uid;
        self.next_uid += 1;
        let conn = &mut self.conns[c];
        conn.stats.segments_sent += 1;
        conn.stats.data_bytes_sent += size as u64;
        if e.retransmission {
            conn.stats.retransmissions += 1;
        }
        let rto = SimTime::from_secs_f64(conn.driver.cc.subflow(e.subflow).rtt.rto());
        let timer = &mut conn.timers[e.subflow];
        if timer.deadline.is_none() {
            timer.deadline = Some(self.now + rto);
        }
        let pkt = Packet {
            uid,
            conn: c as u32,
            subflow: e.subflow as u16,
            seq: e.seq,
            payload: e.len,
            size,
            is_ack: false,
            route: conn.fwd[e.subflow],
            hop: 0,
            send_time: self.now,
            ts_echo: SimTime::ZERO,
        };
        self.arm_timer(c, e.subflow);
        if self.cfg.send_jitter > 0.0 {
            let conn = &mut self.conns[c];
            let delay = SimTime::from_secs_f64(conn.rng.gen::<f64>() * self.cfg.send_jitter);
            let at = (self.now + delay).max(conn.released[e.subflow]);
            conn.released[e.subflow] = at;
            self.schedule(at, Event::Arrival(pkt));
        } else {
            self.forward(pkt);
        }
    }

    fn arm_timer(&mut self, c: usize, sub: usize) {
        let timer = self.conns[c].timers[sub];
        if let Some(deadline) = timer.deadline {
            if timer.pending.is_none_or(|p| p > deadline) {
                self.conns[c].timers[sub].pending = Some(deadline);
                self.schedule(deadline, Event::Timeout { conn: c, sub });
            }
        }
    }

    /// Hands a packet to the next link on its route, or to its endpoint.
    fn forward(&mut self, pkt: Packet) {
        let route = &self.routes[pkt.route as usize];
        if pkt.hop as usize == route.len() {
            self.deliver(pkt);
            return;
        }
        let link = route[pkt.hop as usize];
        let random = !pkt.is_ack || self.cfg.ack_random_loss;
        let outcome = self.links[link.index()].enqueue_or_drop(pkt, random);
        if outcome != EnqueueOutcome::Queued {
            self.note(EventKind::Drop, Some(link), pkt.uid, pkt.conn);
            if !pkt.is_ack {
                self.conns[pkt.conn as usize].stats.data_bytes_dropped += pkt.size as u64;
            }
            return;
        }
        self.note(EventKind::PktArrival, Some(link), pkt.uid, pkt.conn);
        if let Some(done) = self.links[link.index()].start_service(self.now) {
            self.schedule(done, Event::Departure(link));
        }
    }

    fn on_departure(&mut self, link: LinkId) {
        let q = &mut self.links[link.index()];
        let mut pkt = q.finish_service();
        let prop = q.prop_delay();
        self.note(EventKind::PktDeparture, Some(link), pkt.uid, pkt.conn);
        if !pkt.is_ack {
            *self.conns[pkt.conn as usize]
                .stats
                .per_link_bytes
                .entry(link)
                .or_insert(0) += pkt.size as u64;
        }
        pkt.hop += 1;
        self.schedule(self.now + prop, Event::Arrival(pkt));
        if let Some(done) = self.links[link.index()].start_service(self.now) {
            self.schedule(done, Event::Departure(link));
        }
    }

    fn on_arrival(&mut self, pkt: Packet) {
        self.forward(pkt);
    }

    fn deliver(&mut self, pkt: Packet) {
        if pkt.is_ack {
            self.note(EventKind::AckArrival, None, pkt.uid, pkt.conn);
            self.on_ack(pkt);
        } else {
            self.note(EventKind::PktArrival, None, pkt.uid, pkt.conn);
            self.on_data(pkt);
        }
    }

    fn on_data(&mut self, pkt: Packet) {
        let c = pkt.conn as usize;
        let sub = pkt.subflow as usize;
        let conn = &mut self.conns[c];
        conn.stats.data_bytes_received += pkt.size as u64;
        let (cum, fresh) = conn.receivers[sub].on_data(pkt.seq, pkt.payload as u64);
        conn.stats.bytes_delivered += fresh;
        if let Some(total) = conn.driver.cc.transfer_size() {
            if conn.stats.completion_time.is_none() && conn.stats.bytes_delivered >= total {
                conn.stats.completion_time = Some(self.now.as_secs_f64());
                conn.driver.finished = true;
                for t in &mut conn.timers {
                    t.deadline = None;
                }
                let delivered = self.conns.iter().map(|c| c.stats.bytes_delivered).collect();
                self.completions.push(CompletionSnapshot {
                    time: self.now.as_secs_f64(),
                    conn: c,
                    delivered,
                });
            }
        }
        let uid = self.next_uid;
        self.next_uid += 1;
        let ack = Packet {
            uid,
            conn: pkt.conn,
            subflow: pkt.subflow,
            seq: cum,
            payload: 0,
            size: self.cfg.ack_bytes,
            is_ack: true,
            route: self.conns[c].rev[sub],
            hop: 0,
            send_time: self.now,
            ts_echo: pkt.send_time,
        };
        self.forward(ack);
    }

    fn on_ack(&mut self, pkt: Packet) {
        let c = pkt.conn as usize;
        let sub = pkt.subflow as usize;
        let now = self.now;
        let conn = &mut self.conns[c];
        if conn.driver.finished || !conn.driver.active {
            return;
        }
        let sample = (now - pkt.ts_echo).as_secs_f64();
        let outcome = conn.driver.cc.on_ack(sub, pkt.seq, Some(sample));
        if outcome.retransmit {
            if outcome.kind == AckKind::Duplicate {
                conn.stats.fast_retransmits += 1;
            }
            let una = conn.driver.cc.subflow(sub).snd_una;
            if let Some(e) = conn.driver.segment_at(sub, una) {
                conn.driver.cc.record_send(sub, e.seq, e.len as u64);
                self.emit(c, e);
            }
        }
        if let AckKind::New(_) = outcome.kind {
            let conn = &mut self.conns[c];
            let s = conn.driver.cc.subflow(sub);
            conn.timers[sub].deadline = (s.snd_max > s.snd_una)
                .then(|| now + SimTime::from_secs_f64(s.rtt.rto()));
            self.arm_timer(c, sub);
        }
        self.pump(c);
    }

    fn on_timer(&mut self, c: usize, sub: usize, at: SimTime) {
        let timer = &mut self.conns[c].timers[sub];
        if timer.pending != Some(at) {
            return;
        }
        timer.pending = None;
        match timer.deadline {
            None => {}
            Some(d) if d > at => self.arm_timer(c, sub),
            Some(_) => {
                self.note(EventKind::Timeout, None, sub as u64, c as u32);
                let conn = &mut self.conns[c];
                let s = conn.driver.cc.subflow(sub);
                if conn.driver.finished || !conn.driver.active || s.snd_max == s.snd_una {
                    conn.timers[sub].deadline = None;
                    return;
                }
                conn.driver.cc.on_timeout(sub);
                conn.stats.timeouts += 1;
                let rto = SimTime::from_secs_f64(conn.driver.cc.subflow(sub).rtt.rto());
                conn.timers[sub].deadline = Some(self.now + rto);
                self.arm_timer(c, sub);
                self.pump(c);
            }
        }
    }

    fn finish(mut self) -> SimReport {
        for q in &mut self.links {
            let mut held = 0;
            for p in q.held() {
                held += p.size as u64;
                if !p.is_ack {
                    self.conns[p.conn as usize].stats.data_bytes_in_network += p.size as u64;
                }
            }
            q.stats.bytes_queued_at_end = held;
        }
        for s in self.heap.drain() {
            if let Event::Arrival(p) = s.event {
                if !p.is_ack {
                    self.conns[p.conn as usize].stats.data_bytes_in_network += p.size as u64;
                }
            }
        }
        SimReport {
            flows: self.conns.into_iter().map(|c| c.stats).collect(),
            links: self.links.into_iter().map(|q| q.stats).collect(),
            sample_times: self.sample_times,
            completions: self.completions,
            events_processed: self.events,
            trace_digest: self.digest,
            trace: self.trace,
            duration: self.end.as_secs_f64(),
        }
    }
}
