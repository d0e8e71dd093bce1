//! Per-connection congestion control.
//!
//! A [`ConnectionState`] owns one [`SubflowState`] per path. Each subflow is
//! a TCP-like sender (cumulative ACKs, NewReno fast recovery, RTO with
//! backoff); the algorithm only decides how windows grow:
//!
//! * `Reno` / `MptcpUncoupled`: independent Reno per subflow.
//! * `Nmcc`: members of a sharing group grow `m` times slower, in slow
//!   start and congestion avoidance; singleton groups behave like Reno.
//! * `NmccNoFriendlySs`: as `Nmcc` but slow start is plain Reno.
//! * `MptcpCoupled`: linked increases across all subflows in congestion
//!   avoidance.

mod lia;
mod nmcc;
mod reno;
mod rtt;

use std::fmt;
use std::str::FromStr;

pub use lia::{coupled_increase, coupled_increment, lia_alpha};
pub use nmcc::{estimate_m, growth_rate, increase_window};
pub use reno::RenoWindow;
pub use rtt::{RttEstimator, RTO_INITIAL, RTO_MAX, RTO_MIN};

use crate::topology::{assign_group_ids, GroupId, PathDescriptor};

/// Segment payload size in bytes.
pub const DEFAULT_MSS: u32 = 1460;
pub const INITIAL_CWND_SEGMENTS: f64 = 2.0;
pub const INITIAL_SSTHRESH_SEGMENTS: f64 = 64.0;
const DUP_ACK_THRESHOLD: u32 = 3;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CcError {
    #[error("friendliness factor requested for an empty group")]
    EmptyGroup,
    #[error("a connection needs at least one path")]
    NoPaths,
    #[error("single-path Reno cannot drive {0} paths")]
    RenoMultipath(usize),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Reno,
    Nmcc,
    NmccNoFriendlySs,
    MptcpCoupled,
    MptcpUncoupled,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Reno,
        Algorithm::Nmcc,
        Algorithm::NmccNoFriendlySs,
        Algorithm::MptcpCoupled,
        Algorithm::MptcpUncoupled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Reno => "reno",
            Algorithm::Nmcc => "nmcc",
            Algorithm::NmccNoFriendlySs => "nmcc-no-friendly-ss",
            Algorithm::MptcpCoupled => "mptcp-coupled",
            Algorithm::MptcpUncoupled => "mptcp-uncoupled",
        }
    }

    pub fn is_nmcc(self) -> bool {
        matches!(self, Algorithm::Nmcc | Algorithm::NmccNoFriendlySs)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = CcError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "reno" | "tcp" | "single" => Algorithm::Reno,
            "nmcc" => Algorithm::Nmcc,
            "nmcc-no-friendly-ss" | "nmcc-noss" => Algorithm::NmccNoFriendlySs,
            "mptcp-coupled" | "coupled" | "lia" => Algorithm::MptcpCoupled,
            "mptcp-uncoupled" | "uncoupled" => Algorithm::MptcpUncoupled,
            _ => return Err(CcError::UnknownAlgorithm(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    SlowStart,
    CongAvoid,
    FastRecovery,
}

/// Sender-side state of one subflow. Sequence numbers are byte offsets in
/// the subflow's own sequence space.
#[derive(Debug, Clone, PartialEq)]
pub struct SubflowState {
    pub path: PathDescriptor,
    /// Index of the owning group in [`ConnectionState::groups`].
    pub group: usize,
    pub cwnd: f64,
    pub ssthresh: f64,
    /// Window a standalone Reno flow would hold given the same ACKs and
    /// losses.
    pub shadow: RenoWindow,
    pub rtt: RttEstimator,
    pub phase: Phase,
    pub dup_acks: u32,
    pub last_rtt_sample: Option<f64>,
    pub snd_una: u64,
    pub snd_nxt: u64,
    pub snd_max: u64,
    /// Highest sequence sent when the current recovery began.
    pub recover: u64,
    /// Temporary window inflation while in fast recovery.
    pub recovery_allowance: f64,
}

impl SubflowState {
    pub fn new(path: PathDescriptor, group: usize, mss: f64) -> Self {
        let cwnd = INITIAL_CWND_SEGMENTS * mss;
        let ssthresh = INITIAL_SSTHRESH_SEGMENTS * mss;
        Self {
            path,
            group,
            cwnd,
            ssthresh,
            shadow: RenoWindow::new(cwnd, ssthresh),
            rtt: RttEstimator::default(),
            phase: Phase::SlowStart,
            dup_acks: 0,
            last_rtt_sample: None,
            snd_una: 0,
            snd_nxt: 0,
            snd_max: 0,
            recover: 0,
            recovery_allowance: 0.0,
        }
    }

    pub fn shadow_cwnd(&self) -> f64 {
        self.shadow.cwnd
    }

    pub fn bytes_in_flight(&self) -> u64 {
        self.snd_nxt - self.snd_una
    }

    /// Whether the window admits another segment.
    pub fn can_send(&self) -> bool {
        (self.bytes_in_flight() as f64) < self.cwnd + self.recovery_allowance
    }

    fn sync_phase(&mut self) {
        if self.phase != Phase::FastRecovery {
            self.phase = if self.cwnd < self.ssthresh {
                Phase::SlowStart
            } else {
                Phase::CongAvoid
            };
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowGroup {
    pub group_id: GroupId,
    pub members: Vec<usize>,
    /// Friendliness factor, at least 1.
    pub m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckKind {
    /// Advanced the cumulative ACK by this many bytes.
    New(u64),
    Duplicate,
    Stale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AckOutcome {
    pub kind: AckKind,
    /// The segment at `snd_una` must be retransmitted now.
    pub retransmit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionState {
    algorithm: Algorithm,
    subflows: Vec<SubflowState>,
    groups: Vec<FlowGroup>,
    mss: u32,
    transfer_size: Option<u64>,
}

/// Builds a connection over `paths`. With assistance on, groups follow the
/// paths' group ids (assigning them if missing); with it off, every path is
/// assumed to share a bottleneck and all subflows form one group.
pub fn build_connection(
    paths: &[PathDescriptor],
    algorithm: Algorithm,
    mss: u32,
    transfer_size: Option<u64>,
    assistance_on: bool,
) -> Result<ConnectionState, CcError> {
    if paths.is_empty() {
        return Err(CcError::NoPaths);
    }
    if algorithm == Algorithm::Reno && paths.len() > 1 {
        return Err(CcError::RenoMultipath(paths.len()));
    }
    let paths = if paths.iter().all(|p| p.group_id.is_some()) {
        paths.to_vec()
    } else {
        assign_group_ids(paths)
    };

    let mut groups: Vec<FlowGroup> = Vec::new();
    let mut subflows = Vec::with_capacity(paths.len());
    for (i, path) in paths.into_iter().enumerate() {
        let gid = if assistance_on {
            path.group_id.expect("assigned above")
        } else {
            GroupId(1)
        };
        let group = match groups.iter().position(|g| g.group_id == gid) {
            Some(g) => g,
            None => {
                groups.push(FlowGroup {
                    group_id: gid,
                    members: Vec::new(),
                    m: 1.0,
                });
                groups.len() - 1
            }
        };
        groups[group].members.push(i);
        subflows.push(SubflowState::new(path, group, mss as f64));
    }
    for g in &mut groups {
        g.m = g.members.len() as f64;
    }
    Ok(ConnectionState {
        algorithm,
        subflows,
        groups,
        mss,
        transfer_size,
    })
}

impl ConnectionState {
    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn mss(&self) -> u32 {
        self.mss
    }

    pub fn transfer_size(&self) -> Option<u64> {
        self.transfer_size
    }

    pub fn subflows(&self) -> &[SubflowState] {
        &self.subflows
    }

    pub fn subflow(&self, idx: usize) -> &SubflowState {
        &self.subflows[idx]
    }

    /// Direct access for drivers and tests that need to seed a state.
    pub fn subflow_mut(&mut self, idx: usize) -> &mut SubflowState {
        &mut self.subflows[idx]
    }

    pub fn groups(&self) -> &[FlowGroup] {
        &self.groups
    }

    /// Friendliness factor currently applied to subflow `idx`.
    pub fn m_for(&self, idx: usize) -> f64 {
        self.groups[self.subflows[idx].group].m
    }

    /// Records that `len` bytes starting at `seq` were put on the wire.
    /// Returns true for a retransmission.
    pub fn record_send(&mut self, idx: usize, seq: u64, len: u64) -> bool {
        let sub = &mut self.subflows[idx];
        let retransmission = seq < sub.snd_max;
        sub.snd_nxt = sub.snd_nxt.max(seq + len);
        sub.snd_max = sub.snd_max.max(seq + len);
        retransmission
    }

    /// Processes a cumulative ACK for subflow `idx`. `rtt_sample` is the
    /// measured round trip of the segment that triggered it, if any.
    pub fn on_ack(&mut self, idx: usize, cum_ack: u64, rtt_sample: Option<f64>) -> AckOutcome {
        let mss = self.mss as f64;
        let sub = &mut self.subflows[idx];

        if cum_ack > sub.snd_una {
            let acked = cum_ack - sub.snd_una;
            sub.snd_una = cum_ack;
            sub.snd_nxt = sub.snd_nxt.max(cum_ack);
            sub.snd_max = sub.snd_max.max(cum_ack);
            if let Some(r) = rtt_sample {
                sub.rtt.on_sample(r);
                sub.last_rtt_sample = Some(r);
            }
            let group = sub.group;
            let mut retransmit = false;
            if sub.phase == Phase::FastRecovery {
                if cum_ack >= sub.recover {
                    sub.phase = Phase::CongAvoid;
                    sub.recovery_allowance = 0.0;
                    sub.dup_acks = 0;
                    sub.sync_phase();
                } else {
                    // partial ACK: next hole is lost too
                    sub.recovery_allowance = (sub.recovery_allowance - acked as f64).max(0.0) + mss;
                    retransmit = sub.snd_una < sub.snd_max;
                }
                self.refresh_m(group);
            } else {
                sub.dup_acks = 0;
                self.refresh_m(group);
                self.grow(idx);
            }
            return AckOutcome {
                kind: AckKind::New(acked),
                retransmit,
            };
        }

        if cum_ack < sub.snd_una || sub.snd_nxt == sub.snd_una {
            return AckOutcome {
                kind: AckKind::Stale,
                retransmit: false,
            };
        }

        sub.dup_acks += 1;
        let mut retransmit = false;
        if sub.phase == Phase::FastRecovery {
            sub.recovery_allowance += mss;
        } else if sub.dup_acks == DUP_ACK_THRESHOLD && sub.snd_una >= sub.recover {
            sub.ssthresh = reno::halved(sub.cwnd, mss);
            sub.cwnd = sub.ssthresh;
            sub.shadow.on_fast_retransmit(mss);
            sub.phase = Phase::FastRecovery;
            sub.recover = sub.snd_max;
            sub.recovery_allowance = DUP_ACK_THRESHOLD as f64 * mss;
            retransmit = true;
            let group = sub.group;
            self.refresh_m(group);
        }
        AckOutcome {
            kind: AckKind::Duplicate,
            retransmit,
        }
    }

    /// Retransmission timer expiry on subflow `idx`: collapse to one
    /// segment, back off the timer and resend from `snd_una`.
    pub fn on_timeout(&mut self, idx: usize) {
        let mss = self.mss as f64;
        let sub = &mut self.subflows[idx];
        sub.ssthresh = reno::halved(sub.cwnd, mss);
        sub.cwnd = mss;
        sub.shadow.on_timeout(mss);
        sub.phase = Phase::SlowStart;
        sub.dup_acks = 0;
        sub.recovery_allowance = 0.0;
        sub.recover = sub.snd_max;
        sub.snd_nxt = sub.snd_una;
        sub.rtt.back_off();
        sub.sync_phase();
        let group = sub.group;
        self.refresh_m(group);
    }

    fn refresh_m(&mut self, group: usize) {
        let g = &self.groups[group];
        let members = g.members.iter().map(|&i| &self.subflows[i]);
        let m = estimate_m(members, self.mss as f64).expect("groups are never empty");
        self.groups[group].m = m;
    }

    fn grow(&mut self, idx: usize) {
        let mss = self.mss as f64;
        match self.algorithm {
            Algorithm::Reno | Algorithm::MptcpUncoupled => {
                let sub = &mut self.subflows[idx];
                sub.cwnd += reno::reno_increment(sub.cwnd, sub.ssthresh, mss);
                sub.shadow.on_ack(mss);
            }
            Algorithm::Nmcc | Algorithm::NmccNoFriendlySs => {
                let m = self.m_for(idx);
                let friendly = self.algorithm == Algorithm::Nmcc;
                increase_window(&mut self.subflows[idx], m, mss, friendly);
            }
            Algorithm::MptcpCoupled => coupled_increase(&mut self.subflows, idx, mss),
        }
        self.subflows[idx].sync_phase();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::LinkId;

    const MSS: u32 = 1460;
    const M: f64 = MSS as f64;

    fn paths(groups: &[&[u32]]) -> Vec<PathDescriptor> {
        groups
            .iter()
            .map(|links| PathDescriptor::new(links.iter().map(|&l| LinkId(l)).collect()))
            .collect()
    }

    fn single(alg: Algorithm) -> ConnectionState {
        build_connection(&paths(&[&[0]]), alg, MSS, None, true).unwrap()
    }

    /// Sends `n` full segments on subflow 0.
    fn send(c: &mut ConnectionState, n: u64) {
        for _ in 0..n {
            let seq = c.subflow(0).snd_nxt;
            c.record_send(0, seq, MSS as u64);
        }
    }

    #[test]
    fn algorithm_tags() {
        for alg in Algorithm::ALL {
            assert_eq!(alg.as_str().parse::<Algorithm>().unwrap(), alg);
        }
        assert_eq!(
            "cubic".parse::<Algorithm>(),
            Err(CcError::UnknownAlgorithm("cubic".into()))
        );
    }

    #[test]
    fn grouping_with_and_without_assistance() {
        let disjoint = paths(&[&[0, 1], &[2, 3], &[4, 5]]);
        let on = build_connection(&disjoint, Algorithm::Nmcc, MSS, None, true).unwrap();
        assert_eq!(on.groups().len(), 3);
        assert!(on.groups().iter().all(|g| g.m == 1.0 && g.members.len() == 1));

        let off = build_connection(&disjoint, Algorithm::Nmcc, MSS, None, false).unwrap();
        assert_eq!(off.groups().len(), 1);
        assert_eq!(off.groups()[0].members, vec![0, 1, 2]);
        assert_eq!(off.groups()[0].m, 3.0);

        for assist in [true, false] {
            let one = build_connection(&paths(&[&[0]]), Algorithm::Nmcc, MSS, None, assist).unwrap();
            assert_eq!(one.groups().len(), 1);
            assert_eq!(one.groups()[0].m, 1.0);
        }
        assert_eq!(
            build_connection(&[], Algorithm::Nmcc, MSS, None, true),
            Err(CcError::NoPaths)
        );
        assert_eq!(
            build_connection(&disjoint, Algorithm::Reno, MSS, None, true),
            Err(CcError::RenoMultipath(3))
        );
    }

    #[test]
    fn first_ack_initializes_estimator() {
        let mut c = single(Algorithm::Reno);
        send(&mut c, 2);
        let out = c.on_ack(0, MSS as u64, Some(0.1));
        assert_eq!(out.kind, AckKind::New(MSS as u64));
        let s = c.subflow(0);
        assert_eq!(s.rtt.srtt(), 0.1);
        assert!((s.rtt.rto() - (0.1 + 4.0 * 0.05)).abs() < 1e-12);
        assert_eq!(s.cwnd, 3.0 * M);
    }

    #[test]
    fn third_dup_ack_enters_fast_recovery() {
        let mut c = single(Algorithm::Reno);
        c.subflows[0].cwnd = 20.0 * M;
        send(&mut c, 20);
        c.on_ack(0, MSS as u64, Some(0.01));
        let before = c.subflow(0).cwnd;
        for i in 1..=3 {
            let out = c.on_ack(0, MSS as u64, None);
            assert_eq!(out.kind, AckKind::Duplicate);
            assert_eq!(out.retransmit, i == 3);
        }
        let s = c.subflow(0);
        assert_eq!(s.phase, Phase::FastRecovery);
        assert_eq!(s.ssthresh, (before / 2.0).max(2.0 * M));
        assert_eq!(s.cwnd, s.ssthresh);
        assert_eq!(s.recover, 20 * MSS as u64);

        // partial ACK retransmits, full ACK exits
        let out = c.on_ack(0, 5 * MSS as u64, Some(0.01));
        assert!(out.retransmit);
        assert_eq!(c.subflow(0).phase, Phase::FastRecovery);
        c.on_ack(0, 20 * MSS as u64, Some(0.01));
        let s = c.subflow(0);
        assert_eq!(s.phase, Phase::CongAvoid);
        assert_eq!(s.cwnd, s.ssthresh);
        assert_eq!(s.recovery_allowance, 0.0);
    }

    #[test]
    fn stale_acks_are_ignored() {
        let mut c = single(Algorithm::Reno);
        send(&mut c, 2);
        c.on_ack(0, 2 * MSS as u64, Some(0.01));
        let snapshot = c.clone();
        assert_eq!(c.on_ack(0, MSS as u64, None).kind, AckKind::Stale);
        // nothing outstanding: repeated ACK is not a duplicate
        assert_eq!(c.on_ack(0, 2 * MSS as u64, None).kind, AckKind::Stale);
        assert_eq!(c, snapshot);
    }

    #[test]
    fn timeout_resets_and_backs_off() {
        let mut c = single(Algorithm::Reno);
        send(&mut c, 1);
        c.on_ack(0, MSS as u64, Some(0.1));
        c.subflows[0].cwnd = 64.0 * M;
        send(&mut c, 10);
        let rto = c.subflow(0).rtt.rto();
        c.on_timeout(0);
        let s = c.subflow(0);
        assert_eq!(s.ssthresh, 32.0 * M);
        assert_eq!(s.cwnd, M);
        assert_eq!(s.shadow_cwnd(), M);
        assert_eq!(s.phase, Phase::SlowStart);
        assert_eq!(s.snd_nxt, s.snd_una);
        assert_eq!(s.rtt.rto(), rto * 2.0);
        c.on_timeout(0);
        assert_eq!(c.subflow(0).rtt.rto(), rto * 4.0);
        for _ in 0..30 {
            c.on_timeout(0);
        }
        assert_eq!(c.subflow(0).rtt.rto(), RTO_MAX);
    }

    #[test]
    fn timeout_reestimates_partner_m() {
        let mut c = build_connection(&paths(&[&[0, 1], &[2, 1]]), Algorithm::Nmcc, MSS, None, true)
            .unwrap();
        for (idx, rtt) in [(0, 0.02), (1, 0.04)] {
            c.subflows[idx].cwnd = 80.0 * M;
            c.subflows[idx].phase = Phase::CongAvoid;
            let mut seq = 0;
            for _ in 0..40 {
                c.record_send(idx, seq, MSS as u64);
                seq += MSS as u64;
            }
            c.on_ack(idx, MSS as u64, Some(rtt));
        }
        assert_eq!(c.subflow(0).phase, Phase::CongAvoid);
        assert!((c.groups()[0].m - 1.5).abs() < 1e-12);

        c.on_timeout(1);
        let expected = estimate_m([c.subflow(0), c.subflow(1)], M).unwrap();
        // subflow 1 now contributes its slow-start rate cwnd/RTT
        let oracle = {
            let r0 = M / 0.02;
            let r1 = c.subflow(1).cwnd / c.subflow(1).rtt.srtt();
            (r0 + r1) / r0.max(r1)
        };
        assert_eq!(c.groups()[0].m, expected);
        assert!((expected - oracle).abs() < 1e-12);
    }

    #[test]
    fn retransmission_detection() {
        let mut c = single(Algorithm::Reno);
        assert!(!c.record_send(0, 0, MSS as u64));
        assert!(!c.record_send(0, MSS as u64, MSS as u64));
        c.on_timeout(0);
        assert!(c.record_send(0, 0, MSS as u64));
    }
}
