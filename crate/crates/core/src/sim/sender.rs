use std::collections::BTreeMap;

use super::SimTime;
use crate::cc::ConnectionState;

/// A segment the sender wants on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emission {
    pub subflow: usize,
    pub seq: u64,
    pub len: u32,
    pub retransmission: bool,
}

/// Sender side of one connection inside the simulator: the congestion
/// state plus data allocation across subflows.
#[derive(Debug, Clone)]
pub struct ConnDriver {
    pub cc: ConnectionState,
    pub active: bool,
    pub finished: bool,
    /// Connection-level bytes handed to subflows so far.
    allocated: u64,
    rr_cursor: usize,
}

impl ConnDriver {
    pub fn new(cc: ConnectionState) -> Self {
        Self {
            cc,
            active: false,
            finished: false,
            allocated: 0,
            rr_cursor: 0,
        }
    }

    pub fn allocated(&self) -> u64 {
        self.allocated
    }

    fn remaining(&self) -> u64 {
        match self.cc.transfer_size() {
            Some(total) => total - self.allocated,
            None => u64::MAX,
        }
    }

    /// The segment starting at `seq` on subflow `idx`, as already assigned.
    pub fn segment_at(&self, idx: usize, seq: u64) -> Option<Emission> {
        let sub = self.cc.subflow(idx);
        if seq >= sub.snd_max {
            return None;
        }
        let len = (self.cc.mss() as u64).min(sub.snd_max - seq) as u32;
        Some(Emission {
            subflow: idx,
            seq,
            len,
            retransmission: true,
        })
    }
}

/// Fills every subflow window. Data already assigned to a subflow and not
/// yet resent (after a timeout) goes first on that subflow; new data is
/// then dealt round-robin among subflows with window space.
pub fn drive_sender(conn: &mut ConnDriver, _now: SimTime) -> Vec<Emission> {
    let mut out = Vec::new();
    if !conn.active || conn.finished {
        return out;
    }
    let mss = conn.cc.mss() as u64;
    let n = conn.cc.subflows().len();

    for idx in 0..n {
        while conn.cc.subflow(idx).can_send() {
            let seq = conn.cc.subflow(idx).snd_nxt;
            let Some(e) = conn.segment_at(idx, seq) else {
                break;
            };
            conn.cc.record_send(idx, e.seq, e.len as u64);
            out.push(e);
        }
    }

    loop {
        let mut sent = false;
        for step in 0..n {
            if conn.remaining() == 0 {
                return out;
            }
            let idx = (conn.rr_cursor + step) % n;
            if !conn.cc.subflow(idx).can_send() {
                continue;
            }
            let len = mss.min(conn.remaining());
            let seq = conn.cc.subflow(idx).snd_max;
            let retransmission = conn.cc.record_send(idx, seq, len);
            conn.allocated += len;
            out.push(Emission {
                subflow: idx,
                seq,
                len: len as u32,
                retransmission,
            });
            conn.rr_cursor = (idx + 1) % n;
            sent = true;
            break;
        }
        if !sent {
            return out;
        }
    }
}

/// In-order reassembly for one subflow.
#[derive(Debug, Clone, Default)]
pub struct SubflowReceiver {
    rcv_nxt: u64,
    out_of_order: BTreeMap<u64, u64>,
}

impl SubflowReceiver {
    pub fn rcv_nxt(&self) -> u64 {
        self.rcv_nxt
    }

    /// Accepts a segment; returns the cumulative ACK and the bytes newly
    /// delivered in order.
    pub fn on_data(&mut self, seq: u64, len: u64) -> (u64, u64) {
        let before = self.rcv_nxt;
        let end = seq + len;
        if end > self.rcv_nxt {
            if seq <= self.rcv_nxt {
                self.rcv_nxt = end;
            } else {
                let slot = self.out_of_order.entry(seq).or_insert(end);
                *slot = (*slot).max(end);
            }
            while let Some((&s, &e)) = self.out_of_order.first_key_value() {
                if s > self.rcv_nxt {
                    break;
                }
                self.out_of_order.pop_first();
                self.rcv_nxt = self.rcv_nxt.max(e);
            }
        }
        (self.rcv_nxt, self.rcv_nxt - before)
    }
}
