//! Coupled MPTCP baseline (linked increases).
//!
//! Only congestion avoidance is coupled: each ACK on subflow `i` grows its
//! window by `min(alpha * MSS^2 / cwnd_total, MSS^2 / cwnd_i)` with
//! `alpha = cwnd_total * max(cwnd_i / rtt_i^2) / (sum(cwnd_i / rtt_i))^2`.
//! Slow start is per-subflow Reno.

use super::reno::reno_increment;
use super::SubflowState;

/// Aggressiveness factor over the subflows that have an RTT sample, or
/// `None` when fewer than two do.
pub fn lia_alpha(subflows: &[SubflowState]) -> Option<f64> {
    let sampled = || subflows.iter().filter(|s| s.rtt.has_sample());
    if sampled().count() < 2 {
        return None;
    }
    let total: f64 = sampled().map(|s| s.cwnd).sum();
    let best = sampled()
        .map(|s| s.cwnd / (s.rtt.srtt() * s.rtt.srtt()))
        .fold(0.0, f64::max);
    let denom: f64 = sampled().map(|s| s.cwnd / s.rtt.srtt()).sum();
    Some(total * best / (denom * denom))
}

/// Window increment for one ACK on subflow `idx`.
pub fn coupled_increment(subflows: &[SubflowState], idx: usize, mss: f64) -> f64 {
    let sub = &subflows[idx];
    if sub.cwnd < sub.ssthresh || !sub.rtt.has_sample() {
        return reno_increment(sub.cwnd, sub.ssthresh, mss);
    }
    match lia_alpha(subflows) {
        None => reno_increment(sub.cwnd, sub.ssthresh, mss),
        Some(alpha) => {
            let total: f64 = subflows
                .iter()
                .filter(|s| s.rtt.has_sample())
                .map(|s| s.cwnd)
                .sum();
            (alpha * mss * mss / total).min(mss * mss / sub.cwnd)
        }
    }
}

/// Applies one coupled ACK step to subflow `idx` (and its shadow window).
pub fn coupled_increase(subflows: &mut [SubflowState], idx: usize, mss: f64) {
    let inc = coupled_increment(subflows, idx, mss);
    let sub = &mut subflows[idx];
    sub.cwnd += inc;
    sub.shadow.on_ack(mss);
}
