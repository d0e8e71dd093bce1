//! Normalized multiflow congestion control.
//!
//! Subflows that share a bottleneck form a group with a friendliness factor
//! `m >= 1`. Growing each member's window `m` times slower is equivalent to
//! inflating its RTT by `m`; `m` is chosen so the group's combined growth
//! rate matches that of the most aggressive member alone. The RTT used for
//! timers is never inflated.

use super::{CcError, Phase, SubflowState};

/// Per-RTT window growth rate of a subflow in bytes/s: `cwnd/RTT` while in
/// slow start, `MSS/RTT` otherwise. Fast recovery is treated as congestion
/// avoidance: it exits with `cwnd == ssthresh`.
pub fn growth_rate(sub: &SubflowState, mss: f64) -> f64 {
    let rtt = sub.rtt.srtt();
    match sub.phase {
        Phase::SlowStart => sub.cwnd / rtt,
        Phase::CongAvoid | Phase::FastRecovery => mss / rtt,
    }
}

/// Friendliness factor of a group: total growth rate over the largest
/// member growth rate. Equals the member count until every member has an
/// RTT sample.
pub fn estimate_m<'a, I>(members: I, mss: f64) -> Result<f64, CcError>
where
    I: IntoIterator<Item = &'a SubflowState>,
{
    let mut count = 0usize;
    let mut sampled = true;
    let mut total = 0.0;
    let mut max = 0.0;
    for sub in members {
        count += 1;
        if !sub.rtt.has_sample() {
            sampled = false;
            continue;
        }
        let rate = growth_rate(sub, mss);
        total += rate;
        if rate > max {
            max = rate;
        }
    }
    match count {
        0 => Err(CcError::EmptyGroup),
        _ if !sampled => Ok(count as f64),
        _ => Ok(total / max),
    }
}

/// Per-ACK window increase. The slow-start step is scaled by the shadow
/// window so the group's cumulative slow-start growth tracks standalone TCP;
/// with `friendly_slow_start` off, slow start is plain Reno. The shadow
/// window then takes its own Reno step.
pub fn increase_window(sub: &mut SubflowState, m: f64, mss: f64, friendly_slow_start: bool) {
    if sub.cwnd < sub.ssthresh {
        sub.cwnd += if friendly_slow_start {
            (sub.shadow.cwnd / sub.cwnd) * mss / m
        } else {
            mss
        };
    } else {
        sub.cwnd += mss * mss / (sub.cwnd * m);
    }
    sub.shadow.on_ack(mss);
}
