use std::collections::BTreeMap;

use super::SimError;
use crate::cc::Algorithm;
use crate::topology::LinkId;

/// Per-connection accounting for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowStats {
    pub conn: usize,
    pub algorithm: Algorithm,
    /// Payload bytes delivered in order to the receiver.
    pub bytes_delivered: u64,
    pub completion_time: Option<f64>,
    /// Data segments sent more than once.
    pub retransmissions: u64,
    pub segments_sent: u64,
    pub timeouts: u64,
    pub fast_retransmits: u64,
    /// Wire bytes (payload plus header) of data packets put on the network.
    pub data_bytes_sent: u64,
    /// Wire bytes of data packets that reached the receiver, duplicates
    /// included.
    pub data_bytes_received: u64,
    pub data_bytes_dropped: u64,
    /// Wire bytes of data packets still in queues or on links at the end.
    pub data_bytes_in_network: u64,
    /// Per-tick goodput as `(tick time, bytes/s)` over the preceding tick.
    pub throughput: Vec<(f64, f64)>,
    /// Cumulative delivered bytes at each tick.
    pub delivered_series: Vec<u64>,
    /// Friendliness factor of every group at each tick.
    pub m_series: Vec<Vec<f64>>,
    /// Data wire bytes this connection sent across each link.
    pub per_link_bytes: BTreeMap<LinkId, u64>,
}

impl FlowStats {
    pub(crate) fn new(conn: usize, algorithm: Algorithm) -> Self {
        Self {
            conn,
            algorithm,
            bytes_delivered: 0,
            completion_time: None,
            retransmissions: 0,
            segments_sent: 0,
            timeouts: 0,
            fast_retransmits: 0,
            data_bytes_sent: 0,
            data_bytes_received: 0,
            data_bytes_dropped: 0,
            data_bytes_in_network: 0,
            throughput: Vec::new(),
            delivered_series: Vec::new(),
            m_series: Vec::new(),
            per_link_bytes: BTreeMap::new(),
        }
    }

    /// Delivered bytes at tick index `tick` (0 before the first tick).
    pub fn delivered_at_tick(&self, tick: usize) -> u64 {
        match tick {
            0 => 0,
            t => self.delivered_series[(t - 1).min(self.delivered_series.len() - 1)],
        }
    }

    /// Fraction of segments that were retransmissions.
    pub fn retransmission_fraction(&self) -> f64 {
        if self.segments_sent == 0 {
            0.0
        } else {
            self.retransmissions as f64 / self.segments_sent as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Share {
    pub conn: usize,
    pub fraction: f64,
    /// `(fraction - 1/N) / (1/N)`: relative deviation from an equal split.
    pub deviation: f64,
}

/// Splits a set of byte counts into fractions and fair-share deviations.
pub fn shares_from_bytes(bytes: &[(usize, u64)]) -> Result<Vec<Share>, SimError> {
    let total: u64 = bytes.iter().map(|&(_, b)| b).sum();
    if total == 0 {
        return Err(SimError::ZeroTotalBytes);
    }
    let fair = 1.0 / bytes.len() as f64;
    Ok(bytes
        .iter()
        .map(|&(conn, b)| {
            let fraction = b as f64 / total as f64;
            Share {
                conn,
                fraction,
                deviation: (fraction - fair) / fair,
            }
        })
        .collect())
}

/// Per-connection share of delivered bytes, or of data bytes carried over
/// `over_links` when given.
pub fn bandwidth_share(
    stats: &[FlowStats],
    over_links: Option<&[LinkId]>,
) -> Result<Vec<Share>, SimError> {
    let bytes: Vec<(usize, u64)> = stats
        .iter()
        .map(|s| {
            let b = match over_links {
                None => s.bytes_delivered,
                Some(links) => links
                    .iter()
                    .map(|l| s.per_link_bytes.get(l).copied().unwrap_or(0))
                    .sum(),
            };
            (s.conn, b)
        })
        .collect();
    shares_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(conn: usize, delivered: u64) -> FlowStats {
        let mut s = FlowStats::new(conn, Algorithm::Reno);
        s.bytes_delivered = delivered;
        s.per_link_bytes.insert(LinkId(conn as u32), delivered * 2);
        s
    }

    #[test]
    fn equal_flows_split_evenly() {
        let shares = bandwidth_share(&[stats(0, 500), stats(1, 500)], None).unwrap();
        for s in shares {
            assert_eq!(s.fraction, 0.5);
            assert_eq!(s.deviation, 0.0);
        }
    }

    #[test]
    fn asymmetric_fractions_are_normalized() {
        let all = [stats(0, 100), stats(1, 700), stats(2, 200)];
        let shares = bandwidth_share(&all, None).unwrap();
        let sum: f64 = shares.iter().map(|s| s.fraction).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((shares[1].deviation - (0.7 - 1.0 / 3.0) * 3.0).abs() < 1e-12);
    }

    #[test]
    fn link_restricted_shares() {
        let all = [stats(0, 100), stats(1, 300)];
        let shares = bandwidth_share(&all, Some(&[LinkId(1)])).unwrap();
        assert_eq!(shares[0].fraction, 0.0);
        assert_eq!(shares[1].fraction, 1.0);
    }

    #[test]
    fn zero_total_is_an_error() {
        assert_eq!(
            bandwidth_share(&[stats(0, 0)], None),
            Err(SimError::ZeroTotalBytes)
        );
        assert_eq!(bandwidth_share(&[], None), Err(SimError::ZeroTotalBytes));
    }
}
