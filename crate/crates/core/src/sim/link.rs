use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Packet, SimTime};
use crate::topology::{Link, LinkId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Queued,
    DroppedTail,
    DroppedRandom,
}

/// Per-link byte and packet accounting over a whole run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkStats {
    pub link: Option<LinkId>,
    pub bytes_offered: u64,
    pub bytes_departed: u64,
    pub bytes_dropped_tail: u64,
    pub bytes_dropped_random: u64,
    pub packets_departed: u64,
    /// Bytes still queued or being serialized when the run ended.
    pub bytes_queued_at_end: u64,
    pub max_queue_len: usize,
    /// Cumulative data packets departed, sampled at every tick.
    pub data_packets_series: Vec<u64>,
    pub data_packets_departed: u64,
}

/// Droptail FIFO in front of a link's transmitter.
///
/// Random loss is drawn from a stream private to this link, so the loss
/// pattern of one link does not depend on traffic elsewhere.
#[derive(Debug, Clone)]
pub struct LinkQueue {
    link: LinkId,
    bandwidth: f64,
    prop_delay: SimTime,
    loss_rate: f64,
    capacity: usize,
    queue: VecDeque<Packet>,
    in_service: Option<Packet>,
    busy_until: SimTime,
    rng: ChaCha8Rng,
    pub stats: LinkStats,
}

impl LinkQueue {
    pub fn new(link: &Link, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(link.id.0 as u64);
        Self {
            link: link.id,
            bandwidth: link.bandwidth,
            prop_delay: SimTime::from_secs_f64(link.prop_delay),
            loss_rate: link.loss_rate,
            capacity: link.queue_capacity as usize,
            queue: VecDeque::new(),
            in_service: None,
            busy_until: SimTime::ZERO,
            rng,
            stats: LinkStats {
                link: Some(link.id),
                ..LinkStats::default()
            },
        }
    }

    pub fn link(&self) -> LinkId {
        self.link
    }

    /// Packets waiting behind the one in service.
    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn is_busy(&self) -> bool {
        self.in_service.is_some()
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    pub fn prop_delay(&self) -> SimTime {
        self.prop_delay
    }

    pub fn serialization(&self, bytes: u32) -> SimTime {
        SimTime::from_secs_f64(bytes as f64 / self.bandwidth)
    }

    /// Random loss (when `random_loss` applies to this packet), then tail
    /// drop when the waiting room is full, else append.
    pub fn enqueue_or_drop(&mut self, pkt: Packet, random_loss: bool) -> EnqueueOutcome {
        let size = pkt.size as u64;
        self.stats.bytes_offered += size;
        if random_loss && self.loss_rate > 0.0 && self.rng.gen::<f64>() < self.loss_rate {
            self.stats.bytes_dropped_random += size;
            return EnqueueOutcome::DroppedRandom;
        }
        if self.queue.len() >= self.capacity {
            self.stats.bytes_dropped_tail += size;
            return EnqueueOutcome::DroppedTail;
        }
        self.queue.push_back(pkt);
        self.stats.max_queue_len = self.stats.max_queue_len.max(self.queue.len());
        EnqueueOutcome::Queued
    }

    /// Starts serializing the head packet if the transmitter is idle;
    /// returns when it will finish.
    pub fn start_service(&mut self, now: SimTime) -> Option<SimTime> {
        if self.in_service.is_some() {
            return None;
        }
        let pkt = self.queue.pop_front()?;
        let done = now + self.serialization(pkt.size);
        self.busy_until = done;
        self.in_service = Some(pkt);
        Some(done)
    }

    /// Completes the packet in service; it reaches the far end after the
    /// propagation delay.
    pub fn finish_service(&mut self) -> Packet {
        let pkt = self.in_service.take().expect("departure without a packet in service");
        self.stats.bytes_departed += pkt.size as u64;
        self.stats.packets_departed += 1;
        if !pkt.is_ack {
            self.stats.data_packets_departed += 1;
        }
        pkt
    }

    /// Packets still held by the link (in service first, then FIFO order).
    pub fn held(&self) -> impl Iterator<Item = &Packet> {
        self.in_service.iter().chain(self.queue.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{LinkParams, Topology};

    fn queue(loss: f64, cap: u32) -> LinkQueue {
        let mut t = Topology::new();
        let a = t.add_node("a").unwrap();
        let b = t.add_node("b").unwrap();
        let id = t
            .add_link("ab", a, b, LinkParams::new(1.5e6, 0.001).with_loss(loss).with_queue(cap))
            .unwrap();
        LinkQueue::new(t.link(id), 7)
    }

    fn pkt(uid: u64) -> Packet {
        Packet {
            uid,
            size: 1500,
            ..Packet::default()
        }
    }

    #[test]
    fn lossless_queue_accepts_until_full() {
        let mut q = queue(0.0, 2);
        assert_eq!(q.enqueue_or_drop(pkt(0), true), EnqueueOutcome::Queued);
        assert_eq!(q.enqueue_or_drop(pkt(1), true), EnqueueOutcome::Queued);
        assert_eq!(q.enqueue_or_drop(pkt(2), true), EnqueueOutcome::DroppedTail);
        // serialization of 1500 B at 1.5 MB/s takes 1 ms
        assert_eq!(q.start_service(SimTime::ZERO), Some(SimTime::from_millis(1)));
        assert_eq!(q.start_service(SimTime::ZERO), None);
        assert_eq!(q.enqueue_or_drop(pkt(3), true), EnqueueOutcome::Queued);
        assert_eq!(q.finish_service().uid, 0);
        q.start_service(SimTime::from_millis(1));
        assert_eq!(q.finish_service().uid, 1);
        q.start_service(SimTime::from_millis(2));
        assert_eq!(q.finish_service().uid, 3);
        assert_eq!(q.stats.bytes_departed, 4500);
        assert_eq!(q.stats.bytes_dropped_tail, 1500);
    }

    #[test]
    fn certain_loss_drops_everything() {
        let mut q = queue(1.0, 10);
        for i in 0..100 {
            assert_eq!(q.enqueue_or_drop(pkt(i), true), EnqueueOutcome::DroppedRandom);
        }
        // exempt packets bypass the loss model
        assert_eq!(q.enqueue_or_drop(pkt(0), false), EnqueueOutcome::Queued);
    }

    #[test]
    fn loss_fraction_matches_rate() {
        let mut q = queue(0.04, 1);
        let n = 100_000;
        let mut dropped = 0;
        for i in 0..n {
            match q.enqueue_or_drop(pkt(i), true) {
                EnqueueOutcome::DroppedRandom => dropped += 1,
                EnqueueOutcome::Queued => {
                    q.start_service(SimTime::ZERO);
                    q.finish_service();
                }
                EnqueueOutcome::DroppedTail => unreachable!(),
            }
        }
        let frac = dropped as f64 / n as f64;
        assert!((frac - 0.04).abs() < 0.005, "{frac}");
    }
}
