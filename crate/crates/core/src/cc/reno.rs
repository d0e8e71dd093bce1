/// A plain Reno window: the engine behind single-path and uncoupled flows,
/// and the shadow window that tracks what standalone TCP would hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenoWindow {
    pub cwnd: f64,
    pub ssthresh: f64,
}

impl RenoWindow {
    pub fn new(cwnd: f64, ssthresh: f64) -> Self {
        Self { cwnd, ssthresh }
    }

    pub fn in_slow_start(&self) -> bool {
        self.cwnd < self.ssthresh
    }

    /// One new cumulative ACK outside recovery.
    pub fn on_ack(&mut self, mss: f64) {
        self.cwnd += reno_increment(self.cwnd, self.ssthresh, mss);
    }

    pub fn on_fast_retransmit(&mut self, mss: f64) {
        self.ssthresh = halved(self.cwnd, mss);
        self.cwnd = self.ssthresh;
    }

    pub fn on_timeout(&mut self, mss: f64) {
        self.ssthresh = halved(self.cwnd, mss);
        self.cwnd = mss;
    }
}

pub(crate) fn reno_increment(cwnd: f64, ssthresh: f64, mss: f64) -> f64 {
    if cwnd < ssthresh {
        mss
    } else {
        mss * mss / cwnd
    }
}

pub(crate) fn halved(cwnd: f64, mss: f64) -> f64 {
    (cwnd / 2.0).max(2.0 * mss)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MSS: f64 = 1460.0;

    #[test]
    fn slow_start_then_avoidance() {
        let mut w = RenoWindow::new(2.0 * MSS, 4.0 * MSS);
        w.on_ack(MSS);
        assert_eq!(w.cwnd, 3.0 * MSS);
        w.on_ack(MSS);
        assert_eq!(w.cwnd, 4.0 * MSS);
        assert!(!w.in_slow_start());
        w.on_ack(MSS);
        assert_eq!(w.cwnd, 4.0 * MSS + MSS / 4.0);
    }

    #[test]
    fn loss_responses() {
        let mut w = RenoWindow::new(64.0 * MSS, 1e9);
        w.on_timeout(MSS);
        assert_eq!(w.ssthresh, 32.0 * MSS);
        assert_eq!(w.cwnd, MSS);
        w.on_fast_retransmit(MSS);
        assert_eq!(w.ssthresh, 2.0 * MSS);
        assert_eq!(w.cwnd, 2.0 * MSS);
    }
}
