/// Lower bound on the retransmission timeout, seconds.
pub const RTO_MIN: f64 = 0.2;
/// Upper bound on the retransmission timeout, seconds.
pub const RTO_MAX: f64 = 60.0;
/// Timeout used before the first RTT sample.
pub const RTO_INITIAL: f64 = 1.0;

/// Jacobson/Karels smoothed RTT estimator with exponential backoff.
#[derive(Debug, Clone, PartialEq)]
pub struct RttEstimator {
    srtt: f64,
    rttvar: f64,
    rto: f64,
    has_sample: bool,
}

impl Default for RttEstimator {
    fn default() -> Self {
        Self {
            srtt: 0.0,
            rttvar: 0.0,
            rto: RTO_INITIAL,
            has_sample: false,
        }
    }
}

impl RttEstimator {
    pub fn on_sample(&mut self, sample: f64) {
        if self.has_sample {
            self.rttvar = 0.75 * self.rttvar + 0.25 * (self.srtt - sample).abs();
            self.srtt = 0.875 * self.srtt + 0.125 * sample;
        } else {
            self.srtt = sample;
            self.rttvar = sample / 2.0;
            self.has_sample = true;
        }
        self.rto = (self.srtt + 4.0 * self.rttvar).clamp(RTO_MIN, RTO_MAX);
    }

    /// Doubles the timeout after it fired.
    pub fn back_off(&mut self) {
        self.rto = (self.rto * 2.0).min(RTO_MAX);
    }

    pub fn has_sample(&self) -> bool {
        self.has_sample
    }

    /// Smoothed RTT in seconds; zero before the first sample.
    pub fn srtt(&self) -> f64 {
        self.srtt
    }

    pub fn rttvar(&self) -> f64 {
        self.rttvar
    }

    pub fn rto(&self) -> f64 {
        self.rto
    }
}
