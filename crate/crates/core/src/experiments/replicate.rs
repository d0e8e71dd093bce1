use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{ExperimentError, Scenario, Window, CI_TARGET, PACKET_BYTES};
use crate::cc::Algorithm;
use crate::sim::{run_simulation_with, shares_from_bytes, SimError, SimReport};

/// Measurements from one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub seed: u64,
    /// Measurement window in seconds.
    pub window: (f64, f64),
    pub bytes: Vec<u64>,
    pub shares: Vec<f64>,
    /// Goodput over the window, bytes/s.
    pub rates: Vec<f64>,
    pub retransmissions: Vec<u64>,
    pub retransmission_fraction: Vec<f64>,
    pub completion: Vec<Option<f64>>,
    /// Median over the window's ticks of each connection's first-group m.
    pub m_median: Vec<Option<f64>>,
    /// Data packets that crossed the probe link during the whole run.
    pub probe_packets: Option<u64>,
    /// Probe link utilization over the whole run.
    pub probe_utilization: Option<f64>,
    /// `(tick time, data packets/s)` on the probe link.
    pub probe_series: Vec<(f64, f64)>,
    pub events: u64,
    pub trace_digest: u64,
}

impl RunOutcome {
    /// Fraction of the probe link's capacity used up to time `t`.
    pub fn probe_utilization_until(&self, t: f64, probe_rate: f64) -> Option<f64> {
        self.probe_packets?;
        let mut packets = 0.0;
        let mut prev = 0.0;
        for &(time, rate) in &self.probe_series {
            if time > t + 1e-9 {
                break;
            }
            packets += rate * (time - prev);
            prev = time;
        }
        Some(packets * PACKET_BYTES / (probe_rate * t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub name: String,
    pub labels: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub mean_share: Vec<f64>,
    /// 95% Student-t half-width of each share.
    pub share_margin: Vec<f64>,
    pub mean_rate: Vec<f64>,
    pub retransmission_fraction: Vec<f64>,
    /// Mean and margin of the probe utilization, when a probe is set.
    pub probe_utilization: Option<(f64, f64)>,
    /// False when the replication cap was hit before the CI target.
    pub ci_met: bool,
    pub runs: Vec<RunOutcome>,
}

impl AggregateResult {
    pub fn replications(&self) -> usize {
        self.runs.len()
    }

    /// `(share − 1/N) / (1/N)` per connection.
    pub fn deviations(&self) -> Vec<f64> {
        let fair = 1.0 / self.mean_share.len() as f64;
        self.mean_share.iter().map(|s| (s - fair) / fair).collect()
    }

    /// Mean share of the connections whose label starts with `prefix`.
    pub fn class_share(&self, prefix: &str) -> Option<f64> {
        let v: Vec<f64> = self
            .labels
            .iter()
            .zip(&self.mean_share)
            .filter(|(l, _)| l.starts_with(prefix))
            .map(|(_, &s)| s)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Mean deviation from fair share of the connections labelled `prefix*`.
    pub fn class_deviation(&self, prefix: &str) -> Option<f64> {
        let fair = 1.0 / self.mean_share.len() as f64;
        self.class_share(prefix).map(|s| (s - fair) / fair)
    }

    /// Mean over runs of a per-run metric, with its margin.
    pub fn metric(&self, f: impl Fn(&RunOutcome) -> Option<f64>) -> Option<(f64, f64)> {
        let v: Option<Vec<f64>> = self.runs.iter().map(f).collect();
        v.map(|v| mean_and_margin(&v))
    }
}

/// Sample mean and 95% Student-t half-width. The half-width is infinite
/// for fewer than two samples.
pub fn mean_and_margin(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::INFINITY);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return (mean, 0.0);
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    (mean, t * (var / n as f64).sqrt())
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

fn tick_of(t: f64, interval: f64) -> usize {
    (t / interval + 1e-9).floor() as usize
}

/// Runs one replication of `s` with `seed` and measures it.
pub fn run_once(s: &Scenario, seed: u64) -> Result<RunOutcome, ExperimentError> {
    let report = run_simulation_with(&s.topology, &s.flows, s.duration, seed, &s.config)?;
    measure(s, seed, &report)
}

fn measure(s: &Scenario, seed: u64, r: &SimReport) -> Result<RunOutcome, ExperimentError> {
    let interval = s.config.sample_interval;
    let overlap = || {
        let start = s.flows.iter().map(|f| f.start).fold(0.0, f64::max) + interval;
        let end = s
            .flows
            .iter()
            .filter_map(|f| f.stop)
            .fold(s.duration, f64::min);
        let (k0, k1) = (tick_of(start, interval), tick_of(end, interval));
        let bytes = r
            .flows
            .iter()
            .map(|f| f.delivered_at_tick(k1) - f.delivered_at_tick(k0))
            .collect::<Vec<_>>();
        ((k0 as f64 * interval, k1 as f64 * interval), (k0, k1), bytes)
    };
    let (window, ticks, bytes) = match (s.window, r.completions.first()) {
        (Window::FirstCompletion, Some(c)) => (
            (0.0, c.time),
            (0, tick_of(c.time, interval)),
            c.delivered.clone(),
        ),
        _ => overlap(),
    };
    let indexed: Vec<(usize, u64)> = bytes.iter().copied().enumerate().collect();
    let shares = match shares_from_bytes(&indexed) {
        Ok(v) => v.into_iter().map(|s| s.fraction).collect(),
        Err(SimError::ZeroTotalBytes) if indexed.is_empty() => Vec::new(),
        Err(_) => return Err(ExperimentError::NoData(s.name.clone())),
    };
    let span = window.1 - window.0;
    let m_median = r
        .flows
        .iter()
        .map(|f| {
            let lo = ticks.0.min(f.m_series.len());
            let hi = ticks.1.min(f.m_series.len());
            median(f.m_series[lo..hi].iter().filter_map(|g| g.first().copied()).collect())
        })
        .collect();
    let (probe_packets, probe_utilization, probe_series) = match s.probe {
        Some(link) => {
            let stats = &r.links[link.index()];
            let mut prev = 0;
            let series = r
                .sample_times
                .iter()
                .zip(&stats.data_packets_series)
                .map(|(&t, &n)| {
                    let rate = (n - prev) as f64 / interval;
                    prev = n;
                    (t, rate)
                })
                .collect();
            let capacity = s.topology.link(link).bandwidth * s.duration;
            let util = stats.data_packets_departed as f64 * PACKET_BYTES / capacity;
            (Some(stats.data_packets_departed), Some(util), series)
        }
        None => (None, None, Vec::new()),
    };
    Ok(RunOutcome {
        seed,
        window,
        rates: bytes.iter().map(|&b| b as f64 / span).collect(),
        bytes,
        shares,
        retransmissions: r.flows.iter().map(|f| f.retransmissions).collect(),
        retransmission_fraction: r.flows.iter().map(|f| f.retransmission_fraction()).collect(),
        completion: r.flows.iter().map(|f| f.completion_time).collect(),
        m_median,
        probe_packets,
        probe_utilization,
        probe_series,
        events: r.events_processed,
        trace_digest: r.trace_digest,
    })
}

fn run_batch(s: &Scenario, from: usize, to: usize) -> Result<Vec<RunOutcome>, ExperimentError> {
    (from..to)
        .into_par_iter()
        .map(|r| run_once(s, s.seed_base + r as u64))
        .collect()
}

fn widest_margin(s: &Scenario, runs: &[RunOutcome]) -> f64 {
    let mut widest: f64 = 0.0;
    for c in 0..s.flows.len() {
        let v: Vec<f64> = runs.iter().map(|r| r.shares[c]).collect();
        widest = widest.max(mean_and_margin(&v).1);
    }
    if s.probe.is_some() {
        let v: Vec<f64> = runs.iter().filter_map(|r| r.probe_utilization).collect();
        widest = widest.max(mean_and_margin(&v).1);
    }
    widest
}

/// Runs replications with seeds `seed_base + r`, doubling the count until
/// every share's 95% half-width is under [`CI_TARGET`] or the cap is hit.
pub fn run_with_replications(s: &Scenario) -> Result<AggregateResult, ExperimentError> {
    let first = s.replications.max(1);
    let cap = s.max_replications.max(first);
    let mut runs = run_batch(s, 0, first)?;
    let mut margin = widest_margin(s, &runs);
    while margin > CI_TARGET && runs.len() < cap {
        let next = (runs.len() * 2).min(cap);
        runs.extend(run_batch(s, runs.len(), next)?);
        margin = widest_margin(s, &runs);
    }
    let n_conn = s.flows.len();
    let column = |f: &dyn Fn(&RunOutcome) -> f64| -> Vec<f64> { runs.iter().map(f).collect() };
    let mut mean_share = Vec::with_capacity(n_conn);
    let mut share_margin = Vec::with_capacity(n_conn);
    let mut mean_rate = Vec::with_capacity(n_conn);
    let mut retrans = Vec::with_capacity(n_conn);
    for c in 0..n_conn {
        let (m, e) = mean_and_margin(&column(&|r| r.shares[c]));
        mean_share.push(m);
        share_margin.push(e);
        mean_rate.push(mean_and_margin(&column(&|r| r.rates[c])).0);
        retrans.push(mean_and_margin(&column(&|r| r.retransmission_fraction[c])).0);
    }
    let probe_utilization = s
        .probe
        .map(|_| mean_and_margin(&runs.iter().filter_map(|r| r.probe_utilization).collect::<Vec<_>>()));
    Ok(AggregateResult {
        name: s.name.clone(),
        labels: s.labels.clone(),
        algorithms: s.flows.iter().map(|f| f.algorithm).collect(),
        mean_share,
        share_margin,
        mean_rate,
        retransmission_fraction: retrans,
        probe_utilization,
        ci_met: margin <= CI_TARGET,
        runs,
    })
}
