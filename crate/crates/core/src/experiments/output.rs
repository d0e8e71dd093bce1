use std::io::Write;

use serde::Serialize;

use super::{AggregateResult, ExperimentError};

/// One row per (scenario, replication, connection).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow<'a> {
    pub name: &'a str,
    pub replication: usize,
    pub seed: u64,
    pub connection: &'a str,
    pub algorithm: &'static str,
    pub share: f64,
    pub rate_bytes_s: f64,
    pub retransmissions: u64,
    pub completion_s: Option<f64>,
}

/// One row per (scenario, connection).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow<'a> {
    pub name: &'a str,
    pub connection: &'a str,
    pub algorithm: &'static str,
    pub mean_share: f64,
    pub margin_95: f64,
    pub deviation: f64,
    pub mean_rate_bytes_s: f64,
    pub retransmission_fraction: f64,
    pub replications: usize,
    pub ci_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRow<'a> {
    pub t_s: f64,
    pub pkts_per_s: f64,
    pub algorithm: &'a str,
}

pub fn write_runs_csv<W: Write>(out: W, results: &[AggregateResult]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for res in results {
        for (r, run) in res.runs.iter().enumerate() {
            for c in 0..res.labels.len() {
                w.serialize(RunRow {
                    name: &res.name,
                    replication: r,
                    seed: run.seed,
                    connection: &res.labels[c],
                    algorithm: res.algorithms[c].as_str(),
                    share: run.shares[c],
                    rate_bytes_s: run.rates[c],
                    retransmissions: run.retransmissions[c],
                    completion_s: run.completion[c],
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(
    out: W,
    results: &[AggregateResult],
) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for res in results {
        let dev = res.deviations();
        for c in 0..res.labels.len() {
            w.serialize(AggregateRow {
                name: &res.name,
                connection: &res.labels[c],
                algorithm: res.algorithms[c].as_str(),
                mean_share: res.mean_share[c],
                margin_95: res.share_margin[c],
                deviation: dev[c],
                mean_rate_bytes_s: res.mean_rate[c],
                retransmission_fraction: res.retransmission_fraction[c],
                replications: res.replications(),
                ci_met: res.ci_met,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Probe-link packet rate of the first replication of each result,
/// labelled by the scenario's first algorithm.
pub fn write_timeseries_csv<W: Write>(
    out: W,
    results: &[AggregateResult],
) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for res in results {
        let Some(run) = res.runs.first() else { continue };
        let alg = res.algorithms.first().map_or("", |a| a.as_str());
        for &(t_s, pkts_per_s) in &run.probe_series {
            w.serialize(SeriesRow {
                t_s,
                pkts_per_s,
                algorithm: alg,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc::Algorithm;
    use crate::experiments::RunOutcome;

    fn result() -> AggregateResult {
        let run = RunOutcome {
            seed: 1,
            window: (0.1, 2.0),
            bytes: vec![30, 10],
            shares: vec![0.75, 0.25],
            rates: vec![15.0, 5.0],
            retransmissions: vec![0, 2],
            retransmission_fraction: vec![0.0, 0.1],
            completion: vec![Some(1.5), None],
            m_median: vec![Some(1.0), Some(1.0)],
            probe_packets: Some(3),
            probe_utilization: Some(0.5),
            probe_series: vec![(0.1, 20.0), (0.2, 10.0)],
            events: 10,
            trace_digest: 0,
        };
        AggregateResult {
            name: "demo".into(),
            labels: vec!["nmcc".into(), "single-1".into()],
            algorithms: vec![Algorithm::Nmcc, Algorithm::Reno],
            mean_share: vec![0.75, 0.25],
            share_margin: vec![0.0, 0.0],
            mean_rate: vec![15.0, 5.0],
            retransmission_fraction: vec![0.0, 0.1],
            probe_utilization: Some((0.5, 0.0)),
            ci_met: true,
            runs: vec![run],
        }
    }

    #[test]
    fn run_rows() {
        let mut buf = Vec::new();
        write_runs_csv(&mut buf, &[result()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "name,replication,seed,connection,algorithm,share,rate_bytes_s,retransmissions,completion_s"
        );
        assert_eq!(lines.next().unwrap(), "demo,0,1,nmcc,nmcc,0.75,15.0,0,1.5");
        assert_eq!(lines.next().unwrap(), "demo,0,1,single-1,reno,0.25,5.0,2,");
    }

    #[test]
    fn aggregate_and_series_rows() {
        let mut buf = Vec::new();
        write_aggregate_csv(&mut buf, &[result()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("demo,nmcc,nmcc,0.75,0.0,0.5,"));

        let mut buf = Vec::new();
        write_timeseries_csv(&mut buf, &[result()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t_s,pkts_per_s,algorithm\n0.1,20.0,nmcc\n0.2,10.0,nmcc\n");
    }
}
