//! Scores the catalog against the acceptance bands.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use super::validation::{self, SuiteOutcome};
use super::{
    catalog, run_with_replications, scenario_disjoint, scenario_heterogeneous, scenario_shared,
    scenario_short_transfer, scenario_single_path, scenario_xyz, AggregateResult,
    ExperimentError, Scenario, LINK_RATE, STAGGER_SECS, XYZ_CONFIGS,
};
use crate::cc::Algorithm;

pub type Results = BTreeMap<String, AggregateResult>;

/// One pass/fail comparison against an acceptance band.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub criterion: u8,
    pub label: String,
    pub paper: Option<String>,
    pub measured: String,
    pub band: String,
    pub pass: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] criterion {} {}: ", if self.pass { "PASS" } else { "FAIL" }, self.criterion, self.label)?;
        if let Some(p) = &self.paper {
            write!(f, "paper {p}, ")?;
        }
        write!(f, "ours {}, band {}", self.measured, self.band)
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Share check against `[lo, hi]`.
fn share_check(criterion: u8, label: String, paper: Option<f64>, share: f64, lo: f64, hi: f64) -> Check {
    Check {
        criterion,
        label,
        paper: paper.map(|p| format!("{p:.1}%")),
        measured: pct(share),
        band: format!("[{:.1}, {:.1}]%", 100.0 * lo, 100.0 * hi),
        pass: (lo - 1e-12..=hi + 1e-12).contains(&share),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceOptions {
    pub seed_base: u64,
    /// Overrides every scenario's initial replication count.
    pub replications: Option<usize>,
    /// Overrides every scenario's duration.
    pub duration: Option<f64>,
    /// Include the exact property suites.
    pub property_suites: bool,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        Self {
            seed_base: 1,
            replications: None,
            duration: None,
            property_suites: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub results: Vec<AggregateResult>,
    pub checks: Vec<Check>,
    pub suites: Vec<SuiteOutcome>,
}

impl Reproduction {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn prepare(s: Scenario, opts: &ReproduceOptions) -> Scenario {
    let mut s = s.with_seed(opts.seed_base);
    if let Some(n) = opts.replications {
        s = s.with_replications(n);
    }
    if let Some(d) = opts.duration {
        s = s.with_duration(d);
    }
    s
}

/// Runs `scenarios` in parallel, keyed by name.
pub fn run_all(scenarios: Vec<Scenario>, opts: &ReproduceOptions) -> Result<Results, ExperimentError> {
    let results: Result<Vec<_>, _> = scenarios
        .into_par_iter()
        .map(|s| run_with_replications(&prepare(s, opts)))
        .collect();
    Ok(results?.into_iter().map(|r| (r.name.clone(), r)).collect())
}

fn get<'a>(results: &'a Results, name: &str) -> &'a AggregateResult {
    results
        .get(name)
        .unwrap_or_else(|| panic!("scenario {name} was not run"))
}

pub const SHARED_SINGLES: [usize; 4] = [1, 2, 4, 9];
pub const SHARED_REFERENCE: [f64; 4] = [51.1, 35.5, 21.5, 10.8];
pub const STAGGER_REFERENCE: [f64; 4] = [52.0, 35.6, 21.1, 10.8];

/// Scenarios each criterion needs.
pub fn scenarios_for(criterion: u8) -> Vec<Scenario> {
    match criterion {
        1 => SHARED_SINGLES.iter().map(|&n| scenario_shared(n, 0.0)).collect(),
        2 => [STAGGER_SECS, -STAGGER_SECS]
            .iter()
            .flat_map(|&st| SHARED_SINGLES.iter().map(move |&n| scenario_shared(n, st)))
            .collect(),
        3 => [true, false]
            .iter()
            .flat_map(|&a| [1, 2].map(|n| scenario_disjoint(a, n)))
            .collect(),
        4 => vec![scenario_disjoint(true, 0), scenario_single_path()],
        5 => [true, false]
            .iter()
            .flat_map(|&f| [1, 2].map(|n| scenario_short_transfer(f, n)))
            .collect(),
        6 => [Algorithm::Nmcc, Algorithm::MptcpCoupled, Algorithm::MptcpUncoupled]
            .map(|a| scenario_heterogeneous(a).expect("multiflow algorithm"))
            .to_vec(),
        7 => XYZ_CONFIGS
            .iter()
            .map(|&(x, y, z)| scenario_xyz(x, y, z).expect("valid config"))
            .collect(),
        _ => Vec::new(),
    }
}

fn fair(n_conn: usize) -> f64 {
    1.0 / n_conn as f64
}

pub fn shared_checks(results: &Results, stagger: f64) -> Vec<Check> {
    let criterion = if stagger == 0.0 { 1 } else { 2 };
    let paper = if stagger == 0.0 { SHARED_REFERENCE } else { STAGGER_REFERENCE };
    SHARED_SINGLES
        .iter()
        .zip(paper)
        .map(|(&n, p)| {
            let name = scenario_shared(n, stagger).name;
            let r = get(results, &name);
            let f = fair(n + 1);
            share_check(criterion, name, Some(p), r.mean_share[0], f - 0.05, f + 0.05)
        })
        .collect()
}

pub fn disjoint_checks(results: &Results) -> Vec<Check> {
    let mut out = Vec::new();
    for (assist, n, paper, lo, hi) in [
        (true, 1, 67.5, 0.62, 0.78),
        (true, 2, 49.5, 0.45, 0.55),
        (false, 1, 52.6, 0.45, 0.55),
        (false, 2, 36.8, fair(3) - 0.05, fair(3) + 0.05),
    ] {
        let name = scenario_disjoint(assist, n).name;
        let share = get(results, &name).mean_share[0];
        out.push(share_check(3, name, Some(paper), share, lo, hi));
    }
    out
}

pub fn table_one_checks(results: &Results) -> Vec<Check> {
    let multi = get(results, &scenario_disjoint(true, 0).name).mean_rate[0];
    let single = get(results, &scenario_single_path().name).mean_rate[0];
    let ratio = multi / single;
    vec![Check {
        criterion: 4,
        label: "multiflow/single-path goodput".into(),
        paper: Some(format!("{:.2}x (21.3 vs 10.6 MB/s)", 21.3 / 10.6)),
        measured: format!("{ratio:.3}x ({:.2} vs {:.2} MB/s)", multi / 1e6, single / 1e6),
        band: ">= 1.9x".into(),
        pass: ratio >= 1.9,
    }]
}

pub fn short_transfer_checks(results: &Results) -> Vec<Check> {
    let mut out = Vec::new();
    for (n, paper) in [(1, 49.4), (2, 34.8)] {
        let name = scenario_short_transfer(true, n).name;
        let f = fair(n + 1);
        let share = get(results, &name).mean_share[0];
        out.push(share_check(5, name, Some(paper), share, f - 0.05, f + 0.05));
    }
    for (n, paper) in [(1, 7.4), (2, 5.6)] {
        let name = scenario_short_transfer(false, n).name;
        let excess = get(results, &name).mean_share[0] - fair(n + 1);
        out.push(Check {
            criterion: 5,
            label: format!("{name} excess over fair share"),
            paper: Some(format!("+{paper:.1} pp")),
            measured: format!("{:+.1} pp", 100.0 * excess),
            band: ">= +4.0 pp".into(),
            pass: excess >= 0.04,
        });
    }
    out
}

/// Fraction of the WiFi link used in the first `secs` seconds, averaged
/// over replications.
pub fn early_wifi_utilization(r: &AggregateResult, secs: f64) -> f64 {
    r.metric(|run| run.probe_utilization_until(secs, LINK_RATE))
        .map_or(f64::NAN, |(m, _)| m)
}

pub fn heterogeneous_checks(results: &Results) -> Vec<Check> {
    let name = |a| scenario_heterogeneous(a).expect("multiflow").name;
    let nmcc = get(results, &name(Algorithm::Nmcc));
    let coupled = get(results, &name(Algorithm::MptcpCoupled));
    let uncoupled = get(results, &name(Algorithm::MptcpUncoupled));
    let packets = |r: &AggregateResult| {
        r.metric(|run| run.probe_packets.map(|p| p as f64))
            .map_or(f64::NAN, |(m, _)| m)
    };
    let ratio = packets(nmcc) / packets(uncoupled);
    let (u_nmcc, u_coupled) = (early_wifi_utilization(nmcc, 10.0), early_wifi_utilization(coupled, 10.0));
    let m = nmcc.metric(|run| run.m_median[0]).map_or(f64::NAN, |(m, _)| m);
    vec![
        Check {
            criterion: 6,
            label: "NMCC/uncoupled WiFi packets over 60 s".into(),
            paper: Some("similar".into()),
            measured: format!("{:.1}% ({:.0} vs {:.0})", 100.0 * ratio, packets(nmcc), packets(uncoupled)),
            band: ">= 95%".into(),
            pass: ratio >= 0.95,
        },
        Check {
            criterion: 6,
            label: "first-10 s WiFi utilization, coupled < NMCC".into(),
            paper: Some("coupled < 93%".into()),
            measured: format!("coupled {} vs NMCC {}", pct(u_coupled), pct(u_nmcc)),
            band: "coupled strictly below".into(),
            pass: u_coupled < u_nmcc,
        },
        Check {
            criterion: 6,
            label: "measured m".into(),
            paper: Some("~1.1".into()),
            measured: format!("{m:.4}"),
            band: "[1.05, 1.15]".into(),
            pass: (1.05..=1.15).contains(&m),
        },
    ]
}

/// Multiflow share over the mean single-flow share, per class.
pub fn friendliness_ratio(r: &AggregateResult, class: &str) -> Option<f64> {
    Some(r.class_share(class)? / r.class_share("single")?)
}

/// `(dev_class − dev_single) / |dev_single|`.
pub fn normalized_deviation_gap(r: &AggregateResult, class: &str) -> Option<f64> {
    let single = r.class_deviation("single")?;
    Some((r.class_deviation(class)? - single) / single.abs())
}

pub const XYZ_MIN_WINS: usize = 6;

pub fn xyz_checks(results: &Results) -> Vec<Check> {
    let r = |x, y, z| get(results, &format!("xyz:{x}:{y}:{z}"));
    let mut out = Vec::new();

    let one = r(1, 1, 1);
    let (dc, dn) = (
        one.class_deviation("coupled").unwrap_or(f64::NAN),
        one.class_deviation("nmcc").unwrap_or(f64::NAN),
    );
    out.push(Check {
        criterion: 7,
        label: "xyz:1:1:1 coupled deviation below NMCC's".into(),
        paper: Some("coupled too friendly".into()),
        measured: format!("coupled {:+.1}% vs NMCC {:+.1}%", 100.0 * dc, 100.0 * dn),
        band: "coupled < NMCC".into(),
        pass: dc < dn,
    });

    let two = r(2, 1, 1);
    for class in ["single", "coupled", "nmcc"] {
        let d = two.class_deviation(class).unwrap_or(f64::NAN);
        out.push(Check {
            criterion: 7,
            label: format!("xyz:2:1:1 {class} deviation"),
            paper: Some("close to fair share".into()),
            measured: format!("{:+.1}%", 100.0 * d),
            band: "[-10, +10]%".into(),
            pass: d.abs() <= 0.10,
        });
    }

    let mut wins = 0;
    let mut detail = Vec::new();
    for &(x, y, z) in &XYZ_CONFIGS {
        let res = r(x, y, z);
        let c = friendliness_ratio(res, "coupled").unwrap_or(f64::NAN);
        let n = friendliness_ratio(res, "nmcc").unwrap_or(f64::NAN);
        if (n - 1.0).abs() < (c - 1.0).abs() {
            wins += 1;
        }
        let gc = normalized_deviation_gap(res, "coupled").unwrap_or(f64::NAN);
        let gn = normalized_deviation_gap(res, "nmcc").unwrap_or(f64::NAN);
        detail.push(format!("{x}:{y}:{z} ratio c={c:.2}/n={n:.2} gap c={gc:+.2}/n={gn:+.2}"));
    }
    out.push(Check {
        criterion: 7,
        label: "NMCC friendliness ratio closer to 1 than coupled".into(),
        paper: Some("most of the time".into()),
        measured: format!("{wins} of {} ({})", XYZ_CONFIGS.len(), detail.join(", ")),
        band: format!(">= {XYZ_MIN_WINS} of {}", XYZ_CONFIGS.len()),
        pass: wins >= XYZ_MIN_WINS,
    });
    out
}

pub fn suite_checks(suites: &[SuiteOutcome]) -> Vec<Check> {
    suites
        .iter()
        .map(|s| Check {
            criterion: 8,
            label: s.name.into(),
            paper: None,
            measured: match &s.detail {
                None => format!("{} cases, 0 failures", s.cases),
                Some(d) => format!("{} cases, {} failures, first: {d}", s.cases, s.failures),
            },
            band: "0 failures".into(),
            pass: s.passed(),
        })
        .collect()
}

/// Checks for one simulation criterion (1 to 7) from its results.
pub fn criterion_checks(criterion: u8, results: &Results) -> Vec<Check> {
    match criterion {
        1 => shared_checks(results, 0.0),
        2 => {
            let mut v = shared_checks(results, STAGGER_SECS);
            v.extend(shared_checks(results, -STAGGER_SECS));
            v
        }
        3 => disjoint_checks(results),
        4 => table_one_checks(results),
        5 => short_transfer_checks(results),
        6 => heterogeneous_checks(results),
        7 => xyz_checks(results),
        _ => Vec::new(),
    }
}

/// Runs the whole catalog and scores every criterion.
pub fn reproduce(opts: &ReproduceOptions) -> Result<Reproduction, ExperimentError> {
    let results = run_all(catalog(), opts)?;
    let mut checks: Vec<Check> = (1..=7).flat_map(|c| criterion_checks(c, &results)).collect();
    let suites = if opts.property_suites {
        validation::all_suites(opts.seed_base)
    } else {
        Vec::new()
    };
    checks.extend(suite_checks(&suites));
    let order: Vec<String> = catalog().into_iter().map(|s| s.name).collect();
    let mut results = results;
    let ordered = order.iter().filter_map(|n| results.remove(n)).collect();
    Ok(Reproduction {
        results: ordered,
        checks,
        suites,
    })
}
