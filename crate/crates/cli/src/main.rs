//! `mfcc`: run scenarios, reproduce the evaluation suite, inspect topologies.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mfcc::experiments::{
    catalog, parse_scenario_spec, reproduce, run_with_replications, write_aggregate_csv, write_runs_csv,
    write_timeseries_csv, AggregateResult, ExperimentError, ReproduceOptions,
};
use mfcc::topology::{parse_topology, Topology};

const EXIT_FAILED_CHECKS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

const RUNS_CSV: &str = "runs.csv";
const AGGREGATE_CSV: &str = "aggregate.csv";
const TIMESERIES_CSV: &str = "timeseries.csv";
const CHECKS_TXT: &str = "checks.txt";

#[derive(Parser, Debug)]
#[command(name = "mfcc", version, about = "Multiflow congestion control simulator")]
struct Cli {
    /// Print progress to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and print its per-connection summary.
    Run {
        /// Scenario name or inline spec, e.g. `shared:n=4` or `xyz:2:1:1`.
        #[arg(long)]
        scenario: String,
        /// Topology file; only used by `custom:` scenarios.
        #[arg(long)]
        topology: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the full evaluation suite and score it against the acceptance bands.
    Reproduce {
        /// Skip the exact property suites.
        #[arg(long)]
        skip_suites: bool,
        #[command(flatten)]
        common: Common,
    },
    /// List the catalog scenario names.
    ListScenarios,
    /// Parse a topology file and print its normalized form.
    ValidateTopology {
        #[arg(long)]
        topology: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Base seed; replication r uses seed + r.
    #[arg(long, env = "MFCC_SEED", default_value_t = 1)]
    seed: u64,
    /// Initial replication count for every scenario.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    replications: Option<u64>,
    /// Simulated seconds per scenario; flow schedules are rescaled.
    #[arg(long, value_parser = positive_secs)]
    duration: Option<f64>,
    /// Directory for CSV output; created if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite existing result files.
    #[arg(long)]
    force: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
}

fn positive_secs(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number of seconds")),
    }
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = match err.downcast_ref::<ExperimentError>() {
            Some(ExperimentError::Spec(_)) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        };
        Self { code, err }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    let verbose = cli.verbose > 0;
    match cli.command {
        Command::Run {
            scenario,
            topology,
            common,
        } => run(&scenario, topology.as_deref(), &common, verbose),
        Command::Reproduce { skip_suites, common } => reproduce_all(&common, !skip_suites, verbose),
        Command::ListScenarios => {
            for s in catalog() {
                println!("{}", s.name);
            }
            Ok(0)
        }
        Command::ValidateTopology { topology } => {
            let topo = load_topology(&topology)?;
            print!("{}", topo.to_text());
            eprintln!("{} nodes, {} links", topo.nodes().len(), topo.links().len());
            Ok(0)
        }
    }
}

fn load_topology(path: &Path) -> Result<Topology> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_topology(&text).with_context(|| format!("parsing {}", path.display()))
}

fn options(common: &Common, property_suites: bool) -> ReproduceOptions {
    ReproduceOptions {
        seed_base: common.seed,
        replications: common.replications.map(|n| n as usize),
        duration: common.duration,
        property_suites,
    }
}

fn run(spec: &str, topology: Option<&Path>, common: &Common, verbose: bool) -> Result<u8, Failure> {
    let out = prepare_out(common, &[RUNS_CSV, AGGREGATE_CSV, TIMESERIES_CSV])?;
    let topo = topology.map(load_topology).transpose()?;
    let mut scenario = parse_scenario_spec(spec)
        .and_then(|s| s.build(topo.as_ref()))
        .map_err(anyhow::Error::from)?
        .with_seed(common.seed);
    if let Some(n) = common.replications {
        scenario = scenario.with_replications(n as usize);
    }
    if let Some(d) = common.duration {
        scenario = scenario.with_duration(d);
    }
    if verbose {
        eprintln!("running {} ({} connections)", scenario.name, scenario.connection_count());
    }
    let result = run_with_replications(&scenario).map_err(anyhow::Error::from)?;
    print_result(&result);
    if let Some(dir) = out {
        write_all(&dir, std::slice::from_ref(&result), common.format)?;
    }
    Ok(0)
}

fn reproduce_all(common: &Common, property_suites: bool, verbose: bool) -> Result<u8, Failure> {
    let out = prepare_out(common, &[RUNS_CSV, AGGREGATE_CSV, TIMESERIES_CSV, CHECKS_TXT])?;
    if verbose {
        eprintln!("running {} scenarios", catalog().len());
    }
    let rep = reproduce(&options(common, property_suites)).map_err(anyhow::Error::from)?;
    if verbose {
        for r in &rep.results {
            print_result(r);
        }
    }
    for c in &rep.checks {
        println!("{c}");
    }
    let failed = rep.checks.iter().filter(|c| !c.pass).count();
    println!("{} of {} checks passed", rep.checks.len() - failed, rep.checks.len());
    if let Some(dir) = out {
        write_all(&dir, &rep.results, common.format)?;
        let mut w = create(&dir.join(CHECKS_TXT))?;
        for c in &rep.checks {
            writeln!(w, "{c}").context("writing checks")?;
        }
        w.flush().context("writing checks")?;
    }
    Ok(if failed == 0 { 0 } else { EXIT_FAILED_CHECKS })
}

/// Creates the output directory and refuses to clobber existing results
/// unless `--force` was given.
fn prepare_out(common: &Common, files: &[&str]) -> Result<Option<PathBuf>> {
    let Some(dir) = &common.out else { return Ok(None) };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    if !common.force {
        if let Some(f) = files.iter().map(|f| dir.join(f)).find(|p| p.exists()) {
            bail!("{} exists; pass --force to overwrite", f.display());
        }
    }
    Ok(Some(dir.clone()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_all(dir: &Path, results: &[AggregateResult], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            write_runs_csv(create(&dir.join(RUNS_CSV))?, results)?;
            write_aggregate_csv(create(&dir.join(AGGREGATE_CSV))?, results)?;
            write_timeseries_csv(create(&dir.join(TIMESERIES_CSV))?, results)?;
        }
    }
    Ok(())
}

fn print_result(r: &AggregateResult) {
    let mut out = io::stdout().lock();
    let flag = if r.ci_met { "" } else { " (CI target not met)" };
    let _ = writeln!(out, "{} [{} replications{flag}]", r.name, r.replications());
    let _ = writeln!(
        out,
        "  {:<12} {:<16} {:>8} {:>8} {:>10} {:>8}",
        "connection", "algorithm", "share", "+/-", "MB/s", "retx"
    );
    for c in 0..r.labels.len() {
        let _ = writeln!(
            out,
            "  {:<12} {:<16} {:>7.2}% {:>7.2}% {:>10.3} {:>7.2}%",
            r.labels[c],
            r.algorithms[c].as_str(),
            100.0 * r.mean_share[c],
            100.0 * finite_or_zero(r.share_margin[c]),
            r.mean_rate[c] / 1e6,
            100.0 * r.retransmission_fraction[c],
        );
    }
    if let Some((u, m)) = r.probe_utilization {
        let _ = writeln!(out, "  probe utilization {:.1}% +/- {:.1}%", 100.0 * u, 100.0 * finite_or_zero(m));
    }
}

fn finite_or_zero(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}
