//! `uwsn`: deploy, optimize, simulate and batch-run underwater EM sensor networks.
//!
//! Every subcommand is a pure function of the config file and flags and
//! writes a fixed set of files into `--out`. Failures print one JSON
//! object on stderr; validation failures exit with code 2.

use std::fs::{self, File};
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tracing_subscriber::EnvFilter;
use uwsn_core::harness::{self, AggregateResult, AuvDensity, ExperimentSpec};
use uwsn_core::optimizer::optimize_pipeline;
use uwsn_core::output::{write_convergence_csv, write_routes_csv, write_runs_csv, write_summary_csv};
use uwsn_core::physics::Environment;
use uwsn_core::simulator::Scenario;
use uwsn_core::topology::{random_deploy, Topology};
use uwsn_service::{AppState, ServiceConfig, Session, DEFAULT_BIND};

#[derive(Debug, Parser)]
#[command(name = "uwsn", version, about = "Underwater EM sensor network simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Deployment seed (base seed for experiments).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    sensors: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    auvs: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    hubs: Option<usize>,
    /// Side of the square field, meters.
    #[arg(long, global = true, value_name = "M")]
    field: Option<f64>,
    /// Water temperature, °C.
    #[arg(long = "temp", global = true, value_name = "C", allow_negative_numbers = true)]
    temperature: Option<f64>,
    /// Salinity, PSU.
    #[arg(long, global = true, value_name = "PSU", allow_negative_numbers = true)]
    salinity: Option<f64>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random deployment to topology.json.
    Deploy,
    /// Cluster and optimize a deployment; writes topology.json, cluster.json, convergence.csv.
    Optimize {
        /// Start from this topology instead of a fresh deployment.
        #[arg(long, value_name = "PATH")]
        topology: Option<PathBuf>,
    },
    /// Simulate one seed; writes report.json, routes.csv, runs.csv.
    Run {
        /// Scenario to simulate; all three when omitted.
        #[arg(long, value_enum)]
        scenario: Option<ScenarioArg>,
        #[arg(long, value_name = "PATH")]
        topology: Option<PathBuf>,
    },
    /// Monte-Carlo batch; writes report.json, runs.csv, summary.csv.
    Experiment {
        #[arg(long)]
        runs: Option<usize>,
        /// Restrict to one scenario.
        #[arg(long, value_enum)]
        scenario: Option<ScenarioArg>,
        /// Size the AUV fleet (and cluster count) from the sensor count.
        #[arg(long, value_enum)]
        density: Option<DensityArg>,
    },
    /// Serve the HTTP API.
    Serve {
        /// Bind address; defaults to $UWSN_BIND or 127.0.0.1:8080.
        #[arg(long, env = "UWSN_BIND", default_value = DEFAULT_BIND)]
        bind: SocketAddr,
        /// Static UI directory served for unmatched paths.
        #[arg(long = "static", value_name = "DIR")]
        static_dir: Option<PathBuf>,
        /// File written by POST /save.
        #[arg(long, value_name = "PATH")]
        snapshot: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Initial,
    Leaderless,
    LeaderBased,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Initial => Scenario::Initial,
            ScenarioArg::Leaderless => Scenario::Leaderless,
            ScenarioArg::LeaderBased => Scenario::LeaderBased,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DensityArg {
    PerNode,
    PerFive,
}

impl From<DensityArg> for AuvDensity {
    fn from(d: DensityArg) -> Self {
        match d {
            DensityArg::PerNode => AuvDensity::PerNode,
            DensityArg::PerFive => AuvDensity::PerFive,
        }
    }
}

impl Common {
    /// The config file (or defaults) with flag overrides applied.
    fn spec(&self) -> anyhow::Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).map_err(uwsn_core::Error::from)?
            }
            None => ExperimentSpec::default(),
        };
        if let Some(seed) = self.seed {
            spec.base_seed = seed;
        }
        if let Some(n) = self.sensors {
            spec.counts.sensors = n;
        }
        if let Some(n) = self.auvs {
            spec.counts.auvs = n;
        }
        if let Some(n) = self.hubs {
            spec.counts.hubs = n;
        }
        if let Some(field) = self.field {
            spec.field_size = field;
        }
        if self.temperature.is_some() || self.salinity.is_some() {
            spec.environment = Environment {
                temperature_c: self.temperature.unwrap_or(spec.environment.temperature_c),
                salinity_psu: self.salinity.unwrap_or(spec.environment.salinity_psu),
                ..spec.environment
            };
        }
        Ok(spec)
    }
}

fn load_topology(path: &Path, spec: &ExperimentSpec) -> anyhow::Result<Topology> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut topology = Topology::from_json(&text)?;
    topology.environment = spec.environment;
    Ok(topology)
}

fn deploy(spec: &ExperimentSpec) -> uwsn_core::Result<Topology> {
    random_deploy(spec.counts, spec.environment, spec.field_size, spec.base_seed)
}

fn create(out: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = out.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_text(out: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    let path = out.join(name);
    fs::write(&path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))
}

fn write_experiment(out: &Path, result: &AggregateResult) -> anyhow::Result<()> {
    write_text(out, "report.json", &result.to_json()?)?;
    write_runs_csv(create(out, "runs.csv")?, &result.rows)?;
    write_summary_csv(create(out, "summary.csv")?, &result.summaries)?;
    Ok(())
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let mut spec = cli.common.spec()?;
    let out = cli.common.out.as_path();
    if !matches!(cli.command, Command::Serve { .. }) {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    }

    match cli.command {
        Command::Deploy => {
            spec.validate()?;
            write_text(out, "topology.json", &deploy(&spec)?.to_json()?)?;
        }
        Command::Optimize { topology } => {
            spec.validate()?;
            let input = match topology {
                Some(path) => load_topology(&path, &spec)?,
                None => deploy(&spec)?,
            };
            let result = optimize_pipeline(&input, &spec.optimizer, &mut |p| {
                tracing::debug!(stage = ?p.stage, step = p.step, best_cost = p.best_cost, "progress")
            })?;
            write_text(out, "topology.json", &result.topology.to_json()?)?;
            write_text(out, "cluster.json", &serde_json::to_string_pretty(&result.clusters)?)?;
            write_convergence_csv(create(out, "convergence.csv")?, &result)?;
        }
        Command::Run { scenario, topology } => {
            if let Some(s) = scenario {
                spec.scenarios = vec![s.into()];
            }
            spec.runs = 1;
            spec.validate()?;
            let outcome = match topology {
                Some(path) => harness::run_on_topology(&spec, 0, load_topology(&path, &spec)?)?,
                None => harness::run_single(&spec, 0)?,
            };
            write_text(out, "report.json", &serde_json::to_string_pretty(&outcome.reports)?)?;
            write_routes_csv(create(out, "routes.csv")?, &outcome.reports)?;
            write_runs_csv(create(out, "runs.csv")?, &outcome.rows())?;
        }
        Command::Experiment { runs, scenario, density } => {
            if let Some(runs) = runs {
                spec.runs = runs;
            }
            if let Some(s) = scenario {
                spec.scenarios = vec![s.into()];
            }
            if let Some(d) = density {
                spec.auv_density = Some(d.into());
            }
            let result = harness::run_experiment(&spec)?;
            for s in &result.summaries {
                tracing::info!(scenario = %s.scenario, success = s.success_rate.mean, "summary");
            }
            write_experiment(out, &result)?;
        }
        Command::Serve {
            bind,
            static_dir,
            snapshot,
        } => {
            let session = Session::new(spec)?;
            let state = AppState::new(
                session,
                ServiceConfig {
                    static_dir,
                    snapshot_path: snapshot,
                },
            );
            let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
            runtime
                .block_on(uwsn_service::serve(bind, state))
                .with_context(|| format!("serving on {bind}"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level)))
        .init();

    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, body) = match err.downcast_ref::<uwsn_core::Error>() {
                Some(e) => (
                    2,
                    json!({ "error": e.kind(), "field": e.field(), "message": e.to_string() }),
                ),
                None => (1, json!({ "error": "io", "message": format!("{err:#}") })),
            };
            eprintln!("{body}");
            ExitCode::from(code)
        }
    }
}
