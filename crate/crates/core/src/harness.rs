//! Monte-Carlo batch experiments.
//!
//! Run `r` uses seed `base_seed + r`: a fresh random deployment, the
//! Initial scenario on that raw layout, then the optimization pipeline and
//! the Leaderless / LeaderBased scenarios on the optimized layout. Runs are
//! independent and execute in parallel; aggregation folds them in run order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{optimize_pipeline, PipelineConfig, PipelineResult};
use crate::physics::Environment;
use crate::simulator::{run_scenario, Scenario, SimulationConfig, SimulationReport};
use crate::topology::{random_deploy, NodeCounts, Topology, DEFAULT_FIELD_SIZE_M};

/// AUV provisioning relative to the sensor count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuvDensity {
    /// One AUV (and one cluster) per sensor.
    PerNode,
    /// ⌈n/5⌉ AUVs and clusters.
    PerFive,
}

impl AuvDensity {
    pub fn auv_count(self, sensors: usize) -> usize {
        match self {
            AuvDensity::PerNode => sensors,
            AuvDensity::PerFive => sensors.div_ceil(5),
        }
    }
}

impl std::str::FromStr for AuvDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "per_node" => Ok(AuvDensity::PerNode),
            "per_five" => Ok(AuvDensity::PerFive),
            other => Err(Error::config("density", format!("unknown density {other:?}; expected per-node or per-five"))),
        }
    }
}

fn default_runs() -> usize {
    100
}

fn default_field() -> f64 {
    DEFAULT_FIELD_SIZE_M
}

/// Shared configuration schema for batch experiments, the CLI and the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub counts: NodeCounts,
    #[serde(default = "default_field")]
    pub field_size: f64,
    #[serde(default)]
    pub environment: Environment,
    #[serde(default = "all_scenarios")]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub optimizer: PipelineConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auv_density: Option<AuvDensity>,
}

fn all_scenarios() -> Vec<Scenario> {
    Scenario::ALL.to_vec()
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            runs: default_runs(),
            base_seed: 0,
            counts: NodeCounts::default(),
            field_size: DEFAULT_FIELD_SIZE_M,
            environment: Environment::reference(),
            scenarios: all_scenarios(),
            optimizer: PipelineConfig::default(),
            simulation: SimulationConfig::default(),
            auv_density: None,
        }
    }
}

impl ExperimentSpec {
    /// Parses and validates a JSON config; missing fields take defaults.
    pub fn from_json(json: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(json)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("runs", "must be >= 1"));
        }
        if self.scenarios.is_empty() {
            return Err(Error::config("scenarios", "must not be empty"));
        }
        if self.auv_density == Some(AuvDensity::PerFive) && self.counts.sensors < 5 {
            return Err(Error::config("density", "per-five needs at least 5 sensors"));
        }
        self.counts.validate()?;
        self.environment.validate()?;
        self.optimizer.validate()?;
        self.simulation.validate()
    }

    /// Counts and optimizer config after applying the AUV density mode.
    pub fn effective(&self) -> (NodeCounts, PipelineConfig) {
        let mut counts = self.counts;
        let mut optimizer = self.optimizer;
        if let Some(density) = self.auv_density {
            counts.auvs = density.auv_count(counts.sensors);
            optimizer.kmeans.k = Some(counts.auvs.max(1));
        }
        (counts, optimizer)
    }

    pub fn seed_for(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    fn wants(&self, s: Scenario) -> bool {
        self.scenarios.contains(&s)
    }
}

/// Everything one run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub run: usize,
    pub seed: u64,
    pub topology: Topology,
    pub pipeline: Option<PipelineResult>,
    pub reports: Vec<SimulationReport>,
}

impl RunOutcome {
    pub fn report(&self, scenario: Scenario) -> Option<&SimulationReport> {
        self.reports.iter().find(|r| r.scenario == scenario)
    }

    pub fn rows(&self) -> Vec<RunRow> {
        self.reports
            .iter()
            .map(|r| RunRow {
                run: self.run,
                scenario: r.scenario,
                success_rate: r.success_rate,
                auv_usage_rate: r.auv_usage_rate,
                mean_delay_s: r.mean_delay_s,
            })
            .collect()
    }
}

/// One line of the raw per-run table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run: usize,
    pub scenario: Scenario,
    pub success_rate: f64,
    pub auv_usage_rate: f64,
    pub mean_delay_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub stddev: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: 0.0, stddev: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stddev = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stddev }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: Scenario,
    pub runs: usize,
    pub success_rate: Stat,
    pub auv_usage_rate: Stat,
    pub mean_delay_s: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub spec: ExperimentSpec,
    pub summaries: Vec<ScenarioSummary>,
    pub rows: Vec<RunRow>,
    /// Full per-run output, kept in memory only.
    #[serde(skip)]
    pub outcomes: Vec<RunOutcome>,
}

impl AggregateResult {
    pub fn summary(&self, scenario: Scenario) -> Option<&ScenarioSummary> {
        self.summaries.iter().find(|s| s.scenario == scenario)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Per-scenario statistics over the raw table, in run order.
pub fn summarize(scenarios: &[Scenario], rows: &[RunRow]) -> Vec<ScenarioSummary> {
    scenarios
        .iter()
        .map(|&scenario| {
            let picked: Vec<&RunRow> = rows.iter().filter(|r| r.scenario == scenario).collect();
            let col = |f: fn(&RunRow) -> f64| picked.iter().map(|r| f(r)).collect::<Vec<f64>>();
            ScenarioSummary {
                scenario,
                runs: picked.len(),
                success_rate: Stat::of(&col(|r| r.success_rate)),
                auv_usage_rate: Stat::of(&col(|r| r.auv_usage_rate)),
                mean_delay_s: Stat::of(&col(|r| r.mean_delay_s)),
            }
        })
        .collect()
}

/// Executes run `run` of `spec`. Depends only on `spec` and `run`.
pub fn run_single(spec: &ExperimentSpec, run: usize) -> Result<RunOutcome> {
    let seed = spec.seed_for(run);
    let (counts, _) = spec.effective();
    let topology = random_deploy(counts, spec.environment, spec.field_size, seed)?;
    run_on_topology(spec, run, topology)
}

/// Executes run `run` of `spec` on a given deployment instead of a fresh one.
/// The topology seed drives optimization; `spec.seed_for(run)` drives packets.
pub fn run_on_topology(spec: &ExperimentSpec, run: usize, topology: Topology) -> Result<RunOutcome> {
    topology.validate()?;
    let seed = spec.seed_for(run);
    let (_, optimizer) = spec.effective();
    let mut reports = Vec::with_capacity(spec.scenarios.len());
    if spec.wants(Scenario::Initial) {
        reports.push(run_scenario(Scenario::Initial, &topology, None, &spec.simulation, seed)?);
    }
    let pipeline = if spec.scenarios.iter().any(|s| s.is_optimized()) {
        let result = optimize_pipeline(&topology, &optimizer, &mut |_| {})?;
        for scenario in [Scenario::Leaderless, Scenario::LeaderBased] {
            if spec.wants(scenario) {
                reports.push(run_scenario(
                    scenario,
                    &result.topology,
                    Some(&result.clusters),
                    &spec.simulation,
                    seed,
                )?);
            }
        }
        Some(result)
    } else {
        None
    };

    Ok(RunOutcome {
        run,
        seed,
        topology,
        pipeline,
        reports,
    })
}

/// Runs every seed of `spec` and aggregates per scenario.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<AggregateResult> {
    run_experiment_with(spec, &|_| {})
}

/// As [`run_experiment`], calling `on_run` as each run finishes (in completion order).
pub fn run_experiment_with(spec: &ExperimentSpec, on_run: &(dyn Fn(&RunOutcome) + Sync)) -> Result<AggregateResult> {
    spec.validate()?;
    let results: Vec<Result<RunOutcome>> = (0..spec.runs)
        .into_par_iter()
        .map(|run| {
            let outcome = run_single(spec, run).map_err(|e| Error::RunFailed {
                run,
                source: Box::new(e),
            })?;
            on_run(&outcome);
            Ok(outcome)
        })
        .collect();
    let outcomes = results.into_iter().collect::<Result<Vec<_>>>()?;

    let rows: Vec<RunRow> = outcomes.iter().flat_map(RunOutcome::rows).collect();
    let scenarios: Vec<Scenario> = Scenario::ALL.into_iter().filter(|s| spec.wants(*s)).collect();
    Ok(AggregateResult {
        spec: spec.clone(),
        summaries: summarize(&scenarios, &rows),
        rows,
        outcomes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityStudy {
    pub per_node: AggregateResult,
    pub per_five: AggregateResult,
}

/// Runs `spec` once with one AUV per sensor and once with one per five,
/// holding hubs, environment and seeds fixed.
pub fn auv_density_study(spec: &ExperimentSpec) -> Result<DensityStudy> {
    let with = |density| {
        let mut s = spec.clone();
        s.auv_density = Some(density);
        run_experiment(&s)
    };
    Ok(DensityStudy {
        per_node: with(AuvDensity::PerNode)?,
        per_five: with(AuvDensity::PerFive)?,
    })
}
