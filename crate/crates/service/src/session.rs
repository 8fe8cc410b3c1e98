//! The mutable simulation session behind the HTTP API.
//!
//! Every mutation bumps `revision`. Results are stamped with the revision
//! that published them and flagged stale once the inputs they were computed
//! from change.

use serde::{Deserialize, Serialize};
use uwsn_core::harness::{run_experiment_with, AggregateResult, ExperimentSpec, RunOutcome};
use uwsn_core::optimizer::{optimize_pipeline, PipelineResult, Progress};
use uwsn_core::physics::{channel_conductivity, Environment};
use uwsn_core::simulator::{run_scenario, Scenario, SimulationReport};
use uwsn_core::topology::{random_deploy, NodeCounts, Topology};
use uwsn_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub revision: u64,
    pub stale: bool,
    pub value: T,
}

impl<T> Stamped<T> {
    fn fresh(revision: u64, value: T) -> Self {
        Self {
            revision,
            stale: false,
            value,
        }
    }
}

/// Body of `POST /deploy`. Either a full topology to load, or deployment
/// parameters overriding the session config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeployRequest {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub counts: Option<NodeCounts>,
    #[serde(default)]
    pub field_size: Option<f64>,
    #[serde(default)]
    pub topology: Option<Topology>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentRequest {
    pub temperature_c: f64,
    pub salinity_psu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub revision: u64,
    /// Deployment, optimizer and simulation settings; `base_seed` is the
    /// seed of the current topology.
    pub config: ExperimentSpec,
    pub environment: Environment,
    pub conductivity_s_per_m: f64,
    /// The deployed (unoptimized) layout.
    pub topology: Topology,
    pub optimization: Option<Stamped<PipelineResult>>,
    /// Latest report per scenario, in scenario order.
    pub reports: Vec<Stamped<SimulationReport>>,
    pub experiment: Option<Stamped<AggregateResult>>,
}

impl Session {
    /// A session at revision 0 holding a fresh deployment from `config`.
    pub fn new(config: ExperimentSpec) -> Result<Self> {
        config.validate()?;
        let environment = config.environment;
        let topology = random_deploy(config.counts, environment, config.field_size, config.base_seed)?;
        Ok(Self {
            revision: 0,
            conductivity_s_per_m: channel_conductivity(&environment)?,
            config,
            environment,
            topology,
            optimization: None,
            reports: Vec::new(),
            experiment: None,
        })
    }

    pub fn report(&self, scenario: Scenario) -> Option<&Stamped<SimulationReport>> {
        self.reports.iter().find(|r| r.value.scenario == scenario)
    }

    fn mark_stale(&mut self) {
        if let Some(o) = &mut self.optimization {
            o.stale = true;
        }
        for r in &mut self.reports {
            r.stale = true;
        }
        if let Some(e) = &mut self.experiment {
            e.stale = true;
        }
    }

    fn bump(&mut self) -> u64 {
        self.revision += 1;
        self.revision
    }

    /// Replaces the topology. A loaded topology keeps its own seed and
    /// field; otherwise a new one is drawn from the config.
    pub fn deploy(&mut self, req: DeployRequest) -> Result<u64> {
        let mut config = self.config.clone();
        let topology = match req.topology {
            Some(mut t) => {
                t.environment = self.environment;
                t.validate()?;
                config.base_seed = t.seed;
                config.field_size = t.field_size;
                config.counts = t.counts();
                t
            }
            None => {
                config.base_seed = req.seed.unwrap_or(config.base_seed);
                config.counts = req.counts.unwrap_or(config.counts);
                config.field_size = req.field_size.unwrap_or(config.field_size);
                config.validate()?;
                random_deploy(config.counts, self.environment, config.field_size, config.base_seed)?
            }
        };
        self.config = config;
        self.topology = topology;
        self.optimization = None;
        self.mark_stale();
        Ok(self.bump())
    }

    /// Validates and installs a new environment. Leaves the session
    /// untouched on error. Identical values still bump the revision.
    pub fn set_environment(&mut self, req: EnvironmentRequest) -> Result<u64> {
        let environment = Environment {
            temperature_c: req.temperature_c,
            salinity_psu: req.salinity_psu,
            ..self.environment
        };
        environment.validate()?;
        let conductivity = channel_conductivity(&environment)?;
        self.environment = environment;
        self.config.environment = environment;
        self.conductivity_s_per_m = conductivity;
        self.topology.environment = environment;
        self.mark_stale();
        Ok(self.bump())
    }

    /// Runs the optimization pipeline on the current topology.
    pub fn compute_optimization(&self, observer: &mut dyn FnMut(Progress)) -> Result<PipelineResult> {
        optimize_pipeline(&self.topology, &self.config.optimizer, observer)
    }

    pub fn apply_optimization(&mut self, result: PipelineResult) -> u64 {
        let revision = self.bump();
        self.optimization = Some(Stamped::fresh(revision, result));
        revision
    }

    /// Simulates `scenario`: Initial on the deployed layout, the others on
    /// the latest optimized layout under the current environment.
    pub fn compute_report(&self, scenario: Scenario) -> Result<SimulationReport> {
        let seed = self.config.base_seed;
        if !scenario.is_optimized() {
            return run_scenario(scenario, &self.topology, None, &self.config.simulation, seed);
        }
        let optimization = self
            .optimization
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig {
                field: "scenario".into(),
                reason: format!("{scenario} needs an optimized layout; run optimize first"),
            })?;
        let mut topology = optimization.value.topology.clone();
        topology.environment = self.environment;
        run_scenario(
            scenario,
            &topology,
            Some(&optimization.value.clusters),
            &self.config.simulation,
            seed,
        )
    }

    pub fn apply_report(&mut self, report: SimulationReport) -> u64 {
        let revision = self.bump();
        let stamped = Stamped::fresh(revision, report);
        match self.reports.iter_mut().find(|r| r.value.scenario == stamped.value.scenario) {
            Some(slot) => *slot = stamped,
            None => self.reports.push(stamped),
        }
        self.reports.sort_by_key(|r| Scenario::ALL.iter().position(|s| *s == r.value.scenario));
        revision
    }

    /// The spec an experiment request without a body runs: the session
    /// config under the current environment.
    pub fn default_experiment(&self) -> ExperimentSpec {
        ExperimentSpec {
            environment: self.environment,
            ..self.config.clone()
        }
    }

    pub fn compute_experiment(
        &self,
        spec: Option<ExperimentSpec>,
        on_run: &(dyn Fn(&RunOutcome) + Sync),
    ) -> Result<AggregateResult> {
        let spec = spec.unwrap_or_else(|| self.default_experiment());
        run_experiment_with(&spec, on_run)
    }

    pub fn apply_experiment(&mut self, result: AggregateResult) -> u64 {
        let revision = self.bump();
        self.experiment = Some(Stamped::fresh(revision, result));
        revision
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
