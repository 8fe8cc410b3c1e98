use serde::{Deserialize, Serialize};

use crate::clustering::{kmeans, ClusterModel, KMeansConfig};
use crate::error::Result;
use crate::topology::{nearest, Position, Topology};

use super::{GaConfig, OptimizationResult, PairwiseTerm, PlacementProblem, Progress, PsoConfig};

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub kmeans: KMeansConfig,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub pso: PsoConfig,
    #[serde(default)]
    pub pairwise: PairwiseTerm,
    /// Include AUVs in the genome. When false they sit at the midpoint of
    /// their cluster centroid and that centroid's nearest hub.
    #[serde(default = "default_true")]
    pub optimize_auvs: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            kmeans: KMeansConfig::default(),
            ga: GaConfig::default(),
            pso: PsoConfig::default(),
            pairwise: PairwiseTerm::AllPairs,
            optimize_auvs: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.ga.validate()?;
        self.pso.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    /// Clusters of the input layout, which seed AUV staging and the
    /// intra-cluster cost option.
    pub initial_clusters: ClusterModel,
    /// Clusters re-computed on the optimized layout.
    pub clusters: ClusterModel,
    pub ga: OptimizationResult,
    pub pso: OptimizationResult,
    pub topology: Topology,
}

impl PipelineResult {
    pub fn best_cost(&self) -> f64 {
        self.pso.best_cost
    }
}

/// Midpoint of each AUV's cluster centroid (cluster `j mod k`) and that
/// centroid's nearest hub.
fn staged_auvs(count: usize, clusters: &ClusterModel, hubs: &[Position]) -> Vec<Position> {
    (0..count)
        .map(|j| {
            let centroid = clusters.centroids[j % clusters.k];
            let (h, _) = nearest(&centroid, hubs).expect("topology has at least one hub");
            centroid.midpoint(&hubs[h])
        })
        .collect()
}

/// Builds the placement problem the pipeline optimizes, with the physical
/// cost attached.
pub fn pipeline_problem(topology: &Topology, cfg: &PipelineConfig, clusters: &ClusterModel) -> Result<PlacementProblem> {
    let mut problem = PlacementProblem::from_topology(topology);
    if !cfg.optimize_auvs {
        let hubs = topology.hub_positions();
        problem = problem.with_fixed_auvs(staged_auvs(topology.auvs.len(), clusters, &hubs));
    }
    if cfg.pairwise == PairwiseTerm::IntraCluster {
        problem = problem.with_intra_cluster_pairs(clusters.assignment.clone())?;
    }
    problem.with_environment(&topology.environment, cfg.pso.weights())
}

/// k-means → leader election → GA → PSO (seeded with the GA best) → k-means
/// again on the optimized layout.
pub fn optimize_pipeline(
    topology: &Topology,
    cfg: &PipelineConfig,
    observer: &mut dyn FnMut(Progress),
) -> Result<PipelineResult> {
    topology.validate()?;
    cfg.validate()?;
    let seed = topology.seed;
    let k = cfg.kmeans.resolve_k(topology.sensors.len(), topology.auvs.len());
    let initial_clusters = kmeans(&topology.sensor_positions(), k, seed, cfg.kmeans.max_iters, cfg.kmeans.tol)?;

    let problem = pipeline_problem(topology, cfg, &initial_clusters)?;
    let ga = problem.ga(&cfg.ga, cfg.ga.seed.unwrap_or(seed), observer)?;
    let pso = problem.pso(&cfg.pso, cfg.pso.seed.unwrap_or(seed), Some(&ga.best_genome), observer)?;

    let best = &pso.best_genome;
    let auvs = if cfg.optimize_auvs {
        best.auv_positions()
    } else {
        problem.fixed_auvs.clone()
    };
    let optimized = Topology::from_positions(
        topology.field_size,
        topology.seed,
        topology.environment,
        &best.sensor_positions(),
        &auvs,
        &topology.hub_positions(),
    )?;
    let clusters = kmeans(&optimized.sensor_positions(), k, seed, cfg.kmeans.max_iters, cfg.kmeans.tol)?;

    Ok(PipelineResult {
        initial_clusters,
        clusters,
        ga,
        pso,
        topology: optimized,
    })
}
