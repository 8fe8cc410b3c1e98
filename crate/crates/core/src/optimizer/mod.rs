//! Placement optimization: cost functions, the GA and PSO engines, and the
//! k-means → GA → PSO pipeline.
//!
//! A candidate layout is a [`Genome`]: a flat `[x₀, y₀, x₁, y₁, …]` vector
//! with sensors first and AUVs after, both in id order. Hubs are fixed.

mod cost;
mod ga;
mod pipeline;
mod pso;

pub use cost::{geometric_cost, physical_cost, CostWeights, PairwiseTerm, PlacementProblem};
pub use ga::{blx_crossover, ga_optimize, GaConfig};
pub use pipeline::{optimize_pipeline, pipeline_problem, PipelineConfig, PipelineResult};
pub use pso::{pso_optimize, velocity_update, PsoConfig};

use serde::{Deserialize, Serialize};

use crate::topology::{Position, Topology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    /// Number of leading nodes that are sensors.
    pub sensors: usize,
    /// Number of trailing nodes that are AUVs.
    pub auvs: usize,
    pub coords: Vec<f64>,
}

impl Genome {
    pub fn from_positions(sensors: &[Position], auvs: &[Position]) -> Self {
        let coords = sensors.iter().chain(auvs).flat_map(|p| [p.x, p.y]).collect();
        Self {
            sensors: sensors.len(),
            auvs: auvs.len(),
            coords,
        }
    }

    /// Sensors and AUVs of a topology.
    pub fn from_topology(topology: &Topology) -> Self {
        Self::from_positions(&topology.sensor_positions(), &topology.auv_positions())
    }

    pub fn nodes(&self) -> usize {
        self.sensors + self.auvs
    }

    pub fn node(&self, i: usize) -> Position {
        Position::new(self.coords[2 * i], self.coords[2 * i + 1])
    }

    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        self.coords.chunks_exact(2).map(|c| Position::new(c[0], c[1]))
    }

    pub fn sensor_positions(&self) -> Vec<Position> {
        self.positions().take(self.sensors).collect()
    }

    pub fn auv_positions(&self) -> Vec<Position> {
        self.positions().skip(self.sensors).collect()
    }

    pub fn is_well_formed(&self) -> bool {
        self.coords.len() == 2 * self.nodes()
    }

    pub fn within(&self, field_size: f64) -> bool {
        self.coords.iter().all(|c| (0.0..=field_size).contains(c))
    }

    pub fn clamp(&mut self, field_size: f64) {
        clamp_coords(&mut self.coords, field_size);
    }
}

pub(crate) fn clamp_coords(coords: &mut [f64], field_size: f64) {
    for c in coords {
        *c = c.clamp(0.0, field_size);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_genome: Genome,
    pub best_cost: f64,
    /// Best-so-far cost: initial population first, then one entry per
    /// generation or iteration.
    pub cost_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ga,
    Pso,
}

/// Emitted once per GA generation / PSO iteration (step 0 is the initial population).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub stage: Stage,
    pub step: usize,
    pub best_cost: f64,
}
