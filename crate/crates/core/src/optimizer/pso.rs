//! Global-best particle swarm over node coordinates.
//!
//! Fitness is the geometric cost plus the weighted attenuation/delay cost.
//! Velocities are clamped to `±v_max` per dimension and positions to the
//! field after every step.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::Environment;
use crate::rng;
use crate::topology::Topology;

use super::{clamp_coords, CostWeights, Genome, OptimizationResult, PlacementProblem, Progress, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia_w: f64,
    pub c1: f64,
    pub c2: f64,
    /// Per-dimension speed limit, meters per step.
    pub v_max: f64,
    pub alpha_weight: f64,
    pub beta_weight: f64,
    /// Std-dev of the Gaussian spread around a start genome, meters.
    pub seed_spread: f64,
    /// Root seed; `None` uses the topology seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 30,
            iterations: 50,
            inertia_w: 0.7,
            c1: 1.5,
            c2: 1.5,
            v_max: 10.0,
            alpha_weight: 1.0,
            beta_weight: 1.0,
            seed_spread: 10.0,
            seed: None,
        }
    }
}

impl PsoConfig {
    pub fn weights(&self) -> CostWeights {
        CostWeights {
            alpha_weight: self.alpha_weight,
            beta_weight: self.beta_weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Err(Error::config(format!("pso.{field}"), reason));
        if self.swarm_size < 1 {
            return bad("swarm_size", "must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.inertia_w) {
            return bad("inertia_w", "must be within [0, 1]");
        }
        if !(self.c1 >= 0.0 && self.c1.is_finite()) {
            return bad("c1", "must be >= 0");
        }
        if !(self.c2 >= 0.0 && self.c2.is_finite()) {
            return bad("c2", "must be >= 0");
        }
        if self.v_max.is_nan() || self.v_max <= 0.0 {
            return bad("v_max", "must be > 0");
        }
        if !(self.seed_spread >= 0.0 && self.seed_spread.is_finite()) {
            return bad("seed_spread", "must be >= 0");
        }
        if !(self.alpha_weight.is_finite() && self.beta_weight.is_finite()) {
            return bad("alpha_weight/beta_weight", "must be finite");
        }
        Ok(())
    }
}

/// One-dimensional velocity update, clamped to `±v_max`.
pub fn velocity_update(cfg: &PsoConfig, v: f64, x: f64, pbest: f64, gbest: f64, r1: f64, r2: f64) -> f64 {
    let next = cfg.inertia_w * v + cfg.c1 * r1 * (pbest - x) + cfg.c2 * r2 * (gbest - x);
    next.clamp(-cfg.v_max, cfg.v_max)
}

fn argmin(costs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &c) in costs.iter().enumerate() {
        if c < costs[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn swarm(
    problem: &PlacementProblem,
    cfg: &PsoConfig,
    seed: u64,
    start: Option<&Genome>,
    observer: &mut dyn FnMut(Progress),
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let dim = problem.dimension();
    let field = problem.field_size;
    let mut rng = rng::substream(seed, rng::PSO);

    let mut positions: Vec<Vec<f64>> = match start {
        Some(g) => {
            problem.check_genome(g)?;
            let spread = Normal::new(0.0, cfg.seed_spread).map_err(|e| Error::config("pso.seed_spread", e.to_string()))?;
            let mut anchor = g.coords.clone();
            clamp_coords(&mut anchor, field);
            let mut swarm = vec![anchor.clone()];
            while swarm.len() < cfg.swarm_size {
                let mut p: Vec<f64> = anchor.iter().map(|c| c + spread.sample(&mut rng)).collect();
                clamp_coords(&mut p, field);
                swarm.push(p);
            }
            swarm
        }
        None => (0..cfg.swarm_size)
            .map(|_| (0..dim).map(|_| rng.random_range(0.0..=field)).collect())
            .collect(),
    };
    let mut velocities = vec![vec![0.0; dim]; cfg.swarm_size];

    let fitness = |coords: &Vec<f64>| problem.combined(&problem.genome(coords.clone()));
    let mut pbest = positions.clone();
    let mut pbest_cost: Vec<f64> = positions.iter().map(fitness).collect();
    let mut g = argmin(&pbest_cost);
    let mut gbest = pbest[g].clone();
    let mut gbest_cost = pbest_cost[g];
    let mut history = vec![gbest_cost];
    observer(Progress {
        stage: Stage::Pso,
        step: 0,
        best_cost: gbest_cost,
    });

    for iteration in 1..=cfg.iterations {
        for ((x, v), pb) in positions.iter_mut().zip(velocities.iter_mut()).zip(&pbest) {
            for d in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                v[d] = velocity_update(cfg, v[d], x[d], pb[d], gbest[d], r1, r2);
                x[d] = (x[d] + v[d]).clamp(0.0, field);
            }
        }
        for (i, x) in positions.iter().enumerate() {
            let c = fitness(x);
            if c < pbest_cost[i] {
                pbest_cost[i] = c;
                pbest[i].clone_from(x);
            }
        }
        g = argmin(&pbest_cost);
        if pbest_cost[g] < gbest_cost {
            gbest_cost = pbest_cost[g];
            gbest.clone_from(&pbest[g]);
        }
        history.push(gbest_cost);
        observer(Progress {
            stage: Stage::Pso,
            step: iteration,
            best_cost: gbest_cost,
        });
    }

    Ok(OptimizationResult {
        best_genome: problem.genome(gbest),
        best_cost: gbest_cost,
        cost_history: history,
    })
}

/// PSO over every sensor and AUV of `topology`, optionally seeded with
/// `start` as one particle (the rest scattered around it).
pub fn pso_optimize(start: Option<&Genome>, topology: &Topology, cfg: &PsoConfig, env: &Environment) -> Result<OptimizationResult> {
    topology.validate()?;
    let problem = PlacementProblem::from_topology(topology).with_environment(env, cfg.weights())?;
    swarm(&problem, cfg, cfg.seed.unwrap_or(topology.seed), start, &mut |_| {})
}

impl PlacementProblem {
    pub fn pso(
        &self,
        cfg: &PsoConfig,
        seed: u64,
        start: Option<&Genome>,
        observer: &mut dyn FnMut(Progress),
    ) -> Result<OptimizationResult> {
        swarm(self, cfg, seed, start, observer)
    }
}
