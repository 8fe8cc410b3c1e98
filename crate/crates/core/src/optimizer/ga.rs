//! Real-coded genetic algorithm: tournament selection, BLX-α crossover,
//! per-coordinate Gaussian mutation and single-individual elitism.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, SimRng};
use crate::topology::Topology;

use super::{clamp_coords, Genome, OptimizationResult, PlacementProblem, Progress, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub blx_alpha: f64,
    /// Probability of mutating each coordinate.
    pub mutation_prob: f64,
    /// Standard deviation of the Gaussian mutation, meters.
    pub mutation_sigma: f64,
    pub tournament_size: usize,
    /// Root seed; `None` uses the topology seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 30,
            generations: 40,
            blx_alpha: 0.5,
            mutation_prob: 0.1,
            mutation_sigma: 5.0,
            tournament_size: 3,
            seed: None,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Err(Error::config(format!("ga.{field}"), reason));
        if self.population_size < 2 {
            return bad("population_size", "must be >= 2");
        }
        if self.generations < 1 {
            return bad("generations", "must be >= 1");
        }
        if !(self.blx_alpha >= 0.0 && self.blx_alpha.is_finite()) {
            return bad("blx_alpha", "must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return bad("mutation_prob", "must be within [0, 1]");
        }
        if !(self.mutation_sigma >= 0.0 && self.mutation_sigma.is_finite()) {
            return bad("mutation_sigma", "must be >= 0");
        }
        if self.tournament_size < 2 {
            return bad("tournament_size", "must be >= 2");
        }
        Ok(())
    }
}

/// Per coordinate, a uniform draw from `[lo − α·r, hi + α·r]` where
/// `lo..hi` spans the parents and `r = hi − lo`. Not clamped.
pub fn blx_crossover<R: Rng + ?Sized>(a: &[f64], b: &[f64], alpha: f64, rng: &mut R) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let lo = x.min(y);
            let range = (x - y).abs();
            let u: f64 = rng.random();
            lo - alpha * range + u * range * (1.0 + 2.0 * alpha)
        })
        .collect()
}

fn tournament(costs: &[f64], size: usize, rng: &mut SimRng) -> usize {
    let mut best = rng.random_range(0..costs.len());
    for _ in 1..size {
        let c = rng.random_range(0..costs.len());
        if costs[c] < costs[best] {
            best = c;
        }
    }
    best
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

/// Runs the GA on `problem` with its geometric cost as fitness.
///
/// `initial` replaces the uniform random initial population when given.
pub(crate) fn evolve(
    problem: &PlacementProblem,
    cfg: &GaConfig,
    seed: u64,
    initial: Option<Vec<Genome>>,
    observer: &mut dyn FnMut(Progress),
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let dim = problem.dimension();
    let field = problem.field_size;
    let mut rng = rng::substream(seed, rng::GA);
    let mutation = Normal::new(0.0, cfg.mutation_sigma).map_err(|e| Error::config("ga.mutation_sigma", e.to_string()))?;

    let mut population: Vec<Vec<f64>> = match initial {
        Some(pop) => {
            if pop.len() != cfg.population_size {
                return Err(Error::config(
                    "ga.initial_population",
                    format!("has {} individuals, expected {}", pop.len(), cfg.population_size),
                ));
            }
            pop.into_iter()
                .map(|g| {
                    problem.check_genome(&g)?;
                    let mut c = g.coords;
                    clamp_coords(&mut c, field);
                    Ok(c)
                })
                .collect::<Result<_>>()?
        }
        None => (0..cfg.population_size)
            .map(|_| (0..dim).map(|_| rng.random_range(0.0..=field)).collect())
            .collect(),
    };

    let fitness = |coords: &Vec<f64>| problem.geometric(&problem.genome(coords.clone()));
    let mut costs: Vec<f64> = population.iter().map(fitness).collect();
    let mut best = argmin(&costs);
    let mut history = vec![costs[best]];
    observer(Progress {
        stage: Stage::Ga,
        step: 0,
        best_cost: costs[best],
    });

    for generation in 1..=cfg.generations {
        let mut next = Vec::with_capacity(cfg.population_size);
        next.push(population[best].clone());
        while next.len() < cfg.population_size {
            let p1 = tournament(&costs, cfg.tournament_size, &mut rng);
            let p2 = tournament(&costs, cfg.tournament_size, &mut rng);
            let mut child = blx_crossover(&population[p1], &population[p2], cfg.blx_alpha, &mut rng);
            for c in child.iter_mut() {
                if rng.random::<f64>() < cfg.mutation_prob {
                    *c += mutation.sample(&mut rng);
                }
            }
            clamp_coords(&mut child, field);
            next.push(child);
        }
        population = next;
        costs = population.iter().map(fitness).collect();
        best = argmin(&costs);
        debug_assert!(costs[best] <= *history.last().unwrap());
        history.push(costs[best]);
        observer(Progress {
            stage: Stage::Ga,
            step: generation,
            best_cost: costs[best],
        });
    }

    Ok(OptimizationResult {
        best_genome: problem.genome(population.swap_remove(best)),
        best_cost: costs[best],
        cost_history: history,
    })
}

/// GA over every sensor and AUV of `topology`, fitness = geometric cost.
pub fn ga_optimize(topology: &Topology, cfg: &GaConfig) -> Result<OptimizationResult> {
    topology.validate()?;
    let problem = PlacementProblem::from_topology(topology);
    evolve(&problem, cfg, cfg.seed.unwrap_or(topology.seed), None, &mut |_| {})
}

impl PlacementProblem {
    pub fn ga(&self, cfg: &GaConfig, seed: u64, observer: &mut dyn FnMut(Progress)) -> Result<OptimizationResult> {
        evolve(self, cfg, seed, None, observer)
    }

    pub fn ga_from_population(
        &self,
        cfg: &GaConfig,
        seed: u64,
        population: Vec<Genome>,
        observer: &mut dyn FnMut(Progress),
    ) -> Result<OptimizationResult> {
        evolve(self, cfg, seed, Some(population), observer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::Environment;
    use crate::topology::{random_deploy, NodeCounts, Position};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn single() -> Topology {
        Topology::from_positions(
            100.0,
            1,
            Environment::reference(),
            &[Position::new(90.0, 10.0)],
            &[],
            &[Position::new(20.0, 70.0)],
        )
        .unwrap()
    }

    #[test]
    fn beats_median_of_initial_population() {
        let t = single();
        let cfg = GaConfig::default();
        let problem = PlacementProblem::from_topology(&t);
        // same stream, same draws: reconstruct the initial population
        let mut rng = rng::substream(t.seed, rng::GA);
        let mut initial: Vec<f64> = (0..cfg.population_size)
            .map(|_| {
                let c: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..=100.0)).collect();
                problem.geometric(&problem.genome(c))
            })
            .collect();
        initial.sort_by(f64::total_cmp);
        let median = 0.5 * (initial[14] + initial[15]);
        let r = ga_optimize(&t, &cfg).unwrap();
        assert_eq!(r.cost_history[0], initial[0]);
        assert!(r.best_cost < median);
        assert_eq!(r.cost_history.len(), cfg.generations + 1);
    }

    #[test]
    fn no_variation_keeps_population_fixed() {
        let t = single();
        let cfg = GaConfig {
            blx_alpha: 0.0,
            mutation_prob: 0.0,
            ..GaConfig::default()
        };
        let problem = PlacementProblem::from_topology(&t);
        let individual = Genome::from_positions(&[Position::new(33.0, 44.0)], &[]);
        let pop = vec![individual.clone(); cfg.population_size];
        let r = problem.ga_from_population(&cfg, 0, pop, &mut |_| {}).unwrap();
        assert_eq!(r.best_genome, individual);
        assert!(r.cost_history.iter().all(|&c| c == r.cost_history[0]));
    }

    #[test]
    fn history_non_increasing_across_seeds() {
        for seed in 0..10 {
            let t = random_deploy(NodeCounts::default(), Environment::reference(), 100.0, seed).unwrap();
            let r = ga_optimize(&t, &GaConfig::default()).unwrap();
            assert_eq!(r.cost_history.len(), 41);
            for w in r.cost_history.windows(2) {
                assert!(w[1] <= w[0]);
            }
            assert_eq!(*r.cost_history.last().unwrap(), r.best_cost);
            assert!(r.best_genome.within(100.0));
            assert_eq!(PlacementProblem::from_topology(&t).geometric(&r.best_genome), r.best_cost);
        }
    }

    #[test]
    fn deterministic_and_reports_progress() {
        let t = random_deploy(NodeCounts::default(), Environment::reference(), 100.0, 3).unwrap();
        let mut events = Vec::new();
        let problem = PlacementProblem::from_topology(&t);
        let a = problem.ga(&GaConfig::default(), 3, &mut |p| events.push(p)).unwrap();
        let b = ga_optimize(&t, &GaConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(events.len(), 41);
        assert_eq!(events.iter().map(|p| p.best_cost).collect::<Vec<_>>(), a.cost_history);
    }

    #[test]
    fn config_validation() {
        let ok = GaConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            GaConfig { population_size: 1, ..ok },
            GaConfig { generations: 0, ..ok },
            GaConfig { blx_alpha: -0.1, ..ok },
            GaConfig { mutation_prob: 1.5, ..ok },
            GaConfig { tournament_size: 1, ..ok },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig { .. })));
        }
        assert!(ga_optimize(&single(), &GaConfig { population_size: 0, ..ok }).is_err());
    }

    proptest! {
        #[test]
        fn blx_offspring_in_expanded_box(
            pair in prop::collection::vec((0.0..100.0f64, 0.0..100.0f64), 1..10),
            alpha in 0.0..2.0f64,
            seed in any::<u64>(),
        ) {
            let a: Vec<f64> = pair.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pair.iter().map(|p| p.1).collect();
            let mut rng = SimRng::seed_from_u64(seed);
            let child = blx_crossover(&a, &b, alpha, &mut rng);
            for ((c, x), y) in child.iter().zip(&a).zip(&b) {
                let (lo, hi) = (x.min(*y), x.max(*y));
                let r = hi - lo;
                prop_assert!(*c >= lo - alpha * r - 1e-9 && *c <= hi + alpha * r + 1e-9);
            }
        }
    }
}
