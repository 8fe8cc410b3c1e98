use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{Channel, Environment};
use crate::topology::{distance, nearest, Position, Topology};

use super::Genome;

/// Which node pairs contribute to the pairwise distance term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseTerm {
    /// Every ordered pair of optimized nodes.
    #[default]
    AllPairs,
    /// Only ordered pairs of sensors sharing a cluster; AUVs contribute no pairs.
    IntraCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub alpha_weight: f64,
    pub beta_weight: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            alpha_weight: 1.0,
            beta_weight: 1.0,
        }
    }
}

fn nearest_distance(p: &Position, candidates: &[Position]) -> Option<f64> {
    nearest(p, candidates).map(|(_, d)| d)
}

/// Sum of distances over ordered node pairs plus each node's distance to
/// its nearest hub.
///
/// Every unordered pair is counted twice (once per ordering).
pub fn geometric_cost(genome: &Genome, hubs: &[Position]) -> f64 {
    geometric_cost_grouped(genome, hubs, None)
}

fn geometric_cost_grouped(genome: &Genome, hubs: &[Position], groups: Option<&[usize]>) -> f64 {
    let nodes: Vec<Position> = genome.positions().collect();
    let mut pairwise = 0.0;
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            let same_group = match groups {
                None => true,
                Some(g) => i < genome.sensors && j < genome.sensors && g[i] == g[j],
            };
            if same_group {
                pairwise += distance(&nodes[i], &nodes[j]);
            }
        }
    }
    let hub_term: f64 = nodes.iter().filter_map(|p| nearest_distance(p, hubs)).sum();
    2.0 * pairwise + hub_term
}

/// Weighted attenuation and delay over each node's best single link.
///
/// Sensors use the shorter of (nearest hub, nearest AUV); every AUV adds its
/// link to the nearest hub with the AUV transmitter scaling.
pub fn physical_cost(genome: &Genome, hubs: &[Position], env: &Environment, weights: CostWeights) -> Result<f64> {
    let channel = Channel::new(env)?;
    Ok(physical_cost_with(genome, hubs, &[], &channel, weights))
}

fn physical_cost_with(
    genome: &Genome,
    hubs: &[Position],
    extra_auvs: &[Position],
    channel: &Channel,
    weights: CostWeights,
) -> f64 {
    if weights.alpha_weight == 0.0 && weights.beta_weight == 0.0 {
        return 0.0;
    }
    let mut auvs = genome.auv_positions();
    auvs.extend_from_slice(extra_auvs);
    let link_cost = |d: f64, auv_tx: bool| {
        weights.alpha_weight * channel.attenuation(d, auv_tx) + weights.beta_weight * channel.delay(d)
    };

    let mut total = 0.0;
    for s in genome.positions().take(genome.sensors) {
        let to_hub = nearest_distance(&s, hubs);
        let to_auv = nearest_distance(&s, &auvs);
        let d = match (to_hub, to_auv) {
            (Some(h), Some(a)) => h.min(a),
            (Some(h), None) => h,
            (None, Some(a)) => a,
            (None, None) => continue,
        };
        total += link_cost(d, false);
    }
    for a in &auvs {
        if let Some(d) = nearest_distance(a, hubs) {
            total += link_cost(d, true);
        }
    }
    total
}

/// The fixed part of a placement instance: field, hubs, genome layout and
/// any AUVs held outside the genome.
#[derive(Debug, Clone)]
pub struct PlacementProblem {
    pub field_size: f64,
    pub hubs: Vec<Position>,
    pub sensors: usize,
    /// AUVs encoded in the genome.
    pub auvs: usize,
    /// AUVs at fixed positions, outside the genome.
    pub fixed_auvs: Vec<Position>,
    pub pairwise: PairwiseTerm,
    groups: Option<Vec<usize>>,
    channel: Option<Channel>,
    weights: CostWeights,
}

impl PlacementProblem {
    /// All sensors and AUVs of the topology are optimized.
    pub fn from_topology(topology: &Topology) -> Self {
        Self {
            field_size: topology.field_size,
            hubs: topology.hub_positions(),
            sensors: topology.sensors.len(),
            auvs: topology.auvs.len(),
            fixed_auvs: Vec::new(),
            pairwise: PairwiseTerm::AllPairs,
            groups: None,
            channel: None,
            weights: CostWeights::default(),
        }
    }

    /// Keeps AUVs out of the genome at the given positions.
    pub fn with_fixed_auvs(mut self, auvs: Vec<Position>) -> Self {
        self.auvs = 0;
        self.fixed_auvs = auvs;
        self
    }

    /// Restricts the pairwise term to sensors sharing a cluster label.
    pub fn with_intra_cluster_pairs(mut self, assignment: Vec<usize>) -> Result<Self> {
        if assignment.len() != self.sensors {
            return Err(Error::config(
                "pairwise",
                format!("cluster assignment covers {} of {} sensors", assignment.len(), self.sensors),
            ));
        }
        self.pairwise = PairwiseTerm::IntraCluster;
        self.groups = Some(assignment);
        Ok(self)
    }

    /// Enables the physical cost term for the given environment.
    pub fn with_environment(mut self, env: &Environment, weights: CostWeights) -> Result<Self> {
        self.channel = Some(Channel::new(env)?);
        self.weights = weights;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        2 * (self.sensors + self.auvs)
    }

    pub(crate) fn genome(&self, coords: Vec<f64>) -> Genome {
        Genome {
            sensors: self.sensors,
            auvs: self.auvs,
            coords,
        }
    }

    pub(crate) fn check_genome(&self, genome: &Genome) -> Result<()> {
        if genome.sensors != self.sensors || genome.auvs != self.auvs || !genome.is_well_formed() {
            return Err(Error::config(
                "genome",
                format!(
                    "layout {}+{} ({} coords) does not match problem {}+{}",
                    genome.sensors,
                    genome.auvs,
                    genome.coords.len(),
                    self.sensors,
                    self.auvs
                ),
            ));
        }
        Ok(())
    }

    /// GA fitness: the geometric term alone.
    pub fn geometric(&self, genome: &Genome) -> f64 {
        geometric_cost_grouped(genome, &self.hubs, self.groups.as_deref())
    }

    /// Physical term; zero when no environment was attached.
    pub fn physical(&self, genome: &Genome) -> f64 {
        match &self.channel {
            Some(ch) => physical_cost_with(genome, &self.hubs, &self.fixed_auvs, ch, self.weights),
            None => 0.0,
        }
    }

    /// PSO fitness: geometric plus physical.
    pub fn combined(&self, genome: &Genome) -> f64 {
        self.geometric(genome) + self.physical(genome)
    }
}
