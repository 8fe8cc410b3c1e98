//! Network entities, the square deployment field and seeded random deployment.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::Environment;
use crate::rng;

pub const DEFAULT_FIELD_SIZE_M: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        distance(self, other)
    }

    pub fn midpoint(&self, other: &Position) -> Position {
        Position::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn in_field(&self, field_size: f64) -> bool {
        (0.0..=field_size).contains(&self.x) && (0.0..=field_size).contains(&self.y)
    }
}

/// Euclidean distance in meters.
pub fn distance(a: &Position, b: &Position) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Sensor,
    Auv,
    Hub,
}

impl NodeKind {
    pub fn label(self) -> &'static str {
        match self {
            NodeKind::Sensor => "Sensor",
            NodeKind::Auv => "AUV",
            NodeKind::Hub => "Hub",
        }
    }
}

/// A node reference: kind plus per-kind dense id. Displays as `AUV 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeRef {
    pub kind: NodeKind,
    pub id: usize,
}

impl NodeRef {
    pub const fn sensor(id: usize) -> Self {
        Self { kind: NodeKind::Sensor, id }
    }
    pub const fn auv(id: usize) -> Self {
        Self { kind: NodeKind::Auv, id }
    }
    pub const fn hub(id: usize) -> Self {
        Self { kind: NodeKind::Hub, id }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind.label(), self.id)
    }
}

/// One node as stored in a topology document. The kind is implied by which
/// collection holds it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

impl Node {
    pub const fn new(id: usize, position: Position) -> Self {
        Self {
            id,
            x: position.x,
            y: position.y,
        }
    }

    pub const fn position(&self) -> Position {
        Position::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeCounts {
    pub sensors: usize,
    pub auvs: usize,
    pub hubs: usize,
}

impl Default for NodeCounts {
    fn default() -> Self {
        Self {
            sensors: 10,
            auvs: 5,
            hubs: 2,
        }
    }
}

impl NodeCounts {
    pub const fn new(sensors: usize, auvs: usize, hubs: usize) -> Self {
        Self { sensors, auvs, hubs }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensors == 0 {
            return Err(Error::InvalidTopology("sensors must be >= 1".into()));
        }
        if self.hubs == 0 {
            return Err(Error::InvalidTopology("hubs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub field_size: f64,
    pub seed: u64,
    pub environment: Environment,
    pub sensors: Vec<Node>,
    pub auvs: Vec<Node>,
    pub hubs: Vec<Node>,
}

impl Topology {
    /// Builds a topology from positions, assigning dense ids in order.
    pub fn from_positions(
        field_size: f64,
        seed: u64,
        environment: Environment,
        sensors: &[Position],
        auvs: &[Position],
        hubs: &[Position],
    ) -> Result<Self> {
        let nodes = |ps: &[Position]| ps.iter().enumerate().map(|(i, p)| Node::new(i, *p)).collect();
        let topology = Self {
            field_size,
            seed,
            environment,
            sensors: nodes(sensors),
            auvs: nodes(auvs),
            hubs: nodes(hubs),
        };
        topology.validate()?;
        Ok(topology)
    }

    pub fn counts(&self) -> NodeCounts {
        NodeCounts::new(self.sensors.len(), self.auvs.len(), self.hubs.len())
    }

    pub fn sensor_positions(&self) -> Vec<Position> {
        self.sensors.iter().map(Node::position).collect()
    }

    pub fn auv_positions(&self) -> Vec<Position> {
        self.auvs.iter().map(Node::position).collect()
    }

    pub fn hub_positions(&self) -> Vec<Position> {
        self.hubs.iter().map(Node::position).collect()
    }

    pub fn position(&self, node: NodeRef) -> Option<Position> {
        let nodes = match node.kind {
            NodeKind::Sensor => &self.sensors,
            NodeKind::Auv => &self.auvs,
            NodeKind::Hub => &self.hubs,
        };
        nodes.get(node.id).map(Node::position)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.field_size.is_finite() && self.field_size > 0.0) {
            return Err(Error::InvalidTopology(format!(
                "field_size must be > 0, got {}",
                self.field_size
            )));
        }
        self.counts().validate()?;
        self.environment.validate()?;
        for (kind, nodes) in [
            (NodeKind::Sensor, &self.sensors),
            (NodeKind::Auv, &self.auvs),
            (NodeKind::Hub, &self.hubs),
        ] {
            for (i, n) in nodes.iter().enumerate() {
                if n.id != i {
                    return Err(Error::InvalidTopology(format!(
                        "{} ids must be dense 0..{} in order; found id {} at index {i}",
                        kind.label(),
                        nodes.len(),
                        n.id
                    )));
                }
                if !n.position().in_field(self.field_size) {
                    return Err(Error::InvalidTopology(format!(
                        "{} {} at ({}, {}) lies outside the {}x{} field",
                        kind.label(),
                        n.id,
                        n.x,
                        n.y,
                        self.field_size,
                        self.field_size
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates a topology document.
    pub fn from_json(s: &str) -> Result<Self> {
        let t: Topology = serde_json::from_str(s)?;
        t.validate()?;
        Ok(t)
    }
}

fn uniform_positions(n: usize, field_size: f64, seed: u64, label: &str) -> Vec<Position> {
    let mut rng = rng::substream(seed, label);
    (0..n)
        .map(|_| {
            let x = rng.random_range(0.0..=field_size);
            let y = rng.random_range(0.0..=field_size);
            Position::new(x, y)
        })
        .collect()
}

/// Uniform random placement of every node kind over `[0, field_size]²`.
///
/// Each kind draws from its own sub-stream, so sensor and hub layouts do not
/// depend on how many AUVs are deployed.
pub fn random_deploy(counts: NodeCounts, env: Environment, field_size: f64, seed: u64) -> Result<Topology> {
    counts.validate()?;
    env.validate()?;
    if !(field_size.is_finite() && field_size > 0.0) {
        return Err(Error::InvalidTopology(format!("field_size must be > 0, got {field_size}")));
    }
    let sensors = uniform_positions(counts.sensors, field_size, seed, rng::DEPLOY_SENSORS);
    let auvs = uniform_positions(counts.auvs, field_size, seed, rng::DEPLOY_AUVS);
    let hubs = uniform_positions(counts.hubs, field_size, seed, rng::DEPLOY_HUBS);
    Topology::from_positions(field_size, seed, env, &sensors, &auvs, &hubs)
}

/// Index and distance of the nearest point in `candidates`; lowest index wins ties.
pub fn nearest(from: &Position, candidates: &[Position]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let d = distance(from, c);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best
}
