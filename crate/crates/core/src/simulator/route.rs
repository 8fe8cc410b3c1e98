use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterModel;
use crate::error::{Error, Result};
use crate::physics::{Channel, DeliveryModel, Environment, LinkBudget};
use crate::topology::{nearest, NodeKind, NodeRef, Position, Topology};

use super::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub from: NodeRef,
    pub to: NodeRef,
    pub link: LinkBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub source: usize,
    /// Cluster leader relaying for a non-leader member.
    pub leader: Option<usize>,
    pub auv: Option<usize>,
    pub hub: usize,
    pub hops: Vec<Hop>,
}

impl Route {
    /// End-to-end delivery probability: product of hop probabilities.
    pub fn delivery_probability(&self) -> f64 {
        self.hops.iter().map(|h| h.link.delivery_prob).product()
    }

    pub fn uses_auv(&self) -> bool {
        self.auv.is_some()
    }

    pub fn relay_count(&self) -> usize {
        self.hops.len().saturating_sub(1)
    }

    pub fn total_attenuation_db(&self) -> f64 {
        self.hops.iter().map(|h| h.link.attenuation_db).sum()
    }

    /// Formatted like `Leader 3 → AUV 2 → Hub 1` or `Direct → Hub 0`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.leader {
            write!(f, "Leader {l} → ")?;
        }
        match self.auv {
            Some(a) => write!(f, "AUV {a} → Hub {}", self.hub),
            None if self.leader.is_some() => write!(f, "Hub {}", self.hub),
            None => write!(f, "Direct → Hub {}", self.hub),
        }
    }
}

/// Route selection over one topology and channel.
pub struct RoutePlanner<'a> {
    topology: &'a Topology,
    clusters: Option<&'a ClusterModel>,
    channel: Channel,
    model: DeliveryModel,
    sensors: Vec<Position>,
    auvs: Vec<Position>,
    hubs: Vec<Position>,
}

impl<'a> RoutePlanner<'a> {
    pub fn new(topology: &'a Topology, clusters: Option<&'a ClusterModel>, model: &DeliveryModel, env: &Environment) -> Result<Self> {
        if topology.hubs.is_empty() {
            return Err(Error::InvalidTopology("no hubs to route to".into()));
        }
        model.validate()?;
        if let Some(c) = clusters {
            if c.assignment.len() != topology.sensors.len() {
                return Err(Error::config(
                    "clusters",
                    format!("assignment covers {} of {} sensors", c.assignment.len(), topology.sensors.len()),
                ));
            }
        }
        Ok(Self {
            topology,
            clusters,
            channel: Channel::new(env)?,
            model: *model,
            sensors: topology.sensor_positions(),
            auvs: topology.auv_positions(),
            hubs: topology.hub_positions(),
        })
    }

    fn position(&self, node: NodeRef) -> Position {
        self.topology.position(node).expect("node refs come from the topology")
    }

    fn hop(&self, from: NodeRef, to: NodeRef) -> Hop {
        let d = self.position(from).distance(&self.position(to));
        Hop {
            from,
            to,
            link: self.channel.link(d, from.kind == NodeKind::Auv, &self.model),
        }
    }

    fn nearest_hub(&self, p: &Position) -> usize {
        nearest(p, &self.hubs).expect("hubs checked non-empty").0
    }

    /// Direct-to-nearest-hub versus nearest-AUV-then-its-nearest-hub,
    /// whichever has the higher end-to-end delivery probability (ties go direct).
    fn best_forwarding(&self, from: NodeRef) -> (Option<usize>, usize, Vec<Hop>) {
        let p = self.position(from);
        let hub = self.nearest_hub(&p);
        let direct = vec![self.hop(from, NodeRef::hub(hub))];
        let Some((auv, _)) = nearest(&p, &self.auvs) else {
            return (None, hub, direct);
        };
        let auv_hub = self.nearest_hub(&self.auvs[auv]);
        let relayed = vec![
            self.hop(from, NodeRef::auv(auv)),
            self.hop(NodeRef::auv(auv), NodeRef::hub(auv_hub)),
        ];
        let product = |hops: &[Hop]| hops.iter().map(|h| h.link.delivery_prob).product::<f64>();
        if product(&relayed) > product(&direct) {
            (Some(auv), auv_hub, relayed)
        } else {
            (None, hub, direct)
        }
    }

    pub fn select(&self, scenario: Scenario, sensor: usize) -> Result<Route> {
        if sensor >= self.sensors.len() {
            return Err(Error::config("sensor_id", format!("{sensor} out of range")));
        }
        let source = NodeRef::sensor(sensor);
        match scenario {
            Scenario::Initial => {
                let hub = self.nearest_hub(&self.sensors[sensor]);
                Ok(Route {
                    source: sensor,
                    leader: None,
                    auv: None,
                    hub,
                    hops: vec![self.hop(source, NodeRef::hub(hub))],
                })
            }
            Scenario::Leaderless => {
                let (auv, hub, hops) = self.best_forwarding(source);
                Ok(Route {
                    source: sensor,
                    leader: None,
                    auv,
                    hub,
                    hops,
                })
            }
            Scenario::LeaderBased => {
                let clusters = self
                    .clusters
                    .ok_or_else(|| Error::config("clusters", "required for the leader-based scenario"))?;
                let leader = clusters.leader_of(sensor).unwrap_or(sensor);
                if leader == sensor {
                    let (auv, hub, hops) = self.best_forwarding(source);
                    return Ok(Route {
                        source: sensor,
                        leader: None,
                        auv,
                        hub,
                        hops,
                    });
                }
                let leader_ref = NodeRef::sensor(leader);
                let (auv, hub, onward) = self.best_forwarding(leader_ref);
                let mut hops = vec![self.hop(source, leader_ref)];
                hops.extend(onward);
                Ok(Route {
                    source: sensor,
                    leader: Some(leader),
                    auv,
                    hub,
                    hops,
                })
            }
        }
    }
}

/// Chooses the route `sensor` uses under `scenario`.
pub fn select_route(
    scenario: Scenario,
    sensor: usize,
    topology: &Topology,
    clusters: Option<&ClusterModel>,
    model: &DeliveryModel,
    env: &Environment,
) -> Result<Route> {
    RoutePlanner::new(topology, clusters, model, env)?.select(scenario, sensor)
}
