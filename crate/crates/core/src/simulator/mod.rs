//! One seeded run of a routing scenario.
//!
//! Every sensor gets a route up front. Packets are then sent in rounds: in
//! each round every sensor (in id order) emits one packet. Each hop is an
//! independent Bernoulli trial with the hop's delivery probability, and each
//! relay (leader or AUV) holds a bounded FIFO that is served at the end of the
//! round. A packet is delivered iff every hop succeeds and no relay queue was
//! full on arrival.

mod queue;
mod route;

pub use queue::{Admission, QueueConfig, RelayQueue};
pub use route::{select_route, Hop, Route, RoutePlanner};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::ClusterModel;
use crate::error::{Error, Result};
use crate::physics::DeliveryModel;
use crate::rng;
use crate::topology::{NodeKind, NodeRef, Topology};

pub const DEFAULT_PACKETS_PER_SENSOR: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Sensor → nearest hub, AUVs idle.
    Initial,
    /// Sensor → hub, or sensor → AUV → hub.
    Leaderless,
    /// Sensor → cluster leader → hub or AUV → hub.
    LeaderBased,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Initial, Scenario::Leaderless, Scenario::LeaderBased];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Initial => "initial",
            Scenario::Leaderless => "leaderless",
            Scenario::LeaderBased => "leader_based",
        }
    }

    /// Whether this scenario runs on the optimized layout.
    pub fn is_optimized(self) -> bool {
        !matches!(self, Scenario::Initial)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "initial" => Ok(Scenario::Initial),
            "leaderless" | "no_leader" => Ok(Scenario::Leaderless),
            "leader_based" | "leader" => Ok(Scenario::LeaderBased),
            other => Err(Error::config("scenario", format!("unknown scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    #[serde(default)]
    pub delivery: DeliveryModel,
    #[serde(default)]
    pub queue: QueueConfig,
    #[serde(default = "default_packets")]
    pub packets_per_sensor: usize,
}

fn default_packets() -> usize {
    DEFAULT_PACKETS_PER_SENSOR
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            delivery: DeliveryModel::default(),
            queue: QueueConfig::default(),
            packets_per_sensor: DEFAULT_PACKETS_PER_SENSOR,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.delivery.validate()?;
        self.queue.validate()?;
        if self.packets_per_sensor == 0 {
            return Err(Error::config("packets_per_sensor", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionRecord {
    pub sensor_id: usize,
    pub route: Route,
    /// Route formatted for tables, e.g. `AUV 2 → Hub 1`.
    pub route_label: String,
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub packets_lost_channel: u64,
    pub packets_dropped_queue: u64,
    pub success_ratio: f64,
    /// Mean over delivered packets; 0 when nothing was delivered.
    pub mean_end_to_end_delay_s: f64,
    /// Attenuation summed over every hop transmission attempted.
    pub attenuation_db: f64,
}

impl TransmissionRecord {
    pub fn delivered_via_auv(&self) -> u64 {
        if self.route.uses_auv() {
            self.packets_delivered
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario: Scenario,
    pub seed: u64,
    pub packets_per_sensor: usize,
    pub records: Vec<TransmissionRecord>,
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub packets_lost_channel: u64,
    pub packets_dropped_queue: u64,
    /// Delivered / sent over all sensors.
    pub success_rate: f64,
    /// Share of delivered packets whose route used an AUV.
    pub auv_usage_rate: f64,
    /// Mean end-to-end delay over delivered packets, seconds.
    pub mean_delay_s: f64,
    pub total_attenuation_db: f64,
    pub queues: Vec<RelayQueue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<ClusterModel>,
}

/// Aggregates derived from per-sensor records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Totals {
    pub sent: u64,
    pub delivered: u64,
    pub lost_channel: u64,
    pub dropped_queue: u64,
    pub success_rate: f64,
    pub auv_usage_rate: f64,
    pub mean_delay_s: f64,
    pub total_attenuation_db: f64,
}

impl Totals {
    pub fn from_records(records: &[TransmissionRecord]) -> Self {
        let sent: u64 = records.iter().map(|r| r.packets_sent).sum();
        let delivered: u64 = records.iter().map(|r| r.packets_delivered).sum();
        let via_auv: u64 = records.iter().map(TransmissionRecord::delivered_via_auv).sum();
        let delay_sum: f64 = records
            .iter()
            .map(|r| r.mean_end_to_end_delay_s * r.packets_delivered as f64)
            .sum();
        let ratio = |num: f64, den: u64| if den == 0 { 0.0 } else { num / den as f64 };
        Self {
            sent,
            delivered,
            lost_channel: records.iter().map(|r| r.packets_lost_channel).sum(),
            dropped_queue: records.iter().map(|r| r.packets_dropped_queue).sum(),
            success_rate: ratio(delivered as f64, sent),
            auv_usage_rate: ratio(via_auv as f64, delivered),
            mean_delay_s: ratio(delay_sum, delivered),
            total_attenuation_db: records.iter().map(|r| r.attenuation_db).sum(),
        }
    }
}

impl SimulationReport {
    pub fn totals(&self) -> Totals {
        Totals::from_records(&self.records)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    sent: u64,
    delivered: u64,
    lost: u64,
    dropped: u64,
    delay_sum: f64,
    attenuation: f64,
}

/// Runs `scenario` over `topology` for `cfg.packets_per_sensor` rounds.
///
/// `clusters` is required for [`Scenario::LeaderBased`] and attached to the
/// report when given.
pub fn run_scenario(
    scenario: Scenario,
    topology: &Topology,
    clusters: Option<&ClusterModel>,
    cfg: &SimulationConfig,
    seed: u64,
) -> Result<SimulationReport> {
    topology.validate()?;
    cfg.validate()?;
    let planner = RoutePlanner::new(topology, clusters, &cfg.delivery, &topology.environment)?;
    let routes: Vec<Route> = (0..topology.sensors.len())
        .map(|s| planner.select(scenario, s))
        .collect::<Result<_>>()?;

    let mut queues: BTreeMap<NodeRef, RelayQueue> = BTreeMap::new();
    for route in &routes {
        for hop in &route.hops {
            if hop.to.kind != NodeKind::Hub {
                queues
                    .entry(hop.to)
                    .or_insert_with(|| RelayQueue::new(hop.to, cfg.queue.capacity));
            }
        }
    }

    let mut rng = rng::substream(seed, rng::PACKETS);
    let mut tallies = vec![Tally::default(); routes.len()];
    for _round in 0..cfg.packets_per_sensor {
        for (route, tally) in routes.iter().zip(tallies.iter_mut()) {
            tally.sent += 1;
            let mut delay = 0.0;
            let mut delivered = true;
            for hop in &route.hops {
                tally.attenuation += hop.link.attenuation_db;
                if rng.random::<f64>() >= hop.link.delivery_prob {
                    tally.lost += 1;
                    delivered = false;
                    break;
                }
                delay += hop.link.delay_s;
                if let Some(q) = queues.get_mut(&hop.to) {
                    match q.offer() {
                        Admission::Queued { ahead } => delay += ahead as f64 * cfg.queue.service_time_s,
                        Admission::Dropped => {
                            tally.dropped += 1;
                            delivered = false;
                            break;
                        }
                    }
                }
            }
            if delivered {
                tally.delivered += 1;
                tally.delay_sum += delay;
            }
        }
        for q in queues.values_mut() {
            q.end_round(cfg.queue.service_per_round);
        }
    }

    let records: Vec<TransmissionRecord> = routes
        .into_iter()
        .zip(tallies)
        .enumerate()
        .map(|(sensor_id, (route, t))| TransmissionRecord {
            sensor_id,
            route_label: route.label(),
            route,
            packets_sent: t.sent,
            packets_delivered: t.delivered,
            packets_lost_channel: t.lost,
            packets_dropped_queue: t.dropped,
            success_ratio: t.delivered as f64 / t.sent as f64,
            mean_end_to_end_delay_s: if t.delivered == 0 { 0.0 } else { t.delay_sum / t.delivered as f64 },
            attenuation_db: t.attenuation,
        })
        .collect();

    let totals = Totals::from_records(&records);
    Ok(SimulationReport {
        scenario,
        seed,
        packets_per_sensor: cfg.packets_per_sensor,
        packets_sent: totals.sent,
        packets_delivered: totals.delivered,
        packets_lost_channel: totals.lost_channel,
        packets_dropped_queue: totals.dropped_queue,
        success_rate: totals.success_rate,
        auv_usage_rate: totals.auv_usage_rate,
        mean_delay_s: totals.mean_delay_s,
        total_attenuation_db: totals.total_attenuation_db,
        records,
        queues: queues.into_values().collect(),
        clusters: clusters.cloned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::kmeans;
    use crate::physics::Environment;
    use crate::topology::{random_deploy, NodeCounts, Position};

    fn deployed(seed: u64) -> (Topology, ClusterModel) {
        let t = random_deploy(NodeCounts::default(), Environment::reference(), 100.0, seed).unwrap();
        let c = kmeans(&t.sensor_positions(), 5, seed, 100, 1e-6).unwrap();
        (t, c)
    }

    fn with_model(delivery: DeliveryModel) -> SimulationConfig {
        SimulationConfig {
            delivery,
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn perfect_channel_delivers_everything() {
        let (t, c) = deployed(1);
        let cfg = with_model(DeliveryModel::new(0.05, 1e9).unwrap());
        for s in Scenario::ALL {
            let r = run_scenario(s, &t, Some(&c), &cfg, 7).unwrap();
            assert_eq!(r.success_rate, 1.0, "{s}");
            assert_eq!(r.packets_sent, 500);
        }
    }

    #[test]
    fn dead_channel_delivers_nothing() {
        let (t, c) = deployed(1);
        let cfg = with_model(DeliveryModel::new(0.05, -1e9).unwrap());
        for s in Scenario::ALL {
            let r = run_scenario(s, &t, Some(&c), &cfg, 7).unwrap();
            assert_eq!(r.success_rate, 0.0);
            assert_eq!(r.auv_usage_rate, 0.0);
            assert_eq!(r.mean_delay_s, 0.0);
        }
    }

    #[test]
    fn conservation_and_recomputable_aggregates() {
        for seed in 0..5 {
            let (t, c) = deployed(seed);
            let cfg = SimulationConfig {
                queue: QueueConfig {
                    capacity: 3,
                    service_per_round: 1,
                    service_time_s: 1e-3,
                },
                ..SimulationConfig::default()
            };
            for s in Scenario::ALL {
                let r = run_scenario(s, &t, Some(&c), &cfg, seed).unwrap();
                for rec in &r.records {
                    assert_eq!(rec.packets_delivered + rec.packets_lost_channel + rec.packets_dropped_queue, rec.packets_sent);
                    assert!((0.0..=1.0).contains(&rec.success_ratio));
                }
                assert_eq!(r.packets_delivered + r.packets_lost_channel + r.packets_dropped_queue, r.packets_sent);
                let totals = r.totals();
                assert_eq!(totals.success_rate, r.success_rate);
                assert_eq!(totals.auv_usage_rate, r.auv_usage_rate);
                assert_eq!(totals.mean_delay_s, r.mean_delay_s);
                assert_eq!(totals.total_attenuation_db, r.total_attenuation_db);
                for q in &r.queues {
                    assert!(q.occupancy_trace.iter().all(|&o| o <= q.capacity));
                }
                let drops: u64 = r.queues.iter().map(|q| q.drops).sum();
                assert_eq!(drops, r.packets_dropped_queue);
            }
        }
    }

    #[test]
    fn route_rules_per_scenario() {
        for seed in 0..5 {
            let (t, c) = deployed(seed);
            for s in Scenario::ALL {
                let r = run_scenario(s, &t, Some(&c), &SimulationConfig::default(), seed).unwrap();
                for rec in &r.records {
                    let route = &rec.route;
                    match s {
                        Scenario::Initial => {
                            assert_eq!(route.hops.len(), 1);
                            assert!(route.leader.is_none() && route.auv.is_none());
                        }
                        Scenario::Leaderless => {
                            assert!(route.leader.is_none());
                            assert_eq!(route.hops.len(), 1 + usize::from(route.auv.is_some()));
                        }
                        Scenario::LeaderBased => {
                            let is_leader = c.is_leader(rec.sensor_id);
                            assert_eq!(route.leader.is_some(), !is_leader);
                            let expected = 1 + usize::from(!is_leader) + usize::from(route.auv.is_some());
                            assert_eq!(route.hops.len(), expected);
                        }
                    }
                    for hop in &route.hops {
                        let scaled = hop.from.kind == NodeKind::Auv;
                        let factor = if scaled { 0.79 } else { 1.0 };
                        assert_eq!(hop.link.effective_distance_m, factor * hop.link.distance_m);
                    }
                }
                if s == Scenario::Initial {
                    assert_eq!(r.auv_usage_rate, 0.0);
                }
            }
        }
    }

    #[test]
    fn byte_identical_under_seed() {
        let (t, c) = deployed(4);
        let a = run_scenario(Scenario::LeaderBased, &t, Some(&c), &SimulationConfig::default(), 99).unwrap();
        let b = run_scenario(Scenario::LeaderBased, &t, Some(&c), &SimulationConfig::default(), 99).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let other = run_scenario(Scenario::LeaderBased, &t, Some(&c), &SimulationConfig::default(), 100).unwrap();
        assert_eq!(other.records.len(), a.records.len());
    }

    #[test]
    fn full_queue_drops_and_delay_accumulates() {
        // four members funnel through one leader on a perfect channel
        let sensors: Vec<Position> = [(10.0, 10.0), (11.0, 10.0), (10.0, 11.0), (11.0, 11.0), (10.5, 10.5)]
            .iter()
            .map(|&(x, y)| Position::new(x, y))
            .collect();
        let t = Topology::from_positions(100.0, 0, Environment::reference(), &sensors, &[], &[Position::new(12.0, 12.0)]).unwrap();
        let c = kmeans(&t.sensor_positions(), 1, 0, 100, 1e-9).unwrap();
        assert_eq!(c.leaders, vec![Some(4)]);
        let cfg = SimulationConfig {
            delivery: DeliveryModel::new(1.0, 1e6).unwrap(),
            queue: QueueConfig {
                capacity: 2,
                service_per_round: 2,
                service_time_s: 0.5,
            },
            packets_per_sensor: 10,
        };
        let r = run_scenario(Scenario::LeaderBased, &t, Some(&c), &cfg, 0).unwrap();
        // per round: members 0,1 queue (waits 0 and 0.5 s), 2 and 3 drop, the leader's own packet skips its queue
        assert_eq!(r.packets_dropped_queue, 20);
        assert_eq!(r.records[2].packets_dropped_queue, 10);
        assert_eq!(r.records[0].packets_delivered, 10);
        assert!((r.records[1].mean_end_to_end_delay_s - r.records[0].mean_end_to_end_delay_s - 0.5).abs() < 1e-12);
        assert_eq!(r.records[4].packets_delivered, 10);
        assert_eq!(r.queues.len(), 1);
        assert_eq!(r.queues[0].occupancy_trace, vec![2; 10]);
    }

    #[test]
    fn scenario_names() {
        for s in Scenario::ALL {
            assert_eq!(s.as_str().parse::<Scenario>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.as_str()));
        }
        assert_eq!("leader-based".parse::<Scenario>().unwrap(), Scenario::LeaderBased);
        assert!("mesh".parse::<Scenario>().is_err());
    }

    #[test]
    fn rejects_zero_packets() {
        let (t, _) = deployed(0);
        let cfg = SimulationConfig {
            packets_per_sensor: 0,
            ..SimulationConfig::default()
        };
        assert!(run_scenario(Scenario::Initial, &t, None, &cfg, 0).is_err());
    }
}
