use std::f64::consts::PI;

use proptest::prelude::*;
use uwsn_core::physics::{DeliveryModel, Environment};
use uwsn_core::simulator::{run_scenario, Scenario, SimulationConfig};
use uwsn_core::topology::{random_deploy, NodeCounts, Position, Topology};

/// Link attenuation at the reference environment, computed from first principles.
fn reference_alpha() -> f64 {
    let sigma = 0.19 * 35.0;
    8.686 * (PI * 1.0e5 * 4.0 * PI * 1e-7 * sigma).sqrt()
}

fn logistic(attenuation: f64) -> f64 {
    let theta = reference_alpha() * 30.0;
    1.0 / (1.0 + (0.05 * (attenuation - theta)).exp())
}

fn line(sensor: f64, auv: Option<f64>, hub: f64) -> Topology {
    let auvs: Vec<Position> = auv.into_iter().map(|x| Position::new(x, 0.0)).collect();
    Topology::from_positions(
        100.0,
        0,
        Environment::reference(),
        &[Position::new(sensor, 0.0)],
        &auvs,
        &[Position::new(hub, 0.0)],
    )
    .unwrap()
}

fn monte_carlo(topology: &Topology, scenario: Scenario, seeds: u64) -> (f64, f64) {
    let cfg = SimulationConfig::default();
    let delivered: u64 = (0..seeds)
        .map(|seed| run_scenario(scenario, topology, None, &cfg, seed).unwrap().packets_delivered)
        .sum();
    let trials = seeds as f64 * cfg.packets_per_sensor as f64;
    (delivered as f64 / trials, trials)
}

#[test]
fn single_hop_delivery_matches_binomial() {
    let t = line(0.0, None, 28.0);
    let p = logistic(reference_alpha() * 28.0);
    let report = run_scenario(Scenario::Initial, &t, None, &SimulationConfig::default(), 0).unwrap();
    assert!((report.records[0].route.delivery_probability() - p).abs() < 1e-12);

    let (mean, trials) = monte_carlo(&t, Scenario::Initial, 1000);
    let sigma = (p * (1.0 - p) / trials).sqrt();
    assert!((mean - p).abs() <= 3.0 * sigma, "mean {mean} vs p {p} (3σ = {})", 3.0 * sigma);
}

#[test]
fn relayed_delivery_is_product_of_hops() {
    let t = line(0.0, Some(28.0), 56.0);
    let alpha = reference_alpha();
    let p = logistic(alpha * 28.0) * logistic(alpha * 0.79 * 28.0);

    let report = run_scenario(Scenario::Leaderless, &t, None, &SimulationConfig::default(), 0).unwrap();
    assert_eq!(report.records[0].route_label, "AUV 0 → Hub 0");
    assert!((report.records[0].route.delivery_probability() - p).abs() < 1e-12);

    let (mean, trials) = monte_carlo(&t, Scenario::Leaderless, 1000);
    let sigma = (p * (1.0 - p) / trials).sqrt();
    assert!((mean - p).abs() <= 3.0 * sigma, "mean {mean} vs p {p}");
}

#[test]
fn direct_delay_is_distance_over_phase_velocity() {
    let t = line(10.0, None, 30.0);
    let cfg = SimulationConfig {
        delivery: DeliveryModel::new(0.05, 1.0e9).unwrap(),
        ..SimulationConfig::default()
    };
    let report = run_scenario(Scenario::Initial, &t, None, &cfg, 1).unwrap();
    let v_p = (4.0 * PI * 1.0e5 / (4.0 * PI * 1e-7 * 6.65)).sqrt();
    assert_eq!(report.success_rate, 1.0);
    assert!((report.mean_delay_s - 20.0 / v_p).abs() < 1e-18);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn packets_conserved_and_metrics_recomputable(
        seed in any::<u64>(),
        sensors in 1usize..12,
        auvs in 0usize..5,
        hubs in 1usize..3,
        capacity in 1usize..20,
    ) {
        let t = random_deploy(NodeCounts::new(sensors, auvs, hubs), Environment::reference(), 100.0, seed).unwrap();
        let clusters = uwsn_core::clustering::kmeans(&t.sensor_positions(), auvs.clamp(1, sensors), seed, 100, 1e-6).unwrap();
        let mut cfg = SimulationConfig { packets_per_sensor: 10, ..SimulationConfig::default() };
        cfg.queue.capacity = capacity;
        cfg.queue.service_per_round = 1;
        for scenario in Scenario::ALL {
            let r = run_scenario(scenario, &t, Some(&clusters), &cfg, seed).unwrap();
            for rec in &r.records {
                prop_assert_eq!(rec.packets_delivered + rec.packets_lost_channel + rec.packets_dropped_queue, rec.packets_sent);
                prop_assert!((0.0..=1.0).contains(&rec.success_ratio));
                let relays = rec.route.hops.len() - 1;
                match scenario {
                    Scenario::Initial => prop_assert_eq!(relays, 0),
                    Scenario::Leaderless => prop_assert!(relays <= 1 && rec.route.leader.is_none()),
                    Scenario::LeaderBased => prop_assert!(relays <= 2),
                }
            }
            let totals = r.totals();
            prop_assert_eq!(totals.sent, r.packets_sent);
            prop_assert_eq!(totals.delivered, r.packets_delivered);
            prop_assert_eq!(totals.success_rate, r.success_rate);
            prop_assert_eq!(totals.auv_usage_rate, r.auv_usage_rate);
            prop_assert_eq!(totals.mean_delay_s, r.mean_delay_s);
            for q in &r.queues {
                prop_assert!(q.occupancy_trace.iter().all(|&o| o <= q.capacity));
            }
            if scenario == Scenario::Initial {
                prop_assert_eq!(r.auv_usage_rate, 0.0);
            }
        }
    }
}
