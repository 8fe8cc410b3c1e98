//! Flat CSV exports of run tables, per-sensor routes and convergence traces.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::harness::{RunRow, ScenarioSummary};
use crate::optimizer::{OptimizationResult, PipelineResult, Stage};
use crate::simulator::{Scenario, SimulationReport};

fn write_rows<W: Write, T: Serialize>(writer: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `run,scenario,success_rate,auv_usage_rate,mean_delay_s`
pub fn write_runs_csv<W: Write>(writer: W, rows: &[RunRow]) -> Result<()> {
    write_rows(writer, rows)
}

#[derive(Serialize)]
struct SummaryRow {
    scenario: Scenario,
    mean_success_rate: f64,
}

/// `scenario,mean_success_rate`, one line per scenario.
pub fn write_summary_csv<W: Write>(writer: W, summaries: &[ScenarioSummary]) -> Result<()> {
    write_rows(
        writer,
        summaries.iter().map(|s| SummaryRow {
            scenario: s.scenario,
            mean_success_rate: s.success_rate.mean,
        }),
    )
}

#[derive(Serialize)]
struct RouteRow<'a> {
    scenario: Scenario,
    node_id: usize,
    route: &'a str,
    sent: u64,
    delivered: u64,
    success_ratio: f64,
    mean_delay_s: f64,
}

/// One line per sensor per report, with the route formatted as `AUV 2 → Hub 1`.
pub fn write_routes_csv<'a, W: Write>(writer: W, reports: impl IntoIterator<Item = &'a SimulationReport>) -> Result<()> {
    write_rows(
        writer,
        reports.into_iter().flat_map(|r| {
            r.records.iter().map(move |rec| RouteRow {
                scenario: r.scenario,
                node_id: rec.sensor_id,
                route: &rec.route_label,
                sent: rec.packets_sent,
                delivered: rec.packets_delivered,
                success_ratio: rec.success_ratio,
                mean_delay_s: rec.mean_end_to_end_delay_s,
            })
        }),
    )
}

#[derive(Serialize)]
struct ConvergenceRow {
    stage: Stage,
    step: usize,
    best_cost: f64,
}

fn trace(stage: Stage, result: &OptimizationResult) -> impl Iterator<Item = ConvergenceRow> + '_ {
    result.cost_history.iter().enumerate().map(move |(step, &best_cost)| ConvergenceRow {
        stage,
        step,
        best_cost,
    })
}

/// `stage,step,best_cost` for the GA generations followed by the PSO iterations.
pub fn write_convergence_csv<W: Write>(writer: W, result: &PipelineResult) -> Result<()> {
    write_rows(writer, trace(Stage::Ga, &result.ga).chain(trace(Stage::Pso, &result.pso)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_experiment, ExperimentSpec};

    #[test]
    fn runs_and_summary_layout() {
        let spec = ExperimentSpec {
            runs: 2,
            ..ExperimentSpec::default()
        };
        let result = run_experiment(&spec).unwrap();
        let mut buf = Vec::new();
        write_runs_csv(&mut buf, &result.rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("run,scenario,success_rate,auv_usage_rate,mean_delay_s"));
        assert!(lines.next().unwrap().starts_with("0,initial,"));
        assert_eq!(text.lines().count(), 1 + 6);

        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &result.summaries).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("scenario,mean_success_rate"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn routes_use_display_labels() {
        let spec = ExperimentSpec {
            runs: 1,
            ..ExperimentSpec::default()
        };
        let outcome = crate::harness::run_single(&spec, 0).unwrap();
        let mut buf = Vec::new();
        write_routes_csv(&mut buf, &outcome.reports).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next(),
            Some("scenario,node_id,route,sent,delivered,success_ratio,mean_delay_s")
        );
        assert_eq!(text.lines().count(), 1 + 30);
        assert!(text.lines().nth(1).unwrap().starts_with("initial,0,Direct → Hub "));

        let mut buf = Vec::new();
        write_convergence_csv(&mut buf, outcome.pipeline.as_ref().unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("stage,step,best_cost"));
        assert_eq!(text.lines().count(), 1 + 41 + 51);
        assert!(text.lines().nth(1).unwrap().starts_with("ga,0,"));
    }
}
