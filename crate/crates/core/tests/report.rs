mod common;

use common::*;
use gridsweep::energy::load_fleet;
use gridsweep::grid::load_grid;
use gridsweep::planner::{generate_tasks, plan_mission, PlannerConfig};
use gridsweep::report::{build_report, read_mission_report, write_mission_report, ReportError};
use gridsweep::sim::{self, AnomalyKind, Scenario};

fn atlas_run() -> (gridsweep::planner::Plan, gridsweep::grid::GridModel, gridsweep::sim::SimResult) {
    let grid = load_grid(&fixture("atlas_grid.json")).unwrap();
    let fleet = load_fleet(&fixture("atlas_fleet.json")).unwrap();
    let tasks = generate_tasks(&grid);
    let plan = plan_mission(&tasks, &fleet.platforms, &grid, &PlannerConfig::default()).unwrap();
    let scenario = sim::read_scenario(&fixture("atlas_scenario.json")).unwrap();
    let result = sim::simulate(&plan, &grid, &scenario).unwrap();
    (plan, grid, result)
}

#[test]
fn foreign_object_appears_in_findings() {
    let grid = load_grid(&fixture("minimal_grid.json")).unwrap();
    let fleet = load_fleet(&fixture("minimal_fleet.json")).unwrap();
    let tasks = generate_tasks(&grid);
    let plan = plan_mission(&tasks, &fleet.platforms, &grid, &PlannerConfig::default()).unwrap();
    let scenario = Scenario {
        anomalies: vec![sim::Anomaly {
            kind: AnomalyKind::ForeignObject,
            span_id: "BC".into(),
            offset_fraction: 0.6,
            detect_probability: 1.0,
        }],
        ..Scenario::calm(5)
    };
    let result = sim::simulate(&plan, &grid, &scenario).unwrap();
    let report = build_report(&result, &plan, &grid).unwrap();
    assert_eq!(report.findings.len(), 1);
    let f = &report.findings[0];
    assert_eq!(f.kind, AnomalyKind::ForeignObject);
    assert_eq!(f.span_id, "BC");
    assert_eq!(f.offset_fraction, 0.6);
    assert_eq!(f.platform_id, "quad");
}

#[test]
fn clean_run_has_nothing_to_report() {
    let grid = load_grid(&fixture("minimal_grid.json")).unwrap();
    let fleet = load_fleet(&fixture("minimal_fleet.json")).unwrap();
    let tasks = generate_tasks(&grid);
    let plan = plan_mission(&tasks, &fleet.platforms, &grid, &PlannerConfig::default()).unwrap();
    let result = sim::simulate(&plan, &grid, &Scenario::calm(5)).unwrap();
    let report = build_report(&result, &plan, &grid).unwrap();
    assert!(report.findings.is_empty());
    assert!(report.violations.is_empty());
    assert_eq!(report.platforms.len(), 1);
    let stats = &report.platforms[0];
    assert_eq!(stats.spans_inspected, 2);
    assert_eq!(stats.recharge_count, 0);
    assert!(stats.distance > 0.0 && stats.flight_time > 0.0 && stats.energy_consumed > 0.0);
    assert!((stats.flight_time - result.mission_duration).abs() < 1e-9);
}

#[test]
fn atlas_report_is_consistent_and_stable() {
    let (plan, grid, result) = atlas_run();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let report = write_mission_report(&result, &plan, &grid, &a).unwrap();
    write_mission_report(&result, &plan, &grid, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(read_mission_report(&a).unwrap(), report);

    assert!(report.findings.len() <= result.anomaly_count);
    assert!(report.findings.iter().any(|f| f.kind == AnomalyKind::ForeignObject));
    assert_eq!(report.grid_digest, grid.digest());
    assert_eq!(report.plan_digest, plan.digest());
    assert_eq!(report.result_digest, result.digest());
    assert_eq!(report.planned_makespan, plan.makespan);
    for s in &report.platforms {
        assert!(s.distance >= 0.0 && s.flight_time >= 0.0 && s.energy_consumed >= 0.0);
    }
    let inspected: usize = report.platforms.iter().map(|s| s.spans_inspected).sum();
    assert_eq!(inspected, grid.spans.len());
}

#[test]
fn mismatched_inputs_are_refused() {
    let (plan, grid, result) = atlas_run();
    let mut other = grid.clone();
    other.stations.clear();
    assert!(matches!(
        build_report(&result, &plan, &other),
        Err(ReportError::DigestMismatch { what: "grid", .. })
    ));
    let mut edited = plan.clone();
    edited.seed += 1;
    assert!(matches!(
        build_report(&result, &edited, &grid),
        Err(ReportError::DigestMismatch { what: "plan", .. })
    ));
}
