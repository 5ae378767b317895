//! Mission reports: findings and per-platform statistics derived from a
//! simulation result, bound to their inputs by content digest.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::format::{self, FormatError, FORMAT_VERSION};
use crate::grid::GridModel;
use crate::planner::{ActionKind, Plan};
use crate::sim::{AnomalyKind, SimResult, Violation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Finding {
    pub anomaly: usize,
    pub kind: AnomalyKind,
    pub span_id: String,
    pub offset_fraction: f64,
    /// First detection.
    pub time: f64,
    pub platform_id: String,
    /// Number of passes that detected it.
    pub detections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformStats {
    pub platform_id: String,
    /// m
    pub distance: f64,
    /// s, excluding time parked on a charging station.
    pub flight_time: f64,
    /// Wh
    pub energy_consumed: f64,
    pub energy_charged: f64,
    pub recharge_count: usize,
    pub spans_inspected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionReport {
    pub format_version: u32,
    pub mission_id: String,
    pub grid_digest: String,
    pub plan_digest: String,
    pub result_digest: String,
    pub rng_seed: u64,
    pub tool_version: String,
    pub anomalies_seeded: usize,
    pub findings: Vec<Finding>,
    pub platforms: Vec<PlatformStats>,
    pub planned_makespan: f64,
    pub measured_makespan: f64,
    pub mission_duration: f64,
    pub violations: Vec<Violation>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{what} digest mismatch: expected {expected}, found {found}")]
    DigestMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
}

fn expect(what: &'static str, expected: &str, found: &str) -> Result<(), ReportError> {
    if expected == found {
        Ok(())
    } else {
        Err(ReportError::DigestMismatch {
            what,
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }
}

/// Builds the report, refusing inputs that do not belong together.
pub fn build_report(
    result: &SimResult,
    plan: &Plan,
    grid: &GridModel,
) -> Result<MissionReport, ReportError> {
    let grid_digest = grid.digest();
    let plan_digest = plan.digest();
    expect("grid", &plan.grid_digest, &grid_digest)?;
    expect("grid", &result.grid_digest, &grid_digest)?;
    expect("plan", &result.plan_digest, &plan_digest)?;
    let result_digest = result.digest();

    let mut findings: BTreeMap<usize, Finding> = BTreeMap::new();
    for d in &result.detections {
        findings
            .entry(d.anomaly)
            .and_modify(|f| {
                f.detections += 1;
                if d.time < f.time {
                    f.time = d.time;
                    f.platform_id = d.platform_id.clone();
                }
            })
            .or_insert_with(|| Finding {
                anomaly: d.anomaly,
                kind: d.kind,
                span_id: d.span_id.clone(),
                offset_fraction: d.offset_fraction,
                time: d.time,
                platform_id: d.platform_id.clone(),
                detections: 1,
            });
    }
    let mut findings: Vec<Finding> = findings.into_values().collect();
    findings.sort_by(|a, b| {
        a.span_id
            .cmp(&b.span_id)
            .then(a.offset_fraction.total_cmp(&b.offset_fraction))
            .then(a.anomaly.cmp(&b.anomaly))
    });

    let platforms = plan
        .routes
        .iter()
        .map(|route| {
            let entries = result
                .energy_ledger
                .iter()
                .filter(|e| e.platform_id == route.platform_id);
            let mut stats = PlatformStats {
                platform_id: route.platform_id.clone(),
                distance: 0.0,
                flight_time: 0.0,
                energy_consumed: 0.0,
                energy_charged: 0.0,
                recharge_count: 0,
                spans_inspected: 0,
            };
            for e in entries {
                stats.distance += e.distance;
                stats.energy_consumed += e.consumed;
                stats.energy_charged += e.charged;
                match e.kind {
                    ActionKind::Charge => stats.recharge_count += 1,
                    ActionKind::Inspect => {
                        stats.spans_inspected += 1;
                        stats.flight_time += e.duration;
                    }
                    _ => stats.flight_time += e.duration,
                }
            }
            stats
        })
        .collect();

    let mission_id = format::digest(&[&grid_digest, &plan_digest, &result_digest])[..16].to_string();
    Ok(MissionReport {
        format_version: FORMAT_VERSION,
        mission_id,
        grid_digest,
        plan_digest,
        result_digest,
        rng_seed: result.rng_seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        anomalies_seeded: result.anomaly_count,
        findings,
        platforms,
        planned_makespan: plan.makespan,
        measured_makespan: result.measured_makespan,
        mission_duration: result.mission_duration,
        violations: result.violations.clone(),
    })
}

/// Builds the report and writes it to `path`.
pub fn write_mission_report(
    result: &SimResult,
    plan: &Plan,
    grid: &GridModel,
    path: &Path,
) -> Result<MissionReport, ReportError> {
    let report = build_report(result, plan, grid)?;
    format::write_json(&report, path)?;
    Ok(report)
}

pub fn read_mission_report(path: &Path) -> Result<MissionReport, FormatError> {
    format::read_json(path, "report")
}
