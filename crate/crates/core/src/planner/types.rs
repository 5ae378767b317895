use serde::{Deserialize, Serialize};

use crate::energy::{FlightMode, PlatformSpec, WingConfig};
use crate::format::FORMAT_VERSION;
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanEnd {
    A,
    B,
}

/// One span to fly along, end to end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionTask {
    pub task_id: String,
    pub span_id: String,
    /// Default entry end; the planner may enter from either.
    pub entry_end: SpanEnd,
    /// Conductor length, m.
    pub length: f64,
    pub requires_hover_detail: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Takeoff,
    Transit,
    Inspect,
    Land,
    Charge,
    ReturnHome,
}

/// A single straight-line (or stationary) piece of a route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    pub kind: ActionKind,
    pub start_point: Vec3,
    pub end_point: Vec3,
    /// Path length flown, m. Equal to the span length for inspections.
    pub distance: f64,
    /// Planned speed along the path, m/s.
    pub speed: f64,
    /// Commanded airspeed (vertical rate for climbs and descents), m/s.
    pub airspeed: f64,
    pub mode: FlightMode,
    pub wing: WingConfig,
    /// s
    pub duration: f64,
    /// Wh drawn from the battery; negative when charging.
    pub energy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_id: Option<String>,
    /// Inspection flown from `tower_b` towards `tower_a`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reversed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub station_id: Option<String>,
}

impl Action {
    /// Stationary action of fixed duration.
    pub(crate) fn hold(kind: ActionKind, at: Vec3, duration: f64, energy: f64) -> Self {
        Action {
            kind,
            start_point: at,
            end_point: at,
            distance: 0.0,
            speed: 0.0,
            airspeed: 0.0,
            mode: FlightMode::Hover,
            wing: WingConfig::Retracted,
            duration,
            energy,
            task_id: None,
            span_id: None,
            reversed: false,
            station_id: None,
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.start_point == self.end_point
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Route {
    pub platform_id: String,
    pub actions: Vec<Action>,
    /// End of the last inspection, s.
    pub completion_time: f64,
    /// End of the final landing at the GCS, s.
    pub mission_duration: f64,
}

impl Route {
    pub fn empty(platform_id: &str) -> Self {
        Route {
            platform_id: platform_id.to_string(),
            actions: Vec::new(),
            completion_time: 0.0,
            mission_duration: 0.0,
        }
    }

    pub fn recharge_count(&self) -> usize {
        self.actions
            .iter()
            .filter(|a| a.kind == ActionKind::Charge)
            .count()
    }

    pub fn inspected_tasks(&self) -> impl Iterator<Item = &str> {
        self.actions
            .iter()
            .filter(|a| a.kind == ActionKind::Inspect)
            .filter_map(|a| a.task_id.as_deref())
    }

    /// `(completion_time, mission_duration)` recomputed from the actions.
    pub fn timing(&self) -> (f64, f64) {
        let mut t = 0.0;
        let mut completion = 0.0;
        for action in &self.actions {
            t += action.duration;
            if action.kind == ActionKind::Inspect {
                completion = t;
            }
        }
        (completion, t)
    }

    /// Battery level after each action, starting from `capacity`.
    pub fn battery_trace(&self, capacity: f64) -> Vec<f64> {
        let mut level = capacity;
        self.actions
            .iter()
            .map(|a| {
                level -= a.energy;
                level
            })
            .collect()
    }

    /// Index of the first action that does not start where its predecessor
    /// ended.
    pub fn first_discontinuity(&self, tol: f64) -> Option<usize> {
        self.actions
            .windows(2)
            .position(|w| w[0].end_point.distance(w[1].start_point) > tol)
            .map(|i| i + 1)
    }
}

/// Stop condition for local search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Maximum number of improvement passes; each pass accepts at most one
    /// move.
    pub iterations: u64,
    /// Optional wall-clock cap. Runs that stop on this cap are not
    /// reproducible; ones that reach a local optimum first are.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
}

impl Budget {
    pub const fn iterations(n: u64) -> Self {
        Budget {
            iterations: n,
            wall_ms: None,
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::iterations(100_000)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    /// Drives the order in which local-search moves are scanned.
    pub seed: u64,
    pub budget: Budget,
    /// Height above the conductor at which spans are inspected, m.
    pub inspect_clearance: f64,
    /// Worker threads for move evaluation. Results do not depend on it.
    pub jobs: usize,
    /// Random restarts of the local search from the best plan found.
    #[serde(default = "default_kicks")]
    pub kicks: usize,
}

fn default_kicks() -> usize {
    DEFAULT_KICKS
}

pub const DEFAULT_KICKS: usize = 50;

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            seed: 0,
            budget: Budget::default(),
            inspect_clearance: 10.0,
            jobs: 1,
            kicks: DEFAULT_KICKS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub format_version: u32,
    pub grid_digest: String,
    pub seed: u64,
    pub config: PlannerConfig,
    pub config_digest: String,
    /// How the routes were obtained: `greedy`, `greedy+local_search` or
    /// `exact`.
    pub method: String,
    /// Local-search moves accepted.
    pub improvement_moves: u64,
    pub fleet: Vec<PlatformSpec>,
    pub routes: Vec<Route>,
    /// Latest inspection completion over all routes, s.
    pub makespan: f64,
    /// Latest return to the GCS, s.
    pub mission_duration: f64,
}

impl Plan {
    pub(crate) fn assemble(
        grid_digest: String,
        config: &PlannerConfig,
        method: &str,
        improvement_moves: u64,
        fleet: &[PlatformSpec],
        routes: Vec<Route>,
    ) -> Self {
        let makespan = plan_makespan_of(&routes);
        let mission_duration = routes
            .iter()
            .map(|r| r.mission_duration)
            .fold(0.0, f64::max);
        Plan {
            format_version: FORMAT_VERSION,
            grid_digest,
            seed: config.seed,
            config: config.clone(),
            config_digest: crate::format::digest(config),
            method: method.to_string(),
            improvement_moves,
            fleet: fleet.to_vec(),
            routes,
            makespan,
            mission_duration,
        }
    }

    pub fn platform(&self, id: &str) -> Option<&PlatformSpec> {
        self.fleet.iter().find(|p| p.id == id)
    }

    pub fn digest(&self) -> String {
        crate::format::digest(self)
    }
}

pub(crate) fn plan_makespan_of(routes: &[Route]) -> f64 {
    routes.iter().map(|r| r.completion_time).fold(0.0, f64::max)
}
