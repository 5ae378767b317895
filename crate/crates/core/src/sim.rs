//! Deterministic time-stepped replay of a plan.
//!
//! Each route is flown as a point mass: speeds change instantaneously at
//! action boundaries, ground speed comes from the scenario wind through the
//! wind triangle, and the battery is integrated step by step with the same
//! power model the planner used. The final step of every action is
//! shortened so actions end exactly on their boundary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{self, FlightMode, PlatformSpec, WingConfig};
use crate::format::{self, FormatError, FORMAT_VERSION};
use crate::geometry::{Vec2, Vec3};
use crate::grid::{GridModel, MAX_AGL};
use crate::planner::{ActionKind, Plan, Route};

/// Slack on regulatory and reserve comparisons, absorbing float noise.
pub const CHECK_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    MissingDiverter,
    ForeignObject,
    MissingChargingStation,
    VegetationEncroachment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anomaly {
    pub kind: AnomalyKind,
    pub span_id: String,
    /// Position along the span measured from `tower_a`.
    pub offset_fraction: f64,
    #[serde(default = "certain")]
    pub detect_probability: f64,
}

fn certain() -> f64 {
    1.0
}

fn default_time_step() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format_version: u32,
    pub wind: Vec2,
    #[serde(default)]
    pub anomalies: Vec<Anomaly>,
    pub rng_seed: u64,
    #[serde(default = "default_time_step")]
    pub time_step: f64,
    /// Chance that a visual-servoing landing must be retried once.
    #[serde(default)]
    pub landing_failure_probability: f64,
}

impl Scenario {
    pub fn calm(rng_seed: u64) -> Self {
        Scenario {
            format_version: FORMAT_VERSION,
            wind: Vec2::ZERO,
            anomalies: Vec::new(),
            rng_seed,
            time_step: default_time_step(),
            landing_failure_probability: 0.0,
        }
    }

    pub fn validate(&self, grid: &GridModel) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            errs.push(format!("time_step must be > 0 (got {})", self.time_step));
        }
        if !self.wind.is_finite() {
            errs.push("wind is not finite".into());
        }
        if !(0.0..=1.0).contains(&self.landing_failure_probability) {
            errs.push("landing_failure_probability must lie in [0, 1]".into());
        }
        for (i, a) in self.anomalies.iter().enumerate() {
            if grid.span(&a.span_id).is_none() {
                errs.push(format!("anomaly {i}: unknown span \"{}\"", a.span_id));
            }
            if !(0.0..=1.0).contains(&a.offset_fraction) {
                errs.push(format!("anomaly {i}: offset_fraction outside [0, 1]"));
            }
            if !(0.0..=1.0).contains(&a.detect_probability) {
                errs.push(format!("anomaly {i}: detect_probability outside [0, 1]"));
            }
        }
        errs
    }
}

pub fn read_scenario(path: &Path) -> Result<Scenario, FormatError> {
    format::read_json(path, "scenario")
}

pub fn write_scenario(scenario: &Scenario, path: &Path) -> Result<(), FormatError> {
    format::write_json(scenario, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSample {
    pub t: f64,
    pub position: Vec3,
    /// Wh
    pub battery: f64,
    pub mode: FlightMode,
    pub wing: WingConfig,
    pub airspeed: f64,
    /// Index of the action being flown.
    pub action: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformTrace {
    pub platform_id: String,
    pub samples: Vec<TraceSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    /// Index into the scenario's anomaly list.
    pub anomaly: usize,
    pub kind: AnomalyKind,
    pub span_id: String,
    pub offset_fraction: f64,
    pub time: f64,
    pub platform_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    AltitudeAboveLimit,
    RangeExceeded,
    BatteryBelowReserve,
    BelowStall,
    WindAboveLimit,
    OutsideTerrain,
    /// The wind triangle had no solution; the route was abandoned.
    WindExceedsAirspeed,
    /// The battery ran flat; the route was abandoned.
    BatteryDepleted,
}

/// A run of consecutive offending samples of one kind, or a one-off event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Violation {
    pub kind: ViolationKind,
    pub platform_id: String,
    pub time: f64,
    pub end_time: f64,
    /// Most offending observed value (m, Wh, or m/s depending on kind).
    pub worst: f64,
    pub limit: f64,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerEntry {
    pub platform_id: String,
    pub action: usize,
    pub kind: ActionKind,
    pub start_time: f64,
    pub duration: f64,
    pub distance: f64,
    /// Wh drawn.
    pub consumed: f64,
    /// Wh received from a charging station.
    pub charged: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryTotals {
    pub platform_id: String,
    pub capacity: f64,
    pub initial: f64,
    #[serde(rename = "final")]
    pub final_energy: f64,
    pub consumed: f64,
    pub charged: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimResult {
    pub format_version: u32,
    pub grid_digest: String,
    pub plan_digest: String,
    pub scenario_digest: String,
    pub wind: Vec2,
    pub rng_seed: u64,
    pub time_step: f64,
    /// Anomalies seeded in the scenario.
    pub anomaly_count: usize,
    pub measured_makespan: f64,
    pub mission_duration: f64,
    pub traces: Vec<PlatformTrace>,
    pub detections: Vec<Detection>,
    pub violations: Vec<Violation>,
    pub batteries: Vec<BatteryTotals>,
    pub energy_ledger: Vec<LedgerEntry>,
}

impl SimResult {
    pub fn digest(&self) -> String {
        format::digest(self)
    }
}

pub fn read_result(path: &Path) -> Result<SimResult, FormatError> {
    format::read_json(path, "result")
}

pub fn write_result(result: &SimResult, path: &Path) -> Result<(), FormatError> {
    format::write_json(result, path)
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("plan does not match grid: {0}")]
    PlanMismatch(String),
    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),
}

struct RouteOutcome {
    trace: PlatformTrace,
    detections: Vec<Detection>,
    events: Vec<Violation>,
    ledger: Vec<LedgerEntry>,
    totals: BatteryTotals,
    completion: f64,
    end: f64,
}

fn check_plan(plan: &Plan, grid: &GridModel) -> Result<(), SimError> {
    let digest = grid.digest();
    if plan.grid_digest != digest {
        return Err(SimError::PlanMismatch(format!(
            "plan was made for grid {}, got {}",
            plan.grid_digest, digest
        )));
    }
    for route in &plan.routes {
        if plan.platform(&route.platform_id).is_none() {
            return Err(SimError::PlanMismatch(format!(
                "route references unknown platform \"{}\"",
                route.platform_id
            )));
        }
        for (i, a) in route.actions.iter().enumerate() {
            if let Some(span) = &a.span_id {
                if grid.span(span).is_none() {
                    return Err(SimError::PlanMismatch(format!(
                        "{} action {i} references unknown span \"{span}\"",
                        route.platform_id
                    )));
                }
            }
            if let Some(station) = &a.station_id {
                if grid.station(station).is_none() {
                    return Err(SimError::PlanMismatch(format!(
                        "{} action {i} references unknown station \"{station}\"",
                        route.platform_id
                    )));
                }
            }
            if a.kind == ActionKind::Charge && a.station_id.is_none() {
                return Err(SimError::PlanMismatch(format!(
                    "{} action {i}: charge without a station",
                    route.platform_id
                )));
            }
        }
    }
    Ok(())
}

/// Flies every route of `plan` through `scenario`.
pub fn simulate(plan: &Plan, grid: &GridModel, scenario: &Scenario) -> Result<SimResult, SimError> {
    check_plan(plan, grid)?;
    let errs = scenario.validate(grid);
    if !errs.is_empty() {
        return Err(SimError::InvalidScenario(errs));
    }

    let outcomes: Vec<RouteOutcome> = plan
        .routes
        .iter()
        .enumerate()
        .map(|(index, route)| {
            let platform = plan.platform(&route.platform_id).expect("checked");
            fly_route(index, route, platform, grid, scenario)
        })
        .collect();

    let mut result = SimResult {
        format_version: FORMAT_VERSION,
        grid_digest: plan.grid_digest.clone(),
        plan_digest: plan.digest(),
        scenario_digest: format::digest(scenario),
        wind: scenario.wind,
        rng_seed: scenario.rng_seed,
        time_step: scenario.time_step,
        anomaly_count: scenario.anomalies.len(),
        measured_makespan: outcomes.iter().map(|o| o.completion).fold(0.0, f64::max),
        mission_duration: outcomes.iter().map(|o| o.end).fold(0.0, f64::max),
        traces: Vec::new(),
        detections: Vec::new(),
        violations: Vec::new(),
        batteries: Vec::new(),
        energy_ledger: Vec::new(),
    };
    let mut events = Vec::new();
    for o in outcomes {
        result.traces.push(o.trace);
        result.detections.extend(o.detections);
        events.extend(o.events);
        result.energy_ledger.extend(o.ledger);
        result.batteries.push(o.totals);
    }
    result
        .detections
        .sort_by(|a, b| a.time.total_cmp(&b.time).then(a.platform_id.cmp(&b.platform_id)));
    events.extend(check_constraints(&result, grid, &plan.fleet));
    sort_violations(&mut events);
    result.violations = events;
    Ok(result)
}

fn sort_violations(v: &mut [Violation]) {
    v.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then(a.platform_id.cmp(&b.platform_id))
            .then(a.kind.cmp(&b.kind))
    });
}

struct Flight {
    t: f64,
    battery: f64,
    samples: Vec<TraceSample>,
    consumed_total: f64,
    charged_total: f64,
}

impl Flight {
    fn sample(&mut self, position: Vec3, mode: FlightMode, wing: WingConfig, airspeed: f64, action: usize) {
        self.samples.push(TraceSample {
            t: self.t,
            position,
            battery: self.battery,
            mode,
            wing,
            airspeed,
            action,
        });
    }

    /// Draws `power` for `h` seconds; false if the battery ran flat.
    fn drain(&mut self, power: f64, h: f64, consumed: &mut f64) -> bool {
        let want = power * h / 3600.0;
        let take = want.min(self.battery);
        self.battery -= take;
        *consumed += take;
        self.consumed_total += take;
        self.t += h;
        take >= want
    }
}

fn fly_route(
    index: usize,
    route: &Route,
    platform: &PlatformSpec,
    grid: &GridModel,
    scenario: &Scenario,
) -> RouteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.rng_seed);
    rng.set_stream(index as u64);
    let dt = scenario.time_step;
    let id = &platform.id;
    let mut flight = Flight {
        t: 0.0,
        battery: platform.battery_capacity,
        samples: Vec::new(),
        consumed_total: 0.0,
        charged_total: 0.0,
    };
    let mut detections = Vec::new();
    let mut events = Vec::new();
    let mut ledger = Vec::new();
    let mut completion = 0.0;

    if let Some(first) = route.actions.first() {
        flight.sample(first.start_point, FlightMode::Hover, WingConfig::Retracted, 0.0, 0);
    }

    'actions: for (ai, action) in route.actions.iter().enumerate() {
        let start_time = flight.t;
        let mut consumed = 0.0;
        let mut charged = 0.0;
        let at = action.start_point;
        match action.kind {
            ActionKind::Takeoff | ActionKind::Land => {
                let mut duration = action.duration;
                if action.kind == ActionKind::Land
                    && scenario.landing_failure_probability > 0.0
                    && rng.gen::<f64>() < scenario.landing_failure_probability
                {
                    log::info!("{id}: landing at t={:.1} s retried", flight.t);
                    duration *= 2.0;
                }
                let mut left = duration;
                while left > 0.0 {
                    let h = left.min(dt);
                    left = if h < dt { 0.0 } else { left - h };
                    let ok = flight.drain(platform.hover_power, h, &mut consumed);
                    flight.sample(at, FlightMode::Hover, WingConfig::Retracted, 0.0, ai);
                    if !ok {
                        events.push(depleted(id, &flight, at));
                        break 'actions;
                    }
                }
            }
            ActionKind::Charge => {
                let station = action
                    .station_id
                    .as_deref()
                    .and_then(|s| grid.station(s))
                    .expect("checked by check_plan");
                let power = energy::harvest_power(station);
                if power > 0.0 {
                    let mut need = (platform.battery_capacity - flight.battery) * 3600.0 / power;
                    while need > 0.0 {
                        let h = need.min(dt);
                        need = if h < dt { 0.0 } else { need - h };
                        let gain = (power * h / 3600.0)
                            .min(platform.battery_capacity - flight.battery);
                        flight.battery += gain;
                        if need == 0.0 {
                            let topped = platform.battery_capacity - flight.battery;
                            flight.battery += topped;
                            charged += topped;
                            flight.charged_total += topped;
                        }
                        charged += gain;
                        flight.charged_total += gain;
                        flight.t += h;
                        flight.sample(at, FlightMode::Hover, WingConfig::Retracted, 0.0, ai);
                    }
                }
            }
            ActionKind::Transit | ActionKind::Inspect | ActionKind::ReturnHome => {
                if action.distance <= 0.0 {
                    continue;
                }
                let horizontal = action.end_point.xy() - action.start_point.xy();
                let speed = if horizontal.norm() > 1e-9 {
                    let unit = horizontal.normalized().expect("non-zero");
                    match energy::ground_speed_along_track(action.airspeed, unit, scenario.wind) {
                        Ok(s) => s,
                        Err(_) => {
                            events.push(Violation {
                                kind: ViolationKind::WindExceedsAirspeed,
                                platform_id: id.clone(),
                                time: flight.t,
                                end_time: flight.t,
                                worst: scenario.wind.norm(),
                                limit: action.airspeed,
                                position: at,
                            });
                            break 'actions;
                        }
                    }
                } else {
                    action.airspeed
                };
                let power = energy::power_draw(platform, action.airspeed, action.mode, action.wing)
                    .unwrap_or(match action.mode {
                        FlightMode::ForwardWing => platform.cruise_power,
                        _ => platform.hover_power,
                    });
                let passes = anomaly_crossings(action, scenario);
                let mut next_pass = 0;
                let mut s = 0.0;
                while s < action.distance {
                    let remaining = (action.distance - s) / speed;
                    let (h, s_new) = if remaining <= dt {
                        (remaining, action.distance)
                    } else {
                        (dt, s + speed * dt)
                    };
                    let t0 = flight.t;
                    while next_pass < passes.len() {
                        let (mark, anomaly) = passes[next_pass];
                        let inside = mark < s_new || (s_new == action.distance && mark <= s_new);
                        if mark < s || !inside {
                            break;
                        }
                        next_pass += 1;
                        let a = &scenario.anomalies[anomaly];
                        if rng.gen::<f64>() < a.detect_probability {
                            detections.push(Detection {
                                anomaly,
                                kind: a.kind,
                                span_id: a.span_id.clone(),
                                offset_fraction: a.offset_fraction,
                                time: t0 + (mark - s) / speed,
                                platform_id: id.clone(),
                            });
                        }
                    }
                    let ok = flight.drain(power, h, &mut consumed);
                    s = s_new;
                    let pos = action.start_point.lerp(action.end_point, s / action.distance);
                    flight.sample(pos, action.mode, action.wing, action.airspeed, ai);
                    if !ok {
                        events.push(depleted(id, &flight, pos));
                        break 'actions;
                    }
                }
                if action.kind == ActionKind::Inspect {
                    completion = flight.t;
                }
            }
        }
        ledger.push(LedgerEntry {
            platform_id: id.clone(),
            action: ai,
            kind: action.kind,
            start_time,
            duration: flight.t - start_time,
            distance: action.distance,
            consumed,
            charged,
        });
    }

    RouteOutcome {
        totals: BatteryTotals {
            platform_id: id.clone(),
            capacity: platform.battery_capacity,
            initial: platform.battery_capacity,
            final_energy: flight.battery,
            consumed: flight.consumed_total,
            charged: flight.charged_total,
        },
        end: flight.t,
        trace: PlatformTrace {
            platform_id: id.clone(),
            samples: flight.samples,
        },
        detections,
        events,
        ledger,
        completion,
    }
}

fn depleted(id: &str, flight: &Flight, at: Vec3) -> Violation {
    Violation {
        kind: ViolationKind::BatteryDepleted,
        platform_id: id.to_string(),
        time: flight.t,
        end_time: flight.t,
        worst: flight.battery,
        limit: 0.0,
        position: at,
    }
}

/// `(distance along the action, anomaly index)` for anomalies on the
/// inspected span, in flight order.
fn anomaly_crossings(action: &crate::planner::Action, scenario: &Scenario) -> Vec<(f64, usize)> {
    if action.kind != ActionKind::Inspect {
        return Vec::new();
    }
    let Some(span) = action.span_id.as_deref() else {
        return Vec::new();
    };
    let mut marks: Vec<(f64, usize)> = scenario
        .anomalies
        .iter()
        .enumerate()
        .filter(|(_, a)| a.span_id == span)
        .map(|(i, a)| {
            let along = if action.reversed {
                1.0 - a.offset_fraction
            } else {
                a.offset_fraction
            };
            (along * action.distance, i)
        })
        .collect();
    marks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    marks
}

/// Regulatory and safety checks over every recorded sample. Consecutive
/// offending samples of the same kind collapse into one violation.
pub fn check_constraints(
    result: &SimResult,
    grid: &GridModel,
    fleet: &[PlatformSpec],
) -> Vec<Violation> {
    let mut out = Vec::new();
    for trace in &result.traces {
        let Some(platform) = fleet.iter().find(|p| p.id == trace.platform_id) else {
            continue;
        };
        let mut open: Vec<Violation> = Vec::new();
        for sample in &trace.samples {
            let mut hits: Vec<(ViolationKind, f64, f64)> = Vec::new();
            match grid.ground(sample.position.xy()) {
                None => hits.push((ViolationKind::OutsideTerrain, 0.0, 0.0)),
                Some(ground) => {
                    let agl = sample.position.z - ground;
                    if agl > MAX_AGL + CHECK_EPS {
                        hits.push((ViolationKind::AltitudeAboveLimit, agl, MAX_AGL));
                    }
                }
            }
            let range = sample.position.xy().distance(grid.gcs.xy());
            if range > platform.range_limit() + CHECK_EPS {
                hits.push((ViolationKind::RangeExceeded, range, platform.range_limit()));
            }
            let reserve = platform.reserve_energy();
            if sample.battery < reserve - CHECK_EPS {
                hits.push((ViolationKind::BatteryBelowReserve, sample.battery, reserve));
            }
            if sample.mode == FlightMode::ForwardWing {
                if let Ok(stall) = energy::stall_speed(platform, sample.wing) {
                    if sample.airspeed < stall - CHECK_EPS {
                        hits.push((ViolationKind::BelowStall, sample.airspeed, stall));
                    }
                }
            }
            let wind = result.wind.norm();
            if wind > platform.max_wind + CHECK_EPS {
                hits.push((ViolationKind::WindAboveLimit, wind, platform.max_wind));
            }

            let mut still_open = Vec::new();
            for mut v in open.drain(..) {
                if let Some(&(_, value, _)) = hits.iter().find(|h| h.0 == v.kind) {
                    v.end_time = sample.t;
                    if is_worse(v.kind, value, v.worst) {
                        v.worst = value;
                        v.position = sample.position;
                    }
                    still_open.push(v);
                } else {
                    out.push(v);
                }
            }
            for (kind, value, limit) in hits {
                if !still_open.iter().any(|v| v.kind == kind) {
                    still_open.push(Violation {
                        kind,
                        platform_id: platform.id.clone(),
                        time: sample.t,
                        end_time: sample.t,
                        worst: value,
                        limit,
                        position: sample.position,
                    });
                }
            }
            open = still_open;
        }
        out.extend(open);
    }
    sort_violations(&mut out);
    out
}

fn is_worse(kind: ViolationKind, value: f64, current: f64) -> bool {
    match kind {
        ViolationKind::BatteryBelowReserve | ViolationKind::BelowStall => value < current,
        _ => value > current,
    }
}

/// Constraint violations of a stored result: fresh sample checks plus the
/// runtime events recorded during simulation.
pub fn verify(result: &SimResult, grid: &GridModel, fleet: &[PlatformSpec]) -> Vec<Violation> {
    let mut all: Vec<Violation> = result
        .violations
        .iter()
        .filter(|v| {
            matches!(
                v.kind,
                ViolationKind::WindExceedsAirspeed | ViolationKind::BatteryDepleted
            )
        })
        .cloned()
        .collect();
    all.extend(check_constraints(result, grid, fleet));
    sort_violations(&mut all);
    all
}

/// Writes `t,platform,x,y,z,wh` rows for external plotting.
pub fn write_trace_csv(result: &SimResult, path: &Path) -> Result<(), FormatError> {
    let mut out = String::from("t,platform,x,y,z,wh\n");
    for trace in &result.traces {
        for s in &trace.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.t, trace.platform_id, s.position.x, s.position.y, s.position.z, s.battery
            );
        }
    }
    fs::write(path, out).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}
