//! Precomputed leg tables and the recharge-aware route scheduler shared by
//! the constructive heuristic, local search and the exact oracle.

use crate::energy::{
    self, BatteryState, EnergyError, FlightMode, PlatformKind, PlatformSpec, WingConfig,
};
use crate::geometry::Vec3;
use crate::grid::{self, GridModel, MAX_AGL};

use super::types::{Action, ActionKind, InspectionTask, PlannerConfig, Route};
use super::PlanError;

/// Horizontal displacement below which a leg counts as purely vertical.
const VERTICAL_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct Leg {
    pub duration: f64,
    pub energy: f64,
    pub actions: Vec<Action>,
}

impl Leg {
    fn empty() -> Self {
        Leg {
            duration: 0.0,
            energy: 0.0,
            actions: Vec::new(),
        }
    }

    fn push(&mut self, action: Action) {
        self.duration += action.duration;
        self.energy += action.energy;
        self.actions.push(action);
    }
}

/// Mode and wing setting used for transit legs.
pub(crate) fn transit_profile(p: &PlatformSpec) -> (FlightMode, WingConfig) {
    match p.kind {
        PlatformKind::Multirotor => (FlightMode::ForwardVtol, WingConfig::Retracted),
        PlatformKind::FixedWingVtol => (FlightMode::ForwardWing, WingConfig::Retracted),
        PlatformKind::MorphingVtol => {
            // Whichever of wing-borne cruise and rotor-borne flight with the
            // wings extended draws less at cruise airspeed.
            let wing = energy::power_draw(
                p,
                p.v_cruise,
                FlightMode::ForwardWing,
                WingConfig::Retracted,
            );
            let rotor = energy::power_draw(
                p,
                p.v_cruise,
                FlightMode::ForwardVtol,
                WingConfig::Extended,
            );
            match (wing, rotor) {
                (Ok(w), Ok(r)) if r < w => (FlightMode::ForwardVtol, WingConfig::Extended),
                (Ok(_), _) => (FlightMode::ForwardWing, WingConfig::Retracted),
                _ => (FlightMode::ForwardVtol, WingConfig::Extended),
            }
        }
    }
}

/// Mode and wing setting for inspecting a span, or `None` if the platform
/// cannot serve it.
pub(crate) fn inspect_profile(
    p: &PlatformSpec,
    hover_detail: bool,
) -> Option<(FlightMode, WingConfig)> {
    match (p.kind, hover_detail) {
        (PlatformKind::Multirotor, _) => Some((FlightMode::ForwardVtol, WingConfig::Retracted)),
        (PlatformKind::FixedWingVtol, true) => None,
        (PlatformKind::FixedWingVtol, false) => {
            Some((FlightMode::ForwardWing, WingConfig::Retracted))
        }
        (PlatformKind::MorphingVtol, true) => {
            Some((FlightMode::ForwardVtol, WingConfig::Retracted))
        }
        (PlatformKind::MorphingVtol, false) => {
            Some((FlightMode::ForwardWing, WingConfig::Extended))
        }
    }
}

fn vertical(p: &PlatformSpec, kind: ActionKind, from: Vec3, to: Vec3) -> Action {
    let dz = (to.z - from.z).abs();
    let duration = dz / p.v_vertical;
    Action {
        kind,
        start_point: from,
        end_point: to,
        distance: dz,
        speed: p.v_vertical,
        airspeed: p.v_vertical,
        mode: FlightMode::Hover,
        wing: WingConfig::Retracted,
        duration,
        energy: p.hover_power * duration / 3600.0,
        task_id: None,
        span_id: None,
        reversed: false,
        station_id: None,
    }
}

/// Climb, level cruise at a terrain-safe altitude, descend.
pub(crate) fn build_transit(
    grid: &GridModel,
    p: &PlatformSpec,
    from: Vec3,
    to: Vec3,
    kind: ActionKind,
) -> Result<Leg, PlanError> {
    let mut leg = Leg::empty();
    if from == to {
        return Ok(leg);
    }
    let track = to.xy() - from.xy();
    let Some(unit) = track.normalized().filter(|_| track.norm() > VERTICAL_EPS) else {
        leg.push(vertical(p, kind, from, to));
        return Ok(leg);
    };
    let profile = grid::terrain_profile(from.xy(), to.xy(), grid)?;
    let safe = grid::safe_transit_altitude(from.xy(), to.xy(), grid, p.transit_buffer)?;
    let cruise_z = safe.max(from.z).max(to.z);
    grid::check_ceiling(&profile, cruise_z)?;

    let top_from = from.xy().with_z(cruise_z);
    let top_to = to.xy().with_z(cruise_z);
    if cruise_z > from.z {
        leg.push(vertical(p, kind, from, top_from));
    }
    let (mode, wing) = transit_profile(p);
    let speed = energy::ground_speed_along_track(p.v_cruise, unit, grid.wind)?;
    let distance = track.norm();
    let duration = distance / speed;
    leg.push(Action {
        kind,
        start_point: top_from,
        end_point: top_to,
        distance,
        speed,
        airspeed: p.v_cruise,
        mode,
        wing,
        duration,
        energy: energy::leg_energy(p, mode, wing, p.v_cruise, duration)?,
        task_id: None,
        span_id: None,
        reversed: false,
        station_id: None,
    });
    if cruise_z > to.z {
        leg.push(vertical(p, kind, top_to, to));
    }
    Ok(leg)
}

fn build_inspect(
    grid: &GridModel,
    p: &PlatformSpec,
    task: &InspectionTask,
    entry: Vec3,
    exit: Vec3,
    reversed: bool,
) -> Result<Option<Leg>, EnergyError> {
    let Some((mode, wing)) = inspect_profile(p, task.requires_hover_detail) else {
        return Ok(None);
    };
    let Some(unit) = (exit.xy() - entry.xy()).normalized() else {
        return Ok(None);
    };
    let speed = energy::ground_speed_along_track(p.v_inspect, unit, grid.wind)?;
    let duration = task.length / speed;
    let mut leg = Leg::empty();
    leg.push(Action {
        kind: ActionKind::Inspect,
        start_point: entry,
        end_point: exit,
        distance: task.length,
        speed,
        airspeed: p.v_inspect,
        mode,
        wing,
        duration,
        energy: energy::leg_energy(p, mode, wing, p.v_inspect, duration)?,
        task_id: Some(task.task_id.clone()),
        span_id: Some(task.span_id.clone()),
        reversed,
        station_id: None,
    });
    Ok(Some(leg))
}

/// Whether flying the straight line `a -> b` stays over the raster and
/// under the AGL ceiling.
fn path_under_ceiling(grid: &GridModel, a: Vec3, b: Vec3) -> bool {
    let samples = grid::segment_samples(a.xy(), b.xy(), grid.terrain.cell_size);
    let horizontal = a.xy().distance(b.xy());
    samples.into_iter().all(|s| {
        let t = if horizontal > 0.0 {
            a.xy().distance(s) / horizontal
        } else {
            0.0
        };
        let z = a.z + (b.z - a.z) * t;
        grid.ground(s).is_some_and(|g| z - g <= MAX_AGL + 1e-9)
    })
}

/// One span traversal in a route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct Visit {
    pub task: usize,
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Stop {
    Visit(Visit),
    Charge {
        station: usize,
        gained: f64,
        charge_time: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Schedule {
    pub stops: Vec<Stop>,
    /// End of the last inspection.
    pub completion: f64,
    pub mission_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ScheduleError {
    /// The platform cannot fly this task at all.
    Incompatible { task: usize },
    /// Battery would cross the reserve before `task` and no station is in
    /// reach.
    NoReachableStation { task: Option<usize> },
    /// Even a full charge at the closest station is not enough.
    Unreachable { task: Option<usize> },
}

struct PlatformTables {
    /// Row-major `n_nodes x n_nodes`.
    transit: Vec<Option<Leg>>,
    /// Per task, `[forward, reversed]`.
    inspect: Vec<[Option<Leg>; 2]>,
    /// Indices into `Context::stations` this platform may land on.
    stations: Vec<usize>,
    takeoff_energy: f64,
    land_energy: f64,
    home_energy: Vec<f64>,
    escape_energy: Vec<f64>,
}

pub(crate) struct StationNode {
    pub grid_index: usize,
    pub node: usize,
    pub harvest: f64,
}

/// Everything needed to evaluate a visit sequence in O(length).
pub(crate) struct Context<'a> {
    pub grid: &'a GridModel,
    pub tasks: Vec<InspectionTask>,
    pub platforms: Vec<PlatformSpec>,
    nodes: Vec<Vec3>,
    pub stations: Vec<StationNode>,
    tables: Vec<PlatformTables>,
}

const GCS: usize = 0;

impl<'a> Context<'a> {
    pub fn new(
        grid: &'a GridModel,
        tasks: Vec<InspectionTask>,
        platforms: Vec<PlatformSpec>,
        config: &PlannerConfig,
    ) -> Result<Self, PlanError> {
        let mut nodes = vec![grid.gcs];
        let mut path_ok = Vec::with_capacity(tasks.len());
        for task in &tasks {
            let span = grid
                .span(&task.span_id)
                .ok_or_else(|| PlanError::UnknownSpan(task.span_id.clone()))?;
            let (a, b) = grid.attachment_points(span)?;
            let lift = Vec3::new(0.0, 0.0, config.inspect_clearance);
            let (a, b) = (a + lift, b + lift);
            path_ok.push(path_under_ceiling(grid, a, b));
            nodes.push(a);
            nodes.push(b);
        }
        let mut stations = Vec::new();
        for (grid_index, station) in grid.stations.iter().enumerate() {
            stations.push(StationNode {
                grid_index,
                node: nodes.len(),
                harvest: energy::harvest_power(station),
            });
            nodes.push(grid.station_position(station)?);
        }

        let n = nodes.len();
        let mut tables = Vec::with_capacity(platforms.len());
        for p in &platforms {
            let usable = grid.wind.norm() <= p.max_wind && grid.wind.norm() < p.v_cruise;
            let in_range: Vec<bool> = nodes
                .iter()
                .map(|v| usable && v.xy().distance(grid.gcs.xy()) <= p.range_limit() + 1e-9)
                .collect();
            let mut transit = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let leg = if in_range[i] && in_range[j] {
                        build_transit(grid, p, nodes[i], nodes[j], ActionKind::Transit).ok()
                    } else {
                        None
                    };
                    transit.push(leg);
                }
            }
            let mut inspect = Vec::with_capacity(tasks.len());
            for (t, task) in tasks.iter().enumerate() {
                let (a, b) = (1 + 2 * t, 2 + 2 * t);
                let ok = usable && path_ok[t] && in_range[a] && in_range[b];
                let leg = |entry: usize, exit: usize, reversed: bool| {
                    if !ok {
                        return None;
                    }
                    build_inspect(grid, p, task, nodes[entry], nodes[exit], reversed)
                        .ok()
                        .flatten()
                };
                inspect.push([leg(a, b, false), leg(b, a, true)]);
            }
            let usable_stations: Vec<usize> = stations
                .iter()
                .enumerate()
                .filter(|(_, s)| in_range[s.node] && s.harvest > 0.0)
                .map(|(k, _)| k)
                .collect();
            let takeoff_energy = p.hover_power * p.takeoff_duration / 3600.0;
            let land_energy = p.hover_power * p.landing_duration / 3600.0;
            let leg_e = |i: usize, j: usize| {
                transit[i * n + j]
                    .as_ref()
                    .map_or(f64::INFINITY, |l| l.energy)
            };
            let home_energy = (0..n).map(|i| leg_e(i, GCS) + land_energy).collect();
            let escape_energy = (0..n)
                .map(|i| {
                    usable_stations
                        .iter()
                        .map(|&k| leg_e(i, stations[k].node) + land_energy)
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            tables.push(PlatformTables {
                transit,
                inspect,
                stations: usable_stations,
                takeoff_energy,
                land_energy,
                home_energy,
                escape_energy,
            });
        }
        Ok(Context {
            grid,
            tasks,
            platforms,
            nodes,
            stations,
            tables,
        })
    }

    /// Whether `platform` can fly `task` in at least one direction.
    pub fn compatible(&self, platform: usize, task: usize) -> bool {
        self.tables[platform].inspect[task]
            .iter()
            .any(Option::is_some)
    }

    fn transit(&self, platform: usize, from: usize, to: usize) -> Option<&Leg> {
        self.tables[platform].transit[from * self.nodes.len() + to].as_ref()
    }

    fn entry_exit(v: Visit) -> (usize, usize) {
        let a = 1 + 2 * v.task;
        if v.reversed {
            (a + 1, a)
        } else {
            (a, a + 1)
        }
    }

    /// Times the visit sequence for `platform`, inserting a charge stop
    /// right before the first visit that would otherwise leave the battery
    /// unable to either finish the route or reach a station.
    pub fn schedule(&self, platform: usize, visits: &[Visit]) -> Result<Schedule, ScheduleError> {
        let tables = &self.tables[platform];
        let p = &self.platforms[platform];
        if visits.is_empty() {
            return Ok(Schedule {
                stops: Vec::new(),
                completion: 0.0,
                mission_end: 0.0,
            });
        }
        let inspect = |v: Visit| tables.inspect[v.task][v.reversed as usize].as_ref();
        for v in visits {
            if inspect(*v).is_none() {
                return Err(ScheduleError::Incompatible { task: v.task });
            }
        }
        let leg_cost = |from: usize, to: usize| {
            self.transit(platform, from, to)
                .map_or((f64::INFINITY, f64::INFINITY), |l| (l.duration, l.energy))
        };

        let capacity = p.battery_capacity;
        let reserve = p.reserve_energy();
        let n = visits.len();

        // Energy from the exit of visit k to touchdown at the GCS without
        // charging.
        let mut suffix = vec![0.0; n];
        let (_, last_exit) = Self::entry_exit(visits[n - 1]);
        suffix[n - 1] = tables.home_energy[last_exit];
        for k in (0..n - 1).rev() {
            let (_, exit) = Self::entry_exit(visits[k]);
            let (next_entry, _) = Self::entry_exit(visits[k + 1]);
            let next = inspect(visits[k + 1]).expect("checked above");
            suffix[k] = leg_cost(exit, next_entry).1 + next.energy + suffix[k + 1];
        }

        let mut stops = Vec::with_capacity(n + 1);
        let mut time = p.takeoff_duration;
        let mut battery = capacity - tables.takeoff_energy;
        if battery < reserve {
            return Err(ScheduleError::Unreachable {
                task: Some(visits[0].task),
            });
        }
        let mut pos = GCS;
        let mut completion = 0.0;

        for (k, &visit) in visits.iter().enumerate() {
            let (entry, exit) = Self::entry_exit(visit);
            let insp = inspect(visit).expect("checked above");
            let mut charged_here = false;
            loop {
                let (d, e) = leg_cost(pos, entry);
                let after = battery - e - insp.energy;
                let feasible = after >= reserve
                    && (after - suffix[k] >= reserve
                        || after - tables.escape_energy[exit] >= reserve);
                if feasible {
                    time += d + insp.duration;
                    battery = after;
                    completion = time;
                    pos = exit;
                    stops.push(Stop::Visit(visit));
                    break;
                }
                if charged_here {
                    return Err(ScheduleError::Unreachable {
                        task: Some(visit.task),
                    });
                }
                let stop = self
                    .charge_at_nearest(platform, pos, &mut time, &mut battery)
                    .ok_or(ScheduleError::NoReachableStation {
                        task: Some(visit.task),
                    })?;
                pos = self.stations[stop_station(&stop)].node;
                stops.push(stop);
                charged_here = true;
            }
        }

        if battery - tables.home_energy[pos] < reserve {
            let stop = self
                .charge_at_nearest(platform, pos, &mut time, &mut battery)
                .ok_or(ScheduleError::NoReachableStation { task: None })?;
            pos = self.stations[stop_station(&stop)].node;
            stops.push(stop);
            if battery - tables.home_energy[pos] < reserve {
                return Err(ScheduleError::Unreachable { task: None });
            }
        }
        time += leg_cost(pos, GCS).0 + p.landing_duration;
        Ok(Schedule {
            stops,
            completion,
            mission_end: time,
        })
    }

    fn charge_at_nearest(
        &self,
        platform: usize,
        pos: usize,
        time: &mut f64,
        battery: &mut f64,
    ) -> Option<Stop> {
        let tables = &self.tables[platform];
        let p = &self.platforms[platform];
        let reserve = p.reserve_energy();
        let (k, leg) = tables
            .stations
            .iter()
            .filter_map(|&k| {
                let leg = self.transit(platform, pos, self.stations[k].node)?;
                (*battery - leg.energy - tables.land_energy >= reserve).then_some((k, leg))
            })
            .min_by(|a, b| a.1.duration.total_cmp(&b.1.duration))?;
        let landed = *battery - leg.energy - tables.land_energy;
        let station = &self.grid.stations[self.stations[k].grid_index];
        let charge_time = energy::pure_charge_time(
            BatteryState {
                energy: landed,
                capacity: p.battery_capacity,
            },
            p.battery_capacity,
            station,
        )
        .ok()?;
        *time += leg.duration + p.landing_duration + charge_time + p.takeoff_duration;
        *battery = p.battery_capacity - tables.takeoff_energy;
        Some(Stop::Charge {
            station: k,
            gained: p.battery_capacity - landed,
            charge_time,
        })
    }

    /// Expands a schedule into concrete actions.
    pub fn materialize(&self, platform: usize, schedule: &Schedule) -> Route {
        let p = &self.platforms[platform];
        let tables = &self.tables[platform];
        let mut route = Route::empty(&p.id);
        if schedule.stops.is_empty() {
            return route;
        }
        let gcs = self.nodes[GCS];
        let actions = &mut route.actions;
        actions.push(Action::hold(
            ActionKind::Takeoff,
            gcs,
            p.takeoff_duration,
            tables.takeoff_energy,
        ));
        let mut pos = GCS;
        for stop in &schedule.stops {
            match stop {
                Stop::Visit(v) => {
                    let (entry, exit) = Self::entry_exit(*v);
                    actions.extend(self.transit_actions(platform, pos, entry, ActionKind::Transit));
                    let insp = tables.inspect[v.task][v.reversed as usize]
                        .as_ref()
                        .expect("scheduled visits are compatible");
                    actions.extend(insp.actions.iter().cloned());
                    pos = exit;
                }
                Stop::Charge {
                    station,
                    gained,
                    charge_time,
                } => {
                    let node = self.stations[*station].node;
                    let id = self.grid.stations[self.stations[*station].grid_index].id.clone();
                    actions.extend(self.transit_actions(platform, pos, node, ActionKind::Transit));
                    let at = self.nodes[node];
                    let mut land =
                        Action::hold(ActionKind::Land, at, p.landing_duration, tables.land_energy);
                    land.station_id = Some(id.clone());
                    let mut charge = Action::hold(ActionKind::Charge, at, *charge_time, -gained);
                    charge.station_id = Some(id.clone());
                    charge.mode = FlightMode::Hover;
                    let mut takeoff = Action::hold(
                        ActionKind::Takeoff,
                        at,
                        p.takeoff_duration,
                        tables.takeoff_energy,
                    );
                    takeoff.station_id = Some(id);
                    actions.extend([land, charge, takeoff]);
                    pos = node;
                }
            }
        }
        actions.extend(self.transit_actions(platform, pos, GCS, ActionKind::ReturnHome));
        actions.push(Action::hold(
            ActionKind::Land,
            gcs,
            p.landing_duration,
            tables.land_energy,
        ));
        let (completion, end) = route.timing();
        route.completion_time = completion;
        route.mission_duration = end;
        route
    }

    fn transit_actions(
        &self,
        platform: usize,
        from: usize,
        to: usize,
        kind: ActionKind,
    ) -> Vec<Action> {
        let leg = self
            .transit(platform, from, to)
            .expect("scheduled legs are feasible");
        leg.actions
            .iter()
            .cloned()
            .map(|mut a| {
                a.kind = kind;
                a
            })
            .collect()
    }
}

fn stop_station(stop: &Stop) -> usize {
    match stop {
        Stop::Charge { station, .. } => *station,
        Stop::Visit(_) => unreachable!("charge_at_nearest returns charge stops"),
    }
}
