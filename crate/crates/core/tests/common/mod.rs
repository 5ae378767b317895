#![allow(dead_code)]

use std::path::PathBuf;

use gridsweep::energy::{PlatformKind, PlatformSpec};
use gridsweep::geometry::{Vec2, Vec3};
use gridsweep::grid::{ChargingStation, GridModel, HarvestMode, Span, TerrainRaster, Tower};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn multirotor(id: &str) -> PlatformSpec {
    PlatformSpec {
        id: id.into(),
        kind: PlatformKind::Multirotor,
        mass: 4.8,
        battery_capacity: 350.0,
        reserve_fraction: 0.2,
        hover_power: 600.0,
        parasite_coeff: 0.03,
        cruise_power: 0.0,
        v_inspect: 10.0,
        v_cruise: 16.0,
        v_vertical: 3.0,
        v_stall_base: 0.0,
        wing_surface_base: 0.0,
        wing_surface_extended: 0.0,
        extended_drag_factor: 0.85,
        max_wind: 12.0,
        range_limit_from_gcs: None,
        landing_duration: 20.0,
        takeoff_duration: 10.0,
        transit_buffer: 30.0,
    }
}

pub fn fixed_wing(id: &str) -> PlatformSpec {
    PlatformSpec {
        kind: PlatformKind::FixedWingVtol,
        battery_capacity: 600.0,
        hover_power: 1400.0,
        parasite_coeff: 0.02,
        cruise_power: 260.0,
        v_inspect: 18.0,
        v_cruise: 20.0,
        v_stall_base: 13.3,
        wing_surface_base: 0.527,
        wing_surface_extended: 0.527,
        transit_buffer: 50.0,
        ..multirotor(id)
    }
}

/// Flat raster over `[-half, half]^2` at elevation `z`.
pub fn flat_grid(half: f64, z: f64) -> GridModel {
    let terrain = TerrainRaster::flat(Vec2::new(-half, -half), Vec2::new(half, half), 100.0, z);
    GridModel::new(terrain, Vec3::new(0.0, 0.0, z))
}

pub fn add_span(grid: &mut GridModel, id: &str, a: Vec2, b: Vec2) {
    let ground = |p: Vec2| grid.ground(p).expect("tower inside raster");
    let (za, zb) = (ground(a), ground(b));
    grid.towers.push(Tower {
        id: format!("{id}-a"),
        position: a.with_z(za),
        height: 25.0,
        hover_detail: false,
    });
    grid.towers.push(Tower {
        id: format!("{id}-b"),
        position: b.with_z(zb),
        height: 25.0,
        hover_detail: false,
    });
    grid.spans.push(Span {
        id: id.into(),
        tower_a: format!("{id}-a"),
        tower_b: format!("{id}-b"),
        attachment_height: 20.0,
        sag_factor: 1.01,
    });
}

pub struct Instance {
    pub grid: GridModel,
    pub fleet: Vec<PlatformSpec>,
}

/// A small random instance: 1..=`max_tasks` spans scattered within 1.5 km
/// of the GCS over gently rolling terrain, 1..=`max_platforms` platforms,
/// light wind, sometimes a charging station and a battery small enough to
/// need it.
pub fn random_instance(seed: u64, max_tasks: usize, max_platforms: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = flat_grid(2000.0, 0.0);
    let (ax, ay) = (rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01));
    let phase: f64 = rng.gen_range(0.0..6.0);
    for (r, row) in grid.terrain.rows.iter_mut().enumerate() {
        for (c, z) in row.iter_mut().enumerate() {
            let (x, y) = (-2000.0 + 100.0 * c as f64, -2000.0 + 100.0 * r as f64);
            *z = 300.0 + ax * x + ay * y + 5.0 * (x / 700.0 + phase).sin();
        }
    }
    grid.gcs.z = grid.ground(Vec2::ZERO).unwrap();

    let n_tasks = rng.gen_range(1..=max_tasks);
    for i in 0..n_tasks {
        let centre = Vec2::new(rng.gen_range(-1200.0..1200.0), rng.gen_range(-1200.0..1200.0));
        let heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let half = rng.gen_range(50.0..250.0);
        let d = Vec2::new(heading.cos(), heading.sin()) * half;
        add_span(&mut grid, &format!("S{i}"), centre - d, centre + d);
    }
    grid.wind = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));

    let n_platforms = rng.gen_range(1..=max_platforms);
    let mut fleet = Vec::new();
    for p in 0..n_platforms {
        let mut spec = multirotor(&format!("uav{p}"));
        spec.v_inspect = rng.gen_range(8.0..12.0);
        spec.v_cruise = rng.gen_range(14.0..18.0);
        spec.transit_buffer = 30.0 + 5.0 * p as f64;
        fleet.push(spec);
    }
    if rng.gen_bool(0.3) {
        let span = rng.gen_range(0..n_tasks);
        grid.stations.push(ChargingStation {
            id: "CS".into(),
            span_id: format!("S{span}"),
            offset_fraction: rng.gen_range(0.0..=1.0),
            harvest_mode: HarvestMode::Optimized,
            primary_current: 250.0,
            harvest_gain: 0.02,
            saturation_power: 120.0,
        });
        for spec in &mut fleet {
            spec.battery_capacity = rng.gen_range(60.0..120.0);
        }
    }
    Instance { grid, fleet }
}

/// Wraps hand-built routes into a plan bound to `grid`.
pub fn hand_plan(
    grid: &GridModel,
    fleet: &[PlatformSpec],
    routes: Vec<gridsweep::planner::Route>,
) -> gridsweep::planner::Plan {
    use gridsweep::planner::{Plan, PlannerConfig};
    let config = PlannerConfig::default();
    let makespan = routes.iter().map(|r| r.completion_time).fold(0.0, f64::max);
    let mission_duration = routes.iter().map(|r| r.mission_duration).fold(0.0, f64::max);
    Plan {
        format_version: gridsweep::format::FORMAT_VERSION,
        grid_digest: grid.digest(),
        seed: 0,
        config_digest: gridsweep::format::digest(&config),
        config,
        method: "manual".into(),
        improvement_moves: 0,
        fleet: fleet.to_vec(),
        routes,
        makespan,
        mission_duration,
    }
}

/// Straight-line action flown at `airspeed`, with a calm-air duration.
pub fn fly(
    kind: gridsweep::planner::ActionKind,
    from: Vec3,
    to: Vec3,
    airspeed: f64,
    mode: gridsweep::energy::FlightMode,
    platform: &PlatformSpec,
) -> gridsweep::planner::Action {
    use gridsweep::energy::{power_draw, WingConfig};
    let distance = from.distance(to);
    let duration = distance / airspeed;
    let power = power_draw(platform, airspeed, mode, WingConfig::Retracted).unwrap();
    gridsweep::planner::Action {
        kind,
        start_point: from,
        end_point: to,
        distance,
        speed: airspeed,
        airspeed,
        mode,
        wing: WingConfig::Retracted,
        duration,
        energy: power * duration / 3600.0,
        task_id: None,
        span_id: None,
        reversed: false,
        station_id: None,
    }
}

/// Route flying `waypoints` in order from and back to the GCS: vertical
/// climb to the first waypoint, level legs, descent home.
pub fn waypoint_route(
    grid: &GridModel,
    platform: &PlatformSpec,
    waypoints: &[Vec3],
    mode: gridsweep::energy::FlightMode,
) -> gridsweep::planner::Route {
    use gridsweep::energy::FlightMode;
    use gridsweep::planner::{ActionKind, Route};
    let gcs = grid.gcs;
    let mut actions = Vec::new();
    let up = gcs.xy().with_z(waypoints[0].z);
    actions.push(fly(ActionKind::Transit, gcs, up, platform.v_vertical, FlightMode::Hover, platform));
    let mut at = up;
    for &w in waypoints.iter().chain(std::iter::once(&up)) {
        actions.push(fly(ActionKind::Transit, at, w, platform.v_cruise, mode, platform));
        at = w;
    }
    actions.push(fly(ActionKind::ReturnHome, at, gcs, platform.v_vertical, FlightMode::Hover, platform));
    let end: f64 = actions.iter().map(|a| a.duration).sum();
    Route {
        platform_id: platform.id.clone(),
        actions,
        completion_time: 0.0,
        mission_duration: end,
    }
}
