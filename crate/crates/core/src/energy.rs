//! Platform parameters and the power, wind, stall and charging models.
//!
//! Every function here is pure; the planner and the simulator call the same
//! code so that a plan replayed under the planning wind reproduces its own
//! timing and energy figures.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::format::{self, FormatError};
use crate::geometry::Vec2;
use crate::grid::{ChargingStation, HarvestMode};

/// Harvest gain of the optimized (maximum-power-point tracking) station
/// over the baseline circuit at the same line current.
pub const OPTIMIZED_HARVEST_GAIN: f64 = 1.586;
/// Calibration constant, W/A².
pub const DEFAULT_HARVEST_GAIN: f64 = 0.02;
/// Calibration constant, W.
pub const DEFAULT_SATURATION_POWER: f64 = 120.0;
pub const DEFAULT_RESERVE_FRACTION: f64 = 0.2;
pub const DEFAULT_EXTENDED_DRAG_FACTOR: f64 = 0.85;
/// Regulatory horizontal range from the GCS for multirotors.
pub const MULTIROTOR_RANGE_LIMIT: f64 = 2_000.0;
/// Regulatory horizontal range from the GCS for winged platforms.
pub const WINGED_RANGE_LIMIT: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformKind {
    Multirotor,
    FixedWingVtol,
    MorphingVtol,
}

impl PlatformKind {
    pub fn is_winged(self) -> bool {
        !matches!(self, PlatformKind::Multirotor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlightMode {
    /// Rotor-borne, stationary or vertical.
    Hover,
    /// Rotor-borne forward flight.
    ForwardVtol,
    /// Wing-borne forward flight.
    ForwardWing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WingConfig {
    #[default]
    Retracted,
    Extended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformSpec {
    pub id: String,
    pub kind: PlatformKind,
    /// kg
    pub mass: f64,
    /// Wh
    pub battery_capacity: f64,
    #[serde(default = "default_reserve")]
    pub reserve_fraction: f64,
    /// W, rotor-borne hover.
    pub hover_power: f64,
    /// Parasite coefficient, W·s³/m³.
    pub parasite_coeff: f64,
    /// W, wing-borne cruise. Unused by multirotors.
    #[serde(default)]
    pub cruise_power: f64,
    /// Inspection airspeed, m/s.
    pub v_inspect: f64,
    /// Transit airspeed, m/s.
    pub v_cruise: f64,
    /// Climb and descent rate, m/s.
    #[serde(default = "default_vertical_speed")]
    pub v_vertical: f64,
    /// Stall speed with wings retracted, m/s.
    #[serde(default)]
    pub v_stall_base: f64,
    /// m²
    #[serde(default)]
    pub wing_surface_base: f64,
    /// m²
    #[serde(default)]
    pub wing_surface_extended: f64,
    /// Multiplier on `parasite_coeff` with wings extended.
    #[serde(default = "default_drag_factor")]
    pub extended_drag_factor: f64,
    /// Highest wind the platform is cleared for, m/s.
    pub max_wind: f64,
    /// Horizontal distance limit from the GCS; defaults by kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_limit_from_gcs: Option<f64>,
    /// s
    pub landing_duration: f64,
    /// s
    pub takeoff_duration: f64,
    /// Terrain clearance for transit legs, m. Distinct buffers per platform
    /// keep transit altitudes layered.
    #[serde(default = "default_transit_buffer")]
    pub transit_buffer: f64,
}

fn default_reserve() -> f64 {
    DEFAULT_RESERVE_FRACTION
}
fn default_vertical_speed() -> f64 {
    3.0
}
fn default_drag_factor() -> f64 {
    DEFAULT_EXTENDED_DRAG_FACTOR
}
fn default_transit_buffer() -> f64 {
    30.0
}

impl PlatformSpec {
    pub fn range_limit(&self) -> f64 {
        self.range_limit_from_gcs.unwrap_or(if self.kind.is_winged() {
            WINGED_RANGE_LIMIT
        } else {
            MULTIROTOR_RANGE_LIMIT
        })
    }

    /// Battery level the trace must never drop below, Wh.
    pub fn reserve_energy(&self) -> f64 {
        self.reserve_fraction * self.battery_capacity
    }

    pub fn wing_surface(&self, wing: WingConfig) -> f64 {
        match wing {
            WingConfig::Retracted => self.wing_surface_base,
            WingConfig::Extended => self.wing_surface_extended,
        }
    }

    /// Broken invariants, as human-readable messages.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0) {
                errs.push(format!("platform {}: {name} must be > 0 (got {v})", self.id));
            }
        };
        positive("mass", self.mass);
        positive("battery_capacity", self.battery_capacity);
        positive("hover_power", self.hover_power);
        positive("v_inspect", self.v_inspect);
        positive("v_cruise", self.v_cruise);
        positive("v_vertical", self.v_vertical);
        positive("transit_buffer", self.transit_buffer);
        positive("max_wind", self.max_wind);
        if self.kind.is_winged() {
            positive("cruise_power", self.cruise_power);
            positive("v_stall_base", self.v_stall_base);
            positive("wing_surface_base", self.wing_surface_base);
            positive("wing_surface_extended", self.wing_surface_extended);
        }
        if !(self.parasite_coeff >= 0.0) {
            errs.push(format!("platform {}: parasite_coeff must be >= 0", self.id));
        }
        if !(0.0..1.0).contains(&self.reserve_fraction) {
            errs.push(format!(
                "platform {}: reserve_fraction must lie in [0, 1) (got {})",
                self.id, self.reserve_fraction
            ));
        }
        if self.v_inspect > self.v_cruise {
            errs.push(format!("platform {}: v_inspect exceeds v_cruise", self.id));
        }
        if self.kind.is_winged() && self.v_stall_base >= self.v_cruise {
            errs.push(format!("platform {}: v_stall_base must be below v_cruise", self.id));
        }
        if !(self.landing_duration >= 0.0 && self.takeoff_duration >= 0.0) {
            errs.push(format!("platform {}: negative landing/takeoff duration", self.id));
        }
        if !(self.range_limit() > 0.0) {
            errs.push(format!("platform {}: range limit must be > 0", self.id));
        }
        if !(self.transit_buffer <= crate::grid::MAX_AGL) {
            errs.push(format!("platform {}: transit_buffer above AGL ceiling", self.id));
        }
        errs
    }
}

/// A fleet file: the platforms available to a mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fleet {
    pub format_version: u32,
    pub platforms: Vec<PlatformSpec>,
}

impl Fleet {
    pub fn new(platforms: Vec<PlatformSpec>) -> Self {
        Fleet {
            format_version: format::FORMAT_VERSION,
            platforms,
        }
    }

    pub fn get(&self, id: &str) -> Option<&PlatformSpec> {
        self.platforms.iter().find(|p| p.id == id)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FleetError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invalid fleet: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

pub fn load_fleet(path: &Path) -> Result<Fleet, FleetError> {
    let fleet: Fleet = format::read_json(path, "fleet")?;
    let mut errs: Vec<String> = fleet.platforms.iter().flat_map(PlatformSpec::validate).collect();
    let mut ids: Vec<&str> = fleet.platforms.iter().map(|p| p.id.as_str()).collect();
    ids.sort_unstable();
    for pair in ids.windows(2) {
        if pair[0] == pair[1] {
            errs.push(format!("platform {}: duplicate id", pair[0]));
        }
    }
    if errs.is_empty() {
        Ok(fleet)
    } else {
        Err(FleetError::Invalid(errs))
    }
}

pub fn write_fleet(fleet: &Fleet, path: &Path) -> Result<(), FormatError> {
    format::write_json(fleet, path)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    /// Wh
    pub energy: f64,
    /// Wh
    pub capacity: f64,
}

impl BatteryState {
    pub fn full(capacity: f64) -> Self {
        BatteryState {
            energy: capacity,
            capacity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnergyError {
    #[error("wind exceeds airspeed {airspeed} m/s along track (cross {cross:.3}, along {along:.3})")]
    WindExceedsAirspeed { airspeed: f64, cross: f64, along: f64 },
    #[error("platform {platform}: airspeed {airspeed} m/s below stall speed {stall:.3} m/s")]
    BelowStall {
        platform: String,
        airspeed: f64,
        stall: f64,
    },
    #[error("platform {0} has no wing")]
    NotWinged(String),
    #[error("negative duration {0} s")]
    NegativeDuration(f64),
    #[error("station {0} harvests no power")]
    ZeroHarvest(String),
    #[error("target energy {target} Wh exceeds capacity {capacity} Wh")]
    TargetAboveCapacity { target: f64, capacity: f64 },
}

/// Airspeed needed to hold `ground_velocity` in `wind`.
pub fn airspeed_magnitude(ground_velocity: Vec2, wind: Vec2) -> f64 {
    (ground_velocity - wind).norm()
}

/// Ground speed along `track_unit` when flying at `airspeed` and crabbing
/// into the cross-track wind component.
pub fn ground_speed_along_track(
    airspeed: f64,
    track_unit: Vec2,
    wind: Vec2,
) -> Result<f64, EnergyError> {
    let along = wind.dot(track_unit);
    let cross = track_unit.cross(wind);
    let err = || EnergyError::WindExceedsAirspeed {
        airspeed,
        cross,
        along,
    };
    if cross.abs() >= airspeed {
        return Err(err());
    }
    let speed = along + (airspeed * airspeed - cross * cross).sqrt();
    if speed <= 0.0 {
        return Err(err());
    }
    Ok(speed)
}

/// Stall speed scaled from the retracted-wing value by `v ∝ 1/√S`.
pub fn stall_speed(platform: &PlatformSpec, wing: WingConfig) -> Result<f64, EnergyError> {
    if !platform.kind.is_winged() {
        return Err(EnergyError::NotWinged(platform.id.clone()));
    }
    Ok(match wing {
        WingConfig::Retracted => platform.v_stall_base,
        WingConfig::Extended => {
            platform.v_stall_base
                * (platform.wing_surface_base / platform.wing_surface_extended).sqrt()
        }
    })
}

/// Electrical power drawn in `mode` at `airspeed`, W.
///
/// Rotor-borne forward flight follows `P_hover + c_d·v³`, with `c_d` scaled
/// down by the drag factor when a winged airframe flies with its wings
/// extended. Wing-borne flight costs a constant cruise power above stall.
pub fn power_draw(
    platform: &PlatformSpec,
    airspeed: f64,
    mode: FlightMode,
    wing: WingConfig,
) -> Result<f64, EnergyError> {
    match mode {
        FlightMode::Hover => Ok(platform.hover_power),
        FlightMode::ForwardVtol => {
            let mut c_d = platform.parasite_coeff;
            if platform.kind.is_winged() && wing == WingConfig::Extended {
                c_d *= platform.extended_drag_factor;
            }
            Ok(platform.hover_power + c_d * airspeed.powi(3))
        }
        FlightMode::ForwardWing => {
            let stall = stall_speed(platform, wing)?;
            if airspeed < stall {
                return Err(EnergyError::BelowStall {
                    platform: platform.id.clone(),
                    airspeed,
                    stall,
                });
            }
            Ok(platform.cruise_power)
        }
    }
}

/// Energy for holding `mode` for `duration` seconds, Wh.
pub fn leg_energy(
    platform: &PlatformSpec,
    mode: FlightMode,
    wing: WingConfig,
    airspeed: f64,
    duration: f64,
) -> Result<f64, EnergyError> {
    if duration < 0.0 {
        return Err(EnergyError::NegativeDuration(duration));
    }
    Ok(power_draw(platform, airspeed, mode, wing)? * duration / 3600.0)
}

/// Seconds a full battery lasts in hover.
pub fn hover_endurance(platform: &PlatformSpec) -> f64 {
    platform.battery_capacity * 3600.0 / platform.hover_power
}

/// Power delivered to a landed UAV, W.
///
/// Baseline harvest grows with the square of the line current until the
/// core saturates; the optimized circuit delivers a fixed multiple of that.
pub fn harvest_power(station: &ChargingStation) -> f64 {
    let current = station.primary_current.max(0.0);
    let baseline = (station.harvest_gain * current * current).min(station.saturation_power);
    match station.harvest_mode {
        HarvestMode::Baseline => baseline,
        HarvestMode::Optimized => OPTIMIZED_HARVEST_GAIN * baseline,
    }
}

/// Seconds spent at a station topping `battery` up to `target_energy`,
/// landing and takeoff included.
pub fn charge_duration(
    battery: BatteryState,
    target_energy: f64,
    station: &ChargingStation,
    platform: &PlatformSpec,
) -> Result<f64, EnergyError> {
    Ok(pure_charge_time(battery, target_energy, station)?
        + platform.landing_duration
        + platform.takeoff_duration)
}

/// Seconds on the station with power flowing, overheads excluded.
pub fn pure_charge_time(
    battery: BatteryState,
    target_energy: f64,
    station: &ChargingStation,
) -> Result<f64, EnergyError> {
    if target_energy > battery.capacity {
        return Err(EnergyError::TargetAboveCapacity {
            target: target_energy,
            capacity: battery.capacity,
        });
    }
    let power = harvest_power(station);
    if !(power > 0.0) {
        return Err(EnergyError::ZeroHarvest(station.id.clone()));
    }
    let deficit = (target_energy - battery.energy).max(0.0);
    Ok(deficit * 3600.0 / power)
}
