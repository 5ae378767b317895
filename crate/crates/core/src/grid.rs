//! Power-grid description: towers, conductor spans, charging stations,
//! terrain and the ground control station, plus the geometric queries the
//! planner and simulator share.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::format::{self, FormatError, FORMAT_VERSION};
use crate::geometry::{Vec2, Vec3};

/// Regulatory ceiling above ground level.
pub const MAX_AGL: f64 = 120.0;

/// Sag factor used when a span omits one.
pub const DEFAULT_SAG_FACTOR: f64 = 1.01;

const EXTENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tower {
    pub id: String,
    /// Base of the tower; `z` is the ground elevation AMSL.
    pub position: Vec3,
    pub height: f64,
    /// Marks towers whose hardware needs a close hovering look.
    #[serde(default)]
    pub hover_detail: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub id: String,
    pub tower_a: String,
    pub tower_b: String,
    /// Conductor attachment height above each tower base.
    pub attachment_height: f64,
    /// Arc length over chord length.
    #[serde(default = "default_sag")]
    pub sag_factor: f64,
}

fn default_sag() -> f64 {
    DEFAULT_SAG_FACTOR
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarvestMode {
    Baseline,
    Optimized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargingStation {
    pub id: String,
    pub span_id: String,
    pub offset_fraction: f64,
    pub harvest_mode: HarvestMode,
    /// Line current in amperes.
    pub primary_current: f64,
    /// Quadratic harvest coefficient, W/A².
    #[serde(default = "default_harvest_gain")]
    pub harvest_gain: f64,
    /// Baseline saturation power, W.
    #[serde(default = "default_saturation_power")]
    pub saturation_power: f64,
}

fn default_harvest_gain() -> f64 {
    crate::energy::DEFAULT_HARVEST_GAIN
}

fn default_saturation_power() -> f64 {
    crate::energy::DEFAULT_SATURATION_POWER
}

/// Regular elevation grid. `rows[r][c]` is the elevation at
/// `origin + (c, r) * cell_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrainRaster {
    pub origin: Vec2,
    pub cell_size: f64,
    pub rows: Vec<Vec<f64>>,
}

impl TerrainRaster {
    /// Constant-elevation raster covering `[min, max]`.
    pub fn flat(min: Vec2, max: Vec2, cell_size: f64, elevation: f64) -> Self {
        let cols = ((max.x - min.x) / cell_size).ceil() as usize + 1;
        let rows = ((max.y - min.y) / cell_size).ceil() as usize + 1;
        TerrainRaster {
            origin: min,
            cell_size,
            rows: vec![vec![elevation; cols]; rows],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Upper corner of the sampled extent.
    pub fn max_corner(&self) -> Vec2 {
        Vec2::new(
            self.origin.x + (self.n_cols().saturating_sub(1)) as f64 * self.cell_size,
            self.origin.y + (self.n_rows().saturating_sub(1)) as f64 * self.cell_size,
        )
    }

    pub fn contains(&self, p: Vec2) -> bool {
        if self.n_rows() == 0 || self.n_cols() == 0 || !p.is_finite() {
            return false;
        }
        let hi = self.max_corner();
        p.x >= self.origin.x - EXTENT_EPS
            && p.y >= self.origin.y - EXTENT_EPS
            && p.x <= hi.x + EXTENT_EPS
            && p.y <= hi.y + EXTENT_EPS
    }

    /// Bilinear elevation, or `None` outside the raster.
    pub fn elevation(&self, p: Vec2) -> Option<f64> {
        if !self.contains(p) {
            return None;
        }
        let (c0, c1, fu) = bracket((p.x - self.origin.x) / self.cell_size, self.n_cols());
        let (r0, r1, fv) = bracket((p.y - self.origin.y) / self.cell_size, self.n_rows());
        let z00 = self.rows[r0][c0];
        let z01 = self.rows[r0][c1];
        let z10 = self.rows[r1][c0];
        let z11 = self.rows[r1][c1];
        let bottom = z00 + (z01 - z00) * fu;
        let top = z10 + (z11 - z10) * fu;
        Some(bottom + (top - bottom) * fv)
    }
}

fn bracket(u: f64, n: usize) -> (usize, usize, f64) {
    if n <= 1 {
        return (0, 0, 0.0);
    }
    let u = u.clamp(0.0, (n - 1) as f64);
    let i0 = (u.floor() as usize).min(n - 2);
    (i0, i0 + 1, u - i0 as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridModel {
    pub format_version: u32,
    pub towers: Vec<Tower>,
    pub spans: Vec<Span>,
    #[serde(default)]
    pub stations: Vec<ChargingStation>,
    pub terrain: TerrainRaster,
    /// Ground control station; `z` is ground elevation.
    pub gcs: Vec3,
    /// Uniform wind, m/s.
    #[serde(default)]
    pub wind: Vec2,
}

/// One broken invariant, naming the entity it concerns.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub entity: String,
    pub problem: Problem,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    DuplicateId,
    NonPositiveHeight(f64),
    NonFinite(&'static str),
    SameTowerTwice,
    DanglingReference(String),
    SagOutOfRange(f64),
    AttachmentOutOfRange(f64),
    DegenerateSpan,
    OffsetOutOfRange(f64),
    NegativeCurrent(f64),
    NegativeHarvestParameter,
    NonPositiveCellSize(f64),
    EmptyRaster,
    RaggedRaster { row: usize, len: usize, expected: usize },
    OutsideRaster,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.entity)?;
        match &self.problem {
            Problem::DuplicateId => write!(f, "duplicate id"),
            Problem::NonPositiveHeight(h) => write!(f, "height must be > 0 (got {h})"),
            Problem::NonFinite(field) => write!(f, "{field} is not finite"),
            Problem::SameTowerTwice => write!(f, "tower_a and tower_b must differ"),
            Problem::DanglingReference(id) => write!(f, "references missing entity \"{id}\""),
            Problem::SagOutOfRange(s) => write!(f, "sag_factor must lie in [1, 1.2] (got {s})"),
            Problem::AttachmentOutOfRange(h) => write!(
                f,
                "attachment_height must be > 0 and not above either tower (got {h})"
            ),
            Problem::DegenerateSpan => write!(f, "towers share the same horizontal position"),
            Problem::OffsetOutOfRange(o) => {
                write!(f, "offset_fraction must lie in [0, 1] (got {o})")
            }
            Problem::NegativeCurrent(i) => write!(f, "primary_current must be >= 0 (got {i})"),
            Problem::NegativeHarvestParameter => {
                write!(f, "harvest_gain and saturation_power must be >= 0")
            }
            Problem::NonPositiveCellSize(c) => write!(f, "cell_size must be > 0 (got {c})"),
            Problem::EmptyRaster => write!(f, "raster has no cells"),
            Problem::RaggedRaster { row, len, expected } => {
                write!(f, "row {row} has {len} cells, expected {expected}")
            }
            Problem::OutsideRaster => write!(f, "lies outside the terrain raster"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invalid grid: {}", join(.0))]
    Invalid(Vec<ValidationError>),
    #[error("unknown span \"{0}\"")]
    UnknownSpan(String),
    #[error("buffer must satisfy 0 < buffer <= {MAX_AGL} m (got {0})")]
    InvalidBuffer(f64),
    #[error("transit segment leaves the terrain raster near ({:.1}, {:.1})", .0.x, .0.y)]
    SegmentExitsRaster(Vec2),
    #[error(
        "no safe transit altitude: {agl:.1} m AGL at ({:.1}, {:.1}) exceeds {MAX_AGL} m",
        worst.x,
        worst.y
    )]
    AltitudeInfeasible { worst: Vec2, agl: f64 },
}

fn join(errors: &[ValidationError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Reads, parses and validates a grid file.
pub fn load_grid(path: &Path) -> Result<GridModel, GridError> {
    let grid: GridModel = format::read_json(path, "grid")?;
    check(grid)
}

pub fn parse_grid(text: &str) -> Result<GridModel, GridError> {
    let grid: GridModel = format::parse_json(text, "grid")?;
    check(grid)
}

fn check(grid: GridModel) -> Result<GridModel, GridError> {
    let errors = validate_grid(&grid);
    if errors.is_empty() {
        Ok(grid)
    } else {
        Err(GridError::Invalid(errors))
    }
}

pub fn write_grid(grid: &GridModel, path: &Path) -> Result<(), FormatError> {
    format::write_json(grid, path)
}

/// Every invariant violation in `grid`; empty when the grid is usable.
pub fn validate_grid(grid: &GridModel) -> Vec<ValidationError> {
    let mut errors = Vec::new();
    let mut push = |entity: String, problem: Problem| errors.push(ValidationError { entity, problem });

    let raster = &grid.terrain;
    let raster_ok = {
        let mut ok = true;
        if !(raster.cell_size > 0.0 && raster.cell_size.is_finite()) {
            push("terrain".into(), Problem::NonPositiveCellSize(raster.cell_size));
            ok = false;
        }
        if raster.n_rows() == 0 || raster.n_cols() == 0 {
            push("terrain".into(), Problem::EmptyRaster);
            ok = false;
        }
        let expected = raster.n_cols();
        for (row, cells) in raster.rows.iter().enumerate() {
            if cells.len() != expected {
                push(
                    "terrain".into(),
                    Problem::RaggedRaster {
                        row,
                        len: cells.len(),
                        expected,
                    },
                );
                ok = false;
            }
            if cells.iter().any(|z| !z.is_finite()) {
                push("terrain".into(), Problem::NonFinite("elevation"));
                ok = false;
            }
        }
        if !raster.origin.is_finite() {
            push("terrain".into(), Problem::NonFinite("origin"));
            ok = false;
        }
        ok
    };

    let mut towers: BTreeMap<&str, &Tower> = BTreeMap::new();
    for tower in &grid.towers {
        let entity = format!("tower {}", tower.id);
        if towers.insert(tower.id.as_str(), tower).is_some() {
            push(entity.clone(), Problem::DuplicateId);
        }
        if !tower.position.is_finite() {
            push(entity.clone(), Problem::NonFinite("position"));
        }
        if !(tower.height > 0.0 && tower.height.is_finite()) {
            push(entity.clone(), Problem::NonPositiveHeight(tower.height));
        }
        if raster_ok && !raster.contains(tower.position.xy()) {
            push(entity, Problem::OutsideRaster);
        }
    }

    let mut span_ids = BTreeSet::new();
    for span in &grid.spans {
        let entity = format!("span {}", span.id);
        if !span_ids.insert(span.id.as_str()) {
            push(entity.clone(), Problem::DuplicateId);
        }
        if span.tower_a == span.tower_b {
            push(entity.clone(), Problem::SameTowerTwice);
        }
        let a = towers.get(span.tower_a.as_str());
        let b = towers.get(span.tower_b.as_str());
        for (id, found) in [(&span.tower_a, a), (&span.tower_b, b)] {
            if found.is_none() {
                push(entity.clone(), Problem::DanglingReference(id.clone()));
            }
        }
        if !(1.0..=1.2).contains(&span.sag_factor) {
            push(entity.clone(), Problem::SagOutOfRange(span.sag_factor));
        }
        let max_attach = [a, b]
            .iter()
            .flatten()
            .map(|t| t.height)
            .fold(f64::INFINITY, f64::min);
        if !(span.attachment_height > 0.0 && span.attachment_height <= max_attach) {
            push(entity.clone(), Problem::AttachmentOutOfRange(span.attachment_height));
        }
        if let (Some(a), Some(b)) = (a, b) {
            if span.tower_a != span.tower_b && a.position.xy() == b.position.xy() {
                push(entity, Problem::DegenerateSpan);
            }
        }
    }

    let mut station_ids = BTreeSet::new();
    for station in &grid.stations {
        let entity = format!("station {}", station.id);
        if !station_ids.insert(station.id.as_str()) {
            push(entity.clone(), Problem::DuplicateId);
        }
        if !span_ids.contains(station.span_id.as_str()) {
            push(entity.clone(), Problem::DanglingReference(station.span_id.clone()));
        }
        if !(0.0..=1.0).contains(&station.offset_fraction) {
            push(entity.clone(), Problem::OffsetOutOfRange(station.offset_fraction));
        }
        if !(station.primary_current >= 0.0 && station.primary_current.is_finite()) {
            push(entity.clone(), Problem::NegativeCurrent(station.primary_current));
        }
        if !(station.harvest_gain >= 0.0 && station.saturation_power >= 0.0) {
            push(entity, Problem::NegativeHarvestParameter);
        }
    }

    if !grid.gcs.is_finite() {
        push("gcs".into(), Problem::NonFinite("position"));
    } else if raster_ok && !raster.contains(grid.gcs.xy()) {
        push("gcs".into(), Problem::OutsideRaster);
    }
    if !grid.wind.is_finite() {
        push("wind".into(), Problem::NonFinite("wind"));
    }
    errors
}

impl GridModel {
    /// Empty grid over `terrain`, GCS at `gcs`, calm air.
    pub fn new(terrain: TerrainRaster, gcs: Vec3) -> Self {
        GridModel {
            format_version: FORMAT_VERSION,
            towers: Vec::new(),
            spans: Vec::new(),
            stations: Vec::new(),
            terrain,
            gcs,
            wind: Vec2::ZERO,
        }
    }

    pub fn tower(&self, id: &str) -> Option<&Tower> {
        self.towers.iter().find(|t| t.id == id)
    }

    pub fn span(&self, id: &str) -> Option<&Span> {
        self.spans.iter().find(|s| s.id == id)
    }

    pub fn station(&self, id: &str) -> Option<&ChargingStation> {
        self.stations.iter().find(|s| s.id == id)
    }

    /// Conductor attachment points at the `tower_a` and `tower_b` ends.
    pub fn attachment_points(&self, span: &Span) -> Result<(Vec3, Vec3), GridError> {
        let point = |id: &str| {
            self.tower(id)
                .map(|t| t.position + Vec3::new(0.0, 0.0, span.attachment_height))
                .ok_or_else(|| GridError::UnknownSpan(span.id.clone()))
        };
        Ok((point(&span.tower_a)?, point(&span.tower_b)?))
    }

    /// Where a station sits on its conductor.
    pub fn station_position(&self, station: &ChargingStation) -> Result<Vec3, GridError> {
        let span = self
            .span(&station.span_id)
            .ok_or_else(|| GridError::UnknownSpan(station.span_id.clone()))?;
        let (a, b) = self.attachment_points(span)?;
        Ok(a.lerp(b, station.offset_fraction))
    }

    pub fn total_span_length(&self) -> f64 {
        self.spans
            .iter()
            .filter_map(|s| span_length(s, self).ok())
            .sum()
    }

    /// Ground elevation, or `None` outside the raster.
    pub fn ground(&self, p: Vec2) -> Option<f64> {
        self.terrain.elevation(p)
    }

    pub fn digest(&self) -> String {
        format::digest(self)
    }
}

/// Conductor length: 3-D chord between attachment points times the sag factor.
pub fn span_length(span: &Span, grid: &GridModel) -> Result<f64, GridError> {
    let (a, b) = grid.attachment_points(span)?;
    Ok(a.distance(b) * span.sag_factor)
}

/// Samples the segment `p1 -> p2` at most one raster cell apart, including
/// both endpoints. The samples do not depend on endpoint order.
pub fn segment_samples(p1: Vec2, p2: Vec2, step: f64) -> Vec<Vec2> {
    let (a, b) = if (p1.x, p1.y) <= (p2.x, p2.y) {
        (p1, p2)
    } else {
        (p2, p1)
    };
    let length = a.distance(b);
    let n = ((length / step).ceil() as usize).max(1);
    (0..=n).map(|i| a.lerp(b, i as f64 / n as f64)).collect()
}

/// Lowest altitude (AMSL) that clears the terrain under `p1 -> p2` by
/// `buffer` while staying under the AGL ceiling along the whole segment.
pub fn safe_transit_altitude(
    p1: Vec2,
    p2: Vec2,
    grid: &GridModel,
    buffer: f64,
) -> Result<f64, GridError> {
    if !(buffer > 0.0 && buffer <= MAX_AGL) {
        return Err(GridError::InvalidBuffer(buffer));
    }
    let samples = terrain_profile(p1, p2, grid)?;
    let peak = samples
        .iter()
        .map(|&(_, z)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    let altitude = peak + buffer;
    check_ceiling(&samples, altitude)?;
    Ok(altitude)
}

/// `(point, ground elevation)` along the segment.
pub fn terrain_profile(p1: Vec2, p2: Vec2, grid: &GridModel) -> Result<Vec<(Vec2, f64)>, GridError> {
    segment_samples(p1, p2, grid.terrain.cell_size)
        .into_iter()
        .map(|p| {
            grid.ground(p)
                .map(|z| (p, z))
                .ok_or(GridError::SegmentExitsRaster(p))
        })
        .collect()
}

/// Fails with the worst sample if flying level at `altitude` breaks the
/// AGL ceiling anywhere along the profile.
pub fn check_ceiling(samples: &[(Vec2, f64)], altitude: f64) -> Result<(), GridError> {
    let (worst, ground) = samples
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("profile always has at least one sample");
    let agl = altitude - ground;
    if agl > MAX_AGL + 1e-9 {
        return Err(GridError::AltitudeInfeasible { worst, agl });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_grid(z: f64) -> GridModel {
        GridModel::new(
            TerrainRaster::flat(Vec2::new(-100.0, -100.0), Vec2::new(1100.0, 100.0), 10.0, z),
            Vec3::new(0.0, 0.0, z),
        )
    }

    fn two_towers(a: Vec3, b: Vec3, height: f64, sag: f64) -> GridModel {
        let mut grid = flat_grid(0.0);
        grid.towers = vec![
            Tower {
                id: "T1".into(),
                position: a,
                height,
                hover_detail: false,
            },
            Tower {
                id: "T2".into(),
                position: b,
                height,
                hover_detail: false,
            },
        ];
        grid.spans = vec![Span {
            id: "S1".into(),
            tower_a: "T1".into(),
            tower_b: "T2".into(),
            attachment_height: height,
            sag_factor: sag,
        }];
        grid
    }

    #[test]
    fn span_length_chord_and_sag() {
        let grid = two_towers(Vec3::new(0.0, 0.0, 0.0), Vec3::new(300.0, 0.0, 0.0), 30.0, 1.0);
        assert!((span_length(&grid.spans[0], &grid).unwrap() - 300.0).abs() < 1e-12);
        let grid = two_towers(Vec3::new(0.0, 0.0, 0.0), Vec3::new(300.0, 0.0, 0.0), 30.0, 1.02);
        assert!((span_length(&grid.spans[0], &grid).unwrap() - 306.0).abs() < 1e-9);
    }

    #[test]
    fn span_length_three_dimensional_chord() {
        let grid = two_towers(
            Vec3::new(0.0, 0.0, 100.0),
            Vec3::new(400.0, 0.0, 120.0),
            30.0,
            1.01,
        );
        let chord = (400.0f64.powi(2) + 20.0f64.powi(2)).sqrt();
        assert!((chord - 400.5).abs() < 0.01);
        let len = span_length(&grid.spans[0], &grid).unwrap();
        assert!((len - chord * 1.01).abs() < 1e-9);
        assert!((len - 404.5).abs() < 0.05);
    }

    #[test]
    fn bilinear_interpolates_between_cells() {
        let raster = TerrainRaster {
            origin: Vec2::new(0.0, 0.0),
            cell_size: 10.0,
            rows: vec![vec![0.0, 10.0], vec![20.0, 30.0]],
        };
        assert_eq!(raster.elevation(Vec2::new(5.0, 5.0)), Some(15.0));
        assert_eq!(raster.elevation(Vec2::new(10.0, 0.0)), Some(10.0));
        assert_eq!(raster.elevation(Vec2::new(10.0, 10.0)), Some(30.0));
        assert_eq!(raster.elevation(Vec2::new(10.1, 0.0)), None);
    }

    fn ramp_grid(rise: f64) -> GridModel {
        let mut grid = flat_grid(0.0);
        for row in &mut grid.terrain.rows {
            for (c, z) in row.iter_mut().enumerate() {
                // 200 m at x = 0 rising by `rise` at x = 1000.
                let x = -100.0 + c as f64 * 10.0;
                *z = 200.0 + rise * x.clamp(0.0, 1000.0) / 1000.0;
            }
        }
        grid
    }

    #[test]
    fn safe_altitude_flat_and_ramp() {
        let grid = flat_grid(200.0);
        let alt = safe_transit_altitude(Vec2::new(0.0, 0.0), Vec2::new(1000.0, 0.0), &grid, 30.0);
        assert_eq!(alt.unwrap(), 230.0);

        let grid = ramp_grid(80.0);
        let alt = safe_transit_altitude(Vec2::new(0.0, 0.0), Vec2::new(1000.0, 0.0), &grid, 30.0);
        assert!((alt.unwrap() - 310.0).abs() < 1e-9);
    }

    #[test]
    fn steep_ramp_breaks_ceiling_at_low_end() {
        // Level flight at 340 + 30 m sits 170 m above the 200 m end.
        let grid = ramp_grid(140.0);
        let err = safe_transit_altitude(Vec2::new(0.0, 0.0), Vec2::new(1000.0, 0.0), &grid, 30.0)
            .unwrap_err();
        match err {
            GridError::AltitudeInfeasible { worst, agl } => {
                assert_eq!(worst, Vec2::new(0.0, 0.0));
                assert!((agl - 170.0).abs() < 1e-9);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn ridge_makes_segment_infeasible() {
        let mut grid = flat_grid(100.0);
        for row in &mut grid.terrain.rows {
            for (c, z) in row.iter_mut().enumerate() {
                let x = -100.0 + c as f64 * 10.0;
                if (x - 500.0).abs() < 1e-9 {
                    *z = 250.0;
                }
            }
        }
        let err = safe_transit_altitude(Vec2::new(0.0, 0.0), Vec2::new(1000.0, 0.0), &grid, 30.0)
            .unwrap_err();
        match err {
            GridError::AltitudeInfeasible { agl, worst } => {
                assert!((agl - 180.0).abs() < 1e-9);
                assert_eq!(grid.ground(worst), Some(100.0));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn safe_altitude_rejects_bad_buffer_and_exit() {
        let grid = flat_grid(0.0);
        let p = Vec2::new(0.0, 0.0);
        assert!(matches!(
            safe_transit_altitude(p, p, &grid, 0.0),
            Err(GridError::InvalidBuffer(_))
        ));
        assert!(matches!(
            safe_transit_altitude(p, p, &grid, 121.0),
            Err(GridError::InvalidBuffer(_))
        ));
        assert!(matches!(
            safe_transit_altitude(p, Vec2::new(5000.0, 0.0), &grid, 30.0),
            Err(GridError::SegmentExitsRaster(_))
        ));
    }

    #[test]
    fn validation_reports_each_problem() {
        let grid = two_towers(Vec3::new(0.0, 0.0, 0.0), Vec3::new(300.0, 0.0, 0.0), 30.0, 1.01);
        assert!(validate_grid(&grid).is_empty());

        let mut dup = grid.clone();
        dup.towers[1].id = "T1".into();
        dup.spans[0].tower_b = "T1".into();
        let errs = validate_grid(&dup);
        assert!(errs
            .iter()
            .any(|e| e.problem == Problem::DuplicateId && e.entity == "tower T1"));

        let mut dup = grid.clone();
        dup.towers.push(dup.towers[0].clone());
        assert_eq!(validate_grid(&dup).len(), 1);

        let mut bad = grid.clone();
        bad.stations.push(ChargingStation {
            id: "C1".into(),
            span_id: "S1".into(),
            offset_fraction: 1.5,
            harvest_mode: HarvestMode::Baseline,
            primary_current: 100.0,
            harvest_gain: 0.02,
            saturation_power: 120.0,
        });
        let errs = validate_grid(&bad);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].problem, Problem::OffsetOutOfRange(1.5));
        assert!(errs[0].to_string().contains("station C1"));

        let mut dangling = grid;
        dangling.spans[0].tower_b = "T9".into();
        let errs = validate_grid(&dangling);
        assert!(errs.iter().any(|e| e.to_string().contains("\"T9\"")));
    }

    #[test]
    fn station_sits_on_conductor() {
        let mut grid = two_towers(Vec3::new(0.0, 0.0, 0.0), Vec3::new(300.0, 0.0, 0.0), 30.0, 1.0);
        grid.stations.push(ChargingStation {
            id: "C1".into(),
            span_id: "S1".into(),
            offset_fraction: 0.25,
            harvest_mode: HarvestMode::Optimized,
            primary_current: 10.0,
            harvest_gain: 0.02,
            saturation_power: 120.0,
        });
        let p = grid.station_position(&grid.stations[0]).unwrap();
        assert_eq!(p, Vec3::new(75.0, 0.0, 30.0));
    }
}
