//! Terrain and surface elevation rasters.
//!
//! A stack pairs a bare-earth terrain model (DTM) with a surface model (DSM)
//! on the same footprint, plus an optional coarse terrain grid used where the
//! high-resolution pair has no data. Clutter height is the positive part of
//! `DSM - tree_growth_offset - DTM`.

mod geotiff;

pub use geotiff::{load_grid, write_grid, write_raster};

use crate::geodesy::{LatLon, UtmZone};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::sync::Arc;
use thiserror::Error;

pub const MIN_HEIGHT_M: f64 = -500.0;
pub const MAX_HEIGHT_M: f64 = 9000.0;

#[derive(Debug, Error)]
pub enum ElevationError {
    #[error("raster file not found: {}", .0.display())]
    FileMissing(PathBuf),
    #[error("malformed raster: {0}")]
    MalformedRaster(String),
    #[error("unsupported vertical units: {0}")]
    UnitError(String),
    #[error("coordinate ({lat}, {lon}) is not representable in the grid reference system")]
    TransformFailure { lat: f64, lon: f64 },
    #[error("no terrain coverage at ({lat}, {lon})")]
    NoCoverage { lat: f64, lon: f64 },
    #[error("{0} must be non-negative")]
    NegativeInput(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    Terrain,
    Surface,
}

/// Horizontal coordinate reference system of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Crs {
    /// Geographic lat/lon degrees (EPSG:4326 and compatible datums).
    Geographic { epsg: u16 },
    /// Projected UTM meters.
    Utm { epsg: u16, zone: UtmZone },
}

impl Crs {
    pub const WGS84: Crs = Crs::Geographic { epsg: 4326 };

    pub fn utm_wgs84(zone: u8, north: bool) -> Crs {
        let epsg = if north { 32600 } else { 32700 } + u16::from(zone);
        Crs::Utm {
            epsg,
            zone: UtmZone { zone, north },
        }
    }

    pub fn epsg(&self) -> u16 {
        match *self {
            Crs::Geographic { epsg } | Crs::Utm { epsg, .. } => epsg,
        }
    }

    /// Resolves an EPSG code into one of the supported systems.
    pub fn from_epsg(code: u16) -> Option<Crs> {
        match code {
            // WGS84, NAD83, NAD83(CSRS)
            4326 | 4269 | 4617 => Some(Crs::Geographic { epsg: code }),
            32601..=32660 => Some(Crs::Utm {
                epsg: code,
                zone: UtmZone { zone: (code - 32600) as u8, north: true },
            }),
            32701..=32760 => Some(Crs::Utm {
                epsg: code,
                zone: UtmZone { zone: (code - 32700) as u8, north: false },
            }),
            // NAD83 / UTM zones 1N..23N
            26901..=26923 => Some(Crs::Utm {
                epsg: code,
                zone: UtmZone { zone: (code - 26900) as u8, north: true },
            }),
            // NAD83(CSRS) / UTM
            2955..=2962 => {
                let zone = [11, 12, 13, 17, 18, 19, 20, 21][(code - 2955) as usize];
                Some(Crs::Utm {
                    epsg: code,
                    zone: UtmZone { zone, north: true },
                })
            }
            3154..=3160 => {
                let zone = [7, 8, 9, 10, 14, 15, 16][(code - 3154) as usize];
                Some(Crs::Utm {
                    epsg: code,
                    zone: UtmZone { zone, north: true },
                })
            }
            _ => None,
        }
    }

    /// World coordinates (x, y) of a geographic point in this system.
    pub fn to_world(&self, p: LatLon) -> Option<(f64, f64)> {
        if !p.is_valid() {
            return None;
        }
        match self {
            Crs::Geographic { .. } => Some((p.lon, p.lat)),
            Crs::Utm { zone, .. } => zone.project(p),
        }
    }
}

/// Affine pixel-to-world mapping in GDAL order:
/// `x = c[0] + c[1]*col + c[2]*row`, `y = c[3] + c[4]*col + c[5]*row`,
/// where `(col, row) = (0, 0)` is the outer corner of the first pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTransform(pub [f64; 6]);

impl GeoTransform {
    /// North-up transform from the outer corner of the top-left pixel.
    pub fn north_up(origin_x: f64, origin_y: f64, pixel_w: f64, pixel_h: f64) -> Self {
        GeoTransform([origin_x, pixel_w, 0.0, origin_y, 0.0, -pixel_h])
    }

    fn determinant(&self) -> f64 {
        let c = &self.0;
        c[1] * c[5] - c[2] * c[4]
    }

    pub fn is_invertible(&self) -> bool {
        let det = self.determinant();
        det.is_finite() && det.abs() > 1e-300 && self.0.iter().all(|v| v.is_finite())
    }

    pub fn is_axis_aligned(&self) -> bool {
        self.0[2] == 0.0 && self.0[4] == 0.0
    }

    pub fn apply(&self, col: f64, row: f64) -> (f64, f64) {
        let c = &self.0;
        (c[0] + c[1] * col + c[2] * row, c[3] + c[4] * col + c[5] * row)
    }

    /// Fractional pixel coordinates (col, row) of a world point.
    pub fn invert(&self, x: f64, y: f64) -> (f64, f64) {
        let c = &self.0;
        let det = self.determinant();
        let dx = x - c[0];
        let dy = y - c[3];
        ((c[5] * dx - c[2] * dy) / det, (-c[4] * dx + c[1] * dy) / det)
    }

    /// Pixel footprint size (x, y) in world units.
    pub fn pixel_size(&self) -> (f64, f64) {
        let c = &self.0;
        (c[1].hypot(c[4]), c[2].hypot(c[5]))
    }
}

/// Single-band elevation raster.
#[derive(Debug, Clone)]
pub struct ElevationGrid {
    kind: GridKind,
    crs: Crs,
    transform: GeoTransform,
    width: usize,
    height: usize,
    nodata: f64,
    heights: Vec<f32>,
}

impl ElevationGrid {
    /// Builds a grid from row-major heights (first row is the top of the
    /// raster for a north-up transform).
    pub fn new(
        kind: GridKind,
        crs: Crs,
        transform: GeoTransform,
        width: usize,
        height: usize,
        nodata: f64,
        heights: Vec<f32>,
    ) -> Result<Self, ElevationError> {
        if width == 0 || height == 0 {
            return Err(ElevationError::InvalidGrid("empty raster".into()));
        }
        if heights.len() != width * height {
            return Err(ElevationError::InvalidGrid(format!(
                "expected {} samples, got {}",
                width * height,
                heights.len()
            )));
        }
        if !transform.is_invertible() {
            return Err(ElevationError::InvalidGrid("transform is not invertible".into()));
        }
        let (rx, ry) = transform.pixel_size();
        if !(rx > 0.0 && ry > 0.0) {
            return Err(ElevationError::InvalidGrid("resolution must be positive".into()));
        }
        let grid = Self {
            kind,
            crs,
            transform,
            width,
            height,
            nodata,
            heights,
        };
        if let Some(bad) = grid
            .heights
            .iter()
            .map(|&h| f64::from(h))
            .find(|&h| !grid.is_nodata(h) && !(MIN_HEIGHT_M..=MAX_HEIGHT_M).contains(&h))
        {
            return Err(ElevationError::InvalidGrid(format!(
                "height {bad} m outside [{MIN_HEIGHT_M}, {MAX_HEIGHT_M}]"
            )));
        }
        Ok(grid)
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn crs(&self) -> Crs {
        self.crs
    }

    pub fn transform(&self) -> GeoTransform {
        self.transform
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn heights(&self) -> &[f32] {
        &self.heights
    }

    /// Pixel size in CRS units (meters for UTM, degrees for geographic).
    pub fn resolution(&self) -> (f64, f64) {
        self.transform.pixel_size()
    }

    fn is_nodata(&self, v: f64) -> bool {
        v.is_nan() || v == self.nodata
    }

    /// Stored value at (col, row), `None` for nodata.
    pub fn cell(&self, col: usize, row: usize) -> Option<f64> {
        let v = f64::from(self.heights[row * self.width + col]);
        (!self.is_nodata(v)).then_some(v)
    }

    /// Bilinear sample between the four surrounding cell centers.
    ///
    /// `Ok(None)` is the nodata marker: the point lies outside the raster
    /// footprint or a cell with non-zero weight is nodata.
    pub fn sample_height(&self, p: LatLon) -> Result<Option<f64>, ElevationError> {
        let (x, y) = self.crs.to_world(p).ok_or(ElevationError::TransformFailure {
            lat: p.lat,
            lon: p.lon,
        })?;
        Ok(self.sample_world(x, y))
    }

    /// Bilinear sample at world coordinates of this grid's CRS.
    pub fn sample_world(&self, x: f64, y: f64) -> Option<f64> {
        let (px, py) = self.transform.invert(x, y);
        if !(px.is_finite() && py.is_finite()) {
            return None;
        }
        let (w, h) = (self.width as f64, self.height as f64);
        if px < 0.0 || py < 0.0 || px > w || py > h {
            return None;
        }
        // Cell-center coordinates, clamped so edge half-pixels reuse the edge cell.
        let u = (px - 0.5).clamp(0.0, w - 1.0);
        let v = (py - 0.5).clamp(0.0, h - 1.0);
        let c0 = (u.floor() as usize).min(self.width.saturating_sub(2));
        let r0 = (v.floor() as usize).min(self.height.saturating_sub(2));
        let c1 = (c0 + 1).min(self.width - 1);
        let r1 = (r0 + 1).min(self.height - 1);
        let tx = if c1 == c0 { 0.0 } else { u - c0 as f64 };
        let ty = if r1 == r0 { 0.0 } else { v - r0 as f64 };

        let mut acc = 0.0;
        for (col, row, weight) in [
            (c0, r0, (1.0 - tx) * (1.0 - ty)),
            (c1, r0, tx * (1.0 - ty)),
            (c0, r1, (1.0 - tx) * ty),
            (c1, r1, tx * ty),
        ] {
            if weight == 0.0 {
                continue;
            }
            acc += weight * self.cell(col, row)?;
        }
        Some(acc)
    }
}

/// Where a terrain height came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerrainSource {
    Primary,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainSample {
    pub height: f64,
    pub source: TerrainSource,
}

/// Terrain and surface models plus optional coarse terrain fallback.
///
/// Grids are shared behind `Arc`, so cloning a stack (for example to apply
/// a different tree-growth offset) does not copy raster data.
#[derive(Debug, Clone)]
pub struct ElevationStack {
    dtm: Arc<ElevationGrid>,
    dsm: Arc<ElevationGrid>,
    fallback_dtm: Option<Arc<ElevationGrid>>,
    tree_growth_offset: f64,
}

impl ElevationStack {
    pub fn new(
        dtm: ElevationGrid,
        dsm: ElevationGrid,
        fallback_dtm: Option<ElevationGrid>,
    ) -> Result<Self, ElevationError> {
        if dtm.kind() != GridKind::Terrain {
            return Err(ElevationError::InvalidGrid("dtm must be a terrain grid".into()));
        }
        if dsm.kind() != GridKind::Surface {
            return Err(ElevationError::InvalidGrid("dsm must be a surface grid".into()));
        }
        if let Some(fb) = &fallback_dtm {
            if fb.kind() != GridKind::Terrain {
                return Err(ElevationError::InvalidGrid(
                    "fallback dtm must be a terrain grid".into(),
                ));
            }
        }
        Ok(Self {
            dtm: Arc::new(dtm),
            dsm: Arc::new(dsm),
            fallback_dtm: fallback_dtm.map(Arc::new),
            tree_growth_offset: 0.0,
        })
    }

    pub fn dtm(&self) -> &ElevationGrid {
        &self.dtm
    }

    pub fn dsm(&self) -> &ElevationGrid {
        &self.dsm
    }

    pub fn fallback_dtm(&self) -> Option<&ElevationGrid> {
        self.fallback_dtm.as_deref()
    }

    pub fn tree_growth_offset(&self) -> f64 {
        self.tree_growth_offset
    }

    /// Same rasters with the clutter offset set to `rate * years`.
    pub fn apply_tree_growth(&self, rate_m_per_year: f64, years: f64) -> Result<Self, ElevationError> {
        if !(rate_m_per_year >= 0.0) {
            return Err(ElevationError::NegativeInput("tree growth rate"));
        }
        if !(years >= 0.0) {
            return Err(ElevationError::NegativeInput("tree growth years"));
        }
        self.with_tree_growth_offset(rate_m_per_year * years)
    }

    pub fn with_tree_growth_offset(&self, offset_m: f64) -> Result<Self, ElevationError> {
        if !(offset_m >= 0.0) || !offset_m.is_finite() {
            return Err(ElevationError::NegativeInput("tree growth offset"));
        }
        Ok(Self {
            tree_growth_offset: offset_m,
            ..self.clone()
        })
    }

    pub fn terrain_sample(&self, p: LatLon) -> Result<TerrainSample, ElevationError> {
        if let Some(h) = sample_or_outside(&self.dtm, p)? {
            return Ok(TerrainSample {
                height: h,
                source: TerrainSource::Primary,
            });
        }
        if let Some(fb) = &self.fallback_dtm {
            if let Some(h) = sample_or_outside(fb, p)? {
                return Ok(TerrainSample {
                    height: h,
                    source: TerrainSource::Fallback,
                });
            }
        }
        Err(ElevationError::NoCoverage { lat: p.lat, lon: p.lon })
    }

    pub fn terrain_height_at(&self, p: LatLon) -> Result<f64, ElevationError> {
        self.terrain_sample(p).map(|s| s.height)
    }

    /// Clutter height at `p`; zero over fallback-only terrain and where the
    /// surface model has no data.
    pub fn clutter_height_at(&self, p: LatLon) -> Result<f64, ElevationError> {
        let terrain = self.terrain_sample(p)?;
        self.clutter_over(p, terrain)
    }

    /// Terrain and clutter height at `p` in one pass.
    pub fn terrain_and_clutter_at(&self, p: LatLon) -> Result<(TerrainSample, f64), ElevationError> {
        let terrain = self.terrain_sample(p)?;
        let clutter = self.clutter_over(p, terrain)?;
        Ok((terrain, clutter))
    }

    fn clutter_over(&self, p: LatLon, terrain: TerrainSample) -> Result<f64, ElevationError> {
        if terrain.source == TerrainSource::Fallback {
            return Ok(0.0);
        }
        let Some(surface) = sample_or_outside(&self.dsm, p)? else {
            return Ok(0.0);
        };
        Ok((surface - self.tree_growth_offset - terrain.height).max(0.0))
    }
}

// A point that cannot be projected into a grid's CRS is simply not covered by
// that grid; the stack reports NoCoverage if nothing else covers it.
fn sample_or_outside(grid: &ElevationGrid, p: LatLon) -> Result<Option<f64>, ElevationError> {
    match grid.sample_height(p) {
        Ok(v) => Ok(v),
        Err(ElevationError::TransformFailure { .. }) if p.is_valid() => Ok(None),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn constant_grid(kind: GridKind, value: f32) -> ElevationGrid {
        // 10 x 10 cells of 0.001 degrees with the top-left corner at (45.01, -76.0)
        ElevationGrid::new(
            kind,
            Crs::WGS84,
            GeoTransform::north_up(-76.0, 45.01, 0.001, 0.001),
            10,
            10,
            -9999.0,
            vec![value; 100],
        )
        .unwrap()
    }

    #[test]
    fn constant_field_samples_constant() {
        let g = constant_grid(GridKind::Terrain, 100.0);
        for p in [
            LatLon::new(45.005, -75.995),
            LatLon::new(45.0001, -75.9999),
            LatLon::new(45.0093, -75.9907),
        ] {
            assert_eq!(g.sample_height(p).unwrap(), Some(100.0));
        }
    }

    #[test]
    fn bilinear_center_of_two_by_two() {
        // rows: [0, 0] over [10, 10]; the point midway between the four centers
        let g = ElevationGrid::new(
            GridKind::Terrain,
            Crs::WGS84,
            GeoTransform::north_up(0.0, 2.0, 1.0, 1.0),
            2,
            2,
            -9999.0,
            vec![0.0, 0.0, 10.0, 10.0],
        )
        .unwrap();
        let v = g.sample_world(1.0, 1.0).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
    }

    #[test]
    fn outside_extent_is_nodata() {
        let g = constant_grid(GridKind::Terrain, 100.0);
        assert_eq!(g.sample_height(LatLon::new(45.2, -75.995)).unwrap(), None);
        assert_eq!(g.sample_height(LatLon::new(45.005, -76.5)).unwrap(), None);
    }

    #[test]
    fn nodata_neighbour_poisons_sample() {
        let mut h = vec![5.0f32; 9];
        h[4] = -9999.0;
        let g = ElevationGrid::new(
            GridKind::Terrain,
            Crs::WGS84,
            GeoTransform::north_up(0.0, 3.0, 1.0, 1.0),
            3,
            3,
            -9999.0,
            h,
        )
        .unwrap();
        assert_eq!(g.sample_world(1.2, 1.8), None);
        // exact center of a valid cell only touches that cell
        assert_eq!(g.sample_world(0.5, 2.5), Some(5.0));
    }

    #[test]
    fn cell_centers_reproduce_values() {
        let heights: Vec<f32> = (0..12).map(|i| (i * 7 % 5) as f32 * 3.25 + 100.0).collect();
        let g = ElevationGrid::new(
            GridKind::Terrain,
            Crs::WGS84,
            GeoTransform::north_up(10.0, 20.0, 0.5, 0.25),
            4,
            3,
            -9999.0,
            heights.clone(),
        )
        .unwrap();
        for row in 0..3 {
            for col in 0..4 {
                let (x, y) = g.transform().apply(col as f64 + 0.5, row as f64 + 0.5);
                let v = g.sample_world(x, y).unwrap();
                assert!((v - f64::from(heights[row * 4 + col])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_out_of_range_heights_and_singular_transform() {
        let bad = ElevationGrid::new(
            GridKind::Terrain,
            Crs::WGS84,
            GeoTransform::north_up(0.0, 1.0, 1.0, 1.0),
            1,
            1,
            -9999.0,
            vec![12_000.0],
        );
        assert!(matches!(bad, Err(ElevationError::InvalidGrid(_))));
        let singular = ElevationGrid::new(
            GridKind::Terrain,
            Crs::WGS84,
            GeoTransform([0.0, 1.0, 1.0, 0.0, 1.0, 1.0]),
            1,
            1,
            -9999.0,
            vec![1.0],
        );
        assert!(matches!(singular, Err(ElevationError::InvalidGrid(_))));
    }

    fn stack(dtm: f32, dsm: f32, fallback: Option<f32>) -> ElevationStack {
        ElevationStack::new(
            constant_grid(GridKind::Terrain, dtm),
            constant_grid(GridKind::Surface, dsm),
            fallback.map(|v| {
                ElevationGrid::new(
                    GridKind::Terrain,
                    Crs::WGS84,
                    GeoTransform::north_up(-77.0, 46.0, 0.01, 0.01),
                    200,
                    200,
                    -9999.0,
                    vec![v; 40_000],
                )
                .unwrap()
            }),
        )
        .unwrap()
    }

    #[test]
    fn terrain_prefers_primary_then_fallback() {
        let s = stack(120.0, 130.0, Some(50.0));
        assert_eq!(s.terrain_height_at(LatLon::new(45.005, -75.995)).unwrap(), 120.0);
        let outside = LatLon::new(45.5, -76.5);
        assert_eq!(s.terrain_height_at(outside).unwrap(), 50.0);
        assert_eq!(s.clutter_height_at(outside).unwrap(), 0.0);

        let bare = stack(120.0, 130.0, None);
        assert!(matches!(
            bare.terrain_height_at(outside),
            Err(ElevationError::NoCoverage { .. })
        ));
    }

    #[test]
    fn clutter_cases() {
        let p = LatLon::new(45.005, -75.995);
        assert_eq!(stack(100.0, 120.0, None).clutter_height_at(p).unwrap(), 20.0);
        assert_eq!(stack(100.0, 99.0, None).clutter_height_at(p).unwrap(), 0.0);
        let grown = stack(100.0, 120.0, None).apply_tree_growth(0.5, 7.0).unwrap();
        assert_eq!(grown.tree_growth_offset(), 3.5);
        assert_eq!(grown.clutter_height_at(p).unwrap(), 16.5);
        let shallow = stack(100.0, 102.0, None).with_tree_growth_offset(3.5).unwrap();
        assert_eq!(shallow.clutter_height_at(p).unwrap(), 0.0);
    }

    #[test]
    fn tree_growth_identity_and_errors() {
        let s = stack(100.0, 120.0, None);
        let same = s.apply_tree_growth(0.0, 10.0).unwrap();
        let p = LatLon::new(45.005, -75.995);
        assert_eq!(same.clutter_height_at(p).unwrap(), s.clutter_height_at(p).unwrap());
        assert!(matches!(
            s.apply_tree_growth(-0.5, 7.0),
            Err(ElevationError::NegativeInput(_))
        ));
        assert!(matches!(
            s.apply_tree_growth(0.5, -1.0),
            Err(ElevationError::NegativeInput(_))
        ));
    }

    #[test]
    fn invalid_coordinate_is_transform_failure() {
        let g = constant_grid(GridKind::Terrain, 1.0);
        assert!(matches!(
            g.sample_height(LatLon::new(f64::NAN, 0.0)),
            Err(ElevationError::TransformFailure { .. })
        ));
    }
}
