//! Synthetic elevation stacks for tests and demonstrations.
//!
//! Scenes live on a WGS84 latitude/longitude grid around a centre point and
//! are described by closures of local east/north offsets in metres.

use crate::elevation::{Crs, ElevationError, ElevationGrid, ElevationStack, GeoTransform, GridKind};
use crate::geodesy::LatLon;

const M_PER_DEG_LAT: f64 = 111_132.0;

/// Square scene of `2 * half_extent_m` on a side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneGrid {
    pub center: LatLon,
    pub half_extent_m: f64,
    pub resolution_m: f64,
}

impl SceneGrid {
    fn m_per_deg_lon(&self) -> f64 {
        M_PER_DEG_LAT * self.center.lat.to_radians().cos()
    }

    /// Geographic position of a local east/north offset.
    pub fn to_latlon(&self, east_m: f64, north_m: f64) -> LatLon {
        LatLon::new(
            self.center.lat + north_m / M_PER_DEG_LAT,
            self.center.lon + east_m / self.m_per_deg_lon(),
        )
    }

    /// Local east/north offset of a geographic position.
    pub fn to_local(&self, p: LatLon) -> (f64, f64) {
        (
            (p.lon - self.center.lon) * self.m_per_deg_lon(),
            (p.lat - self.center.lat) * M_PER_DEG_LAT,
        )
    }

    fn raster(&self, kind: GridKind, f: &dyn Fn(f64, f64) -> f64) -> Result<ElevationGrid, ElevationError> {
        let n = (2.0 * self.half_extent_m / self.resolution_m).ceil() as usize;
        let dlat = self.resolution_m / M_PER_DEG_LAT;
        let dlon = self.resolution_m / self.m_per_deg_lon();
        let west = self.center.lon - dlon * n as f64 / 2.0;
        let north = self.center.lat + dlat * n as f64 / 2.0;
        let mut heights = Vec::with_capacity(n * n);
        for row in 0..n {
            for col in 0..n {
                let p = LatLon::new(north - (row as f64 + 0.5) * dlat, west + (col as f64 + 0.5) * dlon);
                let (e, nm) = self.to_local(p);
                heights.push(f(e, nm) as f32);
            }
        }
        ElevationGrid::new(
            kind,
            Crs::WGS84,
            GeoTransform::north_up(west, north, dlon, dlat),
            n,
            n,
            -9999.0,
            heights,
        )
    }

    /// Stack with terrain `terrain(e, n)` and clutter `clutter(e, n)` (both m).
    pub fn stack(
        &self,
        terrain: impl Fn(f64, f64) -> f64,
        clutter: impl Fn(f64, f64) -> f64,
    ) -> Result<ElevationStack, ElevationError> {
        let dtm = self.raster(GridKind::Terrain, &terrain)?;
        let dsm = self.raster(GridKind::Surface, &|e, n| terrain(e, n) + clutter(e, n).max(0.0))?;
        ElevationStack::new(dtm, dsm, None)
    }
}

/// Gently rolling terrain, 60-110 m.
pub fn rolling_terrain(e: f64, n: f64) -> f64 {
    85.0 + 12.0 * (e / 1700.0).sin() * (n / 2300.0).cos() + 8.0 * ((e + n) / 900.0).sin()
}

/// Patchy forest covering roughly half the area; canopy 15-23 m where present.
pub fn patchy_forest(e: f64, n: f64) -> f64 {
    let mask = (e / 310.0).sin() + (n / 270.0).cos() + 0.6 * ((e - n) / 190.0).sin();
    if mask > 0.2 {
        19.0 + 4.0 * ((e + 2.0 * n) / 97.0).sin()
    } else {
        0.0
    }
}

/// Rolling, partly forested scene around `center`.
pub fn forest_scene(center: LatLon, half_extent_m: f64, resolution_m: f64) -> Result<(SceneGrid, ElevationStack), ElevationError> {
    let grid = SceneGrid {
        center,
        half_extent_m,
        resolution_m,
    };
    let stack = grid.stack(rolling_terrain, patchy_forest)?;
    Ok((grid, stack))
}
