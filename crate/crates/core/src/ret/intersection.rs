//! Where the direct ray runs through the canopy.
//!
//! The ray is straight in effective-earth coordinates (k = 4/3): terrain is
//! raised by the earth bulge `x (D - x) / (2 k a)` and compared against the
//! straight chord between the antennas.

use serde::Serialize;

use super::RetError;
use crate::elevation::{ElevationStack, TerrainSource};
use crate::geodesy::{GeodesicPath, LatLon, PathSampler};

/// Effective earth radius for ray bending, metres.
pub const EFFECTIVE_EARTH_RADIUS_M: f64 = 6_371_000.0 * 4.0 / 3.0;

pub const DEFAULT_STEP_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoliageIntersection {
    /// Slant length of the ray inside clutter, metres.
    pub total_depth: f64,
    /// Elevation angle magnitude at the first canopy entry, degrees.
    pub theta: Option<f64>,
    /// Along-path intervals (metres from the transmitter) inside clutter.
    pub segments: Vec<(f64, f64)>,
    /// Whether any sample fell back to the coarse terrain grid.
    pub used_fallback_terrain: bool,
}

impl FoliageIntersection {
    pub fn clear() -> Self {
        Self {
            total_depth: 0.0,
            theta: None,
            segments: Vec::new(),
            used_fallback_terrain: false,
        }
    }
}

/// Ground sample used by [`intersect_ray`]: terrain height, clutter height
/// and whether the terrain came from the fallback grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundSample {
    pub terrain_m: f64,
    pub clutter_m: f64,
    pub fallback: bool,
}

/// Marches along a path of `length_m` from an antenna at `tx_top_m` to one
/// at `rx_top_m` (heights above sea level), sampling the ground at the
/// midpoint of each step.
pub fn intersect_ray<E>(
    length_m: f64,
    tx_top_m: f64,
    rx_top_m: f64,
    step_m: f64,
    mut ground: impl FnMut(f64) -> Result<GroundSample, E>,
) -> Result<FoliageIntersection, E>
where
    E: From<RetError>,
{
    if !(step_m > 0.0) || !step_m.is_finite() {
        return Err(RetError::NonpositiveStep(step_m).into());
    }
    if !(length_m > 0.0) {
        return Ok(FoliageIntersection::clear());
    }
    let n = (length_m / step_m).ceil().max(1.0) as usize;
    let dx = length_m / n as f64;
    let slope = (rx_top_m - tx_top_m) / length_m;

    let mut out = FoliageIntersection::clear();
    let mut open: Option<f64> = None;
    for i in 0..n {
        let x = (i as f64 + 0.5) * dx;
        let g = ground(x)?;
        out.used_fallback_terrain |= g.fallback;
        let bulge = x * (length_m - x) / (2.0 * EFFECTIVE_EARTH_RADIUS_M);
        let floor = g.terrain_m + bulge;
        let ray = tx_top_m + slope * x;
        let inside = g.clutter_m > 0.0 && ray > floor && ray < floor + g.clutter_m;
        if inside {
            // ray elevation relative to the local horizontal
            let local = slope - (length_m - 2.0 * x) / (2.0 * EFFECTIVE_EARTH_RADIUS_M);
            out.total_depth += dx * (1.0 + local * local).sqrt();
            if out.theta.is_none() {
                out.theta = Some(local.atan().to_degrees().abs());
            }
            if open.is_none() {
                open = Some(x - 0.5 * dx);
            }
        } else if let Some(start) = open.take() {
            out.segments.push((start, x - 0.5 * dx));
        }
    }
    if let Some(start) = open {
        out.segments.push((start, length_m));
    }
    Ok(out)
}

/// Ray from `tx_height_m` above ground at `tx` to `rx_height_m` above ground
/// at `rx`, through the clutter of `stack`.
pub fn intersect_ray_with_clutter(
    stack: &ElevationStack,
    tx: LatLon,
    tx_height_m: f64,
    rx: LatLon,
    rx_height_m: f64,
    step_m: f64,
) -> Result<FoliageIntersection, RetError> {
    if !(step_m > 0.0) || !step_m.is_finite() {
        return Err(RetError::NonpositiveStep(step_m));
    }
    let path = GeodesicPath::new(tx, rx);
    let sampler = PathSampler::new(&path, 100.0);
    let tx_top = stack.terrain_height_at(tx)? + tx_height_m;
    let rx_top = stack.terrain_height_at(rx)? + rx_height_m;
    intersect_ray(path.length_m(), tx_top, rx_top, step_m, |x| {
        let (terrain, clutter) = stack.terrain_and_clutter_at(sampler.point_at(x))?;
        Ok::<_, RetError>(GroundSample {
            terrain_m: terrain.height,
            clutter_m: clutter,
            fallback: terrain.source == TerrainSource::Fallback,
        })
    })
}
