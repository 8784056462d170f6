//! Point-to-area prediction over a regular latitude/longitude grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{predict, PredictionResult, SafeConfig, SafeError};
use crate::elevation::{write_raster, Crs, ElevationError, ElevationStack, GeoTransform};
use crate::geodesy::{distance_m, LatLon};
use crate::p1812::LinkParams;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub south: f64,
    pub west: f64,
    pub north: f64,
    pub east: f64,
}

impl BoundingBox {
    pub fn new(south: f64, west: f64, north: f64, east: f64) -> Self {
        Self {
            south,
            west,
            north,
            east,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.north > self.south && self.east > self.west)
    }
}

impl std::str::FromStr for BoundingBox {
    type Err = String;

    /// `south,west,north,east` in degrees.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("bad bounding box '{s}': {e}"))?;
        match v[..] {
            [south, west, north, east] => Ok(Self::new(south, west, north, east)),
            _ => Err(format!("bounding box needs south,west,north,east; got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    /// Closer to the transmitter than the model's minimum path length.
    OutOfDomain,
    /// Elevation data does not cover the cell or the path to it.
    NoCoverage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageCell {
    pub row: usize,
    pub col: usize,
    pub center: LatLon,
    pub status: CellStatus,
    pub result: Option<PredictionResult>,
}

/// Row 0 is the northernmost row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageGrid {
    pub rows: usize,
    pub cols: usize,
    pub region: BoundingBox,
    pub cells: Vec<CoverageCell>,
}

impl CoverageGrid {
    pub fn cell_size_deg(&self) -> (f64, f64) {
        (
            (self.region.east - self.region.west) / self.cols as f64,
            (self.region.north - self.region.south) / self.rows as f64,
        )
    }

    /// Writes `pl_safe` as a float32 GeoTIFF in WGS84; cells without a
    /// prediction are NaN.
    pub fn write_geotiff(&self, path: &Path) -> Result<(), ElevationError> {
        let (dlon, dlat) = self.cell_size_deg();
        let data: Vec<f32> = self
            .cells
            .iter()
            .map(|c| c.result.as_ref().map_or(f32::NAN, |r| r.pl_safe as f32))
            .collect();
        write_raster(
            path,
            Crs::WGS84,
            GeoTransform::north_up(self.region.west, self.region.north, dlon, dlat),
            self.cols,
            self.rows,
            f64::NAN,
            &data,
        )
    }
}

fn cell_centers(region: &BoundingBox, resolution_m: f64) -> (usize, usize, Vec<LatLon>) {
    let mid_lat = 0.5 * (region.south + region.north);
    let mid_lon = 0.5 * (region.west + region.east);
    let height_m = distance_m(LatLon::new(region.south, mid_lon), LatLon::new(region.north, mid_lon));
    let width_m = distance_m(LatLon::new(mid_lat, region.west), LatLon::new(mid_lat, region.east));
    let rows = ((height_m / resolution_m).round() as usize).max(1);
    let cols = ((width_m / resolution_m).round() as usize).max(1);
    let dlat = (region.north - region.south) / rows as f64;
    let dlon = (region.east - region.west) / cols as f64;
    let centers = (0..rows)
        .flat_map(|r| {
            (0..cols).map(move |c| {
                LatLon::new(
                    region.north - (r as f64 + 0.5) * dlat,
                    region.west + (c as f64 + 0.5) * dlon,
                )
            })
        })
        .collect();
    (rows, cols, centers)
}

/// One prediction per cell centre of `region`, with `template` supplying the
/// transmitter, frequency and receiver height. Cells too close to the
/// transmitter or without elevation data are marked rather than failing the
/// run. The output does not depend on `exec`.
pub fn predict_grid(
    stack: &ElevationStack,
    template: &LinkParams,
    region: &BoundingBox,
    resolution_m: f64,
    config: &SafeConfig,
    exec: Execution,
) -> Result<CoverageGrid, SafeError> {
    if region.is_empty() {
        return Err(SafeError::EmptyRegion);
    }
    if !(resolution_m > 0.0 && resolution_m.is_finite()) {
        return Err(SafeError::InvalidConfig(format!(
            "grid resolution must be positive, got {resolution_m}"
        )));
    }
    config.validate()?;
    template.validate()?;
    let (rows, cols, centers) = cell_centers(region, resolution_m);

    let eval = |(i, center): (usize, &LatLon)| -> Result<CoverageCell, SafeError> {
        let link = LinkParams { rx: *center, ..*template };
        let (status, result) = match predict(stack, &link, config) {
            Ok(r) => (CellStatus::Ok, Some(r)),
            Err(e) if e.is_out_of_domain() => (CellStatus::OutOfDomain, None),
            Err(e) if e.is_no_coverage() => (CellStatus::NoCoverage, None),
            Err(e) => return Err(e),
        };
        Ok(CoverageCell {
            row: i / cols,
            col: i % cols,
            center: *center,
            status,
            result,
        })
    };
    let cells = match exec {
        Execution::Serial => centers.iter().enumerate().map(eval).collect::<Result<Vec<_>, _>>()?,
        Execution::Parallel => centers
            .par_iter()
            .enumerate()
            .map(eval)
            .collect::<Result<Vec<_>, _>>()?,
    };
    Ok(CoverageGrid {
        rows,
        cols,
        region: *region,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bbox_parse() {
        let b: BoundingBox = "45.2,-76.2,45.4,-76.0".parse().unwrap();
        assert_eq!(b, BoundingBox::new(45.2, -76.2, 45.4, -76.0));
        assert!("1,2,3".parse::<BoundingBox>().is_err());
        assert!(BoundingBox::new(1.0, 0.0, 1.0, 1.0).is_empty());
    }

    #[test]
    fn centers_cover_region() {
        let b = BoundingBox::new(45.0, -76.0, 45.01, -75.99);
        let (rows, cols, c) = cell_centers(&b, 100.0);
        assert_eq!(c.len(), rows * cols);
        assert_eq!(rows, 11);
        assert_eq!(cols, 8);
        assert!(c.iter().all(|p| p.lat > 45.0 && p.lat < 45.01 && p.lon > -76.0 && p.lon < -75.99));
        // one-cell region: the centre of the box
        let (r1, c1, one) = cell_centers(&b, 1e6);
        assert_eq!((r1, c1), (1, 1));
        assert!((one[0].lat - 45.005).abs() < 1e-12 && (one[0].lon + 75.995).abs() < 1e-12);
    }
}
