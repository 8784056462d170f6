//! Minimal GeoTIFF reader/writer for single-band elevation rasters.
//!
//! Georeferencing comes from `ModelTransformationTag`, or from a
//! `ModelTiepointTag` + `ModelPixelScaleTag` pair. The GeoKey directory
//! selects the CRS (geographic WGS84/NAD83 or UTM) and the vertical unit.

use super::{Crs, ElevationError, ElevationGrid, GeoTransform, GridKind};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use tiff::decoder::{Decoder, DecodingResult, Limits};
use tiff::encoder::{colortype::Gray32Float, TiffEncoder};
use tiff::tags::Tag;
use tiff::ColorType;

const KEY_MODEL_TYPE: u16 = 1024;
const KEY_RASTER_TYPE: u16 = 1025;
const KEY_GEOGRAPHIC_TYPE: u16 = 2048;
const KEY_PROJECTED_CS_TYPE: u16 = 3072;
const KEY_PROJ_LINEAR_UNITS: u16 = 3076;
const KEY_VERTICAL_UNITS: u16 = 4099;

const MODEL_TYPE_PROJECTED: u16 = 1;
const MODEL_TYPE_GEOGRAPHIC: u16 = 2;
const RASTER_PIXEL_IS_POINT: u16 = 2;
const UNIT_METRE: u16 = 9001;
const USER_DEFINED: u16 = 32767;

fn malformed(msg: impl Into<String>) -> ElevationError {
    ElevationError::MalformedRaster(msg.into())
}

fn tiff_err(e: tiff::TiffError) -> ElevationError {
    malformed(e.to_string())
}

/// Short-valued GeoKeys (those stored inline in the directory).
fn parse_geokeys(dir: &[u16]) -> Result<Vec<(u16, u16)>, ElevationError> {
    if dir.len() < 4 {
        return Err(malformed("GeoKey directory too short"));
    }
    let count = usize::from(dir[3]);
    if dir.len() < 4 + 4 * count {
        return Err(malformed("GeoKey directory truncated"));
    }
    Ok(dir[4..4 + 4 * count]
        .chunks_exact(4)
        .filter(|e| e[1] == 0)
        .map(|e| (e[0], e[3]))
        .collect())
}

fn key(keys: &[(u16, u16)], id: u16) -> Option<u16> {
    keys.iter().find(|(k, _)| *k == id).map(|(_, v)| *v)
}

/// Reads a single-band georeferenced raster of heights in meters.
pub fn load_grid(path: &Path, kind: GridKind) -> Result<ElevationGrid, ElevationError> {
    if !path.exists() {
        return Err(ElevationError::FileMissing(path.to_path_buf()));
    }
    let file = File::open(path).map_err(|source| ElevationError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut dec = Decoder::new(BufReader::new(file))
        .map_err(tiff_err)?
        .with_limits(Limits::unlimited());

    match dec.colortype().map_err(tiff_err)? {
        ColorType::Gray(_) => {}
        other => return Err(malformed(format!("expected a single band, found {other:?}"))),
    }
    let (width, height) = dec.dimensions().map_err(tiff_err)?;

    let geokeys = match dec.find_tag(Tag::GeoKeyDirectoryTag).map_err(tiff_err)? {
        Some(v) => parse_geokeys(&v.into_u16_vec().map_err(tiff_err)?)?,
        None => return Err(malformed("missing GeoKey directory")),
    };
    let crs = resolve_crs(&geokeys)?;
    if let Some(units) = key(&geokeys, KEY_VERTICAL_UNITS) {
        if units != UNIT_METRE {
            return Err(ElevationError::UnitError(format!("vertical unit code {units}")));
        }
    }
    let pixel_is_point = key(&geokeys, KEY_RASTER_TYPE) == Some(RASTER_PIXEL_IS_POINT);

    let transform = read_transform(&mut dec, pixel_is_point)?;

    let nodata = match dec.find_tag(Tag::GdalNodata).map_err(tiff_err)? {
        Some(v) => {
            let s = v.into_string().map_err(tiff_err)?;
            let s = s.trim_matches(|c: char| c == '\0' || c.is_whitespace());
            s.parse::<f64>()
                .map_err(|_| malformed(format!("unparseable nodata value `{s}`")))?
        }
        None => f64::NAN,
    };

    let heights: Vec<f32> = match dec.read_image().map_err(tiff_err)? {
        DecodingResult::F32(v) => v,
        DecodingResult::F64(v) => v.into_iter().map(|x| x as f32).collect(),
        DecodingResult::I16(v) => v.into_iter().map(f32::from).collect(),
        DecodingResult::U16(v) => v.into_iter().map(f32::from).collect(),
        DecodingResult::I32(v) => v.into_iter().map(|x| x as f32).collect(),
        DecodingResult::U8(v) => v.into_iter().map(f32::from).collect(),
        DecodingResult::I8(v) => v.into_iter().map(f32::from).collect(),
        _ => return Err(malformed("unsupported sample format")),
    };

    ElevationGrid::new(
        kind,
        crs,
        transform,
        width as usize,
        height as usize,
        nodata,
        heights,
    )
    .map_err(|e| match e {
        ElevationError::InvalidGrid(msg) => malformed(msg),
        other => other,
    })
}

fn resolve_crs(keys: &[(u16, u16)]) -> Result<Crs, ElevationError> {
    match key(keys, KEY_MODEL_TYPE) {
        Some(MODEL_TYPE_GEOGRAPHIC) => {
            let code = key(keys, KEY_GEOGRAPHIC_TYPE).unwrap_or(4326);
            match Crs::from_epsg(code) {
                Some(crs @ Crs::Geographic { .. }) => Ok(crs),
                _ => Err(malformed(format!("unsupported geographic system EPSG:{code}"))),
            }
        }
        Some(MODEL_TYPE_PROJECTED) => {
            let code = key(keys, KEY_PROJECTED_CS_TYPE)
                .filter(|&c| c != USER_DEFINED)
                .ok_or_else(|| malformed("projected raster without an EPSG code"))?;
            if let Some(units) = key(keys, KEY_PROJ_LINEAR_UNITS) {
                if units != UNIT_METRE {
                    return Err(ElevationError::UnitError(format!("linear unit code {units}")));
                }
            }
            match Crs::from_epsg(code) {
                Some(crs @ Crs::Utm { .. }) => Ok(crs),
                _ => Err(malformed(format!("unsupported projected system EPSG:{code}"))),
            }
        }
        Some(other) => Err(malformed(format!("unsupported model type {other}"))),
        None => Err(malformed("missing model type GeoKey")),
    }
}

fn read_transform<R: std::io::Read + std::io::Seek>(
    dec: &mut Decoder<R>,
    pixel_is_point: bool,
) -> Result<GeoTransform, ElevationError> {
    // PixelIsPoint rasters anchor coordinates on pixel centers; shift to corners.
    let shift = if pixel_is_point { -0.5 } else { 0.0 };

    if let Some(v) = dec.find_tag(Tag::ModelTransformationTag).map_err(tiff_err)? {
        let m = v.into_f64_vec().map_err(tiff_err)?;
        if m.len() != 16 {
            return Err(malformed("ModelTransformation must hold 16 values"));
        }
        let t = GeoTransform([m[3], m[0], m[1], m[7], m[4], m[5]]);
        let (x0, y0) = t.apply(shift, shift);
        return Ok(GeoTransform([x0, m[0], m[1], y0, m[4], m[5]]));
    }

    let tie = dec.find_tag(Tag::ModelTiepointTag).map_err(tiff_err)?;
    let scale = dec.find_tag(Tag::ModelPixelScaleTag).map_err(tiff_err)?;
    match (tie, scale) {
        (Some(tie), Some(scale)) => {
            let tie = tie.into_f64_vec().map_err(tiff_err)?;
            let scale = scale.into_f64_vec().map_err(tiff_err)?;
            if tie.len() < 6 || scale.len() < 2 {
                return Err(malformed("incomplete tiepoint or pixel scale"));
            }
            let (i, j, x, y) = (tie[0] + shift, tie[1] + shift, tie[3], tie[4]);
            let (sx, sy) = (scale[0], scale[1]);
            Ok(GeoTransform([x - i * sx, sx, 0.0, y + j * sy, 0.0, -sy]))
        }
        _ => Err(malformed("no georeferencing transform")),
    }
}

/// Writes `grid` as a float32 GeoTIFF. Only north-up transforms are supported.
pub fn write_grid(path: &Path, grid: &ElevationGrid) -> Result<(), ElevationError> {
    write_raster(
        path,
        grid.crs(),
        grid.transform(),
        grid.width(),
        grid.height(),
        grid.nodata(),
        grid.heights(),
    )
}

/// Writes any single-band float32 raster (row-major, top row first).
pub fn write_raster(
    path: &Path,
    crs: Crs,
    t: GeoTransform,
    width: usize,
    height: usize,
    nodata: f64,
    data: &[f32],
) -> Result<(), ElevationError> {
    if data.len() != width * height {
        return Err(malformed("sample count does not match raster size"));
    }
    if !t.is_axis_aligned() {
        return Err(malformed("only axis-aligned transforms can be written"));
    }
    let io_err = |source: std::io::Error| ElevationError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut enc = TiffEncoder::new(BufWriter::new(file)).map_err(tiff_err)?;
    let mut image = enc
        .new_image::<Gray32Float>(width as u32, height as u32)
        .map_err(tiff_err)?;

    let c = t.0;
    let geokeys: Vec<u16> = match crs {
        Crs::Geographic { epsg } => vec![
            1, 1, 0, 4, //
            KEY_MODEL_TYPE, 0, 1, MODEL_TYPE_GEOGRAPHIC,
            KEY_RASTER_TYPE, 0, 1, 1,
            KEY_GEOGRAPHIC_TYPE, 0, 1, epsg,
            KEY_VERTICAL_UNITS, 0, 1, UNIT_METRE,
        ],
        Crs::Utm { epsg, .. } => vec![
            1, 1, 0, 5, //
            KEY_MODEL_TYPE, 0, 1, MODEL_TYPE_PROJECTED,
            KEY_RASTER_TYPE, 0, 1, 1,
            KEY_PROJECTED_CS_TYPE, 0, 1, epsg,
            KEY_PROJ_LINEAR_UNITS, 0, 1, UNIT_METRE,
            KEY_VERTICAL_UNITS, 0, 1, UNIT_METRE,
        ],
    };
    let dir = image.encoder();
    dir.write_tag(Tag::ModelPixelScaleTag, &[c[1], -c[5], 0.0][..])
        .map_err(tiff_err)?;
    dir.write_tag(Tag::ModelTiepointTag, &[0.0, 0.0, 0.0, c[0], c[3], 0.0][..])
        .map_err(tiff_err)?;
    dir.write_tag(Tag::GeoKeyDirectoryTag, &geokeys[..])
        .map_err(tiff_err)?;
    let nodata = if nodata.is_nan() {
        "nan".to_string()
    } else {
        format!("{nodata}")
    };
    dir.write_tag(Tag::GdalNodata, nodata.as_str()).map_err(tiff_err)?;
    image.write_data(data).map_err(tiff_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::LatLon;

    #[test]
    fn geographic_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dtm.tif");
        let grid = ElevationGrid::new(
            GridKind::Terrain,
            Crs::WGS84,
            GeoTransform::north_up(-76.0, 45.01, 0.001, 0.001),
            10,
            10,
            -9999.0,
            vec![100.0; 100],
        )
        .unwrap();
        write_grid(&path, &grid).unwrap();
        let back = load_grid(&path, GridKind::Terrain).unwrap();
        assert_eq!(back.crs(), Crs::WGS84);
        assert_eq!(back.width(), 10);
        assert_eq!(back.nodata(), -9999.0);
        assert_eq!(back.sample_height(LatLon::new(45.005, -75.995)).unwrap(), Some(100.0));
    }

    #[test]
    fn utm_one_meter_raster_reports_resolution() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hrdem.tif");
        // 1 km x 1 km at 1 m
        let grid = ElevationGrid::new(
            GridKind::Surface,
            Crs::utm_wgs84(18, true),
            GeoTransform::north_up(413_000.0, 5_017_000.0, 1.0, 1.0),
            1000,
            1000,
            -32767.0,
            vec![80.0; 1_000_000],
        )
        .unwrap();
        write_grid(&path, &grid).unwrap();
        let back = load_grid(&path, GridKind::Surface).unwrap();
        assert_eq!(back.resolution(), (1.0, 1.0));
        assert_eq!(back.crs(), Crs::utm_wgs84(18, true));
        assert_eq!(back.sample_height(LatLon::new(45.30, -76.10)).unwrap(), Some(80.0));
    }

    #[test]
    fn missing_file() {
        let err = load_grid(Path::new("/nonexistent/dtm.tif"), GridKind::Terrain).unwrap_err();
        assert!(matches!(err, ElevationError::FileMissing(_)));
    }

    fn write_raw(path: &Path, keys: Option<&[u16]>, georef: bool) {
        let file = File::create(path).unwrap();
        let mut enc = TiffEncoder::new(BufWriter::new(file)).unwrap();
        let mut image = enc.new_image::<Gray32Float>(4, 4).unwrap();
        let dir = image.encoder();
        if georef {
            dir.write_tag(Tag::ModelPixelScaleTag, &[1.0, 1.0, 0.0][..]).unwrap();
            dir.write_tag(Tag::ModelTiepointTag, &[0.0, 0.0, 0.0, 500_000.0, 5_000_000.0, 0.0][..])
                .unwrap();
        }
        if let Some(k) = keys {
            dir.write_tag(Tag::GeoKeyDirectoryTag, k).unwrap();
        }
        image.write_data(&[1.0f32; 16]).unwrap();
    }

    #[test]
    fn no_transform_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plain.tif");
        let keys = [1, 1, 0, 2, KEY_MODEL_TYPE, 0, 1, 1, KEY_PROJECTED_CS_TYPE, 0, 1, 32618];
        write_raw(&path, Some(&keys), false);
        let err = load_grid(&path, GridKind::Terrain).unwrap_err();
        assert!(matches!(err, ElevationError::MalformedRaster(_)), "{err}");
    }

    #[test]
    fn unsupported_crs_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lcc.tif");
        // EPSG:3978 (Canada Atlas Lambert) is not supported
        let keys = [1, 1, 0, 2, KEY_MODEL_TYPE, 0, 1, 1, KEY_PROJECTED_CS_TYPE, 0, 1, 3978];
        write_raw(&path, Some(&keys), true);
        assert!(matches!(
            load_grid(&path, GridKind::Terrain),
            Err(ElevationError::MalformedRaster(_))
        ));
    }

    #[test]
    fn feet_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("feet.tif");
        let keys = [
            1, 1, 0, 3, KEY_MODEL_TYPE, 0, 1, 1, KEY_PROJECTED_CS_TYPE, 0, 1, 32618,
            KEY_VERTICAL_UNITS, 0, 1, 9002,
        ];
        write_raw(&path, Some(&keys), true);
        assert!(matches!(
            load_grid(&path, GridKind::Terrain),
            Err(ElevationError::UnitError(_))
        ));
    }
}
