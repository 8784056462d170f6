//! Transmitter-to-receiver path profiles.
//!
//! Profiles are sampled at equal spacing along the WGS84 geodesic, with
//! `n = ceil(d / max_spacing) + 1` points so both endpoints are exact and
//! the spacing never exceeds `max_spacing`.

use crate::elevation::{ElevationError, ElevationStack};
use crate::geodesy::{GeodesicPath, LatLon};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_SPACING_M: f64 = 30.0;
pub const DEFAULT_DETECTION_THRESHOLD_M: f64 = 4.0;
/// Shortest path accepted by the terrain model.
pub const MIN_PATH_M: f64 = 250.0;

const SPACING_TOLERANCE_KM: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("transmitter and receiver coincide")]
    DegenerateLink,
    #[error("at least two profile points are required, got {0}")]
    TooFewPoints(usize),
    #[error("path length {0:.1} m is shorter than the 250 m minimum")]
    PathTooShort(f64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("invalid profile: {0}")]
    Invalid(String),
    #[error(transparent)]
    Elevation(#[from] ElevationError),
}

/// Clutter categories with their representative heights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClutterClass {
    WaterOpenRural,
    Suburban,
    UrbanTreesForest,
    DenseUrban,
}

impl ClutterClass {
    pub const ALL: [ClutterClass; 4] = [
        ClutterClass::WaterOpenRural,
        ClutterClass::Suburban,
        ClutterClass::UrbanTreesForest,
        ClutterClass::DenseUrban,
    ];

    pub fn representative_height(self) -> f64 {
        match self {
            ClutterClass::WaterOpenRural => 0.0,
            ClutterClass::Suburban => 10.0,
            ClutterClass::UrbanTreesForest => 15.0,
            ClutterClass::DenseUrban => 20.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ClutterClass::WaterOpenRural => "water-open-rural",
            ClutterClass::Suburban => "suburban",
            ClutterClass::UrbanTreesForest => "urban-trees-forest",
            ClutterClass::DenseUrban => "dense-urban",
        }
    }
}

impl fmt::Display for ClutterClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClutterClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClutterClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown clutter class `{s}`"))
    }
}

/// Profile with unclassified clutter (DSM minus DTM, floored at zero).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawProfile {
    pub distances_km: Vec<f64>,
    pub terrain_m: Vec<f64>,
    pub raw_clutter_m: Vec<f64>,
    pub spacing_m: f64,
}

/// Profile as consumed by the terrain model: representative clutter heights
/// with both endpoints at zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathProfile {
    distances_km: Vec<f64>,
    terrain_m: Vec<f64>,
    clutter_m: Vec<f64>,
    spacing_m: f64,
}

fn check_geometry(distances_km: &[f64], terrain_m: &[f64], clutter_m: &[f64]) -> Result<f64, ProfileError> {
    let n = distances_km.len();
    if n < 2 {
        return Err(ProfileError::TooFewPoints(n));
    }
    if terrain_m.len() != n || clutter_m.len() != n {
        return Err(ProfileError::Invalid(format!(
            "vector lengths differ: {} distances, {} terrain, {} clutter",
            n,
            terrain_m.len(),
            clutter_m.len()
        )));
    }
    if distances_km[0] != 0.0 {
        return Err(ProfileError::Invalid("first distance must be 0".into()));
    }
    if distances_km
        .iter()
        .chain(terrain_m)
        .chain(clutter_m)
        .any(|v| !v.is_finite())
    {
        return Err(ProfileError::Invalid("non-finite value".into()));
    }
    let total = distances_km[n - 1];
    if !(total > 0.0) {
        return Err(ProfileError::Invalid("path length must be positive".into()));
    }
    let step = total / (n - 1) as f64;
    for (i, d) in distances_km.iter().enumerate() {
        if (d - step * i as f64).abs() > SPACING_TOLERANCE_KM {
            return Err(ProfileError::Invalid(format!(
                "point {i} at {d} km breaks equal spacing of {step} km"
            )));
        }
    }
    if clutter_m.iter().any(|&c| c < 0.0) {
        return Err(ProfileError::Invalid("negative clutter height".into()));
    }
    Ok(step * 1000.0)
}

impl PathProfile {
    /// Validates and wraps the three vectors. Endpoint clutter must be zero.
    pub fn new(distances_km: Vec<f64>, terrain_m: Vec<f64>, clutter_m: Vec<f64>) -> Result<Self, ProfileError> {
        let spacing_m = check_geometry(&distances_km, &terrain_m, &clutter_m)?;
        if clutter_m[0] != 0.0 || clutter_m[clutter_m.len() - 1] != 0.0 {
            return Err(ProfileError::Invalid("endpoint clutter must be 0".into()));
        }
        Ok(Self {
            distances_km,
            terrain_m,
            clutter_m,
            spacing_m,
        })
    }

    /// Equally spaced profile over `length_km` with constant terrain and no clutter.
    pub fn flat(length_km: f64, n: usize, terrain_m: f64) -> Result<Self, ProfileError> {
        if n < 2 {
            return Err(ProfileError::TooFewPoints(n));
        }
        let distances = (0..n)
            .map(|i| length_km * i as f64 / (n - 1) as f64)
            .collect();
        Self::new(distances, vec![terrain_m; n], vec![0.0; n])
    }

    pub fn distances_km(&self) -> &[f64] {
        &self.distances_km
    }

    pub fn terrain_m(&self) -> &[f64] {
        &self.terrain_m
    }

    pub fn clutter_m(&self) -> &[f64] {
        &self.clutter_m
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    pub fn len(&self) -> usize {
        self.distances_km.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances_km.is_empty()
    }

    pub fn length_km(&self) -> f64 {
        self.distances_km[self.distances_km.len() - 1]
    }

    /// The same path seen from the other end.
    pub fn reversed(&self) -> Self {
        let total = self.length_km();
        let n = self.len();
        Self {
            distances_km: (0..n)
                .map(|i| if i == n - 1 { total } else { self.distances_km[i] })
                .collect(),
            terrain_m: self.terrain_m.iter().rev().copied().collect(),
            clutter_m: self.clutter_m.iter().rev().copied().collect(),
            spacing_m: self.spacing_m,
        }
    }
}

/// `n` points on the WGS84 geodesic from `tx` to `rx`, equally spaced in arc length.
pub fn geodesic_points(tx: LatLon, rx: LatLon, n: usize) -> Result<Vec<LatLon>, ProfileError> {
    if n < 2 {
        return Err(ProfileError::TooFewPoints(n));
    }
    if (tx.lat - rx.lat).abs() <= 1e-9 && (tx.lon - rx.lon).abs() <= 1e-9 {
        return Err(ProfileError::DegenerateLink);
    }
    let path = GeodesicPath::new(tx, rx);
    let len = path.length_m();
    Ok((0..n)
        .map(|i| match i {
            0 => tx,
            i if i == n - 1 => rx,
            i => path.point_at(len * i as f64 / (n - 1) as f64),
        })
        .collect())
}

/// Number of points for a path of `length_m` at spacing no larger than `max_spacing_m`.
pub fn point_count(length_m: f64, max_spacing_m: f64) -> usize {
    // A path that is an exact multiple of the spacing (up to 1 µm of
    // geodesic round-off) must not gain an extra point.
    let intervals = ((length_m - 1e-6) / max_spacing_m).ceil().max(1.0);
    intervals as usize + 1
}

/// Samples terrain and raw clutter along the geodesic from `tx` to `rx`.
pub fn extract_profile(
    stack: &ElevationStack,
    tx: LatLon,
    rx: LatLon,
    max_spacing_m: f64,
) -> Result<RawProfile, ProfileError> {
    if !(max_spacing_m > 0.0) {
        return Err(ProfileError::NonPositive("profile spacing"));
    }
    if (tx.lat - rx.lat).abs() <= 1e-9 && (tx.lon - rx.lon).abs() <= 1e-9 {
        return Err(ProfileError::DegenerateLink);
    }
    let path = GeodesicPath::new(tx, rx);
    let length_m = path.length_m();
    if length_m < MIN_PATH_M {
        return Err(ProfileError::PathTooShort(length_m));
    }
    let n = point_count(length_m, max_spacing_m);
    let points = geodesic_points(tx, rx, n)?;
    let step_km = length_m / 1000.0 / (n - 1) as f64;

    let mut distances_km = Vec::with_capacity(n);
    let mut terrain_m = Vec::with_capacity(n);
    let mut raw_clutter_m = Vec::with_capacity(n);
    for (i, p) in points.iter().enumerate() {
        let (terrain, clutter) = stack.terrain_and_clutter_at(*p)?;
        distances_km.push(if i == n - 1 { length_m / 1000.0 } else { step_km * i as f64 });
        terrain_m.push(terrain.height);
        raw_clutter_m.push(clutter);
    }
    Ok(RawProfile {
        distances_km,
        terrain_m,
        raw_clutter_m,
        spacing_m: length_m / (n - 1) as f64,
    })
}

/// Replaces detected clutter by the class height, then zeroes both endpoints.
pub fn classify_clutter(
    raw: &RawProfile,
    class: ClutterClass,
    detection_threshold_m: f64,
) -> Result<PathProfile, ProfileError> {
    if !(detection_threshold_m > 0.0) {
        return Err(ProfileError::NonPositive("clutter detection threshold"));
    }
    let height = class.representative_height();
    let n = raw.raw_clutter_m.len();
    let clutter = raw
        .raw_clutter_m
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if i == 0 || i + 1 == n {
                0.0
            } else if c >= detection_threshold_m {
                height
            } else {
                0.0
            }
        })
        .collect();
    PathProfile::new(raw.distances_km.clone(), raw.terrain_m.clone(), clutter)
}

pub fn strip_clutter(profile: &PathProfile) -> PathProfile {
    PathProfile {
        clutter_m: vec![0.0; profile.len()],
        ..profile.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesy::distance_m;

    fn raw(clutter: Vec<f64>) -> RawProfile {
        let n = clutter.len();
        RawProfile {
            distances_km: (0..n).map(|i| 0.03 * i as f64).collect(),
            terrain_m: vec![100.0; n],
            raw_clutter_m: clutter,
            spacing_m: 30.0,
        }
    }

    #[test]
    fn table_heights() {
        let got: Vec<f64> = ClutterClass::ALL.iter().map(|c| c.representative_height()).collect();
        assert_eq!(got, vec![0.0, 10.0, 15.0, 20.0]);
    }

    #[test]
    fn classification_rules() {
        let p = classify_clutter(&raw(vec![20.0, 12.0, 2.0, 4.0, 3.99, 20.0]), ClutterClass::UrbanTreesForest, 4.0)
            .unwrap();
        assert_eq!(p.clutter_m(), &[0.0, 15.0, 0.0, 15.0, 0.0, 0.0]);
    }

    #[test]
    fn classification_rejects_bad_threshold() {
        assert!(classify_clutter(&raw(vec![0.0; 3]), ClutterClass::Suburban, 0.0).is_err());
    }

    #[test]
    fn strip_is_idempotent() {
        let p = classify_clutter(&raw(vec![0.0, 12.0, 9.0, 0.0]), ClutterClass::DenseUrban, 4.0).unwrap();
        let s = strip_clutter(&p);
        assert!(s.clutter_m().iter().all(|&c| c == 0.0));
        assert_eq!(s.terrain_m(), p.terrain_m());
        assert_eq!(s.distances_km(), p.distances_km());
        assert_eq!(strip_clutter(&s), s);
    }

    #[test]
    fn point_counts() {
        assert_eq!(point_count(3000.0, 30.0), 101);
        assert_eq!(point_count(3000.0 + 1e-7, 30.0), 101);
        assert_eq!(point_count(1000.0, 30.0), 35);
        assert_eq!(point_count(3000.5, 30.0), 102);
    }

    #[test]
    fn geodesic_two_points_are_endpoints() {
        let tx = LatLon::new(45.0, -76.0);
        let rx = LatLon::new(45.1, -75.9);
        assert_eq!(geodesic_points(tx, rx, 2).unwrap(), vec![tx, rx]);
        assert!(matches!(geodesic_points(tx, tx, 5), Err(ProfileError::DegenerateLink)));
    }

    #[test]
    fn equatorial_midpoint() {
        let pts = geodesic_points(LatLon::new(0.0, 10.0), LatLon::new(0.0, 10.01), 3).unwrap();
        assert!(pts[1].lat.abs() < 1e-7);
        assert!((pts[1].lon - 10.005).abs() < 1e-7);
    }

    #[test]
    fn geodesic_points_equally_spaced() {
        let tx = LatLon::new(45.3, -76.1);
        let rx = LatLon::new(45.9, -75.2);
        let pts = geodesic_points(tx, rx, 11).unwrap();
        let total = distance_m(tx, rx);
        for w in pts.windows(2) {
            assert!((distance_m(w[0], w[1]) - total / 10.0).abs() < 1e-6);
        }
    }

    #[test]
    fn profile_validation() {
        assert!(PathProfile::new(vec![0.0, 1.0], vec![0.0], vec![0.0, 0.0]).is_err());
        assert!(PathProfile::new(vec![0.0, 0.3, 1.0], vec![0.0; 3], vec![0.0; 3]).is_err());
        assert!(PathProfile::new(vec![0.0, 0.5, 1.0], vec![0.0; 3], vec![5.0, 0.0, 0.0]).is_err());
        assert!(PathProfile::flat(1.0, 35, 0.0).is_ok());
    }

    #[test]
    fn reversal_mirrors() {
        let p = PathProfile::new(vec![0.0, 0.5, 1.0], vec![1.0, 2.0, 3.0], vec![0.0, 15.0, 0.0]).unwrap();
        let r = p.reversed();
        assert_eq!(r.terrain_m(), &[3.0, 2.0, 1.0]);
        assert_eq!(r.reversed(), p);
    }
}
