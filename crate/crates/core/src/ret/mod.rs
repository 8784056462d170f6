//! Foliage loss along the direct ray.
//!
//! [`intersect_ray_with_clutter`] finds how far the ray travels through the
//! canopy and at what angle it enters; [`ret_loss`] turns that into dB with
//! a radiative-energy-transfer model, and [`clamp_ret`] applies the limit.

mod intersection;
mod model;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elevation::ElevationError;
pub use intersection::{
    intersect_ray, intersect_ray_with_clutter, FoliageIntersection, GroundSample, DEFAULT_STEP_M,
    EFFECTIVE_EARTH_RADIUS_M,
};

const BUILTIN_COEFFICIENTS: &str = include_str!("../../data/foliage_coefficients.toml");

pub const DEFAULT_SPECIES: &str = "american-plane";
pub const DEFAULT_FREQUENCY_GHZ: f64 = 3.5;

#[derive(Debug, Error)]
pub enum RetError {
    #[error("negative foliage depth {0} m")]
    NegativeDepth(f64),
    #[error("incidence angle {0} deg outside [0, 90]")]
    ThetaOutOfRange(f64),
    #[error("no coefficient set for {species} ({leaf_state}) at {frequency_ghz} GHz")]
    UncalibratedParameters {
        species: String,
        leaf_state: LeafState,
        frequency_ghz: f64,
    },
    #[error("invalid foliage coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("step must be positive, got {0}")]
    NonpositiveStep(f64),
    #[error("foliage loss limit must be >= 0 dB, got {0}")]
    NegativeLimit(f64),
    #[error(transparent)]
    Elevation(#[from] ElevationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeafState {
    InLeaf,
    OutOfLeaf,
}

impl LeafState {
    pub fn name(self) -> &'static str {
        match self {
            Self::InLeaf => "in-leaf",
            Self::OutOfLeaf => "out-of-leaf",
        }
    }
}

impl fmt::Display for LeafState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LeafState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "in-leaf" => Ok(Self::InLeaf),
            "out-of-leaf" => Ok(Self::OutOfLeaf),
            other => Err(format!("unknown leaf state '{other}' (in-leaf, out-of-leaf)")),
        }
    }
}

/// One radiative-energy-transfer coefficient set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetCoefficients {
    /// Forward share of the scattered power.
    pub alpha: f64,
    /// Scattered share of the extinguished power.
    pub albedo: f64,
    /// Forward lobe beamwidth, degrees.
    pub beta_deg: f64,
    /// Extinction coefficient, 1/m.
    pub extinction_per_m: f64,
    /// Receiver half-power beamwidth, degrees.
    pub rx_beamwidth_deg: f64,
}

impl RetCoefficients {
    pub fn validate(&self) -> Result<(), RetError> {
        let bad = |m: &str| Err(RetError::InvalidCoefficients(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.albedo > 0.0 && self.albedo < 1.0) {
            return bad("albedo must lie in (0, 1)");
        }
        if !(self.beta_deg > 0.0 && self.beta_deg <= 180.0) {
            return bad("beta_deg must lie in (0, 180]");
        }
        if !(self.extinction_per_m > 0.0 && self.extinction_per_m.is_finite()) {
            return bad("extinction_per_m must be positive");
        }
        if !(self.rx_beamwidth_deg > 0.0 && self.rx_beamwidth_deg <= 180.0) {
            return bad("rx_beamwidth_deg must lie in (0, 180]");
        }
        Ok(())
    }
}

/// Loss-versus-depth law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FoliageModel {
    Ret(RetCoefficients),
    /// `min(a d, a d_knee + b (d - d_knee))`; a testing stand-in with no
    /// angle dependence.
    DualSlope {
        initial_db_per_m: f64,
        final_db_per_m: f64,
        knee_m: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetParameters {
    pub species: String,
    pub leaf_state: LeafState,
    pub frequency_ghz: f64,
    pub model: FoliageModel,
}

impl RetParameters {
    /// Built-in set for `species`/`leaf_state` at `frequency_ghz`.
    pub fn builtin(species: &str, leaf_state: LeafState, frequency_ghz: f64) -> Result<Self, RetError> {
        CoefficientTable::builtin().parameters(species, leaf_state, frequency_ghz)
    }

    /// Dual-slope stand-in with placeholder defaults of 2 dB/m to a 10 m
    /// knee and 0.5 dB/m beyond.
    pub fn dual_slope_default() -> Self {
        Self {
            species: "generic".into(),
            leaf_state: LeafState::InLeaf,
            frequency_ghz: DEFAULT_FREQUENCY_GHZ,
            model: FoliageModel::DualSlope {
                initial_db_per_m: 2.0,
                final_db_per_m: 0.5,
                knee_m: 10.0,
            },
        }
    }

    pub fn validate(&self) -> Result<(), RetError> {
        if !(self.frequency_ghz > 0.0 && self.frequency_ghz.is_finite()) {
            return Err(RetError::InvalidCoefficients("frequency must be positive".into()));
        }
        match self.model {
            FoliageModel::Ret(c) => c.validate(),
            FoliageModel::DualSlope {
                initial_db_per_m,
                final_db_per_m,
                knee_m,
            } => {
                if initial_db_per_m >= 0.0 && final_db_per_m >= 0.0 && knee_m >= 0.0 {
                    Ok(())
                } else {
                    Err(RetError::InvalidCoefficients(
                        "dual-slope rates and knee must be >= 0".into(),
                    ))
                }
            }
        }
    }
}

impl Default for RetParameters {
    /// American plane in leaf at 3.5 GHz.
    fn default() -> Self {
        Self::builtin(DEFAULT_SPECIES, LeafState::InLeaf, DEFAULT_FREQUENCY_GHZ)
            .expect("built-in coefficient table has the default set")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CoefficientEntry {
    species: String,
    leaf_state: LeafState,
    band_ghz: [f64; 2],
    #[serde(flatten)]
    coefficients: RetCoefficients,
}

/// Coefficient sets keyed by species, leaf state and frequency band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    #[serde(rename = "set", default)]
    sets: Vec<CoefficientEntry>,
}

impl CoefficientTable {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_COEFFICIENTS).expect("built-in coefficient table parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, RetError> {
        let table: Self = toml::from_str(text).map_err(|e| RetError::InvalidCoefficients(e.to_string()))?;
        for set in &table.sets {
            set.coefficients.validate()?;
            let [lo, hi] = set.band_ghz;
            if !(lo > 0.0 && lo <= hi) {
                return Err(RetError::InvalidCoefficients(format!(
                    "{} ({}): bad band [{lo}, {hi}] GHz",
                    set.species, set.leaf_state
                )));
            }
        }
        Ok(table)
    }

    pub fn from_file(path: &Path) -> Result<Self, RetError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RetError::InvalidCoefficients(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn species(&self) -> BTreeSet<&str> {
        self.sets.iter().map(|s| s.species.as_str()).collect()
    }

    pub fn lookup(&self, species: &str, leaf_state: LeafState, frequency_ghz: f64) -> Option<RetCoefficients> {
        self.sets
            .iter()
            .find(|s| {
                s.species == species
                    && s.leaf_state == leaf_state
                    && (s.band_ghz[0]..=s.band_ghz[1]).contains(&frequency_ghz)
            })
            .map(|s| s.coefficients)
    }

    pub fn parameters(&self, species: &str, leaf_state: LeafState, frequency_ghz: f64) -> Result<RetParameters, RetError> {
        let c = self
            .lookup(species, leaf_state, frequency_ghz)
            .ok_or_else(|| RetError::UncalibratedParameters {
                species: species.to_string(),
                leaf_state,
                frequency_ghz,
            })?;
        Ok(RetParameters {
            species: species.to_string(),
            leaf_state,
            frequency_ghz,
            model: FoliageModel::Ret(c),
        })
    }
}

/// Upper bound on the foliage term, dB.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RetLimit(f64);

impl RetLimit {
    /// Semi-rural areas.
    pub const SEMI_RURAL: RetLimit = RetLimit(20.0);
    /// Heavily forested rural areas.
    pub const HEAVILY_FORESTED: RetLimit = RetLimit(30.0);

    pub fn new(db: f64) -> Result<Self, RetError> {
        if db >= 0.0 {
            Ok(Self(db))
        } else {
            Err(RetError::NegativeLimit(db))
        }
    }

    pub fn db(self) -> f64 {
        self.0
    }
}

impl Default for RetLimit {
    fn default() -> Self {
        Self::SEMI_RURAL
    }
}

impl TryFrom<f64> for RetLimit {
    type Error = RetError;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<RetLimit> for f64 {
    fn from(l: RetLimit) -> f64 {
        l.0
    }
}

/// Foliage loss in dB after `depth_m` of canopy entered at `theta_deg`.
pub fn ret_loss(params: &RetParameters, depth_m: f64, theta_deg: f64) -> Result<f64, RetError> {
    if !(depth_m >= 0.0) || !depth_m.is_finite() {
        return Err(RetError::NegativeDepth(depth_m));
    }
    if !(0.0..=90.0).contains(&theta_deg) {
        return Err(RetError::ThetaOutOfRange(theta_deg));
    }
    params.validate()?;
    Ok(match params.model {
        FoliageModel::Ret(c) => model::loss_db(&c, depth_m, theta_deg),
        FoliageModel::DualSlope {
            initial_db_per_m: a,
            final_db_per_m: b,
            knee_m,
        } => (a * depth_m).min(a * knee_m + b * (depth_m - knee_m)),
    })
}

pub fn clamp_ret(raw_db: f64, limit: RetLimit) -> f64 {
    raw_db.min(limit.db())
}

/// `(depth, loss)` samples from 0 to `max_depth_m` inclusive.
pub fn ret_curve(
    params: &RetParameters,
    theta_deg: f64,
    max_depth_m: f64,
    step_m: f64,
) -> Result<Vec<(f64, f64)>, RetError> {
    if !(step_m > 0.0) || !step_m.is_finite() {
        return Err(RetError::NonpositiveStep(step_m));
    }
    if !(max_depth_m > 0.0) || !max_depth_m.is_finite() {
        return Err(RetError::NegativeDepth(max_depth_m));
    }
    let n = (max_depth_m / step_m - 1e-9).ceil() as usize;
    (0..=n)
        .map(|i| {
            let d = (i as f64 * step_m).min(max_depth_m);
            ret_loss(params, d, theta_deg).map(|l| (d, l))
        })
        .collect()
}
