//! The combined predictor: bare-terrain P.1812 loss plus the foliage loss
//! along the direct ray, capped by a limit.

mod grid;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elevation::ElevationStack;
use crate::p1812::{path_loss_modes, path_loss_p1812, LinkParams, ModelEnvironment, P1812Error};
use crate::profile::{
    classify_clutter, extract_profile, strip_clutter, ClutterClass, ProfileError, DEFAULT_DETECTION_THRESHOLD_M,
    DEFAULT_SPACING_M,
};
use crate::ret::{clamp_ret, intersect_ray_with_clutter, ret_loss, RetError, RetLimit, RetParameters, DEFAULT_STEP_M};

pub use grid::{predict_grid, BoundingBox, CellStatus, CoverageCell, CoverageGrid, Execution};

#[derive(Debug, Error)]
pub enum SafeError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    P1812(#[from] P1812Error),
    #[error(transparent)]
    Ret(#[from] RetError),
    #[error("region is empty")]
    EmptyRegion,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl SafeError {
    /// True for errors that only say the link lies outside the model's
    /// distance domain.
    pub fn is_out_of_domain(&self) -> bool {
        matches!(
            self,
            SafeError::Profile(ProfileError::PathTooShort(_) | ProfileError::DegenerateLink)
                | SafeError::P1812(P1812Error::DistanceOutOfRange(_))
        )
    }

    /// True when the elevation data does not cover the link.
    pub fn is_no_coverage(&self) -> bool {
        use crate::elevation::ElevationError::NoCoverage;
        matches!(
            self,
            SafeError::Profile(ProfileError::Elevation(NoCoverage { .. }))
                | SafeError::Ret(RetError::Elevation(NoCoverage { .. }))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Terrain-only P.1812 plus the clamped foliage loss.
    #[default]
    Safe,
    /// P.1812 with representative clutter heights in the profile.
    P1812Clutter,
    /// P.1812 over bare terrain.
    P1812NoClutter,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Safe => "safe",
            Mode::P1812Clutter => "p1812-clutter",
            Mode::P1812NoClutter => "p1812-no-clutter",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "safe" => Ok(Mode::Safe),
            "p1812-clutter" => Ok(Mode::P1812Clutter),
            "p1812-no-clutter" => Ok(Mode::P1812NoClutter),
            other => Err(format!(
                "unknown mode '{other}' (safe, p1812-clutter, p1812-no-clutter)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafeConfig {
    pub mode: Mode,
    /// Clutter class for the `P1812Clutter` baseline.
    pub clutter_class: ClutterClass,
    pub ret_params: RetParameters,
    pub ret_limit: RetLimit,
    pub environment: ModelEnvironment,
    pub detection_threshold_m: f64,
    pub profile_spacing_m: f64,
    pub intersection_step_m: f64,
}

impl SafeConfig {
    /// Defaults with a 20 dB foliage limit.
    pub fn semi_rural() -> Self {
        Self {
            mode: Mode::Safe,
            clutter_class: ClutterClass::UrbanTreesForest,
            ret_params: RetParameters::default(),
            ret_limit: RetLimit::SEMI_RURAL,
            environment: ModelEnvironment::default(),
            detection_threshold_m: DEFAULT_DETECTION_THRESHOLD_M,
            profile_spacing_m: DEFAULT_SPACING_M,
            intersection_step_m: DEFAULT_STEP_M,
        }
    }

    /// Defaults with a 30 dB foliage limit.
    pub fn heavily_forested() -> Self {
        Self {
            ret_limit: RetLimit::HEAVILY_FORESTED,
            ..Self::semi_rural()
        }
    }

    pub const PRESETS: [&'static str; 2] = ["semi-rural", "heavily-forested"];

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "semi-rural" => Some(Self::semi_rural()),
            "heavily-forested" => Some(Self::heavily_forested()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), SafeError> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SafeError::InvalidConfig(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.detection_threshold_m, "detection threshold")?;
        positive(self.profile_spacing_m, "profile spacing")?;
        positive(self.intersection_step_m, "intersection step")?;
        if self.profile_spacing_m > DEFAULT_SPACING_M {
            return Err(SafeError::InvalidConfig(format!(
                "profile spacing {} m exceeds {DEFAULT_SPACING_M} m",
                self.profile_spacing_m
            )));
        }
        self.environment.validate()?;
        self.ret_params.validate()?;
        Ok(())
    }
}

impl Default for SafeConfig {
    fn default() -> Self {
        Self::semi_rural()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionResult {
    pub mode: Mode,
    pub pl_safe: f64,
    pub pl_p1812_no_clutter: f64,
    pub pl_p1812_with_clutter: Option<f64>,
    pub ret_loss_raw: f64,
    pub ret_loss_clamped: f64,
    pub ret_limit: f64,
    pub foliage_depth: f64,
    pub theta: Option<f64>,
    pub path_length_km: f64,
    pub n_profile_points: usize,
    /// Part of the path used coarse terrain, where the foliage term is 0.
    pub used_fallback_terrain: bool,
}

/// Everything about a link that does not depend on the foliage limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkTerms {
    pub pl_no_clutter: f64,
    pub pl_with_clutter: Option<f64>,
    pub ret_loss_raw: f64,
    pub foliage_depth: f64,
    pub theta: Option<f64>,
    pub path_length_km: f64,
    pub n_profile_points: usize,
    pub used_fallback_terrain: bool,
}

/// `pl_no_clutter + min(foliage, limit)`.
pub fn combine_losses(pl_no_clutter: f64, ret_loss_raw: f64, limit: RetLimit) -> f64 {
    pl_no_clutter + clamp_ret(ret_loss_raw, limit)
}

/// Runs the models needed for `config.mode` on one link.
pub fn link_terms(stack: &ElevationStack, link: &LinkParams, config: &SafeConfig) -> Result<LinkTerms, SafeError> {
    link.validate()?;
    let raw = extract_profile(stack, link.tx, link.rx, config.profile_spacing_m)?;
    let classified = classify_clutter(&raw, config.clutter_class, config.detection_threshold_m)?;
    let env = &config.environment;

    let (pl_no_clutter, pl_with_clutter) = match config.mode {
        Mode::P1812Clutter => {
            let m = path_loss_modes(&classified, link, env)?;
            (m.no_clutter, Some(m.with_clutter))
        }
        Mode::Safe | Mode::P1812NoClutter => (path_loss_p1812(&strip_clutter(&classified), link, env)?, None),
    };

    let mut terms = LinkTerms {
        pl_no_clutter,
        pl_with_clutter,
        ret_loss_raw: 0.0,
        foliage_depth: 0.0,
        theta: None,
        path_length_km: classified.length_km(),
        n_profile_points: classified.len(),
        used_fallback_terrain: false,
    };
    if config.mode == Mode::Safe {
        let hit = intersect_ray_with_clutter(
            stack,
            link.tx,
            link.tx_height_m,
            link.rx,
            link.rx_height_m,
            config.intersection_step_m,
        )?;
        terms.used_fallback_terrain = hit.used_fallback_terrain;
        if let Some(theta) = hit.theta {
            terms.ret_loss_raw = ret_loss(&config.ret_params, hit.total_depth, theta)?;
            terms.foliage_depth = hit.total_depth;
            terms.theta = Some(theta);
        }
    }
    Ok(terms)
}

/// Builds the result for `mode` and `limit` from precomputed link terms.
pub fn finish_prediction(terms: &LinkTerms, mode: Mode, limit: RetLimit) -> PredictionResult {
    let (pl_safe, raw, clamped) = match mode {
        Mode::Safe => {
            let clamped = clamp_ret(terms.ret_loss_raw, limit);
            (terms.pl_no_clutter + clamped, terms.ret_loss_raw, clamped)
        }
        Mode::P1812NoClutter => (terms.pl_no_clutter, 0.0, 0.0),
        Mode::P1812Clutter => (
            terms.pl_with_clutter.unwrap_or(terms.pl_no_clutter),
            0.0,
            0.0,
        ),
    };
    let foliage = mode == Mode::Safe;
    PredictionResult {
        mode,
        pl_safe,
        pl_p1812_no_clutter: terms.pl_no_clutter,
        pl_p1812_with_clutter: terms.pl_with_clutter,
        ret_loss_raw: raw,
        ret_loss_clamped: clamped,
        ret_limit: limit.db(),
        foliage_depth: if foliage { terms.foliage_depth } else { 0.0 },
        theta: if foliage { terms.theta } else { None },
        path_length_km: terms.path_length_km,
        n_profile_points: terms.n_profile_points,
        used_fallback_terrain: terms.used_fallback_terrain,
    }
}

/// Point-to-point prediction.
pub fn predict(stack: &ElevationStack, link: &LinkParams, config: &SafeConfig) -> Result<PredictionResult, SafeError> {
    config.validate()?;
    let terms = link_terms(stack, link, config)?;
    Ok(finish_prediction(&terms, config.mode, config.ret_limit))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms(nc: f64, raw: f64) -> LinkTerms {
        LinkTerms {
            pl_no_clutter: nc,
            pl_with_clutter: Some(nc + 7.0),
            ret_loss_raw: raw,
            foliage_depth: if raw > 0.0 { 20.0 } else { 0.0 },
            theta: (raw > 0.0).then_some(3.0),
            path_length_km: 1.0,
            n_profile_points: 35,
            used_fallback_terrain: false,
        }
    }

    #[test]
    fn equation_arithmetic() {
        let r = finish_prediction(&terms(100.0, 45.0), Mode::Safe, RetLimit::SEMI_RURAL);
        assert_eq!(r.pl_safe, 120.0);
        assert_eq!(r.ret_loss_clamped, 20.0);
        assert_eq!(r.ret_loss_raw, 45.0);
    }

    #[test]
    fn zero_foliage_is_baseline() {
        let r = finish_prediction(&terms(101.5, 0.0), Mode::Safe, RetLimit::HEAVILY_FORESTED);
        assert_eq!(r.pl_safe, r.pl_p1812_no_clutter);
    }

    #[test]
    fn mode_definitions() {
        let t = terms(100.0, 45.0);
        let nc = finish_prediction(&t, Mode::P1812NoClutter, RetLimit::SEMI_RURAL);
        assert_eq!(nc.pl_safe, 100.0);
        assert_eq!((nc.ret_loss_raw, nc.ret_loss_clamped, nc.foliage_depth), (0.0, 0.0, 0.0));
        let cl = finish_prediction(&t, Mode::P1812Clutter, RetLimit::SEMI_RURAL);
        assert_eq!(cl.pl_safe, 107.0);
    }

    #[test]
    fn presets() {
        assert_eq!(SafeConfig::default().ret_limit.db(), 20.0);
        assert_eq!(SafeConfig::preset("heavily-forested").unwrap().ret_limit.db(), 30.0);
        assert!(SafeConfig::preset("urban").is_none());
        assert_eq!(SafeConfig::default().profile_spacing_m, 30.0);
        assert_eq!(SafeConfig::default().environment.time_percentage, 50.0);
    }

    #[test]
    fn config_validation() {
        let c = SafeConfig {
            intersection_step_m: 0.0,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(SafeError::InvalidConfig(_))));
        let c = SafeConfig {
            profile_spacing_m: 45.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
