//! Basic transmission loss per Recommendation ITU-R P.1812.
//!
//! The engine takes a [`PathProfile`] whose clutter vector already holds
//! representative heights; a profile with zero clutter gives the bare-terrain
//! ("no clutter") loss. Time and location percentages default to 50 %, where
//! the variability terms reduce to their medians.

mod anomalous;
mod diffraction;
mod geometry;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::LatLon;
use crate::profile::{strip_clutter, PathProfile};
use geometry::PathGeometry;

pub const MIN_FREQUENCY_MHZ: f64 = 30.0;
pub const MAX_FREQUENCY_MHZ: f64 = 6000.0;
pub const MIN_DISTANCE_KM: f64 = 0.25;
pub const MAX_DISTANCE_KM: f64 = 3000.0;
pub const MAX_ANTENNA_HEIGHT_M: f64 = 3000.0;

const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum P1812Error {
    #[error("frequency {0} MHz outside 30-6000 MHz")]
    FrequencyOutOfRange(f64),
    #[error("path length {0} km outside 0.25-3000 km")]
    DistanceOutOfRange(f64),
    #[error("antenna height {0} m outside (0, 3000] m")]
    HeightOutOfRange(f64),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("model environment out of range: {0}")]
    EnvironmentOutOfRange(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    #[default]
    Vertical,
    Horizontal,
}

impl std::str::FromStr for Polarization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "v" | "vertical" => Ok(Self::Vertical),
            "h" | "horizontal" => Ok(Self::Horizontal),
            other => Err(format!("unknown polarization '{other}'")),
        }
    }
}

/// Radio link: carrier, antenna heights above ground and terminal positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub frequency_mhz: f64,
    pub tx_height_m: f64,
    pub rx_height_m: f64,
    pub tx: LatLon,
    pub rx: LatLon,
    #[serde(default)]
    pub polarization: Polarization,
}

impl LinkParams {
    pub fn new(tx: LatLon, tx_height_m: f64, rx: LatLon, rx_height_m: f64, frequency_mhz: f64) -> Self {
        Self {
            frequency_mhz,
            tx_height_m,
            rx_height_m,
            tx,
            rx,
            polarization: Polarization::Vertical,
        }
    }

    /// Checks frequency and antenna heights.
    pub fn validate(&self) -> Result<(), P1812Error> {
        if !(MIN_FREQUENCY_MHZ..=MAX_FREQUENCY_MHZ).contains(&self.frequency_mhz) {
            return Err(P1812Error::FrequencyOutOfRange(self.frequency_mhz));
        }
        for h in [self.tx_height_m, self.rx_height_m] {
            if !(h > 0.0 && h <= MAX_ANTENNA_HEIGHT_M) {
                return Err(P1812Error::HeightOutOfRange(h));
            }
        }
        Ok(())
    }

    /// Same link seen from the receiver.
    pub fn swapped(&self) -> Self {
        Self {
            tx_height_m: self.rx_height_m,
            rx_height_m: self.tx_height_m,
            tx: self.rx,
            rx: self.tx,
            ..*self
        }
    }
}

/// Atmospheric and statistical settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelEnvironment {
    /// Time percentage `p`.
    pub time_percentage: f64,
    /// Location percentage `pL`.
    pub location_percentage: f64,
    /// Average radio-refractivity lapse rate through the lowest 1 km (N-units/km).
    pub delta_n: f64,
    /// Sea-level surface refractivity (N-units).
    pub n0: f64,
    /// Fraction of the path over water.
    pub omega: f64,
}

impl Default for ModelEnvironment {
    fn default() -> Self {
        Self {
            time_percentage: 50.0,
            location_percentage: 50.0,
            delta_n: 40.0,
            n0: 325.0,
            omega: 0.0,
        }
    }
}

impl ModelEnvironment {
    pub fn validate(&self) -> Result<(), P1812Error> {
        let bad = |msg: String| Err(P1812Error::EnvironmentOutOfRange(msg));
        if !(1.0..=50.0).contains(&self.time_percentage) {
            return bad(format!("time percentage {} outside [1, 50]", self.time_percentage));
        }
        if !(1.0..=99.0).contains(&self.location_percentage) {
            return bad(format!("location percentage {} outside [1, 99]", self.location_percentage));
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return bad(format!("water fraction {} outside [0, 1]", self.omega));
        }
        if !(self.delta_n >= 0.0 && self.delta_n < 157.0) {
            return bad(format!("refractivity lapse {} outside [0, 157)", self.delta_n));
        }
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            return bad(format!("surface refractivity {} must be positive", self.n0));
        }
        Ok(())
    }

    /// Median effective earth radius (km).
    pub fn effective_radius_km(&self) -> f64 {
        EARTH_RADIUS_KM * 157.0 / (157.0 - self.delta_n)
    }
}

/// Intermediate losses of one evaluation (all dB unless noted).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P1812Breakdown {
    pub free_space: f64,
    pub line_of_sight: f64,
    pub diffraction: f64,
    pub troposcatter: f64,
    pub ducting: f64,
    /// Combined loss before location variability.
    pub combined: f64,
    pub basic_transmission_loss: f64,
    /// Time percentage of anomalous refractivity, %.
    pub beta0: f64,
    pub trans_horizon: bool,
}

/// Both clutter modes evaluated on one profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeLosses {
    pub with_clutter: f64,
    pub no_clutter: f64,
}

/// Inverse complementary cumulative normal distribution.
pub fn inv_cum_norm(x: f64) -> f64 {
    const C0: f64 = 2.515_516_698;
    const C1: f64 = 0.802_853;
    const C2: f64 = 0.010_328;
    const D1: f64 = 1.432_788;
    const D2: f64 = 0.189_269;
    const D3: f64 = 0.001_308;
    if x == 0.5 {
        return 0.0;
    }
    if x > 0.5 {
        return -inv_cum_norm(1.0 - x);
    }
    let t = (-2.0 * x.max(1e-6).ln()).sqrt();
    let xi = ((C2 * t + C1) * t + C0) / (((D3 * t + D2) * t + D1) * t + 1.0);
    t - xi
}

fn check_domain(profile: &PathProfile, link: &LinkParams, env: &ModelEnvironment) -> Result<(), P1812Error> {
    link.validate()?;
    env.validate()?;
    let d = profile.length_km();
    if !(MIN_DISTANCE_KM..=MAX_DISTANCE_KM).contains(&d) {
        return Err(P1812Error::DistanceOutOfRange(d));
    }
    if profile.len() < 3 {
        return Err(P1812Error::InvalidProfile(format!(
            "{} points; at least 3 are needed",
            profile.len()
        )));
    }
    Ok(())
}

/// Full evaluation with intermediate results.
pub fn path_loss_breakdown(
    profile: &PathProfile,
    link: &LinkParams,
    env: &ModelEnvironment,
) -> Result<P1812Breakdown, P1812Error> {
    check_domain(profile, link, env)?;
    let f = link.frequency_mhz / 1000.0;
    let p = env.time_percentage;
    let omega = env.omega;
    let ae = env.effective_radius_km();
    let ab = 3.0 * EARTH_RADIUS_KM;

    let geom = PathGeometry::analyse(
        profile.distances_km(),
        profile.terrain_m(),
        profile.clutter_m(),
        link.tx_height_m,
        link.rx_height_m,
        ae,
        f,
    );
    let dtot = geom.dtot;
    let land = dtot * (1.0 - omega);
    let b0 = anomalous::beta0((link.tx.lat + link.rx.lat) / 2.0, land, land);

    // Line of sight with multipath/focusing enhancement.
    let dfs = (dtot * dtot + ((geom.hts - geom.hrs) / 1000.0).powi(2)).sqrt();
    let lbfs = 92.4 + 20.0 * f.log10() + 20.0 * dfs.log10();
    let focusing = |q: f64| 2.6 * (1.0 - (-0.1 * (geom.dlt + geom.dlr)).exp()) * (q / 50.0).log10();
    let lb0p = lbfs + focusing(p);
    let lb0b = lbfs + focusing(b0);

    // Diffraction, interpolated between median and beta0 earth radii.
    let pol = link.polarization;
    let ld50 = diffraction::delta_bullington(&geom, ae, f, omega, pol);
    let fi = if p == 50.0 {
        0.0
    } else if p > b0 {
        inv_cum_norm(p / 100.0) / inv_cum_norm(b0 / 100.0)
    } else {
        1.0
    };
    let ldp = if fi == 0.0 {
        ld50
    } else {
        let ldb = diffraction::delta_bullington(&geom, ab, f, omega, pol);
        ld50 + fi * (ldb - ld50)
    };
    let lbd50 = lbfs + ld50;
    let lbd = lb0p + ldp;

    let lbs = anomalous::troposcatter(&geom, f, env.n0, p);
    let lba = anomalous::ducting(&geom, f, ae, p, b0, omega);

    // Blend the mechanisms.
    const ETA: f64 = 2.5;
    let theta = geom.theta;
    let fj = 1.0 - 0.5 * (1.0 + (3.0 * 0.8 * (theta - 0.3) / 0.3).tanh());
    let fk = 1.0 - 0.5 * (1.0 + (3.0 * 0.5 * (dtot - 20.0) / 20.0).tanh());
    let lminb0p = if p < b0 {
        lb0p + (1.0 - omega) * ldp
    } else {
        lbd50 + (lb0b + (1.0 - omega) * ldp - lbd50) * fi
    };
    let lminbap = ETA * ((lba / ETA).exp() + (lb0p / ETA).exp()).ln();
    let lbda = if lminbap > lbd {
        lbd
    } else {
        lminbap + (lbd - lminbap) * fk
    };
    let lbam = lbda + (lminb0p - lbda) * fj;
    let lbu = -5.0 * (10f64.powf(-0.2 * lbs) + 10f64.powf(-0.2 * lbam)).log10();

    // Location variability; zero at the median location percentage.
    let sigma_l = (0.024 * f + 0.52) * 100f64.powf(0.28);
    let lb = lb0p.max(lbu - inv_cum_norm(env.location_percentage / 100.0) * sigma_l);

    if !lb.is_finite() {
        return Err(P1812Error::InvalidProfile("non-finite loss".into()));
    }
    Ok(P1812Breakdown {
        free_space: lbfs,
        line_of_sight: lb0p,
        diffraction: ldp,
        troposcatter: lbs,
        ducting: lba,
        combined: lbu,
        basic_transmission_loss: lb,
        beta0: b0,
        trans_horizon: !geom.line_of_sight,
    })
}

/// Basic transmission loss (dB) with clutter exactly as encoded in `profile`.
pub fn path_loss_p1812(profile: &PathProfile, link: &LinkParams, env: &ModelEnvironment) -> Result<f64, P1812Error> {
    path_loss_breakdown(profile, link, env).map(|b| b.basic_transmission_loss)
}

/// Loss with the profile's clutter and with the clutter stripped.
pub fn path_loss_modes(profile: &PathProfile, link: &LinkParams, env: &ModelEnvironment) -> Result<ModeLosses, P1812Error> {
    let with_clutter = path_loss_p1812(profile, link, env)?;
    let no_clutter = if profile.clutter_m().iter().all(|&c| c == 0.0) {
        with_clutter
    } else {
        path_loss_p1812(&strip_clutter(profile), link, env)?
    };
    Ok(ModeLosses {
        with_clutter,
        no_clutter,
    })
}

/// Free-space loss (dB) for `f_mhz` over `d_km`.
pub fn free_space_loss(f_mhz: f64, d_km: f64) -> f64 {
    32.45 + 20.0 * f_mhz.log10() + 20.0 * d_km.log10()
}
