//! Clear-air anomalous propagation: ducting/layer reflection and
//! troposcatter, plus the time-percentage parameter both depend on.

use super::geometry::PathGeometry;

/// Percentage of time refractive index lapse rates exceed 100 N-units/km
/// in the first 100 m of the atmosphere.
///
/// `phi_deg` is the path-centre latitude, `dtm`/`dlm` the longest continuous
/// land and inland sections (km).
pub(crate) fn beta0(phi_deg: f64, dtm: f64, dlm: f64) -> f64 {
    let tau = 1.0 - (-4.12e-4 * dlm.powf(2.41)).exp();
    let mu1 = (10f64.powf(-dtm / (16.0 - 6.6 * tau)) + 10f64.powf(-5.0 * (0.496 + 0.354 * tau)))
        .powf(0.2)
        .min(1.0);
    let phi = phi_deg.abs();
    if phi <= 70.0 {
        let mu4 = 10f64.powf((-0.935 + 0.0176 * phi) * mu1.log10());
        10f64.powf(-0.015 * phi + 1.67) * mu1 * mu4
    } else {
        let mu4 = 10f64.powf(0.3 * mu1.log10());
        4.17 * mu1 * mu4
    }
}

/// Specific attenuation of dry air and water vapour (dB/km) for vapour
/// density `rho` g/m³, valid below 54 GHz.
pub(crate) fn gaseous_specific(f_ghz: f64, rho: f64) -> (f64, f64) {
    let f2 = f_ghz * f_ghz;
    let oxygen = (7.2 / (f2 + 0.34) + 0.62 / ((54.0 - f_ghz).powf(1.16) + 0.83)) * f2 * 1e-3;
    let vapour = (0.050
        + 0.0021 * rho
        + 3.6 / ((f_ghz - 22.2).powi(2) + 8.5)
        + 10.6 / ((f_ghz - 183.3).powi(2) + 9.0)
        + 8.9 / ((f_ghz - 325.4).powi(2) + 26.3))
        * f2
        * rho
        * 1e-4;
    (oxygen, vapour)
}

/// Troposcatter basic transmission loss not exceeded for `p` % of time.
pub(crate) fn troposcatter(geom: &PathGeometry, f_ghz: f64, n0: f64, p: f64) -> f64 {
    let d = geom.dtot;
    let lf = 25.0 * f_ghz.log10() - 2.5 * (f_ghz / 2.0).log10().powi(2);
    // aperture-to-medium coupling loss with isotropic antennas
    let lc = 0.051;
    let (go, gw) = gaseous_specific(f_ghz, 3.0);
    let ag = (go + gw) * d;
    190.1 + lf + 20.0 * d.log10() + 0.573 * geom.theta - 0.15 * n0 + lc + ag
        - 10.1 * (-(p / 50.0).log10()).powf(0.7)
}

/// Ducting/layer-reflection loss not exceeded for `p` % of time.
pub(crate) fn ducting(geom: &PathGeometry, f_ghz: f64, ae: f64, p: f64, beta0: f64, omega: f64) -> f64 {
    let d = geom.dtot;
    let alf = if f_ghz < 0.5 {
        45.375 - 137.0 * f_ghz + 92.5 * f_ghz * f_ghz
    } else {
        0.0
    };
    let site_shielding = |theta: f64, dl: f64| {
        let th = theta - 0.1 * dl;
        if th > 0.0 {
            20.0 * (1.0 + 0.361 * th * (f_ghz * dl).sqrt()).log10() + 0.264 * th * f_ghz.cbrt()
        } else {
            0.0
        }
    };
    let ast = site_shielding(geom.theta_t, geom.dlt);
    let asr = site_shielding(geom.theta_r, geom.dlr);
    // no coastal sections are modelled, so the over-sea coupling terms vanish
    let af = 102.45 + 20.0 * f_ghz.log10() + 20.0 * (geom.dlt + geom.dlr).log10() + alf + ast + asr;

    let gamma_d = 5e-5 * ae * f_ghz.cbrt();
    let capped = |theta: f64, dl: f64| if theta <= 0.1 * dl { theta } else { 0.1 * dl };
    let theta_p = 1e3 * d / ae + capped(geom.theta_t, geom.dlt) + capped(geom.theta_r, geom.dlr);

    let tau = 1.0 - (-4.12e-4 * (d * (1.0 - omega)).powf(2.41)).exp();
    let alpha = (-0.6 - 3.5e-9 * d.powf(3.1) * tau).max(-3.4);
    let mu2 = (500.0 / ae * d * d / (geom.hte.sqrt() + geom.hre.sqrt()).powi(2))
        .powf(alpha)
        .min(1.0);
    let mu3 = if geom.hm <= 10.0 {
        1.0
    } else {
        let di = (d - geom.dlt - geom.dlr).min(40.0);
        (-4.6e-5 * (geom.hm - 10.0) * (43.0 + 6.0 * di)).exp()
    };
    let beta = beta0 * mu2 * mu3;
    let lb = beta.log10();
    let gamma = 1.076 / (2.0058 - lb).powf(1.012)
        * (-(9.51 - 4.8 * lb + 0.198 * lb * lb) * 1e-6 * d.powf(1.13)).exp();
    let ap = -12.0 + (1.2 + 3.7e-3 * d) * (p / beta).log10() + 12.0 * (p / beta).powf(gamma);
    af + gamma_d * theta_p + ap
}
