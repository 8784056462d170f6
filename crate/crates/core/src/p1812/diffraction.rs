//! Delta-Bullington diffraction: Bullington construction over the actual
//! profile, corrected by spherical-earth diffraction over a smooth path.

use super::geometry::PathGeometry;
use super::Polarization;

/// Ground electrical constants (relative permittivity, conductivity S/m).
const LAND: (f64, f64) = (22.0, 0.003);
const SEA: (f64, f64) = (80.0, 5.0);

pub(crate) fn wavelength_m(f_ghz: f64) -> f64 {
    0.299_792_458 / f_ghz
}

/// Single knife-edge loss for diffraction parameter `nu`.
pub(crate) fn knife_edge(nu: f64) -> f64 {
    if nu > -0.78 {
        6.9 + 20.0 * (((nu - 0.1).powi(2) + 1.0).sqrt() + nu - 0.1).log10()
    } else {
        0.0
    }
}

/// Bullington loss for heights `g` (interior points only are used) between
/// antennas at `hts`/`hrs` m asl, over an earth of effective radius `ap` km.
pub(crate) fn bullington(d: &[f64], g: &[f64], hts: f64, hrs: f64, ap: f64, f_ghz: f64) -> f64 {
    let n = d.len();
    let dtot = d[n - 1];
    let lambda = wavelength_m(f_ghz);
    let ce = 1.0 / ap;
    let interior = 1..n.saturating_sub(1);
    let bulge = |i: usize| 500.0 * ce * d[i] * (dtot - d[i]);

    let stim = interior
        .clone()
        .map(|i| (g[i] + bulge(i) - hts) / d[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let str_ = (hrs - hts) / dtot;

    let luc = if stim < str_ {
        let numax = interior
            .map(|i| {
                (g[i] + bulge(i) - (hts * (dtot - d[i]) + hrs * d[i]) / dtot)
                    * (0.002 * dtot / (lambda * d[i] * (dtot - d[i]))).sqrt()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        knife_edge(numax)
    } else {
        let srim = interior
            .map(|i| (g[i] + bulge(i) - hrs) / (dtot - d[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        let dbp = (hrs - hts + srim * dtot) / (stim + srim);
        let nub = (hts + stim * dbp - (hts * (dtot - dbp) + hrs * dbp) / dtot)
            * (0.002 * dtot / (lambda * dbp * (dtot - dbp))).sqrt();
        knife_edge(nub)
    };
    luc + (1.0 - (-luc / 6.0).exp()) * (10.0 + 0.02 * dtot)
}

/// First-term spherical-earth diffraction for one ground type.
fn first_term_single(
    adft: f64,
    d: f64,
    hte: f64,
    hre: f64,
    f_ghz: f64,
    ground: (f64, f64),
    pol: Polarization,
) -> f64 {
    let (eps, sigma) = ground;
    let cond = 18.0 * sigma / f_ghz;
    let k_h = 0.036 * (adft * f_ghz).powf(-1.0 / 3.0) * ((eps - 1.0).powi(2) + cond * cond).powf(-0.25);
    let k = match pol {
        Polarization::Horizontal => k_h,
        Polarization::Vertical => k_h * (eps * eps + cond * cond).sqrt(),
    };
    let k2 = k * k;
    let k4 = k2 * k2;
    let beta = (1.0 + 1.6 * k2 + 0.67 * k4) / (1.0 + 4.5 * k2 + 1.53 * k4);

    let x = 21.88 * beta * (f_ghz / (adft * adft)).powf(1.0 / 3.0) * d;
    let y_scale = 0.9575 * beta * (f_ghz * f_ghz / adft).powf(1.0 / 3.0);

    let fx = if x >= 1.6 {
        11.0 + 10.0 * x.log10() - 17.6 * x
    } else {
        -20.0 * x.log10() - 5.6488 * x.powf(1.425)
    };
    let height_gain = |y: f64| {
        let b = beta * y;
        let g = if b > 2.0 {
            17.6 * (b - 1.1).sqrt() - 5.0 * (b - 1.1).log10() - 8.0
        } else {
            20.0 * (b + 0.1 * b.powi(3)).log10()
        };
        g.max(2.0 + 20.0 * k.log10())
    };
    -fx - height_gain(y_scale * hte) - height_gain(y_scale * hre)
}

fn first_term(adft: f64, d: f64, hte: f64, hre: f64, f_ghz: f64, omega: f64, pol: Polarization) -> f64 {
    let land = first_term_single(adft, d, hte, hre, f_ghz, LAND, pol);
    if omega == 0.0 {
        return land;
    }
    let sea = first_term_single(adft, d, hte, hre, f_ghz, SEA, pol);
    omega * sea + (1.0 - omega) * land
}

/// Spherical-earth diffraction loss for antenna heights `hte`/`hre` above a
/// smooth earth of effective radius `ap`.
pub(crate) fn spherical_earth(d: f64, hte: f64, hre: f64, ap: f64, f_ghz: f64, omega: f64, pol: Polarization) -> f64 {
    let dlos = (2.0 * ap).sqrt() * ((0.001 * hte).sqrt() + (0.001 * hre).sqrt());
    if d >= dlos {
        return first_term(ap, d, hte, hre, f_ghz, omega, pol);
    }
    let c = (hte - hre) / (hte + hre);
    let m = 250.0 * d * d / (ap * (hte + hre));
    let b = 2.0
        * ((m + 1.0) / (3.0 * m)).sqrt()
        * (std::f64::consts::PI / 3.0
            + ((1.5 * c * (3.0 * m / (m + 1.0).powi(3)).sqrt()).clamp(-1.0, 1.0).acos()) / 3.0)
            .cos();
    let dse1 = d / 2.0 * (1.0 + b);
    let dse2 = d - dse1;
    let hse = ((hte - 500.0 * dse1 * dse1 / ap) * dse2 + (hre - 500.0 * dse2 * dse2 / ap) * dse1) / d;
    let hreq = 17.456 * (dse1 * dse2 * wavelength_m(f_ghz) / d).sqrt();
    if hse > hreq {
        return 0.0;
    }
    let aem = 500.0 * (d / (hte.sqrt() + hre.sqrt())).powi(2);
    let ldft = first_term(aem, d, hte, hre, f_ghz, omega, pol);
    if ldft < 0.0 {
        0.0
    } else {
        (1.0 - hse / hreq) * ldft
    }
}

/// Delta-Bullington diffraction loss over effective earth radius `ap`.
pub(crate) fn delta_bullington(geom: &PathGeometry, ap: f64, f_ghz: f64, omega: f64, pol: Polarization) -> f64 {
    let actual = bullington(&geom.d, &geom.g, geom.hts, geom.hrs, ap, f_ghz);
    let hts_s = geom.hts - geom.hstd;
    let hrs_s = geom.hrs - geom.hsrd;
    let zeros = vec![0.0; geom.d.len()];
    let smooth = bullington(&geom.d, &zeros, hts_s, hrs_s, ap, f_ghz);
    let sph = spherical_earth(geom.dtot, hts_s, hrs_s, ap, f_ghz, omega, pol);
    actual + (sph - smooth).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knife_edge_reference_points() {
        assert_eq!(knife_edge(-1.0), 0.0);
        // grazing incidence gives the familiar ~6 dB
        assert!((knife_edge(0.0) - 6.03).abs() < 0.01);
        // monotone increasing above the cut-off
        let mut last = 0.0;
        for i in 0..50 {
            let v = knife_edge(-0.7 + 0.1 * i as f64);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn bullington_single_edge_matches_knife_edge() {
        // One obstacle exactly on the direct ray on a flat (infinite radius) earth.
        let d = [0.0, 5.0, 10.0];
        let g = [0.0, 50.0, 0.0];
        let l = bullington(&d, &g, 50.0, 50.0, 1e12, 1.0);
        let luc = knife_edge(0.0);
        let expect = luc + (1.0 - (-luc / 6.0).exp()) * (10.0 + 0.02 * 10.0);
        assert!((l - expect).abs() < 1e-6, "{l} vs {expect}");
    }

    #[test]
    fn spherical_earth_vanishes_for_tall_antennas() {
        assert_eq!(spherical_earth(1.0, 30.0, 30.0, 8500.0, 0.1, 0.0, Polarization::Vertical), 0.0);
    }

    #[test]
    fn spherical_earth_grows_beyond_horizon() {
        let near = spherical_earth(40.0, 10.0, 10.0, 8500.0, 1.0, 0.0, Polarization::Vertical);
        let far = spherical_earth(80.0, 10.0, 10.0, 8500.0, 1.0, 0.0, Polarization::Vertical);
        assert!(far > near && near > 0.0);
    }
}
