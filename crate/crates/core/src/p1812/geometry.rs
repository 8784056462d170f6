//! Path analysis: horizon angles and distances, smooth-earth surfaces.
//!
//! Distances are km, heights m, angles mrad throughout.

use super::diffraction::wavelength_m;

#[derive(Debug, Clone)]
pub(crate) struct PathGeometry {
    /// Distances from the transmitter (km).
    pub d: Vec<f64>,
    /// Terrain plus representative clutter; endpoints are bare terrain.
    pub g: Vec<f64>,
    pub dtot: f64,
    /// Antenna heights above sea level.
    pub hts: f64,
    pub hrs: f64,
    /// Smooth-earth surface heights at the terminals for the diffraction model.
    pub hstd: f64,
    pub hsrd: f64,
    /// Effective antenna heights for the ducting/layer-reflection model.
    pub hte: f64,
    pub hre: f64,
    /// Terrain roughness above the smooth surface between the horizons.
    pub hm: f64,
    /// Horizon distances (km) and elevation angles (mrad).
    pub dlt: f64,
    pub dlr: f64,
    pub theta_t: f64,
    pub theta_r: f64,
    /// Path angular distance (mrad).
    pub theta: f64,
    pub line_of_sight: bool,
}

fn argmax_first(values: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    values.fold(None, |best, (i, v)| match best {
        Some((_, bv)) if bv >= v => best,
        _ => Some((i, v)),
    })
}

fn argmax_last(values: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    values.fold(None, |best, (i, v)| match best {
        Some((_, bv)) if bv > v => best,
        _ => Some((i, v)),
    })
}

impl PathGeometry {
    pub fn analyse(
        d: &[f64],
        h: &[f64],
        clutter: &[f64],
        htg: f64,
        hrg: f64,
        ae: f64,
        f_ghz: f64,
    ) -> Self {
        let n = d.len();
        let dtot = d[n - 1];
        let hts = h[0] + htg;
        let hrs = h[n - 1] + hrg;
        let mut g: Vec<f64> = h.iter().zip(clutter).map(|(a, b)| a + b).collect();
        g[0] = h[0];
        g[n - 1] = h[n - 1];
        let interior = 1..n.saturating_sub(1);

        // Least-squares smooth-earth surface through the terrain.
        let (mut v1, mut v2) = (0.0, 0.0);
        for i in 1..n {
            let dd = d[i] - d[i - 1];
            v1 += dd * (h[i] + h[i - 1]);
            v2 += dd * (h[i] * (2.0 * d[i] + d[i - 1]) + h[i - 1] * (d[i] + 2.0 * d[i - 1]));
        }
        let hst_ls = (2.0 * v1 * dtot - v2) / (dtot * dtot);
        let hsr_ls = (v2 - v1 * dtot) / (dtot * dtot);

        // Smooth surface for the diffraction model.
        let mut hobs = f64::NEG_INFINITY;
        let mut alpha_obt = f64::NEG_INFINITY;
        let mut alpha_obr = f64::NEG_INFINITY;
        for i in interior.clone() {
            let hh = h[i] - (hts * (dtot - d[i]) + hrs * d[i]) / dtot;
            hobs = hobs.max(hh);
            alpha_obt = alpha_obt.max(hh / d[i]);
            alpha_obr = alpha_obr.max(hh / (dtot - d[i]));
        }
        let (hstp, hsrp) = if hobs <= 0.0 || !hobs.is_finite() {
            (hst_ls, hsr_ls)
        } else {
            let gt = alpha_obt / (alpha_obt + alpha_obr);
            let gr = alpha_obr / (alpha_obt + alpha_obr);
            (hst_ls - hobs * gr, hsr_ls - hobs * gt)
        };
        let hstd = hstp.min(h[0]);
        let hsrd = hsrp.min(h[n - 1]);

        // Horizon elevation angles seen from each terminal.
        let curvature = |x: f64| 1000.0 * x / (2.0 * ae);
        let tx_angle = |i: usize| (g[i] - hts) / d[i] - curvature(d[i]);
        let rx_angle = |i: usize| (g[i] - hrs) / (dtot - d[i]) - curvature(dtot - d[i]);
        let theta_td = (hrs - hts) / dtot - curvature(dtot);
        let theta_rd = (hts - hrs) / dtot - curvature(dtot);

        let tx_max = argmax_first(interior.clone().map(|i| (i, tx_angle(i))));
        let line_of_sight = match tx_max {
            Some((_, theta_max)) => theta_max <= theta_td,
            None => true,
        };

        let (dlt, dlr, theta_t, theta_r, lt, lr) = if !line_of_sight {
            let (lt, theta_t) = tx_max.expect("trans-horizon path has interior points");
            let (lr, theta_r) = argmax_first(interior.clone().map(|i| (i, rx_angle(i))))
                .expect("trans-horizon path has interior points");
            (d[lt], dtot - d[lr], theta_t, theta_r, lt, lr)
        } else {
            // Both horizons sit at the point with the largest diffraction parameter.
            let lambda = wavelength_m(f_ghz);
            let nu = |i: usize| {
                (g[i] + 500.0 * d[i] * (dtot - d[i]) / ae - (hts * (dtot - d[i]) + hrs * d[i]) / dtot)
                    * (0.002 * dtot / (lambda * d[i] * (dtot - d[i]))).sqrt()
            };
            match argmax_last(interior.clone().map(|i| (i, nu(i)))) {
                Some((k, _)) => (d[k], dtot - d[k], theta_td, theta_rd, k, k),
                None => (dtot / 2.0, dtot / 2.0, theta_td, theta_rd, 0, n - 1),
            }
        };
        let theta = 1000.0 * dtot / ae + theta_t + theta_r;

        // Smooth surface and effective heights for ducting/layer reflection.
        let hst = hst_ls.min(h[0]);
        let hsr = hsr_ls.min(h[n - 1]);
        let slope = (hsr - hst) / dtot;
        let hte = htg + h[0] - hst;
        let hre = hrg + h[n - 1] - hsr;
        let (lo, hi) = (lt.min(lr), lt.max(lr));
        let hm = (lo..=hi)
            .map(|i| h[i] - (hst + slope * d[i]))
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);

        Self {
            d: d.to_vec(),
            g,
            dtot,
            hts,
            hrs,
            hstd,
            hsrd,
            hte,
            hre,
            hm,
            dlt,
            dlr,
            theta_t,
            theta_r,
            theta,
            line_of_sight,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize, len: f64) -> (Vec<f64>, Vec<f64>) {
        let d = (0..n).map(|i| len * i as f64 / (n - 1) as f64).collect();
        (d, vec![0.0; n])
    }

    #[test]
    fn flat_short_path_is_line_of_sight() {
        let (d, h) = flat(35, 1.0);
        let g = PathGeometry::analyse(&d, &h, &vec![0.0; 35], 30.0, 2.5, 8500.0, 3.5);
        assert!(g.line_of_sight);
        assert_eq!(g.hstd, 0.0);
        assert_eq!(g.hsrd, 0.0);
        assert!((g.dlt + g.dlr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_makes_path_transhorizon() {
        let (d, mut h) = flat(101, 10.0);
        h[50] = 200.0;
        let g = PathGeometry::analyse(&d, &h, &vec![0.0; 101], 10.0, 10.0, 8500.0, 1.0);
        assert!(!g.line_of_sight);
        assert!((g.dlt - 5.0).abs() < 1e-9);
        assert!((g.dlr - 5.0).abs() < 1e-9);
        assert!(g.theta > 0.0);
    }

    #[test]
    fn smooth_surface_of_a_slope_is_the_slope() {
        let d: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let h: Vec<f64> = d.iter().map(|x| 100.0 + 5.0 * x).collect();
        let g = PathGeometry::analyse(&d, &h, &[0.0; 11], 10.0, 10.0, 8500.0, 1.0);
        // ducting effective heights equal the antenna heights on a planar slope
        assert!((g.hte - 10.0).abs() < 1e-9);
        assert!((g.hre - 10.0).abs() < 1e-9);
    }
}
