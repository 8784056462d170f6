//! Radiative-energy-transfer attenuation through a uniform scattering slab.
//!
//! Received power is the sum of a coherent part that decays with the full
//! extinction, the portion of forward scatter that stays inside the receiver
//! beam, and a diffuse part whose decay rate depends on the incidence angle.

use super::RetCoefficients;

/// Discrete eigenvalue `s` of the isotropic transfer equation for reduced
/// albedo `w` in (0, 1): `(w / 2s) ln((1 + s) / (1 - s)) = 1`.
pub(crate) fn discrete_eigenvalue(w: f64) -> f64 {
    let g = |s: f64| w / (2.0 * s) * ((1.0 + s) / (1.0 - s)).ln() - 1.0;
    // g is increasing in s, negative near 0 and positive near 1
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-15);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Loss in dB after `depth` m of foliage entered at `theta_deg` from the
/// horizontal.
pub(crate) fn loss_db(c: &RetCoefficients, depth: f64, theta_deg: f64) -> f64 {
    if depth == 0.0 {
        return 0.0;
    }
    let tau = c.extinction_per_m * depth;
    let a = c.alpha * c.albedo;
    let tau_hat = (1.0 - a) * tau;
    let w_hat = (1.0 - c.alpha) * c.albedo / (1.0 - a);
    let s = discrete_eigenvalue(w_hat);

    let d_rx = (0.6 * c.rx_beamwidth_deg).to_radians().powi(2);
    let d_sc = (0.6 * c.beta_deg).to_radians().powi(2);

    // Coherent plus forward-scattered power: Poisson(a tau) orders of
    // scattering, each order partly leaving the receiver beam.
    let lam = a * tau;
    let m_max = (lam + 12.0 * lam.sqrt() + 30.0).ceil() as u32;
    let mut forward = 0.0;
    let mut log_w = -tau;
    for m in 0..=m_max {
        let mf = f64::from(m);
        if m > 0 {
            log_w += lam.ln() - mf.ln();
        }
        forward += log_w.exp() * d_rx / (d_rx + mf * d_sc);
    }

    let diffuse_share = w_hat * d_rx / 4.0;
    let kappa = s + (1.0 - s) * theta_deg.to_radians().sin();
    let p = (1.0 - diffuse_share) * forward + diffuse_share * (-kappa * tau_hat).exp();
    // floor keeps very deep canopies finite
    (-10.0 * p.max(f64::MIN_POSITIVE).log10()).max(0.0)
}
