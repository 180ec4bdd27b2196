//! Gaussian-modulation bound under heterodyne detection with trusted
//! detector noise.

use crate::error::{Error, Result};

fn g_entropy(nu: f64) -> f64 {
    let x = (nu - 1.0) / 2.0;
    if x <= 0.0 {
        0.0
    } else {
        (x + 1.0) * (x + 1.0).log2() - x * x.log2()
    }
}

/// Terms of the Devetak–Winter rate, all in bits per symbol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianTerms {
    pub mutual_information: f64,
    pub holevo: f64,
    /// `β·I_AB − χ_BE`, before clamping.
    pub raw_rate: f64,
}

/// Computes `β·I_AB − χ_BE` for modulation variance `va`, input-referred
/// excess noise `eps`, detector efficiency `eta` and electronic noise `vel`.
pub fn gaussian_terms(va: f64, t: f64, eps: f64, eta: f64, vel: f64, beta: f64) -> Result<GaussianTerms> {
    if !(t > 0.0 && t <= 1.0) || va <= 0.0 || eta <= 0.0 || eta > 1.0 || vel < 0.0 {
        return Err(Error::Input(format!("gaussian rate inputs out of range (T={t}, V_A={va}, η={eta}, v_el={vel})")));
    }
    let v = va + 1.0;
    let chi_line = 1.0 / t - 1.0 + eps;
    let chi_het = (2.0 - eta + 2.0 * vel) / eta;
    let chi_tot = chi_line + chi_het / t;
    let iab = ((v + chi_tot) / (1.0 + chi_tot)).log2();

    let a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line).powi(2);
    let b = t * t * (v * chi_line + 1.0).powi(2);
    let disc_ab = a * a - 4.0 * b;
    let c = (v * b.sqrt() + t * (v + chi_line) + a * chi_het) / (t * (v + chi_tot));
    let d = b.sqrt() * (v + b.sqrt() * chi_het) / (t * (v + chi_tot));
    let disc_cd = c * c - 4.0 * d;
    if disc_ab < -1e-12 || disc_cd < -1e-12 {
        return Err(Error::Input("covariance matrix has complex symplectic eigenvalues".into()));
    }
    let nu = |s: f64, disc: f64, sign: f64| (0.5 * (s + sign * disc.max(0.0).sqrt())).max(0.0).sqrt();
    let eig = [nu(a, disc_ab, 1.0), nu(a, disc_ab, -1.0), nu(c, disc_cd, 1.0), nu(c, disc_cd, -1.0)];
    if eig.iter().any(|&l| l < 1.0 - 1e-9) {
        return Err(Error::Input(format!("unphysical covariance: symplectic eigenvalues {eig:?}")));
    }
    let holevo = g_entropy(eig[0]) + g_entropy(eig[1]) - g_entropy(eig[2]) - g_entropy(eig[3]);
    Ok(GaussianTerms { mutual_information: iab, holevo, raw_rate: beta * iab - holevo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pure_loss_holevo_matches_thermal_entropy() {
        // With ε = 0, ideal detection and T = 1 Eve learns nothing.
        let r = gaussian_terms(2.0, 1.0, 0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(r.holevo.abs() < 1e-9);
        // heterodyne I_AB = log2(1 + V_A/2) at unit transmittance
        assert_relative_eq!(r.mutual_information, (1.0f64 + 1.0).log2(), epsilon = 1e-12);
    }

    #[test]
    fn reference_values() {
        // numpy evaluation of the heterodyne trusted-noise covariance model
        let r = gaussian_terms(1.17, 0.1, 0.013, 0.51, 0.19, 0.95).unwrap();
        assert_relative_eq!(r.raw_rate, 0.022389749567876635, max_relative = 1e-10);
        assert_relative_eq!(r.mutual_information, 0.03571461556676625, max_relative = 1e-10);
        assert_relative_eq!(r.holevo, 0.011539135220551298, max_relative = 1e-10);
        let lossy = gaussian_terms(1.17, 0.01, 0.013, 0.51, 0.19, 0.95).unwrap();
        assert!(lossy.raw_rate < r.raw_rate);
    }

    #[test]
    fn rejects_bad_transmittance() {
        assert!(gaussian_terms(1.0, 0.0, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(gaussian_terms(1.0, 1.5, 0.0, 1.0, 0.0, 1.0).is_err());
    }
}
