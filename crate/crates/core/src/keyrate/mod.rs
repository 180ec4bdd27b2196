//! Channel estimation and secret key rates.
//!
//! Excess noise is referred to the channel input throughout: a channel with
//! transmittance `T` and excess noise `ε` adds `T·ε` SNU of noise at Bob's
//! input. Two rate engines are provided. [`gaussian_keyrate`] is the closed-form
//! Gaussian-modulation bound, [`dm_keyrate_sdp`] is the numerical
//! discrete-modulation bound for QPSK.
//!
//! ## Estimator
//!
//! With sent amplitudes `a_k` and heterodyne outcomes `y_k = x_k + i·p_k` in
//! SNU^(1/2), the model is `y = t·a + noise` with `t = √(2ηT)` and noise
//! variance `N = 1 + v_el + ηTε/2` per quadrature. Then
//!
//! ```text
//! t̂ = Σ Re(conj(a)·y) / Σ|a|²        T̂ = t̂² / (2η)
//! N̂ = Σ|y − t̂·a|² / (2n)            ε̂ = 2(N̂ − 1 − v_el) / (ηT̂)
//! ```

pub mod dm;
pub mod fock;
pub mod gaussian;
pub mod sdp;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::QuadratureSamples;
use crate::error::{Error, Result};

pub use dm::{DmInputs, DmOutcome, DmSettings};

/// Minimum number of slots accepted by [`estimate_channel_params`].
pub const MIN_ESTIMATION_SLOTS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimate {
    pub user: usize,
    pub transmittance: f64,
    /// Input-referred excess noise (SNU).
    pub excess_noise: f64,
    pub modulation_variance: f64,
    pub transmittance_se: f64,
    pub excess_noise_se: f64,
    /// Set when a negative ε̂ or a T̂ above one was clamped.
    pub clamped: bool,
    pub slots: usize,
}

impl ChannelEstimate {
    /// An estimate that simply restates known channel parameters.
    pub fn exact(user: usize, modulation_variance: f64, transmittance: f64, excess_noise: f64) -> Self {
        Self {
            user,
            transmittance,
            excess_noise,
            modulation_variance,
            transmittance_se: 0.0,
            excess_noise_se: 0.0,
            clamped: false,
            slots: 0,
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.transmittance > 0.0 && self.transmittance <= 1.0) {
            out.push(format!("transmittance {} outside (0, 1]", self.transmittance));
        }
        if !(self.excess_noise >= 0.0) {
            out.push(format!("excess noise {} is negative", self.excess_noise));
        }
        if !(self.modulation_variance > 0.0) {
            out.push(format!("modulation variance {} must be positive", self.modulation_variance));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyRateParams {
    /// Symbols per second.
    pub repetition_rate: f64,
    pub reconciliation_efficiency: f64,
    pub detector_efficiency: f64,
    /// SNU.
    pub electronic_noise: f64,
    #[serde(default = "one")]
    pub sifting_probability: f64,
    /// Error-correction leakage in bits per symbol. When absent it is derived
    /// from the quadrant error statistics and the reconciliation efficiency.
    #[serde(default)]
    pub leakage: Option<f64>,
    #[serde(default = "default_cutoff")]
    pub fock_cutoff: usize,
    #[serde(default = "default_gap")]
    pub gap_tolerance: f64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
}

fn one() -> f64 {
    1.0
}
fn default_cutoff() -> usize {
    12
}
fn default_gap() -> f64 {
    1e-5
}
fn default_iterations() -> usize {
    500
}

impl KeyRateParams {
    pub fn new(repetition_rate: f64, beta: f64, eta: f64, vel: f64) -> Self {
        Self {
            repetition_rate,
            reconciliation_efficiency: beta,
            detector_efficiency: eta,
            electronic_noise: vel,
            sifting_probability: 1.0,
            leakage: None,
            fock_cutoff: default_cutoff(),
            gap_tolerance: default_gap(),
            max_iterations: default_iterations(),
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.repetition_rate > 0.0) {
            out.push(format!("repetition rate {} must be positive", self.repetition_rate));
        }
        if !(self.reconciliation_efficiency > 0.0 && self.reconciliation_efficiency <= 1.0) {
            out.push(format!("reconciliation efficiency {} outside (0, 1]", self.reconciliation_efficiency));
        }
        if !(self.detector_efficiency > 0.0 && self.detector_efficiency <= 1.0) {
            out.push(format!("detector efficiency {} outside (0, 1]", self.detector_efficiency));
        }
        if !(self.electronic_noise >= 0.0) {
            out.push(format!("electronic noise {} is negative", self.electronic_noise));
        }
        if !(self.sifting_probability > 0.0 && self.sifting_probability <= 1.0) {
            out.push(format!("sifting probability {} outside (0, 1]", self.sifting_probability));
        }
        if let Some(l) = self.leakage {
            if !(l >= 0.0) {
                out.push(format!("leakage {l} is negative"));
            }
        }
        if self.fock_cutoff < 8 {
            out.push(format!("Fock cutoff {} is below 8", self.fock_cutoff));
        }
        if !(self.gap_tolerance > 0.0) {
            out.push("gap tolerance must be positive".into());
        }
        if self.max_iterations == 0 {
            out.push("iteration cap must be positive".into());
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionInputs {
    /// Sideband ratio of the modulator.
    pub g1: f64,
    pub s_lower: f64,
    pub s_upper: f64,
}

impl CorrectionInputs {
    pub const IDEAL: CorrectionInputs = CorrectionInputs { g1: 1.0, s_lower: 0.0, s_upper: 0.0 };

    pub fn factor(&self) -> Result<f64> {
        correction_factor(self)
    }
}

/// `g = 1/(g₁·√(1 − S_{j−1} − S_{j+1}))`.
pub fn correction_factor(inputs: &CorrectionInputs) -> Result<f64> {
    let s = inputs.s_lower + inputs.s_upper;
    if !(inputs.s_lower >= 0.0 && inputs.s_upper >= 0.0) || s >= 1.0 {
        return Err(Error::InvalidFilter(format!("crosstalk fractions sum to {s}")));
    }
    if !(inputs.g1 > 0.0 && inputs.g1 <= 1.0) {
        return Err(Error::Input(format!("sideband ratio {} outside (0, 1]", inputs.g1)));
    }
    Ok(1.0 / (inputs.g1 * (1.0 - s).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyRateMethod {
    Gaussian,
    DmSdp,
    Plob,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    pub user: usize,
    pub method: KeyRateMethod,
    pub bits_per_symbol: f64,
    pub bits_per_second: f64,
    /// Set when a negative rate was clamped to zero.
    pub clamped: bool,
    pub correction: f64,
    pub iterations: Option<usize>,
    pub gap: Option<f64>,
}

/// Estimates `(T, ε, V_A)` from sent amplitudes and received quadratures.
pub fn estimate_channel_params(sent: &[Complex64], received: &QuadratureSamples, params: &KeyRateParams) -> Result<ChannelEstimate> {
    let n = sent.len();
    if n != received.len() {
        return Err(Error::Input(format!("{} sent symbols but {} received samples", n, received.len())));
    }
    if n < MIN_ESTIMATION_SLOTS {
        return Err(Error::Input(format!("{n} slots is below the {MIN_ESTIMATION_SLOTS} needed for estimation")));
    }
    let eta = params.detector_efficiency;
    let vel = params.electronic_noise;
    let energy: f64 = sent.iter().map(|a| a.norm_sqr()).sum();
    if energy <= 0.0 {
        return Err(Error::Input("sent amplitudes are all zero".into()));
    }
    let cross: f64 = sent.iter().enumerate().map(|(k, a)| a.re * received.x[k] + a.im * received.p[k]).sum();
    let gain = cross / energy;
    let resid: f64 = sent
        .iter()
        .enumerate()
        .map(|(k, a)| (received.x[k] - gain * a.re).powi(2) + (received.p[k] - gain * a.im).powi(2))
        .sum::<f64>()
        / (2 * n) as f64;
    let mut clamped = false;
    let mut t = gain * gain / (2.0 * eta);
    if gain <= 0.0 || !t.is_finite() {
        return Err(Error::Input("no correlation between sent and received symbols".into()));
    }
    let t_se = 2.0 * t * (resid / energy).sqrt() / gain.abs();
    if t > 1.0 {
        t = 1.0;
        clamped = true;
    }
    let mut eps = 2.0 * (resid - 1.0 - vel) / (eta * t);
    let eps_se = 2.0 * resid / (n as f64).sqrt() / (eta * t);
    if eps < 0.0 {
        eps = 0.0;
        clamped = true;
    }
    Ok(ChannelEstimate {
        user: received.user,
        transmittance: t,
        excess_noise: eps,
        modulation_variance: 2.0 * energy / n as f64,
        transmittance_se: t_se,
        excess_noise_se: eps_se,
        clamped,
        slots: n,
    })
}

fn check(est: &ChannelEstimate, params: &KeyRateParams) -> Result<()> {
    let mut p = est.problems();
    p.extend(params.problems());
    if p.is_empty() {
        Ok(())
    } else {
        Err(Error::Input(p.join("; ")))
    }
}

/// Gaussian-modulation rate with the amplitude correction applied as
/// `V_A → g²V_A`, `T → T/g²`, `ε → g²ε`.
pub fn gaussian_keyrate(est: &ChannelEstimate, params: &KeyRateParams, corr: &CorrectionInputs) -> Result<KeyRateReport> {
    check(est, params)?;
    let g = correction_factor(corr)?;
    let g2 = g * g;
    let terms = gaussian::gaussian_terms(
        est.modulation_variance * g2,
        est.transmittance / g2,
        est.excess_noise * g2,
        params.detector_efficiency,
        params.electronic_noise,
        params.reconciliation_efficiency,
    )?;
    let (bps, clamped) = keyrate_bps(terms.raw_rate, params);
    Ok(KeyRateReport {
        user: est.user,
        method: KeyRateMethod::Gaussian,
        bits_per_symbol: terms.raw_rate.max(0.0),
        bits_per_second: bps,
        clamped,
        correction: g,
        iterations: None,
        gap: None,
    })
}

/// Discrete-modulation rate `p_pass·min D − δ_EC` for QPSK.
pub fn dm_keyrate_sdp(est: &ChannelEstimate, params: &KeyRateParams, corr: &CorrectionInputs) -> Result<KeyRateReport> {
    dm_keyrate_detailed(est, params, corr).map(|(r, _)| r)
}

/// As [`dm_keyrate_sdp`], also returning the solver trace.
pub fn dm_keyrate_detailed(
    est: &ChannelEstimate,
    params: &KeyRateParams,
    corr: &CorrectionInputs,
) -> Result<(KeyRateReport, DmOutcome)> {
    check(est, params)?;
    let g = correction_factor(corr)?;
    let alpha = (est.modulation_variance / 2.0).sqrt();
    let inputs = DmInputs {
        alpha,
        transmittance: est.transmittance,
        excess_noise: est.excess_noise,
        efficiency: params.detector_efficiency,
        electronic_noise: params.electronic_noise,
        correction: g,
        cutoff: params.fock_cutoff,
    };
    let settings = DmSettings {
        gap_tolerance: params.gap_tolerance,
        max_iterations: params.max_iterations,
        ..DmSettings::default()
    };
    let outcome = dm::minimize(&inputs, &settings)?;
    let leak = params.leakage.unwrap_or_else(|| {
        dm::leakage(
            alpha,
            est.transmittance,
            est.excess_noise,
            params.detector_efficiency,
            params.electronic_noise,
            params.reconciliation_efficiency,
        )
        .0
    });
    let raw = params.sifting_probability * outcome.lower_bound - leak;
    let (bps, clamped) = keyrate_bps(raw, params);
    let report = KeyRateReport {
        user: est.user,
        method: KeyRateMethod::DmSdp,
        bits_per_symbol: raw.max(0.0),
        bits_per_second: bps,
        clamped,
        correction: g,
        iterations: Some(outcome.iterations),
        gap: Some(outcome.gap),
    };
    Ok((report, outcome))
}

/// Repeaterless capacity `−log₂(1 − T)` in bits per channel use; infinite at
/// `T = 1`.
pub fn plob_bound(t: f64) -> f64 {
    if t >= 1.0 {
        f64::INFINITY
    } else if t <= 0.0 {
        0.0
    } else {
        -(1.0 - t).log2()
    }
}

pub fn plob_report(user: usize, t: f64, params: &KeyRateParams) -> KeyRateReport {
    let bits = plob_bound(t);
    KeyRateReport {
        user,
        method: KeyRateMethod::Plob,
        bits_per_symbol: bits,
        bits_per_second: bits * params.repetition_rate,
        clamped: false,
        correction: 1.0,
        iterations: None,
        gap: None,
    }
}

/// Converts bits per symbol to bits per second. Negative inputs give zero
/// and set the returned flag.
pub fn keyrate_bps(bits_per_symbol: f64, params: &KeyRateParams) -> (f64, bool) {
    if bits_per_symbol < 0.0 || bits_per_symbol.is_nan() {
        (0.0, true)
    } else {
        (bits_per_symbol * params.repetition_rate, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::simulate_symbol_tier;
    use crate::encoder::qpsk_point;
    use crate::seed;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn table_params(eta: f64, vel: f64) -> KeyRateParams {
        KeyRateParams::new(50e6, 0.95, eta, vel)
    }

    fn qpsk(n: usize, va: f64, s: u64) -> Vec<Complex64> {
        let alpha = (va / 2.0).sqrt();
        let mut rng = seed::rng(s);
        (0..n).map(|_| qpsk_point(alpha, rng.random_range(0..4))).collect()
    }

    #[test]
    fn correction_examples() {
        let g = correction_factor(&CorrectionInputs { g1: 0.9998, s_lower: 0.0180, s_upper: 0.0792 }).unwrap();
        assert!((g - 1.0526).abs() < 1e-4, "{g}");
        assert_eq!(correction_factor(&CorrectionInputs::IDEAL).unwrap(), 1.0);
        let g = correction_factor(&CorrectionInputs { g1: 0.9998, s_lower: 0.0, s_upper: 0.0 }).unwrap();
        assert!((g - 1.0002).abs() < 1e-4);
        assert!(matches!(
            correction_factor(&CorrectionInputs { g1: 1.0, s_lower: 0.6, s_upper: 0.4 }),
            Err(Error::InvalidFilter(_))
        ));
    }

    #[test]
    fn plob_examples() {
        assert_relative_eq!(plob_bound(0.5), 1.0, epsilon = 1e-15);
        assert_relative_eq!(plob_bound(0.025), -(0.975f64).ln() / 2f64.ln(), epsilon = 1e-15);
        assert!((plob_bound(0.025) - 0.0366).abs() < 1e-4);
        assert!(plob_bound(1.0).is_infinite());
    }

    #[test]
    fn bps_conversion() {
        let p = table_params(0.5, 0.1);
        let (bps, flag) = keyrate_bps(3.8e-4, &p);
        assert_relative_eq!(bps, 1.9e4, max_relative = 1e-12);
        assert!(!flag);
        assert_eq!(keyrate_bps(0.0, &p), (0.0, false));
        assert_eq!(keyrate_bps(-1e-3, &p), (0.0, true));
    }

    #[test]
    fn estimator_recovers_high_transmittance_channel() {
        let sent = qpsk(1_000_000, 1.17, 3);
        let p = table_params(0.51, 0.19);
        let rx = simulate_symbol_tier(&sent, 0.631, 0.0216, 0.51, 0.19, 0, 9);
        let e = estimate_channel_params(&sent, &rx, &p).unwrap();
        assert!((e.transmittance - 0.631).abs() < 0.02 * 0.631);
        assert!((e.excess_noise - 0.0216).abs() < 0.005, "{e:?}");
        assert_relative_eq!(e.modulation_variance, 1.17, max_relative = 1e-9);
    }

    #[test]
    fn estimator_standard_errors_are_honest() {
        // z-scores over repeated draws should be roughly standard normal
        let p = table_params(0.45, 0.15);
        let sent = qpsk(100_000, 1.16, 1);
        let mut zt = Vec::new();
        let mut ze = Vec::new();
        for s in 0..40 {
            let rx = simulate_symbol_tier(&sent, 0.3, 0.05, 0.45, 0.15, 0, 100 + s);
            let e = estimate_channel_params(&sent, &rx, &p).unwrap();
            zt.push((e.transmittance - 0.3) / e.transmittance_se);
            ze.push((e.excess_noise - 0.05) / e.excess_noise_se);
        }
        for z in [zt, ze] {
            let var = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
            assert!(var > 0.4 && var < 2.0, "{var}");
        }
    }

    #[test]
    fn estimator_ideal_and_efficiency_compensation() {
        let sent = qpsk(200_000, 2.0, 5);
        let ideal = KeyRateParams::new(1.0, 1.0, 1.0, 0.0);
        let rx = simulate_symbol_tier(&sent, 1.0, 0.0, 1.0, 0.0, 0, 1);
        let e = estimate_channel_params(&sent, &rx, &ideal).unwrap();
        assert!((e.transmittance - 1.0).abs() < 4.0 * e.transmittance_se.max(1e-3));
        assert!(e.excess_noise < 4.0 * e.excess_noise_se);

        let half = KeyRateParams::new(1.0, 1.0, 0.5, 0.0);
        let rx_half = simulate_symbol_tier(&sent, 0.4, 0.0, 0.5, 0.0, 0, 2);
        let rx_full = simulate_symbol_tier(&sent, 0.4, 0.0, 1.0, 0.0, 0, 2);
        let a = estimate_channel_params(&sent, &rx_half, &half).unwrap();
        let b = estimate_channel_params(&sent, &rx_full, &ideal).unwrap();
        assert!((a.transmittance - b.transmittance).abs() < 4.0 * (a.transmittance_se + b.transmittance_se));
    }

    #[test]
    fn estimator_rejects_short_records() {
        let sent = qpsk(10, 1.0, 1);
        let rx = simulate_symbol_tier(&sent, 0.5, 0.0, 1.0, 0.0, 0, 1);
        assert!(estimate_channel_params(&sent, &rx, &table_params(1.0, 0.0)).is_err());
    }

    #[test]
    fn gaussian_table_user_is_positive() {
        let est = ChannelEstimate::exact(1, 1.16, 0.024, 0.022);
        let corr = CorrectionInputs { g1: 0.9998, s_lower: 0.0180, s_upper: 0.0792 };
        let r = gaussian_keyrate(&est, &table_params(0.45, 0.15), &corr).unwrap();
        assert!(r.bits_per_second > 0.0);
        assert_relative_eq!(r.bits_per_second, r.bits_per_symbol * 50e6, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_noiseless_positive_and_large_noise_clamped() {
        let p = KeyRateParams::new(1.0, 1.0, 1.0, 0.0);
        let r = gaussian_keyrate(&ChannelEstimate::exact(0, 1.17, 1.0, 0.0), &p, &CorrectionInputs::IDEAL).unwrap();
        assert!(r.bits_per_symbol > 0.0);
        let r = gaussian_keyrate(&ChannelEstimate::exact(0, 1.17, 0.1, 0.5), &table_params(0.5, 0.1), &CorrectionInputs::IDEAL)
            .unwrap();
        assert_eq!(r.bits_per_second, 0.0);
        assert!(r.clamped);
    }

    proptest! {
        #[test]
        fn gaussian_monotone_in_noise(t in 0.05f64..0.9, e1 in 0.0f64..0.1, de in 0.0f64..0.05) {
            let p = table_params(0.51, 0.19);
            let a = gaussian_keyrate(&ChannelEstimate::exact(0, 1.17, t, e1), &p, &CorrectionInputs::IDEAL).unwrap();
            let b = gaussian_keyrate(&ChannelEstimate::exact(0, 1.17, t, e1 + de), &p, &CorrectionInputs::IDEAL).unwrap();
            prop_assert!(b.bits_per_symbol <= a.bits_per_symbol + 1e-12);
            prop_assert!(a.bits_per_symbol <= plob_bound(t));
        }
    }

    #[test]
    fn dm_at_zero_distance_is_positive_and_limited_by_hard_decisions() {
        // At unit transmittance Eve holds nothing, so with β = 1 the rate is
        // the quadrant mutual information, which the soft-decision Gaussian
        // figure exceeds.
        let p = KeyRateParams::new(1.0, 1.0, 1.0, 0.0);
        let est = ChannelEstimate::exact(0, 1.17, 1.0, 0.0);
        let dm = dm_keyrate_sdp(&est, &KeyRateParams { fock_cutoff: 10, ..p.clone() }, &CorrectionInputs::IDEAL).unwrap();
        let ga = gaussian_keyrate(&est, &p, &CorrectionInputs::IDEAL).unwrap();
        let (_, info) = dm::leakage((1.17f64 / 2.0).sqrt(), 1.0, 0.0, 1.0, 0.0, 1.0);
        assert!(dm.bits_per_symbol > 0.0);
        assert!((dm.bits_per_symbol - info).abs() < 1e-3, "{} vs {info}", dm.bits_per_symbol);
        assert!(dm.bits_per_symbol <= ga.bits_per_symbol);
    }
}
