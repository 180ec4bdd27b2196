//! Vibration localisation from the server (probe) and user (pilot) phase
//! traces.
//!
//! A vibration `L_S` km from the server reaches the server after
//! `t_S = L_S·d/c` and the user after `t_U = (L − L_S)·d/c`. With
//! `Δt = t_U − t_S` the position is `L_S = ½(L − c·Δt/d)`, so an event at the
//! server end gives the largest positive `Δt` and one at the midpoint gives
//! zero.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{simulate_phase_traces, ChannelSpec, NoiseSpec, PhaseTier, VibrationEvent, VibrationWaveform};
use crate::dsp::{design_filter, FilterPurpose, PhaseTrace};
use crate::error::{Error, Result};
use crate::filternet::SPEED_OF_LIGHT;
use crate::seed;
use crate::signal;

/// Correlation peaks below this are reported as no detection.
pub const DETECTION_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    /// `t_U − t_S` (s).
    pub delta_t_s: f64,
    /// Normalised correlation at the peak.
    pub peak: f64,
    /// Peak lag in samples, including the sub-sample correction.
    pub lag_samples: f64,
    pub refined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResult {
    pub estimated_km: f64,
    pub truth_km: Option<f64>,
    pub error_m: Option<f64>,
    /// Set when the raw estimate fell outside the link and was clamped.
    pub clamped: bool,
    pub peak: f64,
}

impl LocalizationResult {
    pub fn with_truth(mut self, truth_km: f64) -> Self {
        self.truth_km = Some(truth_km);
        self.error_m = Some((self.estimated_km - truth_km) * 1e3);
        self
    }
}

/// Normalised cross-correlation `Σ s_i·u_{i+k} / (‖s‖·‖u‖)` of the
/// mean-removed traces over lags `|k| ≤ max_lag_s·rate`.
///
/// A positive peak lag means the user trace lags the server trace.
pub fn correlate_delay(server: &PhaseTrace, user: &PhaseTrace, max_lag_s: f64) -> Result<CorrelationResult> {
    if (server.rate - user.rate).abs() > 1e-9 * server.rate {
        return Err(Error::Input(format!("trace rates differ: {} vs {}", server.rate, user.rate)));
    }
    if server.len() != user.len() || server.len() < 3 {
        return Err(Error::Input("traces must have equal length of at least 3 samples".into()));
    }
    let rate = server.rate;
    let n = server.len();
    let k_max = ((max_lag_s * rate).ceil() as usize).min(n - 1);
    let corr = cross_correlation(&server.samples, &user.samples, k_max);
    let (imax, &peak) = corr
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one lag");
    if !(peak >= DETECTION_THRESHOLD) {
        return Err(Error::NoDetection { peak: if peak.is_finite() { peak } else { 0.0 } });
    }
    let mut lag = imax as f64 - k_max as f64;
    let mut refined = false;
    if imax > 0 && imax + 1 < corr.len() {
        let (a, b, c) = (corr[imax - 1], corr[imax], corr[imax + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            lag += 0.5 * (a - c) / denom;
            refined = true;
        }
    }
    Ok(CorrelationResult { delta_t_s: lag / rate, peak: peak.min(1.0), lag_samples: lag, refined })
}

/// Correlation values for lags `−k_max..=k_max`, index `k + k_max`.
fn cross_correlation(s: &[f64], u: &[f64], k_max: usize) -> Vec<f64> {
    let n = s.len();
    let ms = s.iter().sum::<f64>() / n as f64;
    let mu = u.iter().sum::<f64>() / n as f64;
    let ns = s.iter().map(|v| (v - ms).powi(2)).sum::<f64>().sqrt();
    let nu = u.iter().map(|v| (v - mu).powi(2)).sum::<f64>().sqrt();
    let norm = ns * nu;
    if norm == 0.0 {
        return vec![0.0; 2 * k_max + 1];
    }
    let m = (n + k_max).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    for i in 0..n {
        a[i].re = s[i] - ms;
        b[i].re = u[i] - mu;
    }
    signal::fft_in_place(&mut a);
    signal::fft_in_place(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x = x.conj() * y;
    }
    signal::ifft_in_place(&mut a);
    (0..=2 * k_max)
        .map(|j| {
            let k = j as isize - k_max as isize;
            let idx = if k >= 0 { k as usize } else { m - (-k) as usize };
            a[idx].re / norm
        })
        .collect()
}

/// Converts a delay into a position on a link of `length_km` with core
/// index `d`.
pub fn locate(corr: &CorrelationResult, length_km: f64, d: f64) -> LocalizationResult {
    let c_km = SPEED_OF_LIGHT / 1e3;
    let raw = 0.5 * (length_km - c_km * corr.delta_t_s / d);
    let est = raw.clamp(0.0, length_km);
    LocalizationResult { estimated_km: est, truth_km: None, error_m: None, clamped: est != raw, peak: corr.peak }
}

/// Filters both traces for `band` and localises the strongest common event.
pub fn localize(
    server: &PhaseTrace,
    user: &PhaseTrace,
    band: FilterPurpose,
    spec: &ChannelSpec,
) -> Result<LocalizationResult> {
    let f = design_filter(band, server.rate)?;
    let s = f.process(server)?;
    let u = f.process(user)?;
    // one sample of slack so the parabola can straddle the physical limit
    let corr = correlate_delay(&s, &u, spec.delay() + 1.0 / server.rate)?;
    Ok(locate(&corr, spec.length_km, spec.core_index))
}

/// Monte Carlo set-up for one vibration band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionScenario {
    pub band: FilterPurpose,
    pub channel: ChannelSpec,
    pub tier: PhaseTier,
    pub server_linewidth_hz: f64,
    pub user_linewidth_hz: f64,
    /// Energy signal-to-noise ratio `E/S₀` in dB, where `E = ∫φ_vib² dt` and
    /// `S₀` is the one-sided density of the white system phase noise.
    pub snr_db: f64,
    pub amplitude_rad: f64,
    /// Ring-down time of the tap, in periods of the band-centre frequency.
    pub decay_periods: f64,
    pub start_s: f64,
    /// Positions are drawn uniformly from this range (km).
    pub position_range_km: (f64, f64),
}

impl ResolutionScenario {
    pub fn new(band: FilterPurpose, length_km: f64, snr_db: f64) -> Self {
        ResolutionScenario {
            band,
            channel: ChannelSpec::new(length_km),
            tier: PhaseTier { rate: 1e6, duration_s: 0.35, residual_offset_hz: 3.0 },
            server_linewidth_hz: 0.0,
            user_linewidth_hz: 0.0,
            snr_db,
            amplitude_rad: 1.0,
            decay_periods: 2.0,
            start_s: 0.05,
            position_range_km: (0.0, length_km),
        }
    }

    /// Band-centre frequency used for the tap.
    pub fn frequency(&self) -> f64 {
        match self.band {
            FilterPurpose::Vib100Hz => 100.0,
            FilterPurpose::Vib1kHz => 1e3,
            FilterPurpose::Vib10kHz => 1e4,
            FilterPurpose::QkdBand { .. } => f64::NAN,
        }
    }

    fn decay(&self) -> f64 {
        self.decay_periods / self.frequency()
    }

    /// `∫φ_vib² dt` of the tap (rad²·s), in closed form.
    pub fn event_energy(&self) -> f64 {
        let tau = self.decay();
        let w = 2.0 * std::f64::consts::PI * self.frequency();
        // ∫(1 − e^{−x/a})² e^{−2x/τ} sin²(wx) dx with a = 0.1τ
        let a = 0.1 * tau;
        let term = |k: f64| {
            // ∫ e^{−kx} sin²(wx) dx = ½(1/k − k/(k² + 4w²))
            0.5 * (1.0 / k - k / (k * k + 4.0 * w * w))
        };
        let k0 = 2.0 / tau;
        let k1 = k0 + 1.0 / a;
        let k2 = k0 + 2.0 / a;
        self.amplitude_rad.powi(2) * (term(k0) - 2.0 * term(k1) + term(k2))
    }

    fn duration(&self) -> f64 {
        (12.0 * self.decay()).min(self.tier.duration_s - self.start_s)
    }

    pub fn event(&self, position_km: f64) -> VibrationEvent {
        VibrationEvent {
            position_km,
            waveform: VibrationWaveform::TapBurst {
                ring_frequency_hz: self.frequency(),
                decay_s: self.decay(),
                amplitude_rad: self.amplitude_rad,
            },
            start_s: self.start_s,
            duration_s: self.duration(),
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        let psd = if self.snr_db.is_finite() { self.event_energy() / 10f64.powf(self.snr_db / 10.0) } else { 0.0 };
        NoiseSpec {
            server_linewidth_hz: self.server_linewidth_hz,
            user_linewidth_hz: self.user_linewidth_hz,
            system_phase_psd: psd,
            ..NoiseSpec::quiet()
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut p = self.channel.problems();
        if matches!(self.band, FilterPurpose::QkdBand { .. }) {
            p.push("resolution: band must be a vibration band".into());
        }
        let (lo, hi) = self.position_range_km;
        if !(0.0 <= lo && lo <= hi && hi <= self.channel.length_km) {
            p.push(format!("resolution: position range ({lo}, {hi}) km outside the link"));
        }
        if !(self.decay_periods > 0.0 && self.amplitude_rad > 0.0) {
            p.push("resolution: tap decay and amplitude must be positive".into());
        }
        if !(self.start_s >= 0.0 && self.start_s < self.tier.duration_s) {
            p.push("resolution: tap must start inside the trace".into());
        }
        p
    }
}

/// One Monte Carlo draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub truth_km: f64,
    /// `None` for censored (undetected) trials.
    pub est_km: Option<f64>,
    pub err_m: Option<f64>,
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionReport {
    pub band: String,
    pub trials: usize,
    pub detected: usize,
    pub censored: usize,
    pub mean_error_m: f64,
    pub rms_error_m: f64,
    pub p95_abs_error_m: f64,
    /// `2√(2 ln 2)` times the MAD-based spread of the signed errors.
    pub fwhm_m: f64,
    /// Separation at which two events' 95 % error intervals stop overlapping,
    /// `2·p95(|err|)`.
    pub min_separation_m: f64,
    pub records: Vec<TrialRecord>,
}

/// Runs `n_runs` seeded localisations and summarises the errors. Trials
/// with no detection are censored and left out of the statistics.
pub fn resolution_trial(scenario: &ResolutionScenario, n_runs: usize, seed_value: u64) -> Result<ResolutionReport> {
    let p = scenario.problems();
    if !p.is_empty() {
        return Err(Error::Validation(p));
    }
    if n_runs == 0 {
        return Err(Error::Input("resolution trial needs at least one run".into()));
    }
    let noise = scenario.noise();
    let records: Vec<TrialRecord> = (0..n_runs)
        .into_par_iter()
        .map(|trial| run_trial(scenario, &noise, trial, seed_value))
        .collect::<Result<_>>()?;
    Ok(summarize(scenario.band.label(), records))
}

fn run_trial(scenario: &ResolutionScenario, noise: &NoiseSpec, trial: usize, seed_value: u64) -> Result<TrialRecord> {
    let trial_seed = seed::derive(seed_value, "resolution", trial as u64);
    let mut rng = seed::rng(trial_seed);
    let (lo, hi) = scenario.position_range_km;
    let truth = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let event = scenario.event(truth);
    let traces = simulate_phase_traces(&scenario.channel, noise, &[event], &scenario.tier, trial_seed)?;
    match localize(&traces.server, &traces.user, scenario.band, &scenario.channel) {
        Ok(loc) => {
            let loc = loc.with_truth(truth);
            Ok(TrialRecord { trial, truth_km: truth, est_km: Some(loc.estimated_km), err_m: loc.error_m, peak: loc.peak })
        }
        Err(Error::NoDetection { peak }) => Ok(TrialRecord { trial, truth_km: truth, est_km: None, err_m: None, peak }),
        Err(e) => Err(e),
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

pub fn summarize(band: &str, records: Vec<TrialRecord>) -> ResolutionReport {
    let errs: Vec<f64> = records.iter().filter_map(|r| r.err_m).collect();
    let n = errs.len();
    let mean = errs.iter().sum::<f64>() / n as f64;
    let rms = (errs.iter().map(|e| e * e).sum::<f64>() / n as f64).sqrt();
    let mut abs: Vec<f64> = errs.iter().map(|e| e.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let p95 = quantile(&abs, 0.95);
    let mut signed = errs.clone();
    signed.sort_by(f64::total_cmp);
    let median = quantile(&signed, 0.5);
    let mut dev: Vec<f64> = signed.iter().map(|e| (e - median).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let sigma = 1.4826 * quantile(&dev, 0.5);
    ResolutionReport {
        band: band.to_string(),
        trials: records.len(),
        detected: n,
        censored: records.len() - n,
        mean_error_m: mean,
        rms_error_m: rms,
        p95_abs_error_m: p95,
        fwhm_m: 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma,
        min_separation_m: 2.0 * p95,
        records,
    }
}

/// Spearman rank correlation.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(x: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
        let mut r = vec![0.0; x.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::TraceOrigin;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn burst(n: usize, center: f64, rate: f64) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = i as f64 / rate - center;
                (-(t * 2e3).powi(2)).exp() * (2.0 * std::f64::consts::PI * 5e3 * t).cos()
            })
            .collect()
    }

    fn trace(v: Vec<f64>) -> PhaseTrace {
        PhaseTrace::new(v, 1e6, TraceOrigin::Filtered)
    }

    #[test]
    fn identical_traces_peak_at_zero() {
        let s = trace(burst(4000, 2e-3, 1e6));
        let c = correlate_delay(&s, &s, 1e-4).unwrap();
        assert!(c.delta_t_s.abs() < 1e-12);
        assert_relative_eq!(c.peak, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn integer_shift_is_recovered() {
        let s = burst(4000, 2e-3, 1e6);
        let mut u = vec![0.0; 17];
        u.extend_from_slice(&s[..4000 - 17]);
        let c = correlate_delay(&trace(s), &trace(u), 1e-4).unwrap();
        assert!((c.lag_samples - 17.0).abs() < 0.2, "{}", c.lag_samples);
        assert!((c.delta_t_s - 17e-6).abs() < 0.2e-6);
    }

    #[test]
    fn fractional_shift_uses_parabola() {
        let s: Vec<f64> = burst(4000, 2e-3, 1e6);
        let u: Vec<f64> = burst(4000, 2e-3 + 3.4e-6, 1e6);
        let c = correlate_delay(&trace(s), &trace(u), 1e-4).unwrap();
        assert!(c.refined);
        assert!((c.lag_samples - 3.4).abs() < 0.2, "{}", c.lag_samples);
    }

    #[test]
    fn unrelated_noise_is_not_detected() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut r1 = seed::rng(1);
        let mut r2 = seed::rng(2);
        let a: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut r1)).collect();
        let b: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut r2)).collect();
        assert!(matches!(correlate_delay(&trace(a), &trace(b), 1e-4), Err(Error::NoDetection { .. })));
    }

    #[test]
    fn geometry_examples() {
        let mid = CorrelationResult { delta_t_s: 0.0, peak: 1.0, lag_samples: 0.0, refined: false };
        assert_relative_eq!(locate(&mid, 80.0, 1.468).estimated_km, 40.0, epsilon = 1e-12);

        let spec = ChannelSpec::new(80.0);
        let dt = spec.delay_over(70.0) - spec.delay_over(10.0);
        assert_relative_eq!(dt, 60e3 * 1.468 / 299_792_458.0, max_relative = 1e-12);
        assert!((dt - 2.9360e-4).abs() / 2.9360e-4 < 1e-3);
        let c = CorrelationResult { delta_t_s: dt, peak: 1.0, lag_samples: 0.0, refined: false };
        let loc = locate(&c, 80.0, 1.468);
        assert_relative_eq!(loc.estimated_km, 10.0, epsilon = 1e-9);
        assert!(!loc.clamped);

        let far = CorrelationResult { delta_t_s: 2.0 * spec.delay(), peak: 1.0, lag_samples: 0.0, refined: false };
        let loc = locate(&far, 80.0, 1.468);
        assert!(loc.clamped);
        assert_eq!(loc.estimated_km, 0.0);
    }

    #[test]
    fn tap_energy_matches_numeric_integral() {
        let sc = ResolutionScenario::new(FilterPurpose::Vib1kHz, 80.0, 40.0);
        let ev = sc.event(10.0);
        let rate = 1e7;
        let n = (ev.duration_s * rate) as usize;
        let num: f64 = (0..n).map(|i| ev.phase_at(ev.start_s + i as f64 / rate).powi(2)).sum::<f64>() / rate;
        assert_relative_eq!(num, sc.event_energy(), max_relative = 1e-3);
    }

    #[test]
    fn spearman_of_monotone_data_is_one() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(spearman(&a, &[10.0, 20.0, 25.0, 100.0]), 1.0);
        assert_relative_eq!(spearman(&a, &[4.0, 3.0, 2.0, 1.0]), -1.0);
    }

    #[test]
    fn summary_statistics() {
        let recs: Vec<TrialRecord> = [1.0, -1.0, 3.0, -3.0]
            .iter()
            .enumerate()
            .map(|(i, &e)| TrialRecord { trial: i, truth_km: 1.0, est_km: Some(1.0), err_m: Some(e), peak: 0.9 })
            .chain(std::iter::once(TrialRecord { trial: 4, truth_km: 1.0, est_km: None, err_m: None, peak: 0.1 }))
            .collect();
        let r = summarize("x", recs);
        assert_eq!(r.censored, 1);
        assert_eq!(r.detected, 4);
        assert_relative_eq!(r.mean_error_m, 0.0);
        assert_relative_eq!(r.rms_error_m, 5f64.sqrt());
    }

    proptest! {
        #[test]
        fn peak_is_scale_invariant(scale_s in 0.01f64..100.0, scale_u in 0.01f64..100.0, shift in 0usize..40) {
            let s = burst(3000, 1.5e-3, 1e6);
            let mut u = vec![0.0; shift];
            u.extend_from_slice(&s[..3000 - shift]);
            let a = correlate_delay(&trace(s.clone()), &trace(u.clone()), 1e-4).unwrap();
            let b = correlate_delay(
                &trace(s.iter().map(|v| v * scale_s).collect()),
                &trace(u.iter().map(|v| v * scale_u).collect()),
                1e-4,
            ).unwrap();
            prop_assert!((a.peak - b.peak).abs() < 1e-9);
            prop_assert!((a.lag_samples - b.lag_samples).abs() < 1e-6);
            prop_assert!(a.peak <= 1.0 + 1e-12);
        }
    }
}
