//! Heterodyne detection with shot and electronic noise, coarse frequency
//! estimation, down-conversion and shot-noise calibration.
//!
//! Convention: the detector output is scaled so that, after mixing with
//! `√2·e^{−iωt}` and matched filtering with a unit-energy pulse, each
//! quadrature of vacuum has variance 1 (SNU). A coherent amplitude `α`
//! (η = 1, no loss) then has mean `(√2·Re α, √2·Im α)`, so each quadrature
//! carries `V_A/2` of signal power for a QPSK ensemble with `V_A = 2α²`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::laser_phase_walk;
use crate::encoder::OpticalField;
use crate::error::{Error, Result};
use crate::seed;
use crate::signal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoSpec {
    /// Server laser frequency minus LO frequency (Hz).
    pub offset_hz: f64,
    pub linewidth_hz: f64,
    /// The LO is strong enough for the shot-noise-limited model to hold.
    pub power_adequate: bool,
}

impl Default for LoSpec {
    fn default() -> Self {
        LoSpec { offset_hz: 60e6, linewidth_hz: 0.0, power_adequate: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub efficiency: f64,
    /// Electronic noise (SNU).
    pub electronic_noise: f64,
    pub bandwidth_hz: f64,
}

impl DetectorSpec {
    pub fn ideal(bandwidth_hz: f64) -> Self {
        DetectorSpec { efficiency: 1.0, electronic_noise: 0.0, bandwidth_hz }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            p.push(format!("detector: efficiency {} outside (0, 1]", self.efficiency));
        }
        if !(self.electronic_noise >= 0.0) {
            p.push("detector: electronic noise must be non-negative".into());
        }
        if !(self.bandwidth_hz > 0.0) {
            p.push("detector: bandwidth must be positive".into());
        }
        p
    }
}

/// Real photocurrent record.
#[derive(Debug, Clone)]
pub struct RealWaveform {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub start_time: f64,
}

/// Complex baseband record after down-conversion.
#[derive(Debug, Clone)]
pub struct ComplexBaseband {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    pub start_time: f64,
}

/// Beats `field` against the LO.
///
/// `band` is the envelope-frequency interval (Hz) the receiver cares about;
/// after the LO offset it has to fit inside the detector bandwidth.
pub fn heterodyne_detect(field: &OpticalField, lo: &LoSpec, det: &DetectorSpec, band: (f64, f64), seed: u64) -> Result<RealWaveform> {
    let p = det.problems();
    if !p.is_empty() {
        return Err(Error::Config(p.join("; ")));
    }
    if !lo.power_adequate {
        return Err(Error::Config("local oscillator power flagged inadequate for shot-noise-limited detection".into()));
    }
    let (lo_if, hi_if) = (band.0 + lo.offset_hz, band.1 + lo.offset_hz);
    if lo_if <= 0.0 {
        return Err(Error::Config(format!("LO offset {} Hz leaves the band below zero IF", lo.offset_hz)));
    }
    if hi_if > det.bandwidth_hz || hi_if >= field.sample_rate / 2.0 {
        return Err(Error::Config(format!(
            "band reaches {hi_if} Hz at IF, beyond the detector bandwidth {} Hz",
            det.bandwidth_hz
        )));
    }
    let rate = field.sample_rate;
    let n = field.samples.len();
    let lo_walk = laser_phase_walk(lo.linewidth_hz, n as f64 / rate, rate, seed::derive(seed, "lo-laser", 0));
    let gain = (2.0 * det.efficiency * field.photons_per_unit).sqrt() * SQRT_2;
    let mut rng = seed::stage_rng(seed, "detector-noise", 0);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let el = det.electronic_noise.sqrt();
    let samples = field
        .samples
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let t = field.start_time + i as f64 / rate;
            let ph = 2.0 * PI * lo.offset_hz * t - lo_walk.samples.get(i).copied().unwrap_or(0.0);
            let beat = (e * Complex64::from_polar(1.0, ph)).re * gain;
            beat + normal.sample(&mut rng) + el * normal.sample(&mut rng)
        })
        .collect();
    Ok(RealWaveform { samples, sample_rate: rate, start_time: field.start_time })
}

/// Detector output with the optical input blocked: electronic noise only,
/// on the same per-sample scale as [`heterodyne_detect`].
pub fn dark_record(n: usize, sample_rate: f64, det: &DetectorSpec, seed: u64) -> RealWaveform {
    let mut rng = seed::stage_rng(seed, "detector-dark", 0);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let el = det.electronic_noise.sqrt();
    RealWaveform {
        samples: (0..n).map(|_| el * normal.sample(&mut rng)).collect(),
        sample_rate,
        start_time: 0.0,
    }
}

/// Strongest tone inside `search` (Hz): Hann-windowed FFT peak refined by a
/// three-point parabola on the log magnitude.
///
/// Fails with a lock error unless the peak clears the median bin in the
/// search band by 20 dB.
pub fn estimate_frequency_offset(waveform: &RealWaveform, search: (f64, f64)) -> Result<f64> {
    let n = waveform.samples.len();
    if n < 16 {
        return Err(Error::LockFailure("record too short".into()));
    }
    let nfft = n.next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for (i, (b, &x)) in buf.iter_mut().zip(&waveform.samples).enumerate() {
        let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
        *b = Complex64::new(x * w, 0.0);
    }
    signal::fft_in_place(&mut buf);
    let rate = waveform.sample_rate;
    let df = rate / nfft as f64;
    let k0 = ((search.0 / df).ceil().max(1.0)) as usize;
    let k1 = ((search.1 / df).floor() as usize).min(nfft / 2 - 1);
    if k1 <= k0 + 2 {
        return Err(Error::LockFailure("search band narrower than three bins".into()));
    }
    let power: Vec<f64> = buf[..=k1 + 1].iter().map(|c| c.norm_sqr()).collect();
    let (kmax, pmax) = (k0..=k1).map(|k| (k, power[k])).fold((k0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
    let mut sorted: Vec<f64> = power[k0..=k1].to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if !(pmax > 100.0 * median) || pmax == 0.0 {
        return Err(Error::LockFailure(format!(
            "no tone in {:.3e}–{:.3e} Hz (peak/median {:.1} dB)",
            search.0,
            search.1,
            10.0 * (pmax / median.max(1e-300)).log10()
        )));
    }
    let ln = |k: usize| power[k].max(1e-300).ln();
    let (a, b, c) = (ln(kmax - 1), ln(kmax), ln(kmax + 1));
    let denom = a - 2.0 * b + c;
    let delta = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Ok((kmax as f64 + delta.clamp(-0.5, 0.5)) * df)
}

/// Mixes with `√2·e^{−i2πf t}` and applies the zero-phase FIR `lowpass`.
pub fn downconvert(waveform: &RealWaveform, f: f64, lowpass: &[f64]) -> ComplexBaseband {
    let rate = waveform.sample_rate;
    let mixed: Vec<Complex64> = waveform
        .samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let t = waveform.start_time + i as f64 / rate;
            Complex64::from_polar(SQRT_2 * x, -2.0 * PI * f * t)
        })
        .collect();
    let kernel: Vec<Complex64> = lowpass.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    ComplexBaseband {
        samples: signal::convolve_same(&mixed, &kernel),
        sample_rate: rate,
        start_time: waveform.start_time,
    }
}

/// Kaiser low-pass kernel with the given pass edge, stop edge and
/// stop-band attenuation.
pub fn lowpass(pass_hz: f64, stop_hz: f64, atten_db: f64, rate: f64) -> Vec<f64> {
    let (beta, taps) = signal::kaiser_design(atten_db, stop_hz - pass_hz, rate);
    let w = signal::kaiser_window(taps, beta);
    signal::lowpass_kernel(taps, 0.5 * (pass_hz + stop_hz), rate, &w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnuCalibration {
    /// Multiply raw quadratures by this to get SNU^(1/2).
    pub scale: f64,
    pub vacuum_variance: f64,
    pub electronic_variance: f64,
    /// Electronic noise in SNU implied by the two records.
    pub electronic_noise_snu: f64,
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Scale factor that makes vacuum-minus-electronic variance equal to 1.
pub fn calibrate_snu(det: &DetectorSpec, vacuum: &[f64], electronic: &[f64]) -> Result<SnuCalibration> {
    let _ = det;
    if vacuum.len() < 100_000 || electronic.len() < 100_000 {
        return Err(Error::Calibration(format!(
            "records need at least 1e5 samples (got {} and {})",
            vacuum.len(),
            electronic.len()
        )));
    }
    let v = variance(vacuum);
    let e = variance(electronic);
    if e >= v {
        return Err(Error::Calibration(format!("electronic variance {e:.4} not below vacuum variance {v:.4}")));
    }
    Ok(SnuCalibration {
        scale: 1.0 / (v - e).sqrt(),
        vacuum_variance: v,
        electronic_variance: e,
        electronic_noise_snu: e / (v - e),
    })
}
