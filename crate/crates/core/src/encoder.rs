//! QPSK symbol generation, multi-sidemode drive synthesis and the imperfect
//! IQ-modulator model.
//!
//! Amplitudes are in shot-noise units: a slot carrying coherent amplitude `α`
//! contributes `|α|²` photons, i.e. `Σ|E[n]|²` over the slot's pulse equals
//! `|α|²`. Every user's modulation variance is `V_A = 2α²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::signal;

/// Frequency layout and amplitudes of the sidemodes sharing one carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidemodePlan {
    pub n_users: usize,
    /// Frequency of user 0's sidemode relative to the carrier (Hz).
    pub base_freq_hz: f64,
    /// Spacing between adjacent sidemodes (Hz).
    pub spacing_hz: f64,
    pub baud: f64,
    /// Bandwidth reserved for one user's signal (Hz).
    pub signal_bandwidth_hz: f64,
    /// Coherent amplitude `α_j` per user (SNU-referenced).
    pub amplitudes: Vec<f64>,
    /// Pilot offset from each signal band centre (Hz).
    pub pilot_offset_hz: f64,
    /// Pilot amplitude as a multiple of the per-symbol amplitude.
    pub pilot_amplitude: f64,
    /// Root-raised-cosine roll-off.
    pub rolloff: f64,
    /// Pulse span in symbols on each side of the centre tap.
    pub pulse_span: usize,
    /// Envelope sample rate of the synthesised field (samples/s).
    pub sample_rate_hz: f64,
    /// Empty slots padded before and after a frame.
    pub guard_slots: usize,
}

impl SidemodePlan {
    /// The standard eight-user layout: 100 MHz + j·200 MHz,
    /// 50 MBaud, 100 MHz signal bands, 4 GS/s synthesis.
    pub fn standard(modulation_variances: &[f64]) -> Self {
        SidemodePlan {
            n_users: modulation_variances.len(),
            base_freq_hz: 100e6,
            spacing_hz: 200e6,
            baud: 50e6,
            signal_bandwidth_hz: 100e6,
            amplitudes: modulation_variances.iter().map(|v| (v / 2.0).sqrt()).collect(),
            pilot_offset_hz: 75e6,
            pilot_amplitude: 10.0,
            rolloff: 0.3,
            pulse_span: 8,
            sample_rate_hz: 4e9,
            guard_slots: 8,
        }
    }

    pub fn center_frequency(&self, j: usize) -> f64 {
        self.base_freq_hz + j as f64 * self.spacing_hz
    }

    pub fn pilot_frequency(&self, j: usize) -> f64 {
        self.center_frequency(j) + self.pilot_offset_hz
    }

    /// Total modulation variance `V_M = Σ 2α_j²`.
    pub fn total_modulation_variance(&self) -> f64 {
        self.amplitudes.iter().map(|a| 2.0 * a * a).sum()
    }

    pub fn modulation_variance(&self, j: usize) -> f64 {
        2.0 * self.amplitudes[j] * self.amplitudes[j]
    }

    pub fn samples_per_symbol(&self) -> usize {
        (self.sample_rate_hz / self.baud).round() as usize
    }

    /// Highest frequency any component of the drive occupies (Hz).
    pub fn highest_frequency(&self) -> f64 {
        let top = self.center_frequency(self.n_users.saturating_sub(1));
        (top + self.signal_bandwidth_hz / 2.0).max(top + self.pilot_offset_hz)
    }

    /// Checks the plan invariants, returning every violation found.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.n_users == 0 {
            p.push("plan: n_users must be at least 1".to_string());
        }
        if self.amplitudes.len() != self.n_users {
            p.push(format!(
                "plan: {} amplitudes given for {} users",
                self.amplitudes.len(),
                self.n_users
            ));
        }
        if !(self.base_freq_hz > 0.0) {
            p.push("plan: base frequency must be positive".into());
        }
        if !(self.spacing_hz > 0.0) {
            p.push("plan: sidemode spacing must be positive".into());
        }
        if !(self.signal_bandwidth_hz > 0.0 && self.signal_bandwidth_hz < self.spacing_hz) {
            p.push(format!(
                "plan: signal bandwidth {} Hz must be positive and below the spacing {} Hz",
                self.signal_bandwidth_hz, self.spacing_hz
            ));
        }
        if !(self.baud > 0.0) {
            p.push("plan: baud must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            p.push("plan: roll-off must lie in [0, 1]".into());
        }
        if self.baud > 0.0 && self.baud * (1.0 + self.rolloff) > self.signal_bandwidth_hz * (1.0 + 1e-9) {
            p.push("plan: pulse bandwidth exceeds the signal bandwidth".into());
        }
        let vm = self.total_modulation_variance();
        if !(vm.is_finite() && vm > 0.0) || self.amplitudes.iter().any(|a| !(*a >= 0.0)) {
            p.push("plan: amplitudes must be non-negative with positive total variance".into());
        }
        if !(self.pilot_amplitude >= 0.0) {
            p.push("plan: pilot amplitude must be non-negative".into());
        }
        if self.baud > 0.0 && self.sample_rate_hz > 0.0 {
            let sps = self.sample_rate_hz / self.baud;
            if (sps - sps.round()).abs() > 1e-9 || sps.round() < 2.0 {
                p.push(format!(
                    "plan: sample rate {} is not an integer multiple (≥2) of the baud {}",
                    self.sample_rate_hz, self.baud
                ));
            }
        }
        if self.n_users > 0 && self.sample_rate_hz <= 2.0 * self.highest_frequency() {
            p.push(format!(
                "plan: sample rate {} S/s too low for highest frequency {} Hz",
                self.sample_rate_hz,
                self.highest_frequency()
            ));
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p.join("; ")))
        }
    }
}

/// Per-user QPSK symbol indices `k ∈ {0,1,2,3}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolFrame {
    pub symbols: Vec<Vec<u8>>,
    pub n_slots: usize,
    pub seed: u64,
}

impl SymbolFrame {
    /// Complex amplitude `α·e^{ikπ/2}` of `user`'s symbol in `slot`.
    pub fn amplitude(&self, plan: &SidemodePlan, user: usize, slot: usize) -> Complex64 {
        qpsk_point(plan.amplitudes[user], self.symbols[user][slot])
    }

    pub fn amplitudes(&self, plan: &SidemodePlan, user: usize) -> Vec<Complex64> {
        (0..self.n_slots).map(|s| self.amplitude(plan, user, s)).collect()
    }
}

/// `α·e^{i2πk/4}`.
pub fn qpsk_point(alpha: f64, k: u8) -> Complex64 {
    match k & 3 {
        0 => Complex64::new(alpha, 0.0),
        1 => Complex64::new(0.0, alpha),
        2 => Complex64::new(-alpha, 0.0),
        _ => Complex64::new(0.0, -alpha),
    }
}

/// Draws independent, equiprobable QPSK symbols for every user.
pub fn generate_symbols(plan: &SidemodePlan, n_slots: usize, seed: u64) -> Result<SymbolFrame> {
    if plan.n_users == 0 {
        return Err(Error::Config("cannot generate symbols for zero users".into()));
    }
    if n_slots == 0 {
        return Err(Error::Config("cannot generate a frame of zero slots".into()));
    }
    let symbols = (0..plan.n_users)
        .map(|j| {
            let mut rng = seed::stage_rng(seed, "symbols", j as u64);
            (0..n_slots).map(|_| rng.random_range(0..4u8)).collect()
        })
        .collect();
    Ok(SymbolFrame { symbols, n_slots, seed })
}

/// Where the slot centres sit inside a synthesised frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotTiming {
    /// Time of slot 0's centre, measured from the frame's first sample (s).
    pub first_center_s: f64,
    pub period_s: f64,
    pub n_slots: usize,
}

impl SlotTiming {
    pub fn center(&self, k: usize) -> f64 {
        self.first_center_s + k as f64 * self.period_s
    }
}

/// Complex drive waveform feeding the IQ modulator.
#[derive(Debug, Clone)]
pub struct DriveWaveform {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    pub timing: SlotTiming,
}

/// Root-raised-cosine pulse sampled at `sps` samples per symbol over
/// `±span` symbols, normalised to unit energy.
pub fn rrc_pulse(rolloff: f64, sps: usize, span: usize) -> Vec<f64> {
    let b = rolloff;
    let n = 2 * span * sps + 1;
    let mid = (span * sps) as f64;
    let mut h: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 - mid) / sps as f64;
            if t.abs() < 1e-12 {
                1.0 - b + 4.0 * b / PI
            } else if b > 0.0 && ((4.0 * b * t).abs() - 1.0).abs() < 1e-9 {
                b / 2f64.sqrt()
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * b)).sin() + (1.0 - 2.0 / PI) * (PI / (4.0 * b)).cos())
            } else {
                ((PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos())
                    / (PI * t * (1.0 - (4.0 * b * t).powi(2)))
            }
        })
        .collect();
    let e: f64 = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in h.iter_mut() {
        *v /= e;
    }
    h
}

/// Synthesises `Σ_j [pulse train of user j at F_j + pilot at F_j + offset]`.
pub fn build_baseband_waveform(frame: &SymbolFrame, plan: &SidemodePlan) -> Result<DriveWaveform> {
    plan.validate()?;
    if frame.symbols.len() != plan.n_users {
        return Err(Error::Config(format!(
            "frame has {} users, plan has {}",
            frame.symbols.len(),
            plan.n_users
        )));
    }
    let sps = plan.samples_per_symbol();
    let rate = plan.sample_rate_hz;
    let total_slots = frame.n_slots + 2 * plan.guard_slots;
    let len = total_slots * sps;
    let pulse: Vec<Complex64> = rrc_pulse(plan.rolloff, sps, plan.pulse_span)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();

    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for j in 0..plan.n_users {
        let mut train = vec![Complex64::new(0.0, 0.0); len];
        for s in 0..frame.n_slots {
            train[(plan.guard_slots + s) * sps] = frame.amplitude(plan, j, s);
        }
        let shaped = signal::convolve_same(&train, &pulse);
        let fc = plan.center_frequency(j);
        let fp = plan.pilot_frequency(j);
        let pilot = plan.pilot_amplitude * plan.amplitudes[j] / (sps as f64).sqrt();
        for (n, (o, v)) in out.iter_mut().zip(&shaped).enumerate() {
            let t = n as f64 / rate;
            *o += v * Complex64::from_polar(1.0, 2.0 * PI * fc * t)
                + Complex64::from_polar(pilot, 2.0 * PI * fp * t);
        }
    }
    Ok(DriveWaveform {
        samples: out,
        sample_rate: rate,
        timing: SlotTiming {
            first_center_s: (plan.guard_slots * sps) as f64 / rate,
            period_s: sps as f64 / rate,
            n_slots: frame.n_slots,
        },
    })
}

/// Sampled optical complex envelope relative to the server carrier.
#[derive(Debug, Clone)]
pub struct OpticalField {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    /// Absolute time of the first sample (s).
    pub start_time: f64,
    /// Photon number represented by one unit of `Σ|E|²`.
    pub photons_per_unit: f64,
}

impl OpticalField {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Self {
        OpticalField { samples, sample_rate, start_time: 0.0, photons_per_unit: 1.0 }
    }

    /// Constant-amplitude carrier of `n` samples.
    pub fn carrier(amplitude: f64, n: usize, sample_rate: f64) -> Self {
        OpticalField::new(vec![Complex64::new(amplitude, 0.0); n], sample_rate)
    }

    /// A field containing no light.
    pub fn vacuum(n: usize, sample_rate: f64) -> Self {
        OpticalField::carrier(0.0, n, sample_rate)
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Photon number in the whole record.
    pub fn energy(&self) -> f64 {
        signal::energy(&self.samples) * self.photons_per_unit
    }

    /// Mean photon flux (photons/s).
    pub fn mean_power(&self) -> f64 {
        self.energy() / self.duration()
    }

    pub fn band_energy(&self, lo: f64, hi: f64) -> f64 {
        signal::band_energy(&self.samples, self.sample_rate, lo, hi) * self.photons_per_unit
    }
}

/// Two-arm IQ modulator with drive imbalance and bias error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqModulatorModel {
    /// Mean modulation depth `μ` (rad).
    pub mean_depth: f64,
    /// Arm imbalance `σ` (rad): the arms see `μ+σ` and `μ−σ`.
    pub imbalance: f64,
    /// Error of the quadrature bias point (rad).
    pub bias_error: f64,
}

impl IqModulatorModel {
    /// Builds the model whose sideband suppression is `suppression_db`,
    /// read as the power ratio `(μ/σ)²`.
    pub fn from_suppression(mean_depth: f64, suppression_db: f64) -> Self {
        IqModulatorModel {
            mean_depth,
            imbalance: mean_depth * 10f64.powf(-suppression_db / 20.0),
            bias_error: 0.0,
        }
    }

    fn coefficients(&self) -> (Complex64, Complex64) {
        let mi = self.mean_depth + self.imbalance;
        let mq = self.mean_depth - self.imbalance;
        let q = Complex64::from_polar(mq, self.bias_error);
        ((mi + q) / 4.0, (mi - q) / 4.0)
    }

    /// Power ratio of the intended to the mirror sideband.
    pub fn power_ratio(&self) -> f64 {
        let (p, m) = self.coefficients();
        p.norm_sqr() / m.norm_sqr()
    }

    /// `10·log10(P₊/P₋)`; infinite for a perfect modulator.
    pub fn suppression_db(&self) -> f64 {
        10.0 * self.power_ratio().log10()
    }

    /// Carrier amplitude at which the intended sideband reproduces the drive
    /// amplitude exactly.
    pub fn unit_gain_carrier(&self) -> f64 {
        1.0 / self.coefficients().0.norm()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_depth > 0.0) || self.imbalance < 0.0 || self.imbalance > self.mean_depth {
            return Err(Error::Config(format!(
                "modulator: need 0 ≤ σ ≤ μ and μ > 0 (μ={}, σ={})",
                self.mean_depth, self.imbalance
            )));
        }
        if self.mean_depth > 0.2 {
            return Err(Error::WeakModulation { mu: self.mean_depth });
        }
        Ok(())
    }
}

/// Applies the first-order IQ-modulator response to a drive waveform.
///
/// Each drive component `d` at `+f` appears as `c₊·d` at `+f` and as
/// `c₋·d*` at `−f`, with `c₊ = (μ_I + e^{iδ}μ_Q)/4` and
/// `c₋ = (μ_I − e^{iδ}μ_Q)/4`. With `δ = 0` these are `μ/2` and `σ/2`.
/// Higher-order sidebands are dropped; at `μ ≤ 0.2` they sit more than 40 dB
/// below the first order.
pub fn iq_modulate(drive: &DriveWaveform, model: &IqModulatorModel, carrier: &OpticalField) -> Result<OpticalField> {
    model.validate()?;
    if carrier.samples.len() != drive.samples.len() {
        return Err(Error::Input(format!(
            "carrier has {} samples, drive has {}",
            carrier.samples.len(),
            drive.samples.len()
        )));
    }
    let (cp, cm) = model.coefficients();
    let samples = drive
        .samples
        .iter()
        .zip(&carrier.samples)
        .map(|(d, e)| e * (cp * d + cm * d.conj()))
        .collect();
    Ok(OpticalField {
        samples,
        sample_rate: drive.sample_rate,
        start_time: carrier.start_time,
        photons_per_unit: carrier.photons_per_unit,
    })
}

/// `g₁ = sqrt(P₊/(P₊+P₋))`.
pub fn sideband_ratio(model: &IqModulatorModel) -> f64 {
    let (p, m) = model.coefficients();
    let pp = p.norm_sqr();
    let pm = m.norm_sqr();
    if pp + pm == 0.0 {
        return 1.0;
    }
    (pp / (pp + pm)).sqrt()
}

/// `g₁` straight from a suppression figure in dB.
pub fn sideband_ratio_from_db(suppression_db: f64) -> f64 {
    (1.0 / (1.0 + 10f64.powf(-suppression_db / 10.0))).sqrt()
}

/// Full encoder chain: drive synthesis followed by a unit-gain modulator.
pub fn modulated_field(frame: &SymbolFrame, plan: &SidemodePlan, model: &IqModulatorModel) -> Result<(OpticalField, SlotTiming)> {
    let drive = build_baseband_waveform(frame, plan)?;
    let carrier = OpticalField::carrier(model.unit_gain_carrier(), drive.samples.len(), drive.sample_rate);
    let field = iq_modulate(&drive, model, &carrier)?;
    Ok((field, drive.timing))
}
