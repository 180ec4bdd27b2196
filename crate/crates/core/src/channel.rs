//! Fibre propagation: loss, delay, laser and system phase noise, vibration
//! phase imprinted at a point on the link, and the excess-noise budget.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dsp::phase::{PhaseTrace, TraceOrigin};
use crate::encoder::OpticalField;
use crate::error::{Error, Result};
use crate::filternet::SPEED_OF_LIGHT;
use crate::seed;

/// Raman noise of the backward probe at the reference power, in SNU.
pub const RAMAN_REFERENCE_SNU: f64 = 4.69e-6;
/// Probe power at which [`RAMAN_REFERENCE_SNU`] applies, in dBm.
pub const RAMAN_REFERENCE_DBM: f64 = -43.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub length_km: f64,
    pub loss_db_per_km: f64,
    pub core_index: f64,
}

impl ChannelSpec {
    pub fn new(length_km: f64) -> Self {
        ChannelSpec { length_km, loss_db_per_km: 0.2, core_index: 1.468 }
    }

    /// `10^(−loss·L/10)`.
    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.loss_db_per_km * self.length_km / 10.0)
    }

    /// Group delay over `km` kilometres of this fibre (s).
    pub fn delay_over(&self, km: f64) -> f64 {
        km * 1e3 * self.core_index / SPEED_OF_LIGHT
    }

    /// End-to-end group delay `L·d/c` (s).
    pub fn delay(&self) -> f64 {
        self.delay_over(self.length_km)
    }

    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if !(self.length_km >= 0.0 && self.length_km.is_finite()) {
            p.push("channel: length must be non-negative".into());
        }
        if !(self.loss_db_per_km >= 0.0) {
            p.push("channel: loss must be non-negative".into());
        }
        if !(self.core_index >= 1.0) {
            p.push("channel: core index must be at least 1".into());
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VibrationWaveform {
    /// Hann-enveloped sinusoid lasting the event's duration.
    Sinusoid { frequency_hz: f64, amplitude_rad: f64 },
    /// Damped oscillation with a short rise, as left by a tap on the fibre.
    TapBurst { ring_frequency_hz: f64, decay_s: f64, amplitude_rad: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VibrationEvent {
    /// Distance from the server (km).
    pub position_km: f64,
    pub waveform: VibrationWaveform,
    pub start_s: f64,
    pub duration_s: f64,
}

impl VibrationEvent {
    /// Phase imprinted on light passing the vibration point at time `t`.
    pub fn phase_at(&self, t: f64) -> f64 {
        let x = t - self.start_s;
        if x < 0.0 || x > self.duration_s {
            return 0.0;
        }
        match self.waveform {
            VibrationWaveform::Sinusoid { frequency_hz, amplitude_rad } => {
                let env = (PI * x / self.duration_s).sin().powi(2);
                amplitude_rad * env * (2.0 * PI * frequency_hz * x).sin()
            }
            VibrationWaveform::TapBurst { ring_frequency_hz, decay_s, amplitude_rad } => {
                let rise = 1.0 - (-x / (0.1 * decay_s)).exp();
                amplitude_rad * rise * (-x / decay_s).exp() * (2.0 * PI * ring_frequency_hz * x).sin()
            }
        }
    }

    /// Dominant frequency of the waveform (Hz).
    pub fn frequency(&self) -> f64 {
        match self.waveform {
            VibrationWaveform::Sinusoid { frequency_hz, .. } => frequency_hz,
            VibrationWaveform::TapBurst { ring_frequency_hz, .. } => ring_frequency_hz,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match self.waveform {
            VibrationWaveform::Sinusoid { amplitude_rad, .. } => amplitude_rad,
            VibrationWaveform::TapBurst { amplitude_rad, .. } => amplitude_rad,
        }
    }

    pub fn problems(&self, spec: &ChannelSpec) -> Vec<String> {
        let mut p = Vec::new();
        if !(0.0..=spec.length_km).contains(&self.position_km) {
            p.push(format!("event: position {} km outside the {} km link", self.position_km, spec.length_km));
        }
        if !(self.amplitude() >= 0.0) {
            p.push("event: amplitude must be non-negative".into());
        }
        if !(self.duration_s > 0.0) {
            p.push("event: duration must be positive".into());
        }
        if !(self.frequency() > 0.0) {
            p.push("event: frequency must be positive".into());
        }
        if let VibrationWaveform::TapBurst { decay_s, .. } = self.waveform {
            if !(decay_s > 0.0) {
                p.push("event: tap decay time must be positive".into());
            }
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub server_linewidth_hz: f64,
    pub user_linewidth_hz: f64,
    /// One-sided density of the white system phase noise (rad²/Hz).
    pub system_phase_psd: f64,
    /// Frequency-crosstalk excess noise (SNU).
    pub frequency_crosstalk_noise: f64,
    /// Filter-crosstalk excess noise (SNU).
    pub filter_crosstalk_noise: f64,
    /// Backward probe power (dBm); `None` when the probe is off.
    pub probe_power_dbm: Option<f64>,
}

impl NoiseSpec {
    /// Everything switched off.
    pub fn quiet() -> Self {
        NoiseSpec {
            server_linewidth_hz: 0.0,
            user_linewidth_hz: 0.0,
            system_phase_psd: 0.0,
            frequency_crosstalk_noise: 0.0,
            filter_crosstalk_noise: 0.0,
            probe_power_dbm: None,
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        for (name, v) in [
            ("server linewidth", self.server_linewidth_hz),
            ("user linewidth", self.user_linewidth_hz),
            ("system phase density", self.system_phase_psd),
            ("frequency-crosstalk noise", self.frequency_crosstalk_noise),
            ("filter-crosstalk noise", self.filter_crosstalk_noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                p.push(format!("noise: {name} must be finite and non-negative"));
            }
        }
        if let Some(dbm) = self.probe_power_dbm {
            if dbm > 0.0 {
                p.push(format!("noise: probe power {dbm} dBm is outside the weak-probe regime (≤ 0 dBm)"));
            }
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Server to user (the QKD signal and its pilot).
    Forward,
    /// User to server (the sensing probe).
    Backward,
}

/// What the propagation did, for diagnostics and timing checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationLog {
    pub direction: Direction,
    pub transmittance: f64,
    pub delay_s: f64,
    pub imprints: Vec<Imprint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Imprint {
    pub event: usize,
    pub position_km: f64,
    /// Travel time from the vibration point to the receiving end (s).
    pub to_receiver_s: f64,
    /// When the vibration starts at the vibration point (s).
    pub imprint_s: f64,
    /// When the first affected light reaches the receiver (s).
    pub arrival_s: f64,
}

/// Travel time from each event to the receiving end for `direction`.
fn receiver_delays(spec: &ChannelSpec, events: &[VibrationEvent], direction: Direction) -> Vec<f64> {
    events
        .iter()
        .map(|e| match direction {
            Direction::Forward => spec.delay_over(spec.length_km - e.position_km),
            Direction::Backward => spec.delay_over(e.position_km),
        })
        .collect()
}

fn check_events(spec: &ChannelSpec, events: &[VibrationEvent], trace_rate: f64) -> Result<()> {
    let mut p: Vec<String> = events.iter().flat_map(|e| e.problems(spec)).collect();
    for e in events {
        if e.frequency() >= trace_rate / 2.0 {
            p.push(format!("event: frequency {} Hz at or above the Nyquist limit of {} S/s", e.frequency(), trace_rate));
        }
    }
    if p.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(p.join("; ")))
    }
}

/// Propagates a full-band field over the link.
///
/// The field is attenuated by `sqrt(T)`, delayed by `L·d/c`, and multiplied
/// by `exp(i[φ_laser + φ_vib(t − τ_dir) + φ_sys])`. The laser walk belongs to
/// the emitting laser (server for forward, user for backward).
pub fn propagate(
    field: &OpticalField,
    spec: &ChannelSpec,
    noise: &NoiseSpec,
    events: &[VibrationEvent],
    direction: Direction,
    seed: u64,
) -> Result<(OpticalField, PropagationLog)> {
    check_events(spec, events, field.sample_rate)?;
    let t_amp = spec.transmittance().sqrt();
    let delay = spec.delay();
    let rate = field.sample_rate;
    let n = field.samples.len();
    let linewidth = match direction {
        Direction::Forward => noise.server_linewidth_hz,
        Direction::Backward => noise.user_linewidth_hz,
    };
    let walk = laser_phase_walk(linewidth, n as f64 / rate, rate, seed::derive(seed, "laser", direction as u64));
    let sys_sd = (noise.system_phase_psd * rate / 2.0).sqrt();
    let mut rng = seed::stage_rng(seed, "system-phase", direction as u64);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let to_rx = receiver_delays(spec, events, direction);
    let start = field.start_time + delay;

    let samples = field
        .samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let t = start + i as f64 / rate;
            let mut phi = walk.samples.get(i).copied().unwrap_or(0.0);
            for (e, tau) in events.iter().zip(&to_rx) {
                phi += e.phase_at(t - tau);
            }
            if sys_sd > 0.0 {
                phi += sys_sd * normal.sample(&mut rng);
            }
            x * Complex64::from_polar(t_amp, phi)
        })
        .collect();

    let log = PropagationLog {
        direction,
        transmittance: spec.transmittance(),
        delay_s: delay,
        imprints: events
            .iter()
            .zip(&to_rx)
            .enumerate()
            .map(|(k, (e, &tau))| Imprint {
                event: k,
                position_km: e.position_km,
                to_receiver_s: tau,
                imprint_s: e.start_s,
                arrival_s: e.start_s + tau,
            })
            .collect(),
    };
    Ok((
        OpticalField {
            samples,
            sample_rate: rate,
            start_time: start,
            photons_per_unit: field.photons_per_unit,
        },
        log,
    ))
}

/// Wiener phase walk with increment variance `2π·linewidth·Δt`, starting at 0.
pub fn laser_phase_walk(linewidth: f64, duration: f64, rate: f64, seed: u64) -> PhaseTrace {
    let n = (duration * rate).round().max(0.0) as usize;
    let mut samples = vec![0.0; n];
    let sd = (2.0 * PI * linewidth / rate).sqrt();
    if sd > 0.0 {
        let mut rng = seed::rng(seed);
        let normal = Normal::new(0.0, sd).expect("positive sd");
        let mut acc = 0.0;
        for s in samples.iter_mut().skip(1) {
            acc += normal.sample(&mut rng);
            *s = acc;
        }
    }
    PhaseTrace::new(samples, rate, TraceOrigin::Laser)
}

/// Sampling and residual-frequency settings of the phase-trace tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTier {
    pub rate: f64,
    pub duration_s: f64,
    /// Frequency offset left after coarse estimation (Hz).
    pub residual_offset_hz: f64,
}

impl Default for PhaseTier {
    fn default() -> Self {
        PhaseTier { rate: 1e6, duration_s: 1.0, residual_offset_hz: 3.0 }
    }
}

/// The two raw phase records the sensing chain starts from.
#[derive(Debug, Clone)]
pub struct PhaseTracePair {
    /// Probe phase measured at the server.
    pub server: PhaseTrace,
    /// Pilot phase measured at the user.
    pub user: PhaseTrace,
    pub forward: PropagationLog,
    pub backward: PropagationLog,
}

/// Evolves only the pilot and probe phases, at the phase-trace rate:
///
/// `Δφ_S(t) =  2πδf·t + φ_U(t−τ) − φ_S(t) + Σ φ_vib(t − τ_S) + φ_sys,S`
/// `Δφ_U(t) = −2πδf·t + φ_S(t−τ) − φ_U(t) + Σ φ_vib(t − τ_U) + φ_sys,U`
///
/// with `τ` the full link delay.
pub fn simulate_phase_traces(
    spec: &ChannelSpec,
    noise: &NoiseSpec,
    events: &[VibrationEvent],
    tier: &PhaseTier,
    seed: u64,
) -> Result<PhaseTracePair> {
    check_events(spec, events, tier.rate)?;
    if !(tier.rate > 0.0 && tier.duration_s > 0.0) {
        return Err(Error::Config("phase tier: rate and duration must be positive".into()));
    }
    let rate = tier.rate;
    let n = (tier.duration_s * rate).round() as usize;
    let tau = spec.delay();
    let pad = (tau * rate).ceil() as usize + 2;
    let total = (n + pad) as f64 / rate;
    let ws = laser_phase_walk(noise.server_linewidth_hz, total, rate, seed::derive(seed, "laser", 0));
    let wu = laser_phase_walk(noise.user_linewidth_hz, total, rate, seed::derive(seed, "laser", 1));
    // walk index pad corresponds to t = 0
    let at = |w: &PhaseTrace, t: f64| -> f64 {
        let x = t * rate + pad as f64;
        let i = x.floor();
        let f = x - i;
        let i = (i as usize).min(w.samples.len() - 2);
        w.samples[i] * (1.0 - f) + w.samples[i + 1] * f
    };
    let tau_s = receiver_delays(spec, events, Direction::Backward);
    let tau_u = receiver_delays(spec, events, Direction::Forward);
    let sys_sd = (noise.system_phase_psd * rate / 2.0).sqrt();
    let mut rs = seed::stage_rng(seed, "system-phase", 0);
    let mut ru = seed::stage_rng(seed, "system-phase", 1);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let gauss = |r: &mut rand_chacha::ChaCha20Rng| if sys_sd > 0.0 { sys_sd * normal.sample(r) } else { 0.0 };

    let mut server = Vec::with_capacity(n);
    let mut user = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / rate;
        let ramp = 2.0 * PI * tier.residual_offset_hz * t;
        let mut ps = ramp + at(&wu, t - tau) - at(&ws, t);
        let mut pu = -ramp + at(&ws, t - tau) - at(&wu, t);
        for (k, e) in events.iter().enumerate() {
            ps += e.phase_at(t - tau_s[k]);
            pu += e.phase_at(t - tau_u[k]);
        }
        ps += gauss(&mut rs);
        pu += gauss(&mut ru);
        server.push(ps);
        user.push(pu);
    }
    let log = |direction, taus: &[f64]| PropagationLog {
        direction,
        transmittance: spec.transmittance(),
        delay_s: tau,
        imprints: events
            .iter()
            .zip(taus)
            .enumerate()
            .map(|(k, (e, &t))| Imprint {
                event: k,
                position_km: e.position_km,
                to_receiver_s: t,
                imprint_s: e.start_s,
                arrival_s: e.start_s + t,
            })
            .collect(),
    };
    let mut s = PhaseTrace::new(server, rate, TraceOrigin::Probe);
    let mut u = PhaseTrace::new(user, rate, TraceOrigin::Pilot);
    s.unwrapped = true;
    u.unwrapped = true;
    Ok(PhaseTracePair {
        server: s,
        user: u,
        forward: log(Direction::Forward, &tau_u),
        backward: log(Direction::Backward, &tau_s),
    })
}

/// The four excess-noise contributions, all in SNU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessNoiseBudget {
    pub cv_qkd: f64,
    pub raman: f64,
    pub frequency_crosstalk: f64,
    pub filter_crosstalk: f64,
}

impl ExcessNoiseBudget {
    pub fn total(&self) -> f64 {
        self.cv_qkd + self.raman + self.frequency_crosstalk + self.filter_crosstalk
    }
}

/// Collects the budget for a measured CV-QKD excess noise.
pub fn excess_noise_budget(noise: &NoiseSpec, cv_qkd: f64) -> ExcessNoiseBudget {
    ExcessNoiseBudget {
        cv_qkd,
        raman: noise.probe_power_dbm.map(raman_noise).unwrap_or(0.0),
        frequency_crosstalk: noise.frequency_crosstalk_noise,
        filter_crosstalk: noise.filter_crosstalk_noise,
    }
}

/// Raman noise from the backward probe, linear in probe power.
pub fn raman_noise(probe_power_dbm: f64) -> f64 {
    if probe_power_dbm == f64::NEG_INFINITY {
        return 0.0;
    }
    RAMAN_REFERENCE_SNU * 10f64.powf((probe_power_dbm - RAMAN_REFERENCE_DBM) / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn transmittance_at_80km() {
        assert_relative_eq!(ChannelSpec::new(80.0).transmittance(), 10f64.powf(-1.6), epsilon = 1e-15);
    }

    #[test]
    fn quiet_propagation_only_scales_and_delays() {
        let x: Vec<Complex64> = (0..100).map(|i| Complex64::from_polar(1.0, 0.1 * i as f64)).collect();
        let f = OpticalField::new(x.clone(), 1e9);
        let spec = ChannelSpec::new(25.0);
        let (out, log) = propagate(&f, &spec, &NoiseSpec::quiet(), &[], Direction::Forward, 1).unwrap();
        assert_relative_eq!(out.energy(), f.energy() * spec.transmittance(), max_relative = 1e-12);
        assert_relative_eq!(out.start_time, 25e3 * 1.468 / SPEED_OF_LIGHT, max_relative = 1e-12);
        assert_eq!(log.delay_s, out.start_time);
        for (a, b) in out.samples.iter().zip(&x) {
            assert!((a.arg() - b.arg()).abs() < 1e-12);
        }
    }

    #[test]
    fn imprint_delays_match_geometry() {
        let spec = ChannelSpec::new(80.0);
        let ev = VibrationEvent {
            position_km: 10.0,
            waveform: VibrationWaveform::Sinusoid { frequency_hz: 1e3, amplitude_rad: 0.5 },
            start_s: 0.01,
            duration_s: 0.01,
        };
        let f = OpticalField::new(vec![Complex64::new(1.0, 0.0); 16], 1e6);
        let (_, fwd) = propagate(&f, &spec, &NoiseSpec::quiet(), &[ev], Direction::Forward, 1).unwrap();
        let (_, bwd) = propagate(&f, &spec, &NoiseSpec::quiet(), &[ev], Direction::Backward, 1).unwrap();
        let expect = (10.0 - 70.0) * 1e3 * 1.468 / SPEED_OF_LIGHT;
        assert_relative_eq!(bwd.imprints[0].arrival_s - fwd.imprints[0].arrival_s, expect, max_relative = 1e-12);
    }

    #[test]
    fn event_above_nyquist_rejected() {
        let spec = ChannelSpec::new(10.0);
        let ev = VibrationEvent {
            position_km: 1.0,
            waveform: VibrationWaveform::Sinusoid { frequency_hz: 6e5, amplitude_rad: 0.5 },
            start_s: 0.0,
            duration_s: 0.01,
        };
        let r = simulate_phase_traces(&spec, &NoiseSpec::quiet(), &[ev], &PhaseTier { rate: 1e6, duration_s: 0.01, residual_offset_hz: 0.0 }, 0);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn walk_zero_linewidth_is_flat_and_seeded_walks_repeat() {
        assert!(laser_phase_walk(0.0, 0.01, 1e5, 4).samples.iter().all(|&v| v == 0.0));
        assert_eq!(laser_phase_walk(100.0, 0.01, 1e5, 4).samples, laser_phase_walk(100.0, 0.01, 1e5, 4).samples);
    }

    #[test]
    fn walk_variance_grows_linearly() {
        // Var[φ(t+τ')−φ(t)] = 2π·Δν·τ'
        let lag = 100usize; // 1 ms at 1e5 S/s
        let mut acc = 0.0;
        let mut count = 0.0;
        for s in 0..100 {
            let w = laser_phase_walk(100.0, 1.0, 1e5, s);
            for i in (0..w.samples.len() - lag).step_by(lag) {
                acc += (w.samples[i + lag] - w.samples[i]).powi(2);
                count += 1.0;
            }
        }
        let expect = 2.0 * PI * 100.0 * 1e-3;
        assert_relative_eq!(acc / count, expect, max_relative = 0.1);
    }

    #[test]
    fn budget_and_raman() {
        let noise = NoiseSpec {
            frequency_crosstalk_noise: 0.001,
            filter_crosstalk_noise: 0.002,
            probe_power_dbm: Some(-43.0),
            ..NoiseSpec::quiet()
        };
        let b = excess_noise_budget(&noise, 0.019);
        assert_relative_eq!(b.total(), 0.02200469, epsilon = 1e-15);
        assert_eq!(excess_noise_budget(&NoiseSpec::quiet(), 0.0).total(), 0.0);
        assert_eq!(raman_noise(f64::NEG_INFINITY), 0.0);
        assert_relative_eq!(raman_noise(-40.0), 4.69e-6 * 10f64.powf(0.3), max_relative = 1e-12);
        assert_relative_eq!(raman_noise(-40.0), 9.36e-6, max_relative = 2e-3);
    }

    #[test]
    fn traces_carry_delayed_copies() {
        let spec = ChannelSpec::new(80.0);
        let ev = VibrationEvent {
            position_km: 10.0,
            waveform: VibrationWaveform::Sinusoid { frequency_hz: 1e3, amplitude_rad: 1.0 },
            start_s: 0.002,
            duration_s: 0.005,
        };
        let tier = PhaseTier { rate: 1e6, duration_s: 0.01, residual_offset_hz: 0.0 };
        let p = simulate_phase_traces(&spec, &NoiseSpec::quiet(), &[ev], &tier, 3).unwrap();
        let ts = spec.delay_over(10.0);
        let tu = spec.delay_over(70.0);
        for i in (0..10_000).step_by(97) {
            let t = i as f64 / 1e6;
            assert_relative_eq!(p.server.samples[i], ev.phase_at(t - ts), epsilon = 1e-12);
            assert_relative_eq!(p.user.samples[i], ev.phase_at(t - tu), epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn propagation_composes(l1 in 0.0f64..60.0, l2 in 0.0f64..60.0) {
            let f = OpticalField::new(vec![Complex64::new(0.7, -0.2); 8], 1e9);
            let q = NoiseSpec::quiet();
            let (a, _) = propagate(&f, &ChannelSpec::new(l1), &q, &[], Direction::Forward, 0).unwrap();
            let (ab, _) = propagate(&a, &ChannelSpec::new(l2), &q, &[], Direction::Forward, 0).unwrap();
            let (c, _) = propagate(&f, &ChannelSpec::new(l1 + l2), &q, &[], Direction::Forward, 0).unwrap();
            prop_assert!((ab.start_time - c.start_time).abs() <= 1e-12 * c.start_time.max(1e-300));
            for (x, y) in ab.samples.iter().zip(&c.samples) {
                prop_assert!((x - y).norm() <= 1e-12 * y.norm());
            }
        }

        #[test]
        fn budget_is_order_free(a in 0.0f64..0.1, b in 0.0f64..0.1, c in 0.0f64..0.1, d in 0.0f64..0.1) {
            let x = ExcessNoiseBudget { cv_qkd: a, raman: b, frequency_crosstalk: c, filter_crosstalk: d }.total();
            let y = ExcessNoiseBudget { cv_qkd: d, raman: c, frequency_crosstalk: b, filter_crosstalk: a }.total();
            prop_assert!((x - y).abs() < 1e-15);
        }
    }
}
