//! Full-band receiver chain for one user band, and the two self-checks built
//! on it: a bright back-to-back loopback (constellation EVM) and a vacuum
//! shot-noise calibration.
//!
//! The chain is heterodyne detection against the LO, pilot lock in a window
//! around the nominal pilot IF, down-conversion of pilot and signal with the
//! same frequency reference, pilot phase estimation, then matched filtering
//! and rotation of the signal at the slot centres.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::heterodyne::{self, DetectorSpec, LoSpec, RealWaveform, SnuCalibration};
use crate::dsp::phase::{PhaseTrace, TraceOrigin};
use crate::dsp::{estimate_phase, recover_quadratures, QuadratureSamples};
use crate::encoder::{self, IqModulatorModel, OpticalField, SidemodePlan, SlotTiming};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverSettings {
    pub lo: LoSpec,
    pub detector: DetectorSpec,
    /// Half-width of the pilot search window around its nominal IF (Hz).
    pub pilot_search_hz: f64,
    /// Stop-band attenuation of the down-conversion low-passes (dB).
    pub stopband_db: f64,
}

impl ReceiverSettings {
    pub fn new(lo: LoSpec, detector: DetectorSpec) -> Self {
        ReceiverSettings { lo, detector, pilot_search_hz: 20e6, stopband_db: 70.0 }
    }
}

/// What one user's receiver produced.
#[derive(Debug, Clone)]
pub struct Reception {
    pub quadratures: QuadratureSamples,
    /// Pilot frequency found at IF (Hz).
    pub pilot_if_hz: f64,
    pub phase_slips: usize,
}

fn signal_passband(plan: &SidemodePlan) -> f64 {
    0.5 * (1.0 + plan.rolloff) * plan.baud
}

fn signal_lowpass(plan: &SidemodePlan, stop_db: f64) -> Vec<f64> {
    let pass = signal_passband(plan);
    let stop = 0.5 * (pass + plan.pilot_offset_hz);
    heterodyne::lowpass(pass, stop, stop_db, plan.sample_rate_hz)
}

/// Runs the receiver of `user` on `field`.
///
/// `timing` locates the slot centres relative to the first sample of
/// `field`.
pub fn receive_user(
    field: &OpticalField,
    plan: &SidemodePlan,
    timing: &SlotTiming,
    user: usize,
    rx: &ReceiverSettings,
    seed_value: u64,
) -> Result<Reception> {
    if user >= plan.n_users {
        return Err(Error::Input(format!("user {user} out of range for {} users", plan.n_users)));
    }
    let fc = plan.center_frequency(user);
    let fp = plan.pilot_frequency(user);
    let pass = signal_passband(plan);
    let band = (fc - pass, fp + rx.pilot_search_hz);
    let raw = heterodyne::heterodyne_detect(field, &rx.lo, &rx.detector, band, seed::derive(seed_value, "receiver", user as u64))?;

    let nominal = fp + rx.lo.offset_hz;
    let pilot_if = heterodyne::estimate_frequency_offset(&raw, (nominal - rx.pilot_search_hz, nominal + rx.pilot_search_hz))?;
    let signal_if = pilot_if - plan.pilot_offset_hz;

    // the pilot filter must reject the signal edge sitting pilot_offset − pass away
    let pilot_stop = plan.pilot_offset_hz - pass;
    let pilot_lp = heterodyne::lowpass(0.25 * pilot_stop, pilot_stop, rx.stopband_db, plan.sample_rate_hz);
    let pilot_bb = heterodyne::downconvert(&raw, pilot_if, &pilot_lp);
    let signal_bb = heterodyne::downconvert(&raw, signal_if, &signal_lowpass(plan, rx.stopband_db));

    let mut phase = estimate_phase(&pilot_bb.samples, pilot_bb.sample_rate, pilot_bb.start_time);
    // recover_quadratures indexes the trace from the record start
    phase.start_time = 0.0;
    let quadratures = recover_quadratures(&signal_bb, &phase, timing, plan, user)?;
    Ok(Reception { quadratures, pilot_if_hz: pilot_if, phase_slips: phase.phase_slips })
}

/// Error-vector magnitude of `received` against `sent` after the best
/// complex gain, as a fraction of the reference power.
pub fn evm(sent: &[Complex64], received: &QuadratureSamples) -> (f64, Complex64) {
    let (num, den) = sent.iter().enumerate().fold((Complex64::new(0.0, 0.0), 0.0), |(n, d), (k, s)| {
        (n + received.point(k) * s.conj(), d + s.norm_sqr())
    });
    let gain = num / den;
    let err: f64 = sent.iter().enumerate().map(|(k, s)| (received.point(k) - gain * s).norm_sqr()).sum();
    ((err / (gain.norm_sqr() * den)).sqrt(), gain)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserLoopback {
    pub user: usize,
    pub evm: f64,
    pub gain_abs: f64,
    pub gain_arg: f64,
    pub pilot_if_hz: f64,
    pub phase_slips: usize,
}

/// Encoder straight into every user's receiver with no channel. `brightness`
/// is the photon number per field unit, large enough that shot noise
/// vanishes next to the constellation.
pub fn loopback(
    plan: &SidemodePlan,
    modulator: &IqModulatorModel,
    rx: &ReceiverSettings,
    n_slots: usize,
    brightness: f64,
    seed_value: u64,
) -> Result<Vec<UserLoopback>> {
    let frame = encoder::generate_symbols(plan, n_slots, seed::derive(seed_value, "loopback", 0))?;
    let (mut field, timing) = encoder::modulated_field(&frame, plan, modulator)?;
    field.photons_per_unit = brightness;
    (0..plan.n_users)
        .map(|j| {
            let r = receive_user(&field, plan, &timing, j, rx, seed_value).map_err(|e| e.at(format!("loopback user {j}")))?;
            let (e, g) = evm(&frame.amplitudes(plan, j), &r.quadratures);
            Ok(UserLoopback {
                user: j,
                evm: e,
                gain_abs: g.norm(),
                gain_arg: g.arg(),
                pilot_if_hz: r.pilot_if_hz,
                phase_slips: r.phase_slips,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnuCheck {
    pub user: usize,
    pub calibration: SnuCalibration,
    /// Vacuum variance of an independent record after calibration (SNU).
    pub calibrated_vacuum_variance: f64,
}

fn band_quadratures(raw: &RealWaveform, plan: &SidemodePlan, user: usize, rx: &ReceiverSettings, timing: &SlotTiming) -> Result<Vec<f64>> {
    let f = plan.center_frequency(user) + rx.lo.offset_hz;
    let bb = heterodyne::downconvert(raw, f, &signal_lowpass(plan, rx.stopband_db));
    let still = PhaseTrace::new(vec![0.0; bb.samples.len()], bb.sample_rate, TraceOrigin::Pilot);
    Ok(recover_quadratures(&bb, &still, timing, plan, user)?.all_values())
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Shot-noise calibration of one user band from vacuum and dark records of
/// `n_slots` slots each, then a check on a second, independent pair.
pub fn snu_check(plan: &SidemodePlan, user: usize, rx: &ReceiverSettings, n_slots: usize, seed_value: u64) -> Result<SnuCheck> {
    let sps = plan.samples_per_symbol();
    let n = (n_slots + 2 * plan.guard_slots) * sps;
    let timing = SlotTiming {
        first_center_s: (plan.guard_slots * sps) as f64 / plan.sample_rate_hz,
        period_s: sps as f64 / plan.sample_rate_hz,
        n_slots,
    };
    let vacuum = OpticalField::vacuum(n, plan.sample_rate_hz);
    let fc = plan.center_frequency(user);
    let band = (fc - signal_passband(plan), fc + signal_passband(plan));
    let pair = |k: u64| -> Result<(Vec<f64>, Vec<f64>)> {
        let s = seed::derive(seed_value, "snu", 2 * user as u64 + k);
        let vac = heterodyne::heterodyne_detect(&vacuum, &rx.lo, &rx.detector, band, s)?;
        let dark = heterodyne::dark_record(n, plan.sample_rate_hz, &rx.detector, s);
        Ok((band_quadratures(&vac, plan, user, rx, &timing)?, band_quadratures(&dark, plan, user, rx, &timing)?))
    };
    let (vac, dark) = pair(0)?;
    let calibration = heterodyne::calibrate_snu(&rx.detector, &vac, &dark)?;
    let (vac2, dark2) = pair(1)?;
    let s2 = calibration.scale * calibration.scale;
    Ok(SnuCheck {
        user,
        calibration,
        calibrated_vacuum_variance: s2 * (variance(&vac2) - variance(&dark2)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evm_of_scaled_copy_is_zero() {
        let sent: Vec<Complex64> = (0..40).map(|k| encoder::qpsk_point(0.7, (k % 4) as u8)).collect();
        let g = Complex64::from_polar(3.0, 0.4);
        let q = QuadratureSamples {
            user: 0,
            x: sent.iter().map(|s| (g * s).re).collect(),
            p: sent.iter().map(|s| (g * s).im).collect(),
            times: Vec::new(),
        };
        let (e, gain) = evm(&sent, &q);
        assert!(e < 1e-12);
        assert!((gain - g).norm() < 1e-12);
    }

    #[test]
    fn evm_of_known_error() {
        // every point pushed outward by 10 % of its radius
        let sent: Vec<Complex64> = (0..400).map(|k| encoder::qpsk_point(1.0, (k % 4) as u8)).collect();
        let q = QuadratureSamples {
            user: 0,
            x: sent.iter().enumerate().map(|(k, s)| s.re + if k % 2 == 0 { 0.1 } else { -0.1 }).collect(),
            p: sent.iter().map(|s| s.im).collect(),
            times: Vec::new(),
        };
        let (e, _) = evm(&sent, &q);
        assert!((e - 0.1).abs() < 0.01, "{e}");
    }

    #[test]
    fn single_user_loopback_is_clean() {
        let plan = SidemodePlan::standard(&[1.17]);
        let m = IqModulatorModel::from_suppression(0.1, 35.0);
        let rx = ReceiverSettings::new(LoSpec::default(), DetectorSpec::ideal(2e9));
        let r = loopback(&plan, &m, &rx, 400, 1e8, 3).unwrap();
        assert!(r[0].evm < 0.01, "{:?}", r[0]);
        let nominal = plan.pilot_frequency(0) + rx.lo.offset_hz;
        assert!((r[0].pilot_if_hz - nominal).abs() < 1e5);
    }

    #[test]
    fn missing_pilot_fails_lock() {
        let mut plan = SidemodePlan::standard(&[1.17]);
        plan.pilot_amplitude = 0.0;
        let m = IqModulatorModel::from_suppression(0.1, 35.0);
        let rx = ReceiverSettings::new(LoSpec::default(), DetectorSpec::ideal(2e9));
        let e = loopback(&plan, &m, &rx, 200, 1.0, 3).unwrap_err();
        assert!(matches!(e, Error::Stage { ref source, .. } if matches!(**source, Error::LockFailure(_))), "{e}");
    }
}
