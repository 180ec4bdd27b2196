use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dsp::heterodyne::ComplexBaseband;
use crate::dsp::phase::PhaseTrace;
use crate::encoder::{rrc_pulse, SidemodePlan, SlotTiming};
use crate::error::{Error, Result};
use crate::seed;
use crate::signal;

/// Per-slot heterodyne outcomes of one user, in SNU^(1/2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSamples {
    pub user: usize,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// Slot-centre times relative to the start of the received record (s).
    pub times: Vec<f64>,
}

impl QuadratureSamples {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn scaled(&self, s: f64) -> QuadratureSamples {
        QuadratureSamples {
            x: self.x.iter().map(|v| v * s).collect(),
            p: self.p.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    pub fn point(&self, k: usize) -> Complex64 {
        Complex64::new(self.x[k], self.p[k])
    }

    /// Both quadratures, concatenated.
    pub fn all_values(&self) -> Vec<f64> {
        self.x.iter().chain(&self.p).copied().collect()
    }
}

/// Matched-filters the signal baseband, samples it at the slot centres and
/// removes the pilot phase.
///
/// `phase` must come from the pilot baseband of the same record (same rate
/// and length); its removed trend is added back before rotation, since the
/// residual frequency is shared by pilot and signal.
pub fn recover_quadratures(
    signal_bb: &ComplexBaseband,
    phase: &PhaseTrace,
    timing: &SlotTiming,
    plan: &SidemodePlan,
    user: usize,
) -> Result<QuadratureSamples> {
    if phase.len() != signal_bb.samples.len() || (phase.rate - signal_bb.sample_rate).abs() > 1e-6 * phase.rate {
        return Err(Error::Input("phase trace and signal baseband are not aligned".into()));
    }
    let sps = signal_bb.sample_rate / plan.baud;
    if (sps - sps.round()).abs() > 1e-9 {
        return Err(Error::Input("baseband rate is not an integer multiple of the baud".into()));
    }
    let pulse: Vec<Complex64> = rrc_pulse(plan.rolloff, sps.round() as usize, plan.pulse_span)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    let mf = signal::convolve_same(&signal_bb.samples, &pulse);
    let mut out = QuadratureSamples { user, x: Vec::new(), p: Vec::new(), times: Vec::new() };
    for k in 0..timing.n_slots {
        let t = timing.center(k);
        let idx = (t * signal_bb.sample_rate).round() as usize;
        if idx >= mf.len() {
            return Err(Error::Input(format!("slot {k} falls outside the record")));
        }
        let v = mf[idx] * Complex64::from_polar(1.0, -phase.raw_at(idx));
        out.x.push(v.re);
        out.p.push(v.im);
        out.times.push(t);
    }
    Ok(out)
}

/// Heterodyne outcomes drawn straight from the Gaussian channel model,
/// slot by slot: mean `√(2ηT)·α` and per-quadrature variance
/// `1 + v_el + ηTξ/2` with `ξ` referred to the channel input.
///
/// This is the statistical equivalent of the full-band chain and is what
/// long estimation runs use.
pub fn simulate_symbol_tier(
    sent: &[Complex64],
    transmittance: f64,
    excess_noise: f64,
    efficiency: f64,
    electronic_noise: f64,
    user: usize,
    seed_value: u64,
) -> QuadratureSamples {
    let gain = (2.0 * efficiency * transmittance).sqrt();
    let sd = (1.0 + electronic_noise + efficiency * transmittance * excess_noise / 2.0).sqrt();
    let normal = Normal::new(0.0, sd).expect("positive variance");
    let mut rng = seed::stage_rng(seed_value, "symbol-tier", user as u64);
    let mut x = Vec::with_capacity(sent.len());
    let mut p = Vec::with_capacity(sent.len());
    for a in sent {
        x.push(gain * a.re + normal.sample(&mut rng));
        p.push(gain * a.im + normal.sample(&mut rng));
    }
    QuadratureSamples { user, x, p, times: Vec::new() }
}
