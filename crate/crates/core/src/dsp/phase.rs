use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceOrigin {
    Pilot,
    Probe,
    Laser,
    Filtered,
}

/// Uniformly sampled phase record (rad).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrace {
    pub samples: Vec<f64>,
    pub rate: f64,
    /// Absolute time of the first sample (s).
    pub start_time: f64,
    pub origin: TraceOrigin,
    pub unwrapped: bool,
    /// Line `a + b·i` removed by detrending, if any.
    pub trend: Option<(f64, f64)>,
    /// Adjacent-sample steps larger than π/2 after unwrapping.
    pub phase_slips: usize,
}

impl PhaseTrace {
    pub fn new(samples: Vec<f64>, rate: f64, origin: TraceOrigin) -> Self {
        PhaseTrace { samples, rate, start_time: 0.0, origin, unwrapped: false, trend: None, phase_slips: 0 }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start_time + i as f64 / self.rate
    }

    /// Sample `i` with the removed trend added back.
    pub fn raw_at(&self, i: usize) -> f64 {
        let (a, b) = self.trend.unwrap_or((0.0, 0.0));
        self.samples[i] + a + b * i as f64
    }

    /// Removes the least-squares line, remembering it in `trend`.
    pub fn detrended(&self) -> PhaseTrace {
        let (a, b) = signal::linear_fit(&self.samples);
        let (a0, b0) = self.trend.unwrap_or((0.0, 0.0));
        PhaseTrace {
            samples: self.samples.iter().enumerate().map(|(i, v)| v - a - b * i as f64).collect(),
            trend: Some((a0 + a, b0 + b)),
            ..self.clone()
        }
    }

    /// Residual frequency implied by the removed trend (Hz).
    pub fn trend_frequency(&self) -> f64 {
        self.trend.map(|(_, b)| b * self.rate / (2.0 * std::f64::consts::PI)).unwrap_or(0.0)
    }
}

/// Per-sample argument of a pilot baseband, unwrapped and detrended.
///
/// The linear detrend removes the residual frequency offset left by the
/// coarse estimate. Steps above π/2 between adjacent unwrapped samples are
/// counted as likely cycle slips; they are reported, not fatal.
pub fn estimate_phase(pilot: &[Complex64], rate: f64, start_time: f64) -> PhaseTrace {
    let wrapped: Vec<f64> = pilot.iter().map(|c| c.arg()).collect();
    let unwrapped = signal::unwrap(&wrapped);
    let slips = unwrapped
        .windows(2)
        .filter(|w| (w[1] - w[0]).abs() > std::f64::consts::FRAC_PI_2)
        .count();
    let trace = PhaseTrace {
        samples: unwrapped,
        rate,
        start_time,
        origin: TraceOrigin::Pilot,
        unwrapped: true,
        trend: None,
        phase_slips: slips,
    };
    trace.detrended()
}
