//! Band-pass filters for the vibration bands and the QKD signal band.
//!
//! The 100 Hz band uses an 8-pole Butterworth band-pass (order 4 per edge)
//! run forwards and backwards. The 1 kHz and 10 kHz bands decimate to a
//! working rate and run two cascaded 513-tap Hamming band-pass FIRs. All
//! vibration filters are zero-phase, so an event keeps its trace time
//! whichever band is chosen.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::phase::{PhaseTrace, TraceOrigin};
use crate::error::{Error, Result};
use crate::signal;

pub const FIR_TAPS: usize = 513;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterPurpose {
    Vib100Hz,
    Vib1kHz,
    Vib10kHz,
    /// Baseband low-pass that keeps `±passband_hz` and suppresses a pilot at
    /// `pilot_offset_hz`.
    QkdBand { passband_hz: f64, pilot_offset_hz: f64 },
}

impl FilterPurpose {
    pub fn parse(s: &str) -> Option<FilterPurpose> {
        match s {
            "vib-100Hz" | "100Hz" | "100" => Some(FilterPurpose::Vib100Hz),
            "vib-1kHz" | "1kHz" | "1000" => Some(FilterPurpose::Vib1kHz),
            "vib-10kHz" | "10kHz" | "10000" => Some(FilterPurpose::Vib10kHz),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FilterPurpose::Vib100Hz => "vib-100Hz",
            FilterPurpose::Vib1kHz => "vib-1kHz",
            FilterPurpose::Vib10kHz => "vib-10kHz",
            FilterPurpose::QkdBand { .. } => "qkd-band",
        }
    }
}

/// Second-order section `b0 + b1 z⁻¹ + b2 z⁻²` over `1 + a1 z⁻¹ + a2 z⁻²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z1: Complex64) -> Complex64 {
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (1.0 + self.a[0] * z1 + self.a[1] * z2)
    }

    fn run(&self, x: &mut [f64]) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let y = self.b[0] * *v + s1;
            s1 = self.b[1] * *v - self.a[0] * y + s2;
            s2 = self.b[2] * *v - self.a[1] * y;
            *v = y;
        }
    }

    /// Magnitude of the section's poles.
    pub fn pole_radius(&self) -> f64 {
        let disc = self.a[0] * self.a[0] - 4.0 * self.a[1];
        if disc < 0.0 {
            self.a[1].sqrt()
        } else {
            let r = disc.sqrt();
            ((-self.a[0] + r) / 2.0).abs().max(((-self.a[0] - r) / 2.0).abs())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterKind {
    IirButterworth { order: usize, sections: Vec<Biquad> },
    FirCascade { stages: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDesign {
    pub purpose: FilterPurpose,
    pub kind: FilterKind,
    /// Nominal pass band (Hz).
    pub band_hz: (f64, f64),
    pub input_rate: f64,
    pub decimation: usize,
}

impl FilterDesign {
    pub fn working_rate(&self) -> f64 {
        self.input_rate / self.decimation as f64
    }

    /// Single-pass complex response at `f` (Hz), evaluated at the working rate.
    pub fn response(&self, f: f64) -> Complex64 {
        let w = 2.0 * PI * f / self.working_rate();
        let z1 = Complex64::from_polar(1.0, -w);
        match &self.kind {
            FilterKind::IirButterworth { sections, .. } => sections.iter().map(|s| s.response(z1)).product(),
            FilterKind::FirCascade { stages } => stages
                .iter()
                .map(|h| {
                    let m = (h.len() - 1) as f64 / 2.0;
                    // centred (zero-phase) kernel
                    h.iter()
                        .enumerate()
                        .map(|(k, &c)| c * Complex64::from_polar(1.0, -w * (k as f64 - m)))
                        .sum::<Complex64>()
                })
                .product(),
        }
    }

    /// Magnitude (dB) of the response as applied, i.e. after zero-phase
    /// processing (the IIR runs twice).
    pub fn applied_gain_db(&self, f: f64) -> f64 {
        let m = self.response(f).norm();
        let m = match self.kind {
            FilterKind::IirButterworth { .. } => m * m,
            FilterKind::FirCascade { .. } => m,
        };
        20.0 * m.max(1e-300).log10()
    }

    /// True when every IIR pole lies strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        match &self.kind {
            FilterKind::IirButterworth { sections, .. } => sections.iter().all(|s| s.pole_radius() < 1.0),
            FilterKind::FirCascade { .. } => true,
        }
    }

    /// Zero-phase filtering of data already at the working rate.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            FilterKind::IirButterworth { sections, .. } => {
                let pad = self.iir_padding(x.len());
                filtfilt(sections, x, pad)
            }
            FilterKind::FirCascade { stages } => {
                let mut y = x.to_vec();
                for h in stages {
                    y = signal::convolve_same_real(&y, h);
                }
                y
            }
        }
    }

    fn iir_padding(&self, n: usize) -> usize {
        let bw = (self.band_hz.1 - self.band_hz.0).max(1e-9);
        ((5.0 * self.working_rate() / bw).ceil() as usize).min(n.saturating_sub(1))
    }

    /// Filters a trace at the input rate: anti-alias and decimate, filter at
    /// the working rate, then interpolate back to the input rate.
    pub fn process(&self, trace: &PhaseTrace) -> Result<PhaseTrace> {
        if (trace.rate - self.input_rate).abs() > 1e-9 * self.input_rate {
            return Err(Error::Input(format!(
                "trace rate {} differs from the filter design rate {}",
                trace.rate, self.input_rate
            )));
        }
        let d = self.decimation;
        let samples = match &self.kind {
            FilterKind::IirButterworth { .. } if d == 1 => self.apply(&trace.samples),
            _ => {
                let wr = self.working_rate();
                let (beta, _) = signal::kaiser_design(80.0, 0.1 * wr, self.input_rate);
                let taps = (8 * d + 1).max(65) | 1;
                let aa = if d > 1 {
                    let win = signal::kaiser_window(taps, beta);
                    signal::lowpass_kernel(taps, 0.4 * wr, self.input_rate, &win)
                } else {
                    vec![1.0]
                };
                // odd extension so the FIR stages do not see a step at the
                // record edges; a multiple of d keeps the decimation grid
                let reach = match &self.kind {
                    FilterKind::FirCascade { stages } => stages.iter().map(|h| h.len() / 2).sum::<usize>(),
                    FilterKind::IirButterworth { .. } => 0,
                };
                let pad = (reach * d + aa.len() / 2).div_ceil(d) * d;
                let pad = pad.min((trace.len().saturating_sub(1) / d) * d);
                let ext = odd_extend(&trace.samples, pad);
                let smooth = if d > 1 { signal::convolve_same_real(&ext, &aa) } else { ext };
                let low: Vec<f64> = smooth.iter().step_by(d).copied().collect();
                let filtered = self.apply(&low);
                let full = if d > 1 { upsample(&filtered, d, smooth.len()) } else { filtered };
                full[pad..pad + trace.len()].to_vec()
            }
        };
        Ok(PhaseTrace {
            samples,
            origin: TraceOrigin::Filtered,
            trend: None,
            ..trace.clone()
        })
    }
}

/// Band-limited interpolation by an integer factor through the FFT.
fn upsample(x: &[f64], factor: usize, out_len: usize) -> Vec<f64> {
    let m = x.len();
    let mut spec: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    signal::fft_in_place(&mut spec);
    let n = m * factor;
    let mut big = vec![Complex64::new(0.0, 0.0); n];
    let half = m / 2;
    for k in 0..m {
        let dst = if k < half || (k == half && m % 2 == 1) { k } else if k == half { k } else { n - (m - k) };
        big[dst] += spec[k];
    }
    if m % 2 == 0 && m > 0 {
        // split the Nyquist bin between the two halves
        let v = spec[half] / 2.0;
        big[half] = v;
        big[n - half] += v;
    }
    signal::ifft_in_place(&mut big);
    big.iter().take(out_len).map(|c| c.re * factor as f64).chain(std::iter::repeat(0.0)).take(out_len).collect()
}

fn odd_extend(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    ext
}

fn filtfilt(sections: &[Biquad], x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    // odd extension at both ends keeps the start-up transient out of the data
    let mut ext = odd_extend(x, pad);
    for s in sections {
        s.run(&mut ext);
    }
    ext.reverse();
    for s in sections {
        s.run(&mut ext);
    }
    ext.reverse();
    ext[pad..pad + n].to_vec()
}

/// Digital Butterworth band-pass with `order` poles per edge, designed by
/// bilinear transform with pre-warped edges.
pub fn butterworth_bandpass(order: usize, lo: f64, hi: f64, rate: f64) -> Vec<Biquad> {
    let fs2 = 2.0 * rate;
    let w1 = fs2 * (PI * lo / rate).tan();
    let w2 = fs2 * (PI * hi / rate).tan();
    let bw = w2 - w1;
    let w0 = (w1 * w2).sqrt();
    let mut poles = Vec::with_capacity(2 * order);
    for k in 0..order {
        let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let p = Complex64::from_polar(1.0, theta) * bw / 2.0;
        let r = (p * p - w0 * w0).sqrt();
        for s in [p + r, p - r] {
            poles.push((fs2 + s) / (fs2 - s));
        }
    }
    // keep one pole of each conjugate pair
    let mut upper: Vec<Complex64> = poles.into_iter().filter(|z| z.im > 0.0).collect();
    upper.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut sections: Vec<Biquad> = upper
        .iter()
        .map(|z| Biquad { b: [1.0, 0.0, -1.0], a: [-2.0 * z.re, z.norm_sqr()] })
        .collect();
    let wc = 2.0 * (w0 / fs2).atan();
    let z1 = Complex64::from_polar(1.0, -wc);
    let g: Complex64 = sections.iter().map(|s| s.response(z1)).product();
    let k = 1.0 / g.norm();
    for v in sections[0].b.iter_mut() {
        *v *= k;
    }
    sections
}

/// Windowed-sinc band-pass (Hamming), unit gain at the band centre.
pub fn fir_bandpass(taps: usize, lo: f64, hi: f64, rate: f64) -> Vec<f64> {
    let m = (taps - 1) as f64 / 2.0;
    let sinc = |fc: f64, x: f64| if x == 0.0 { 2.0 * fc } else { (2.0 * PI * fc * x).sin() / (PI * x) };
    let (a, b) = (lo / rate, hi / rate);
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let x = i as f64 - m;
            let w = 0.54 - 0.46 * (2.0 * PI * i as f64 / (taps - 1) as f64).cos();
            (sinc(b, x) - sinc(a, x)) * w
        })
        .collect();
    let wc = PI * (a + b);
    let g: f64 = h.iter().enumerate().map(|(i, &c)| c * (wc * (i as f64 - m)).cos()).sum();
    for v in h.iter_mut() {
        *v /= g;
    }
    h
}

/// Builds the filter for `purpose` at input sample rate `rate`.
pub fn design_filter(purpose: FilterPurpose, rate: f64) -> Result<FilterDesign> {
    let nyq = rate / 2.0;
    match purpose {
        FilterPurpose::Vib100Hz => {
            let (lo, hi) = (50.0, 200.0);
            if hi >= nyq {
                return Err(Error::Config(format!("band {hi} Hz above Nyquist at {rate} S/s")));
            }
            Ok(FilterDesign {
                purpose,
                kind: FilterKind::IirButterworth { order: 4, sections: butterworth_bandpass(4, lo, hi, rate) },
                band_hz: (lo, hi),
                input_rate: rate,
                decimation: 1,
            })
        }
        FilterPurpose::Vib1kHz | FilterPurpose::Vib10kHz => {
            let (lo, hi, target) = if purpose == FilterPurpose::Vib1kHz {
                (800.0, 1200.0, 25e3)
            } else {
                (8e3, 12e3, 250e3)
            };
            if hi >= nyq {
                return Err(Error::Config(format!("band {hi} Hz above Nyquist at {rate} S/s")));
            }
            let decimation = ((rate / target).floor() as usize).max(1);
            let wr = rate / decimation as f64;
            // widen each stage by half the Hamming transition so the cascade
            // is flat across the nominal band
            let half_tw = 0.5 * 3.3 * wr / FIR_TAPS as f64;
            let h = fir_bandpass(FIR_TAPS, (lo - half_tw).max(1.0), (hi + half_tw).min(0.49 * wr), wr);
            Ok(FilterDesign {
                purpose,
                kind: FilterKind::FirCascade { stages: vec![h.clone(), h] },
                band_hz: (lo, hi),
                input_rate: rate,
                decimation,
            })
        }
        FilterPurpose::QkdBand { passband_hz, pilot_offset_hz } => {
            let stop = pilot_offset_hz - 0.1 * (pilot_offset_hz - passband_hz);
            if !(passband_hz > 0.0 && stop > passband_hz) || pilot_offset_hz >= nyq {
                return Err(Error::Config(format!(
                    "qkd band: pass {passband_hz} Hz and pilot {pilot_offset_hz} Hz cannot be separated at {rate} S/s"
                )));
            }
            let (beta, taps) = signal::kaiser_design(75.0, stop - passband_hz, rate);
            let win = signal::kaiser_window(taps, beta);
            let h = signal::lowpass_kernel(taps, (passband_hz + stop) / 2.0, rate, &win);
            Ok(FilterDesign {
                purpose,
                kind: FilterKind::FirCascade { stages: vec![h] },
                band_hz: (-passband_hz, passband_hz),
                input_rate: rate,
                decimation: 1,
            })
        }
    }
}

/// Impulse response of the filter as applied, `n` samples long with the
/// impulse in the middle.
pub fn impulse_response(design: &FilterDesign, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[n / 2] = 1.0;
    design.apply(&x)
}
