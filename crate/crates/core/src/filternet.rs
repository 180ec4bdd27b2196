//! Lorentzian drop filters (fibre-Bragg-grating cavities) that peel one
//! sidemode off the shared fibre per stage.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::encoder::{OpticalField, SidemodePlan};
use crate::error::{Error, Result};
use crate::signal;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One cavity filter. Frequencies are relative to the optical carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub center_hz: f64,
    /// Full width at half maximum (Hz).
    pub linewidth_hz: f64,
    pub cavity_length_m: f64,
    pub core_index: f64,
    /// Fraction of the dropped band's power left on the through port.
    pub residual_reflectivity: f64,
    /// Width of the band the filter is meant to drop (Hz).
    pub band_hz: f64,
}

impl FilterSpec {
    /// Builds a filter from its free spectral range instead of its length.
    pub fn with_fsr(center_hz: f64, linewidth_hz: f64, fsr_hz: f64, core_index: f64, residual_reflectivity: f64, band_hz: f64) -> Self {
        FilterSpec {
            center_hz,
            linewidth_hz,
            cavity_length_m: SPEED_OF_LIGHT / (2.0 * core_index * fsr_hz),
            core_index,
            residual_reflectivity,
            band_hz,
        }
    }

    /// `c / (2 d l)`.
    pub fn fsr(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.core_index * self.cavity_length_m)
    }

    pub fn finesse(&self) -> f64 {
        self.fsr() / self.linewidth_hz
    }

    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if !(self.linewidth_hz > 0.0) {
            p.push("filter: linewidth must be positive".into());
        }
        if !(self.cavity_length_m > 0.0 && self.core_index > 0.0) {
            p.push("filter: cavity length and index must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.residual_reflectivity) {
            p.push("filter: residual reflectivity must lie in [0, 1]".into());
        }
        if !(self.band_hz > 0.0) {
            p.push("filter: drop band must be positive".into());
        }
        p
    }
}

/// Unit-peak power transmission `(Δv/2)² / ((f−f₀)² + (Δv/2)²)`.
pub fn lorentzian_transmission(spec: &FilterSpec, f: f64) -> f64 {
    let h = spec.linewidth_hz / 2.0;
    let x = f - spec.center_hz;
    h * h / (x * x + h * h)
}

/// Area-normalised Lorentzian `(1/π)(Δv/2) / ((f−f₀)² + (Δv/2)²)`.
pub fn lorentzian_density(spec: &FilterSpec, f: f64) -> f64 {
    let h = spec.linewidth_hz / 2.0;
    let x = f - spec.center_hz;
    h / (PI * (x * x + h * h))
}

/// `∫_a^b t(f) df` for the unit-peak Lorentzian, in closed form.
pub fn band_integral(spec: &FilterSpec, a: f64, b: f64) -> f64 {
    let h = spec.linewidth_hz / 2.0;
    h * (((b - spec.center_hz) / h).atan() - ((a - spec.center_hz) / h).atan())
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64, whole: f64, m: f64, fm: f64, tol: f64, depth: u32) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1) + rec(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

/// Leakage of the neighbouring sidemodes into user `j`'s drop port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crosstalk {
    /// `S_{j−1}`: lower neighbour, weighted by the residual reflectivity.
    pub lower: f64,
    /// `S_{j+1}`: upper neighbour.
    pub upper: f64,
}

/// Neighbour band integrals normalised by the own-band integral.
///
/// The ratio is the same for the unit-peak and the area-normalised
/// Lorentzian, so only the closed form of the former is used.
pub fn crosstalk_fractions(spec: &FilterSpec, plan: &SidemodePlan, j: usize) -> Result<Crosstalk> {
    if j >= plan.n_users {
        return Err(Error::Input(format!("user {j} out of range for {} users", plan.n_users)));
    }
    let (lower, upper) = neighbour_fractions(spec.linewidth_hz, plan.spacing_hz, plan.signal_bandwidth_hz, spec.residual_reflectivity)?;
    Ok(Crosstalk {
        lower: if j > 0 { lower } else { 0.0 },
        upper: if j + 1 < plan.n_users { upper } else { 0.0 },
    })
}

/// `(S_{j−1}, S_{j+1})` for an interior user.
pub fn neighbour_fractions(linewidth: f64, spacing: f64, bandwidth: f64, residual: f64) -> Result<(f64, f64)> {
    if bandwidth > spacing {
        return Err(Error::Config(format!(
            "integration bands overlap: bandwidth {bandwidth} Hz exceeds spacing {spacing} Hz"
        )));
    }
    if !(linewidth > 0.0) {
        return Ok((0.0, 0.0));
    }
    let spec = FilterSpec {
        center_hz: 0.0,
        linewidth_hz: linewidth,
        cavity_length_m: 1.0,
        core_index: 1.0,
        residual_reflectivity: residual,
        band_hz: bandwidth,
    };
    let h = bandwidth / 2.0;
    let own = band_integral(&spec, -h, h);
    let up = band_integral(&spec, spacing - h, spacing + h) / own;
    let down = band_integral(&spec, -spacing - h, -spacing + h) / own;
    Ok((residual * down, up))
}

/// Power responses `(drop, through)` of a filter at `f`.
///
/// The drop port sees `(1−R)·t(f)`. The through port keeps a flat fraction
/// `R` across the dropped band and `1 − t(f)` outside it.
pub fn port_responses(spec: &FilterSpec, f: f64) -> (f64, f64) {
    let t = lorentzian_transmission(spec, f);
    let r = spec.residual_reflectivity;
    let through = if (f - spec.center_hz).abs() <= spec.band_hz / 2.0 { r } else { 1.0 - t };
    ((1.0 - r) * t, through)
}

/// Splits a field into the dropped sidemode and the through-port residual.
pub fn drop_sidemode(input: &OpticalField, spec: &FilterSpec) -> (OpticalField, OpticalField) {
    let n = input.samples.len();
    let mut spectrum = input.samples.clone();
    signal::fft_in_place(&mut spectrum);
    let mut dropped = spectrum.clone();
    for (k, (d, r)) in dropped.iter_mut().zip(spectrum.iter_mut()).enumerate() {
        let f = signal::bin_frequency(k, n, input.sample_rate);
        let (pd, pr) = port_responses(spec, f);
        *d *= Complex64::new(pd.sqrt(), 0.0);
        *r *= Complex64::new(pr.sqrt(), 0.0);
    }
    signal::ifft_in_place(&mut dropped);
    signal::ifft_in_place(&mut spectrum);
    let wrap = |samples| OpticalField { samples, ..input.clone() };
    (wrap(dropped), wrap(spectrum))
}

/// Runs the serial cascade in ascending frequency order; returns one dropped
/// field per filter plus the final through-port residual.
pub fn cascade(input: &OpticalField, filters: &[FilterSpec]) -> (Vec<OpticalField>, OpticalField) {
    let mut order: Vec<usize> = (0..filters.len()).collect();
    order.sort_by(|&a, &b| filters[a].center_hz.total_cmp(&filters[b].center_hz));
    let mut dropped: Vec<Option<OpticalField>> = vec![None; filters.len()];
    let mut rest = input.clone();
    for i in order {
        let (d, r) = drop_sidemode(&rest, &filters[i]);
        dropped[i] = Some(d);
        rest = r;
    }
    (dropped.into_iter().map(|d| d.expect("every stage visited")).collect(), rest)
}

/// One design rule and how far the filter is from violating it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCriterion {
    pub name: String,
    pub pass: bool,
    /// Distance to the rule's boundary (Hz); negative when violated.
    pub margin_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub criteria: Vec<DesignCriterion>,
}

impl DesignReport {
    pub fn pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<String> {
        self.criteria
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} violated by {:.3e} Hz", c.name, -c.margin_hz))
            .collect()
    }
}

/// Checks `v_FSR > (n−1)ΔΩ_s + Δf_s` and `Δf_s ≤ Δv < ΔΩ_s`.
pub fn validate_design(spec: &FilterSpec, plan: &SidemodePlan) -> DesignReport {
    let span = plan.n_users.saturating_sub(1) as f64 * plan.spacing_hz + plan.signal_bandwidth_hz;
    let fsr_margin = spec.fsr() - span;
    let lw = spec.linewidth_hz;
    let lw_margin = (lw - plan.signal_bandwidth_hz).min(plan.spacing_hz - lw);
    DesignReport {
        criteria: vec![
            DesignCriterion {
                name: "free spectral range exceeds sidemode span".into(),
                pass: fsr_margin > 0.0,
                margin_hz: fsr_margin,
            },
            DesignCriterion {
                name: "linewidth between signal bandwidth and spacing".into(),
                // inclusive at the bandwidth edge: the reference design has Δv = Δf_s
                pass: lw_margin >= -1e-9 * plan.signal_bandwidth_hz && lw < plan.spacing_hz,
                margin_hz: lw_margin,
            },
        ],
    }
}

/// Transmission sampled on `n` points across `[lo, hi]`, for plotting.
pub fn transmission_curve(spec: &FilterSpec, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let f = lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64;
            (f, lorentzian_transmission(spec, f))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(center: f64, lw: f64, r: f64) -> FilterSpec {
        FilterSpec::with_fsr(center, lw, 1.8e9, 1.468, r, 100e6)
    }

    #[test]
    fn transmission_reference_points() {
        let s = spec(0.0, 100e6, 0.0);
        assert_eq!(lorentzian_transmission(&s, 0.0), 1.0);
        assert_relative_eq!(lorentzian_transmission(&s, 50e6), 0.5, epsilon = 1e-15);
        assert_relative_eq!(lorentzian_transmission(&s, 200e6), 1.0 / 17.0, epsilon = 1e-15);
    }

    #[test]
    fn fsr_and_length_agree() {
        let s = spec(0.0, 100e6, 0.0);
        assert_relative_eq!(s.fsr(), 1.8e9, max_relative = 1e-12);
        assert_relative_eq!(s.finesse(), 18.0, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let s = spec(3e6, 100e6, 0.0);
        for (a, b) in [(-50e6, 50e6), (150e6, 250e6), (-250e6, -150e6), (0.0, 1e9)] {
            let closed = band_integral(&s, a, b);
            let quad = adaptive_simpson(&|f| lorentzian_transmission(&s, f), a, b, closed * 1e-13);
            assert_relative_eq!(closed, quad, max_relative = 1e-9);
        }
    }

    #[test]
    fn both_normalisations_give_the_same_ratio() {
        let s = spec(0.0, 100e6, 0.0);
        let tol = 1e-12;
        let own_d = adaptive_simpson(&|f| lorentzian_density(&s, f), -50e6, 50e6, tol);
        let up_d = adaptive_simpson(&|f| lorentzian_density(&s, f), 150e6, 250e6, tol);
        let (_, up) = neighbour_fractions(100e6, 200e6, 100e6, 0.227).unwrap();
        assert_relative_eq!(up_d / own_d, up, max_relative = 1e-8);
    }

    #[test]
    fn crosstalk_fractions_from_arctangents() {
        // S_{j+1} = (atan 5 − atan 3)/(π/2)
        let oracle_up = (5f64.atan() - 3f64.atan()) / (PI / 2.0);
        let (lo, up) = neighbour_fractions(100e6, 200e6, 100e6, 0.227).unwrap();
        assert_relative_eq!(up, oracle_up, epsilon = 1e-14);
        assert_relative_eq!(lo, 0.227 * oracle_up, epsilon = 1e-14);
    }

    #[test]
    fn edge_users_have_one_neighbour() {
        let plan = SidemodePlan::standard(&[1.17; 8]);
        let s = spec(100e6, 100e6, 0.227);
        let first = crosstalk_fractions(&s, &plan, 0).unwrap();
        let last = crosstalk_fractions(&s, &plan, 7).unwrap();
        assert_eq!(first.lower, 0.0);
        assert!(first.upper > 0.0);
        assert_eq!(last.upper, 0.0);
        assert!(last.lower > 0.0);
        assert!(crosstalk_fractions(&s, &plan, 8).is_err());
    }

    #[test]
    fn overlapping_bands_rejected() {
        assert!(matches!(neighbour_fractions(100e6, 200e6, 250e6, 0.2), Err(Error::Config(_))));
    }

    #[test]
    fn zero_reflectivity_removes_lower_leak() {
        let (lo, up) = neighbour_fractions(150e6, 200e6, 100e6, 0.0).unwrap();
        assert_eq!(lo, 0.0);
        assert!(up > 0.0);
    }

    #[test]
    fn narrow_filter_leaks_nothing() {
        let (lo, up) = neighbour_fractions(1.0, 200e6, 100e6, 1.0).unwrap();
        assert!(lo < 1e-7 && up < 1e-7);
    }

    fn tone(f: f64, n: usize, rate: f64) -> OpticalField {
        OpticalField::new((0..n).map(|i| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64 / rate)).collect(), rate)
    }

    #[test]
    fn tone_at_centre_is_fully_dropped() {
        let rate = 4e9;
        let n = 4000; // 1 MHz bins: both tones sit on bins
        let s = spec(300e6, 100e6, 0.0);
        let (d, r) = drop_sidemode(&tone(300e6, n, rate), &s);
        let e = n as f64;
        assert_relative_eq!(d.energy(), e, max_relative = 1e-12);
        assert!(r.energy() < 1e-12 * e);
        let (d, r) = drop_sidemode(&tone(500e6, n, rate), &s);
        assert_relative_eq!(d.energy(), e / 17.0, max_relative = 1e-12);
        assert_relative_eq!(d.energy() + r.energy(), e, max_relative = 1e-9);
    }

    #[test]
    fn design_rules() {
        let plan = SidemodePlan::standard(&[1.17; 8]);
        assert!(validate_design(&FilterSpec::with_fsr(100e6, 100e6, 1.6e9, 1.468, 0.227, 100e6), &plan).pass());
        let wide = validate_design(&FilterSpec::with_fsr(100e6, 300e6, 1.8e9, 1.468, 0.227, 100e6), &plan);
        assert!(!wide.criteria[1].pass && wide.criteria[0].pass);
        let short = validate_design(&FilterSpec::with_fsr(100e6, 100e6, 1.0e9, 1.468, 0.227, 100e6), &plan);
        assert!(!short.criteria[0].pass && short.criteria[1].pass);
    }

    proptest! {
        #[test]
        fn ports_are_passive(f in -2e9f64..2e9, lw in 1e6f64..300e6, r in 0.0f64..1.0) {
            let s = spec(0.0, lw, r);
            let (d, t) = port_responses(&s, f);
            prop_assert!((0.0..=1.0).contains(&d) && (0.0..=1.0).contains(&t));
            prop_assert!(d + t <= 1.0 + 1e-12);
        }

        #[test]
        fn fractions_monotone(lw in 10e6f64..190e6, dlw in 1e6f64..50e6, sp in 120e6f64..400e6, dsp in 1e6f64..100e6) {
            let (_, a) = neighbour_fractions(lw, sp, 100e6, 0.5).unwrap();
            let (_, wider) = neighbour_fractions(lw + dlw, sp, 100e6, 0.5).unwrap();
            let (_, farther) = neighbour_fractions(lw, sp + dsp, 100e6, 0.5).unwrap();
            prop_assert!(wider > a);
            prop_assert!(farther < a);
        }

        #[test]
        fn symmetric_when_fully_reflective(lw in 10e6f64..300e6, sp in 120e6f64..400e6) {
            let (lo, up) = neighbour_fractions(lw, sp, 100e6, 1.0).unwrap();
            prop_assert!((lo - up).abs() <= 1e-12 * up.max(1e-300));
        }

        #[test]
        fn drop_never_creates_energy(seed in 0u64..1000, r in 0.0f64..1.0) {
            use rand::Rng;
            let mut rng = crate::seed::rng(seed);
            let x: Vec<Complex64> = (0..512).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let input = OpticalField::new(x, 4e9);
            let (d, t) = drop_sidemode(&input, &spec(300e6, 100e6, r));
            prop_assert!(d.energy() + t.energy() <= input.energy() * (1.0 + 1e-9));
        }
    }
}
