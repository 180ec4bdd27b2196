use std::f64::consts::PI;

use dqan::encoder::{OpticalField, SidemodePlan};
use dqan::filternet::{self, FilterSpec};
use dqan::seed;
use dqan::signal;
use num_complex::Complex64;
use rand::Rng;

const RATE: f64 = 4e9;
const N: usize = 40_000;

fn flat_bands(plan: &SidemodePlan) -> OpticalField {
    let mut rng = seed::rng(17);
    let half = plan.signal_bandwidth_hz / 2.0;
    let mut x: Vec<Complex64> = (0..N)
        .map(|k| {
            let f = signal::bin_frequency(k, N, RATE);
            let inside = (0..plan.n_users).any(|j| (f - plan.center_frequency(j)).abs() < half);
            if inside {
                Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    signal::ifft_in_place(&mut x);
    OpticalField::new(x, RATE)
}

fn band(plan: &SidemodePlan, j: usize) -> (f64, f64) {
    let c = plan.center_frequency(j);
    let h = plan.signal_bandwidth_hz / 2.0;
    (c - h, c + h)
}

#[test]
fn cascade_leakage_matches_fractions() {
    let plan = SidemodePlan::standard(&[1.17; 8]);
    let specs: Vec<FilterSpec> =
        (0..8).map(|j| FilterSpec::with_fsr(plan.center_frequency(j), 100e6, 2e9, 1.468, 0.227, 100e6)).collect();
    let input = flat_bands(&plan);
    let (drops, _) = filternet::cascade(&input, &specs);

    // walk the cascade by hand to get each stage's input
    let mut stage_input = input.clone();
    let mut previous_input = input.clone();
    for j in 0..7 {
        let (d, rest) = filternet::drop_sidemode(&stage_input, &specs[j]);
        assert!((d.energy() - drops[j].energy()).abs() <= 1e-9 * d.energy());
        if j >= 1 {
            let (lo, hi) = band(&plan, j);
            let efficiency = d.band_energy(lo, hi) / stage_input.band_energy(lo, hi);
            // each neighbour is measured against what entered its own stage,
            // so the lower one carries the flat residual of stage j-1
            let leak = |n: usize, reference: &OpticalField| {
                let (a, b) = band(&plan, n);
                d.band_energy(a, b) / reference.band_energy(a, b) / efficiency
            };
            let expect = filternet::crosstalk_fractions(&specs[j], &plan, j).unwrap();
            let (lower, upper) = (leak(j - 1, &previous_input), leak(j + 1, &stage_input));
            assert!((lower / expect.lower - 1.0).abs() < 0.05, "user {j}: lower {lower} vs {}", expect.lower);
            assert!((upper / expect.upper - 1.0).abs() < 0.05, "user {j}: upper {upper} vs {}", expect.upper);
        }
        previous_input = std::mem::replace(&mut stage_input, rest);
    }
}

#[test]
fn cascade_conserves_or_loses_energy() {
    let plan = SidemodePlan::standard(&[1.17; 8]);
    let specs: Vec<FilterSpec> =
        (0..8).map(|j| FilterSpec::with_fsr(plan.center_frequency(j), 100e6, 2e9, 1.468, 0.227, 100e6)).collect();
    let input = flat_bands(&plan);
    let (drops, rest) = filternet::cascade(&input, &specs);
    let out: f64 = drops.iter().map(|d| d.energy()).sum::<f64>() + rest.energy();
    assert!(out <= input.energy() * (1.0 + 1e-9));
    // most of each band ends up at its own port
    for (j, d) in drops.iter().enumerate() {
        let (lo, hi) = band(&plan, j);
        assert!(d.band_energy(lo, hi) > 0.5 * input.band_energy(lo, hi), "user {j}");
    }
}

#[test]
fn cascade_order_does_not_depend_on_listing() {
    let plan = SidemodePlan::standard(&[1.17; 4]);
    let mut specs: Vec<FilterSpec> =
        (0..4).map(|j| FilterSpec::with_fsr(plan.center_frequency(j), 100e6, 2e9, 1.468, 0.227, 100e6)).collect();
    let input = flat_bands(&plan);
    let (a, _) = filternet::cascade(&input, &specs);
    specs.reverse();
    let (mut b, _) = filternet::cascade(&input, &specs);
    b.reverse();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.energy() - y.energy()).abs() <= 1e-12 * x.energy());
    }
}
