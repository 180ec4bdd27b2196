//! Seeded Monte Carlo of localization error in each vibration band.
//! Pass a trial count as the first argument (default 20).

use dqan::dsp::FilterPurpose;
use dqan::sensing::{resolution_trial, ResolutionScenario};

fn main() -> dqan::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    println!("{:<10} {:>9} {:>10} {:>10} {:>10} {:>8}", "band", "detected", "rms (m)", "p95 (m)", "fwhm (m)", "sep (m)");
    for band in [FilterPurpose::Vib10kHz, FilterPurpose::Vib1kHz, FilterPurpose::Vib100Hz] {
        let s = ResolutionScenario::new(band, 80.0, 40.0);
        let r = resolution_trial(&s, trials, 2024)?;
        println!(
            "{:<10} {:>5}/{:<3} {:>10.1} {:>10.1} {:>10.1} {:>8.1}",
            r.band, r.detected, r.trials, r.rms_error_m, r.p95_abs_error_m, r.fwhm_m, r.min_separation_m
        );
    }
    Ok(())
}
