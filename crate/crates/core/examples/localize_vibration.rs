//! End-to-end localization of a tap on an 80 km link, noiseless and with
//! system phase noise, at a handful of positions.

use dqan::channel::simulate_phase_traces;
use dqan::dsp::FilterPurpose;
use dqan::sensing::{self, ResolutionScenario};

fn main() -> dqan::Result<()> {
    for snr in [f64::INFINITY, 50.0] {
        let scenario = ResolutionScenario::new(FilterPurpose::Vib10kHz, 80.0, snr);
        println!("SNR {snr} dB");
        for pos in [0.0, 10.0, 40.0, 70.0, 80.0] {
            let pair = simulate_phase_traces(&scenario.channel, &scenario.noise(), &[scenario.event(pos)], &scenario.tier, 5)?;
            let loc = sensing::localize(&pair.server, &pair.user, scenario.band, &scenario.channel)?.with_truth(pos);
            println!("  truth {pos:>5.1} km -> {:>8.4} km, error {:>8.2} m, peak {:.3}", loc.estimated_km, loc.error_m.unwrap(), loc.peak);
        }
    }
    Ok(())
}
