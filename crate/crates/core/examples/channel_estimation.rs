//! Symbol-tier heterodyne data for one user and the (T, ε) estimates drawn
//! from it, with their standard errors.

use dqan::dsp::simulate_symbol_tier;
use dqan::encoder::{generate_symbols, SidemodePlan};
use dqan::keyrate::{estimate_channel_params, KeyRateParams};

fn main() -> dqan::Result<()> {
    let plan = SidemodePlan::standard(&[1.17]);
    let params = KeyRateParams::new(50e6, 0.95, 0.51, 0.19);
    for (t, eps) in [(0.631, 0.0069), (0.1, 0.013), (0.0251, 0.019)] {
        for slots in [100_000, 1_000_000] {
            let frame = generate_symbols(&plan, slots, 3)?;
            let sent = frame.amplitudes(&plan, 0);
            let rx = simulate_symbol_tier(&sent, t, eps, params.detector_efficiency, params.electronic_noise, 0, 3);
            let e = estimate_channel_params(&sent, &rx, &params)?;
            println!(
                "T {t:<6} eps {eps:<6} n {slots:>7}: T^ {:.4} ± {:.4}, eps^ {:.4} ± {:.4}{}",
                e.transmittance,
                e.transmittance_se,
                e.excess_noise,
                e.excess_noise_se,
                if e.clamped { " (clamped)" } else { "" }
            );
        }
    }
    Ok(())
}
