//! Closed-form Gaussian-modulation key rate against distance, next to the
//! repeaterless bound.

use dqan::channel::ChannelSpec;
use dqan::keyrate::{gaussian_keyrate, plob_report, ChannelEstimate, CorrectionInputs, KeyRateParams};

fn main() -> dqan::Result<()> {
    let params = KeyRateParams::new(50e6, 0.95, 0.51, 0.19);
    let corr = CorrectionInputs { g1: 0.99984, s_lower: 0.0180, s_upper: 0.0792 };
    println!("{:>6} {:>8} {:>14} {:>14}", "L_km", "T", "gauss (bps)", "PLOB (bps)");
    for l in [0.0, 10.0, 20.0, 40.0, 60.0, 80.0, 100.0] {
        let t = ChannelSpec::new(l).transmittance();
        let est = ChannelEstimate::exact(0, 1.17, t, 0.01);
        let k = gaussian_keyrate(&est, &params, &corr)?;
        println!("{l:>6} {t:>8.4} {:>14.4e} {:>14.4e}", k.bits_per_second, plob_report(0, t, &params).bits_per_second);
    }
    Ok(())
}
