//! Bright back-to-back run through every user's heterodyne receiver, then a
//! shot-noise calibration of one band.

use dqan::chain::{self, ReceiverSettings};
use dqan::dsp::{DetectorSpec, LoSpec};
use dqan::encoder::{IqModulatorModel, SidemodePlan};

fn main() -> dqan::Result<()> {
    let plan = SidemodePlan::standard(&[1.16, 1.18, 1.17, 1.17, 1.17, 1.21, 1.14, 1.17]);
    let modulator = IqModulatorModel::from_suppression(0.1, 35.0);
    let rx = ReceiverSettings::new(LoSpec::default(), DetectorSpec::ideal(2e9));
    for u in chain::loopback(&plan, &modulator, &rx, 512, 1e10, 1)? {
        println!("user {}: EVM {:.3} %, pilot at {:.4} MHz IF, {} slips", u.user, 100.0 * u.evm, u.pilot_if_hz / 1e6, u.phase_slips);
    }

    let noisy = ReceiverSettings::new(LoSpec::default(), DetectorSpec { efficiency: 0.51, electronic_noise: 0.19, bandwidth_hz: 2e9 });
    let snu = chain::snu_check(&plan, 3, &noisy, 50_000, 1)?;
    println!(
        "user 3: scale {:.4}, electronic noise {:.3} SNU, calibrated vacuum variance {:.4}",
        snu.calibration.scale, snu.calibration.electronic_noise_snu, snu.calibrated_vacuum_variance
    );
    Ok(())
}
