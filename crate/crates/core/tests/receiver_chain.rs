use dqan::chain::{self, ReceiverSettings};
use dqan::dsp::{DetectorSpec, LoSpec};
use dqan::encoder::{IqModulatorModel, SidemodePlan};

fn plan() -> SidemodePlan {
    SidemodePlan::standard(&[1.16, 1.18, 1.17, 1.17, 1.17, 1.21, 1.14, 1.17])
}

#[test]
fn bright_loopback_recovers_every_user() {
    let rx = ReceiverSettings::new(LoSpec::default(), DetectorSpec::ideal(2e9));
    let modulator = IqModulatorModel::from_suppression(0.1, 35.0);
    let result = chain::loopback(&plan(), &modulator, &rx, 256, 1e10, 21).unwrap();
    assert_eq!(result.len(), 8);
    for u in &result {
        assert!(u.evm < 0.01, "user {}: EVM {}", u.user, u.evm);
        assert_eq!(u.phase_slips, 0);
        let expected_if = plan().pilot_frequency(u.user) + LoSpec::default().offset_hz;
        assert!((u.pilot_if_hz - expected_if).abs() < 1e5, "user {}: pilot {}", u.user, u.pilot_if_hz);
    }
}

#[test]
fn lo_offset_is_tracked() {
    for offset in [55e6, 70e6] {
        let lo = LoSpec { offset_hz: offset, ..LoSpec::default() };
        let rx = ReceiverSettings::new(lo, DetectorSpec::ideal(2e9));
        let r = chain::loopback(&plan(), &IqModulatorModel::from_suppression(0.1, 35.0), &rx, 128, 1e10, 2).unwrap();
        assert!(r.iter().all(|u| u.evm < 0.01), "{offset}: {r:?}");
    }
}

#[test]
fn shot_noise_calibration_with_a_lossy_detector() {
    let det = DetectorSpec { efficiency: 0.5, electronic_noise: 0.2, bandwidth_hz: 2e9 };
    let rx = ReceiverSettings::new(LoSpec::default(), det);
    let snu = chain::snu_check(&plan(), 5, &rx, 50_000, 4).unwrap();
    assert!((snu.calibrated_vacuum_variance - 1.0).abs() < 0.04, "{snu:?}");
    assert!((snu.calibration.electronic_noise_snu - 0.2).abs() < 0.04, "{snu:?}");
}
