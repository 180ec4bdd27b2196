use dqan::channel::{simulate_phase_traces, ChannelSpec, NoiseSpec, PhaseTier, VibrationEvent, VibrationWaveform};
use dqan::dsp::FilterPurpose;
use dqan::sensing::{self, ResolutionScenario};
use dqan::Error;

/// Position change for a one-sample shift of `Δt` at 1 MS/s.
fn one_sample_km(spec: &ChannelSpec, rate: f64) -> f64 {
    0.5 * 299_792.458 / spec.core_index / rate
}

#[test]
fn noiseless_positions_in_every_band() {
    for band in [FilterPurpose::Vib10kHz, FilterPurpose::Vib1kHz, FilterPurpose::Vib100Hz] {
        let sc = ResolutionScenario::new(band, 80.0, f64::INFINITY);
        let tol = one_sample_km(&sc.channel, sc.tier.rate);
        for pos in [0.0, 25.0, 61.5, 80.0] {
            let pair = simulate_phase_traces(&sc.channel, &sc.noise(), &[sc.event(pos)], &sc.tier, 3).unwrap();
            let loc = sensing::localize(&pair.server, &pair.user, band, &sc.channel).unwrap();
            assert!((loc.estimated_km - pos).abs() < tol, "{}: {pos} km -> {}", band.label(), loc.estimated_km);
        }
    }
}

#[test]
fn short_sinusoid_with_laser_noise_is_located() {
    let spec = ChannelSpec::new(50.0);
    let event = VibrationEvent {
        position_km: 12.0,
        waveform: VibrationWaveform::Sinusoid { frequency_hz: 9e3, amplitude_rad: 3.0 },
        start_s: 0.05,
        duration_s: 0.002,
    };
    let noise = NoiseSpec { server_linewidth_hz: 100.0, user_linewidth_hz: 100.0, ..NoiseSpec::quiet() };
    let tier = PhaseTier { rate: 1e6, duration_s: 0.1, residual_offset_hz: 3.0 };
    let pair = simulate_phase_traces(&spec, &noise, &[event], &tier, 9).unwrap();
    let loc = sensing::localize(&pair.server, &pair.user, FilterPurpose::Vib10kHz, &spec).unwrap();
    assert!((loc.estimated_km - 12.0).abs() < one_sample_km(&spec, 1e6), "{}", loc.estimated_km);
}

#[test]
fn no_event_means_no_detection() {
    let sc = ResolutionScenario::new(FilterPurpose::Vib1kHz, 80.0, 20.0);
    let noise = NoiseSpec { system_phase_psd: 1e-6, ..NoiseSpec::quiet() };
    let pair = simulate_phase_traces(&sc.channel, &noise, &[], &sc.tier, 4).unwrap();
    let r = sensing::localize(&pair.server, &pair.user, sc.band, &sc.channel);
    assert!(matches!(r, Err(Error::NoDetection { .. })), "{r:?}");
}

#[test]
fn higher_bands_localize_more_sharply() {
    let rms: Vec<f64> = [FilterPurpose::Vib10kHz, FilterPurpose::Vib1kHz, FilterPurpose::Vib100Hz]
        .into_iter()
        .map(|b| sensing::resolution_trial(&ResolutionScenario::new(b, 80.0, 40.0), 16, 77).unwrap().rms_error_m)
        .collect();
    assert!(rms[0] < rms[1] && rms[1] < rms[2], "{rms:?}");
}

#[test]
fn monte_carlo_is_reproducible() {
    let sc = ResolutionScenario::new(FilterPurpose::Vib10kHz, 80.0, 40.0);
    let a = sensing::resolution_trial(&sc, 6, 5).unwrap();
    let b = sensing::resolution_trial(&sc, 6, 5).unwrap();
    assert_eq!(a, b);
    let c = sensing::resolution_trial(&sc, 6, 6).unwrap();
    assert_ne!(a.records, c.records);
}
