//! Forward and backward phase records of an 80 km link with one vibration,
//! showing where and when the disturbance lands at each end.

use dqan::channel::{simulate_phase_traces, ChannelSpec, NoiseSpec, PhaseTier, VibrationEvent, VibrationWaveform};

fn main() -> dqan::Result<()> {
    let link = ChannelSpec::new(80.0);
    let event = VibrationEvent {
        position_km: 30.0,
        waveform: VibrationWaveform::Sinusoid { frequency_hz: 1e3, amplitude_rad: 0.5 },
        start_s: 0.02,
        duration_s: 0.01,
    };
    let noise = NoiseSpec { server_linewidth_hz: 100.0, user_linewidth_hz: 100.0, ..NoiseSpec::quiet() };
    let tier = PhaseTier { rate: 1e6, duration_s: 0.05, residual_offset_hz: 3.0 };
    let pair = simulate_phase_traces(&link, &noise, &[event], &tier, 11)?;

    println!("T = {:.4}, one-way delay {:.1} us", link.transmittance(), link.delay() * 1e6);
    for (name, log) in [("server", &pair.backward), ("user", &pair.forward)] {
        for imp in &log.imprints {
            println!("{name:>6}: event at {:.0} km arrives {:.2} us after imprint", imp.position_km, imp.to_receiver_s * 1e6);
        }
    }
    let drift = |v: &[f64]| v.last().unwrap() - v[0];
    println!("server trace drift {:.2} rad, user trace drift {:.2} rad", drift(&pair.server.samples), drift(&pair.user.samples));
    Ok(())
}
