//! The three vibration band filters: pass-band gain, stability and how a
//! single-tone phase disturbance survives filtering.

use dqan::dsp::{design_filter, FilterKind, FilterPurpose, PhaseTrace, TraceOrigin};

fn main() -> dqan::Result<()> {
    let rate = 1e6;
    for band in [FilterPurpose::Vib100Hz, FilterPurpose::Vib1kHz, FilterPurpose::Vib10kHz] {
        let f = design_filter(band, rate)?;
        let centre = (f.band_hz.0 * f.band_hz.1).sqrt();
        let kind = match &f.kind {
            FilterKind::IirButterworth { order, .. } => format!("Butterworth order {order}"),
            FilterKind::FirCascade { stages } => format!("{}-stage FIR", stages.len()),
        };
        println!(
            "{:<10} {} band {:.0}-{:.0} Hz, decimation {}, stable {}",
            band.label(),
            kind,
            f.band_hz.0,
            f.band_hz.1,
            f.decimation,
            f.is_stable()
        );
        for probe in [centre / 10.0, centre, centre * 10.0] {
            println!("    {probe:>9.1} Hz: {:>8.2} dB", f.applied_gain_db(probe));
        }
        let n = 200_000;
        let tone: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * centre * i as f64 / rate).sin()).collect();
        let out = f.process(&PhaseTrace::new(tone, rate, TraceOrigin::Probe))?;
        let mid = &out.samples[n / 4..3 * n / 4];
        let rms = (mid.iter().map(|v| v * v).sum::<f64>() / mid.len() as f64).sqrt();
        println!("    unit tone at centre comes out with rms {rms:.3} (ideal {:.3})", 0.5f64.sqrt());
    }
    Ok(())
}
