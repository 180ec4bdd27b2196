//! Builds the eight-sidemode drive for a short QPSK frame, passes it through
//! an imperfect IQ modulator and reports where the power ends up.

use dqan::encoder::{self, IqModulatorModel, SidemodePlan};

fn main() -> dqan::Result<()> {
    let plan = SidemodePlan::standard(&[1.17; 8]);
    let frame = encoder::generate_symbols(&plan, 256, 7)?;
    let model = IqModulatorModel::from_suppression(0.1, 35.0);
    let (field, timing) = encoder::modulated_field(&frame, &plan, &model)?;

    println!("{} samples at {:.1} GS/s, first slot centre {:.1} ns", field.samples.len(), field.sample_rate / 1e9, timing.first_center_s * 1e9);
    println!("suppression {:.2} dB -> g1 = {:.5}", model.suppression_db(), encoder::sideband_ratio(&model));
    println!("{:>5} {:>10} {:>14} {:>14}", "user", "F_j (MHz)", "band energy", "mirror energy");
    for j in 0..plan.n_users {
        let f = plan.center_frequency(j);
        let half = plan.signal_bandwidth_hz / 2.0;
        let own = field.band_energy(f - half, f + half);
        let mirror = field.band_energy(-f - half, -f + half);
        println!("{j:>5} {:>10.0} {own:>14.4e} {mirror:>14.4e}", f / 1e6);
    }
    for db in [20.0, 30.0, 35.0, 40.0] {
        println!("{db:>4} dB suppression: g1 = {:.6}", encoder::sideband_ratio_from_db(db));
    }
    Ok(())
}
