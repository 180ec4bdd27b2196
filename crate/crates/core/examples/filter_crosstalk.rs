//! Cavity filter bank: design rules, neighbour leakage and the resulting
//! key-rate correction factor for every user.

use dqan::encoder::{sideband_ratio_from_db, SidemodePlan};
use dqan::filternet::{self, FilterSpec};
use dqan::keyrate::{correction_factor, CorrectionInputs};

fn main() -> dqan::Result<()> {
    let plan = SidemodePlan::standard(&[1.17; 8]);
    let g1 = sideband_ratio_from_db(35.0);
    for fsr in [2.0e9, 1.0e9] {
        let spec = FilterSpec::with_fsr(plan.center_frequency(0), 100e6, fsr, 1.468, 0.227, 100e6);
        let report = filternet::validate_design(&spec, &plan);
        println!("FSR {:.1} GHz, finesse {:.1}: {}", fsr / 1e9, spec.finesse(), if report.pass() { "pass" } else { "FAIL" });
        for c in &report.criteria {
            println!("  {:<48} margin {:>10.3e} Hz", c.name, c.margin_hz);
        }
    }

    println!("\nuser   S_lower   S_upper   g");
    for j in 0..plan.n_users {
        let spec = FilterSpec::with_fsr(plan.center_frequency(j), 100e6, 2e9, 1.468, 0.227, 100e6);
        let x = filternet::crosstalk_fractions(&spec, &plan, j)?;
        let g = correction_factor(&CorrectionInputs { g1, s_lower: x.lower, s_upper: x.upper })?;
        println!("{j:>4} {:>9.4} {:>9.4} {g:>7.4}", x.lower, x.upper);
    }

    let spec = FilterSpec::with_fsr(0.0, 100e6, 2e9, 1.468, 0.227, 100e6);
    println!("\nf_Hz,t");
    for (f, t) in filternet::transmission_curve(&spec, -300e6, 300e6, 13) {
        println!("{f},{t:.6}");
    }
    Ok(())
}
