//! Distance sweep of the bundled scenario and the paired probe on/off
//! excess-noise comparison.

use std::path::Path;

use dqan::scenario::{self, SweepVar};

fn main() -> dqan::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_80km.cfg");
    let cfg = scenario::load_config(&path)?;
    let report = scenario::sweep(&cfg, SweepVar::Distance, &[10.0, 30.0, 50.0, 80.0], cfg.run.seed)?;
    print!("{}", report.to_csv());

    println!("\nprobe at {} dBm:", cfg.sweep.probe_power_dbm);
    for row in scenario::probe_impact(&cfg, 0, cfg.run.seed)? {
        println!(
            "  {:>4} km: eps off {:.4} ± {:.4}, on {:.4} ± {:.4}, overlap {}",
            row.length_km,
            row.eps_off,
            row.eps_off_se,
            row.eps_on,
            row.eps_on_se,
            row.overlapping()
        );
    }
    Ok(())
}
