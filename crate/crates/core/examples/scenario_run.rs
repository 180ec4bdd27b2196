//! Loads the bundled 80 km scenario, runs the QKD tier and writes the
//! artifacts into a temporary directory.

use std::path::Path;

use dqan::scenario::{self, RunMode};

fn main() -> dqan::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_80km.cfg");
    let cfg = scenario::load_config(&path)?;
    let out = scenario::run_scenario(&cfg, RunMode::Qkd, cfg.run.seed)?;
    print!("{}", scenario::summary(&out.report));
    let dir = std::env::temp_dir().join("dqan-scenario-example");
    for p in out.write(&dir)? {
        println!("wrote {}", p.display());
    }
    println!("report hash {}", scenario::report_hash(&out.report));
    Ok(())
}
