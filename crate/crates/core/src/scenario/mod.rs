//! Scenario files, end-to-end runs, parameter sweeps and their artifacts.
//!
//! A run is split into tiers. Filter design and correction factors are
//! computed analytically. QKD estimation uses the symbol tier, which draws
//! heterodyne outcomes slot by slot from the channel model, while a short
//! bright loopback exercises the full-band receiver chain. Sensing runs on
//! phase traces at the phase-tier rate.
//!
//! Every stochastic stage draws from `seed::derive(master, stage, index)`,
//! so reports depend only on the configuration, the seed and the crate
//! version. Wall-clock timing is written to its own file for that reason.

pub mod config;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{load_config, parse_config, ScenarioConfig};
pub use output::{report_hash, summary};
pub use run::{run_scenario, RunMode, RunOutput, RunReport};
pub use sweep::{probe_impact, sweep, SweepReport, SweepVar};
