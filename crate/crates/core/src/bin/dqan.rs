use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use dqan::scenario::{self, RunMode, SweepVar};
use dqan::Error;

#[derive(Parser)]
#[command(name = "dqan", version, about = "Sidemode CV-QKD access network simulator with forward vibration sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scenario, printing the effective configuration.
    Validate { config: PathBuf },
    /// Run a scenario and write its report and artifacts.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "both")]
        mode: String,
        /// Master seed; the scenario's own seed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the scenario over a grid of one variable.
    Sweep {
        config: PathBuf,
        /// distance | probe_power | linewidth | snr
        #[arg(long)]
        var: String,
        /// Comma-separated grid values, e.g. 10,30,50,80.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        grid: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_config() {
        ExitCode::from(2)
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_for(&e),
    }
}

fn execute(cmd: Command) -> dqan::Result<()> {
    match cmd {
        Command::Validate { config } => {
            let cfg = scenario::load_config(&config)?;
            println!("# {} users, config hash {}", cfg.n_users(), cfg.hash());
            print!("{}", cfg.to_toml());
            Ok(())
        }
        Command::Run { config, mode, seed, out } => {
            let mode = RunMode::parse(&mode).ok_or_else(|| Error::Config(format!("unknown mode {mode:?} (qkd, sensing or both)")))?;
            let cfg = scenario::load_config(&config)?;
            let seed = seed.unwrap_or(cfg.run.seed);
            let output = scenario::run_scenario(&cfg, mode, seed)?;
            let written = output.write(&out)?;
            print!("{}", scenario::summary(&output.report));
            println!("report hash {}", scenario::report_hash(&output.report));
            for p in written {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Sweep { config, var, grid, seed, out } => {
            let var = SweepVar::parse(&var).ok_or_else(|| Error::Config(format!("unknown sweep variable {var:?}")))?;
            let grid = parse_grid(&grid)?;
            let cfg = scenario::load_config(&config)?;
            let seed = seed.unwrap_or(cfg.run.seed);
            let t = Instant::now();
            let report = scenario::sweep(&cfg, var, &grid, seed)?;
            let written = report.write(&out, t.elapsed().as_secs_f64())?;
            print!("{}", report.to_csv());
            for f in &report.failures {
                eprintln!("point {} failed: {}", f.value, f.error);
            }
            for p in written {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn parse_grid(text: &str) -> dqan::Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<f64>().map_err(|_| Error::Config(format!("grid value {v:?} is not a number"))))
        .collect()
}
