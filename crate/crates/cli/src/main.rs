use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use vericom::sim::Mode;
use vericom_cli::{load_config, load_sweep, run_to_dir, summary, sweep_to_dir};

/// Deterministic simulator for hash-directed IoT blockchain verification.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Vericom,
    Baseline,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        seed: Option<u64>,
        #[arg(short, long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a parameter sweep into one CSV.
    Sweep {
        #[arg(short = 'p', long)]
        spec: PathBuf,
        #[arg(short, long)]
        seed: Option<u64>,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; defaults to the number of cores.
        #[arg(short, long, env = "VERICOM_JOBS")]
        jobs: Option<usize>,
    },
    /// Parse and validate a scenario file.
    Check { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VERICOM_LOG", "warn")).init();
    match dispatch(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Run { config, seed, mode, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(m) = mode {
                cfg.mode = match m {
                    ModeArg::Vericom => Mode::Vericom,
                    ModeArg::Baseline => Mode::Baseline,
                };
                cfg.validate()?;
            }
            let result = run_to_dir(&cfg, &out)?;
            print!("{}", summary(&result));
            log::info!("wrote {}", out.display());
        }
        Cmd::Sweep { spec, seed, out, jobs } => {
            let mut spec = load_sweep(&spec)?;
            if let Some(s) = seed {
                spec.base.seed = s;
            }
            if let Some(j) = jobs {
                rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
            }
            let rows = sweep_to_dir(&spec, &out)?;
            println!("{} rows written to {}", rows.len(), out.join("sweep.csv").display());
        }
        Cmd::Check { config } => {
            load_config(&config)?;
            println!("ok");
        }
    }
    Ok(())
}
