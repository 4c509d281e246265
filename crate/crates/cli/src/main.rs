use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use compgrad_cli::{execute, Mode, RunOptions};

#[derive(Parser)]
#[command(name = "compgrad", version, about = "Competitive gradient experiments for two-player zero-sum games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver and write its trajectory.
    Run(Common),
    /// Run the solver over `alpha_grid`.
    Sweep(Common),
    /// Integrate the continuous-time flow.
    Flow(Common),
    /// Evaluate rate formulas and oCGO parameter bounds.
    Rates(Common),
    /// Probe alpha-coherence around a saddle point.
    Coherence(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Append all coordinates of each iterate to the CSV rows.
    #[arg(long)]
    full_state: bool,
    /// Worker threads for sweeps.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COMPGRAD_LOG", "warn")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Run(a) => (Mode::Run, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Flow(a) => (Mode::Flow, a),
        Command::Rates(a) => (Mode::Rates, a),
        Command::Coherence(a) => (Mode::Coherence, a),
    };
    let opts = RunOptions {
        full_state: args.full_state,
        jobs: args.jobs,
    };
    match execute(mode, &args.config, &opts) {
        Ok(status) => {
            if status.code() != 0 {
                log::warn!("{mode} finished with status {status:?}");
            }
            ExitCode::from(status.code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
