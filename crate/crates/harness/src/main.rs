use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flexlink_harness::commands::{self, Command, Overrides};

#[derive(Parser)]
#[command(name = "flexlink", version, about = "Flexible-link manipulator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Planner checkpoint to evaluate, or to resume training from.
    #[arg(long, global = true, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
    /// Number of training episodes.
    #[arg(long, global = true, value_name = "N")]
    episodes: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Solve the modal basis and report frequencies and orthogonality.
    Modes,
    /// Track the configured schedule with each configured controller.
    Simulate,
    /// Trained planner against speed-matched cubics on the evaluation suite.
    Compare,
    /// Train the trajectory planner.
    Train,
    /// Sweep the controller's model error on the canonical schedule.
    Uncertainty,
    /// Check the certified decay of V on step responses.
    Lyapunov,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Modes => Command::Modes,
            Cmd::Simulate => Command::Simulate,
            Cmd::Compare => Command::Compare,
            Cmd::Train => Command::Train,
            Cmd::Uncertainty => Command::Uncertainty,
            Cmd::Lyapunov => Command::Lyapunov,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ov = Overrides { seed: cli.seed, checkpoint: cli.checkpoint, episodes: cli.episodes };
    let result = commands::resolve(cli.config.as_deref(), &ov).and_then(|cfg| commands::run(cli.command.into(), &cfg, &cli.out));
    match result {
        Ok(summary) => {
            if !summary.is_empty() {
                println!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
