use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mps::{load_config, run, Overrides, RunError};

#[derive(Parser)]
#[command(name = "mps", about = "Run multipatch spline experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        /// Config file; its keys override those of the preset.
        config: Option<PathBuf>,
        /// Output directory (default: out/<experiment name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Start from a committed preset.
        #[arg(long)]
        preset: Option<String>,
        /// Plan mode for every reconstruction: exact or truncated:N.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the committed presets.
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            for name in mps::presets::names() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, preset, mode, seed } => {
            let result = (|| {
                let text = config.as_ref().map(std::fs::read_to_string).transpose()?;
                let cfg = load_config(preset.as_deref(), text.as_deref(), &Overrides { mode, seed })?;
                let dir = out.unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
                let report = run(&cfg, &dir)?;
                for line in &report.summary {
                    println!("{line}");
                }
                println!("results written to {}", dir.display());
                Ok::<_, RunError>(())
            })();
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("mps: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
