use std::path::PathBuf;
use std::process::ExitCode;

use attoscatter_cli::{run, Mode, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "attoscatter", version, about = "Laser-dressed attosecond scattering in a 1D double well")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one stage of the pipeline (or all of it with `compare`).
    Run {
        #[arg(value_enum)]
        mode: Mode,
        /// TOML configuration; defaults apply to every missing key.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `output.out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `output.cache_dir`.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Print the resolved default configuration.
    Defaults,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Defaults => {
            print!("{}", RunConfig::default().to_toml());
            ExitCode::SUCCESS
        }
        Command::Run { mode, config, out, cache } => {
            let loaded = match config {
                Some(path) => RunConfig::load(&path),
                None => Ok(RunConfig::default()),
            };
            let mut config = match loaded {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(e.exit_code() as u8);
                }
            };
            if let Some(out) = out {
                config.output.out_dir = out;
            }
            if let Some(cache) = cache {
                config.output.cache_dir = cache;
            }
            match run(mode, config) {
                Ok(session) => {
                    for r in &session.manifest.acceptance {
                        println!("{}", r.status_line());
                    }
                    for w in &session.manifest.warnings {
                        eprintln!("warning: {w}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
