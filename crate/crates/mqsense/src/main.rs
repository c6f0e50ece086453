use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mqsense", about = "Correlated spin-cluster simulator and jitter-sensing toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the pipeline described by a JSON config file.
    Run {
        config: PathBuf,
        /// Output directory (default: out/<config stem>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = library default); outputs do not depend on it.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Parse and validate a config file without running it.
    Validate { config: PathBuf },
    /// Print the artifact version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            let out_dir = out.unwrap_or_else(|| {
                let stem = config
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "run".into());
                PathBuf::from("out").join(stem)
            });
            match mqsense::runner::run_config(&config, &out_dir, seed, threads) {
                Ok(manifest) => {
                    println!("wrote {}", manifest.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Validate { config } => match mqsense::runner::validate_config(&config) {
            Ok(cfg) => {
                println!("ok: {:?} pipeline", cfg.pipeline);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("invalid: {e}");
                ExitCode::FAILURE
            }
        },
        Command::Version => {
            println!("mqsense {}", mqsense::runner::artifact_version());
            ExitCode::SUCCESS
        }
    }
}
