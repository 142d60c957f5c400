use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qfi_lab::error::CliError;

/// Quantum Fisher information experiments: modulation protocol and Ramsey estimation.
#[derive(Parser)]
#[command(name = "qfi-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.dir` and QFI_LAB_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the data behind one figure: 2b 2c 2d 3a 3b 3c 3d 4a 4b.
    Reproduce {
        figure: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and print it with every default filled in.
    Validate { config: PathBuf },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => qfi_lab::run_file(&config, out.as_deref()),
        Command::Reproduce { figure, seed, out } => {
            qfi_lab::reproduce(&figure, seed, out.as_deref())
        }
        Command::Validate { config } => {
            return match qfi_lab::validate_file(&config) {
                Ok(v) => {
                    print!("{}", qfi_lab::output::render_json(&v));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            };
        }
    };
    match result {
        Ok(a) => {
            for p in a.csv.iter().chain([&a.manifest, &a.log]) {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
