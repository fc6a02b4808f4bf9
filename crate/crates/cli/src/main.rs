use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use opa_cli::{run, CliError, Command, DEFAULT_CONFIG};

#[derive(Parser)]
#[command(name = "opa-sim", version, about = "Cavity parametric amplifier spectra and scans")]
struct Args {
    #[command(subcommand)]
    command: Cmd,

    /// JSON configuration; the built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output CSV path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress warnings and notes on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Transmission spectrum with the seed at half the pump (degenerate).
    Spectrum1,
    /// Transmission spectrum with signal and idler (nondegenerate).
    Spectrum2,
    /// Time-domain hold, cavity-length or seed-frequency scan.
    Scan,
    /// Losses, decay rates and coupling from finesse and threshold.
    Calibrate,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cmd = match args.command {
        Cmd::Spectrum1 => Command::Spectrum1,
        Cmd::Spectrum2 => Command::Spectrum2,
        Cmd::Scan => Command::Scan,
        Cmd::Calibrate => Command::Calibrate,
    };
    match execute(cmd, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cmd: Command, args: &Args) -> Result<(), CliError> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?,
        None => DEFAULT_CONFIG.to_string(),
    };
    let mut buf = Vec::new();
    let mut diag: Box<dyn Write> = if args.quiet { Box::new(io::sink()) } else { Box::new(io::stderr()) };
    run(cmd, &text, &mut buf, &mut diag)?;
    match &args.out {
        Some(path) => fs::write(path, &buf)?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}
