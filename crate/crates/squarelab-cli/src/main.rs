//! squarelab: exact verification of dyadic square-function identities and
//! extremal-constant search, from the command line.
//!
//! Subcommands: verify, chi, eta, shift, tensor, wavelet, export. Results
//! go to stdout as a single JSON object; human diagnostics go to stderr.
//! Every computing subcommand appends an `ExperimentRecord` to the ledger.
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

mod commands;
mod config;
mod ledger;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::config::Config;

#[derive(Parser, Debug)]
#[command(name = "squarelab", version, about = "Exact dyadic square-function laboratory")]
pub struct Cli {
    /// Ledger file (JSON lines). Defaults to $SQUARELAB_LEDGER, then ./runs.jsonl.
    #[arg(long, global = true)]
    pub ledger: Option<PathBuf>,

    /// Flat `key = value` config file mirroring the flags; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run an invariant suite; exits 1 if any exact check fails.
    Verify(commands::VerifyArgs),
    /// Exact chi(p) coefficients, with the enumeration oracle cross-check.
    Chi(commands::ChiArgs),
    /// Extremal-set search for one of the four objectives.
    Eta(commands::EtaArgs),
    /// Haar shift energies of a 1D set.
    Shift(commands::ShiftArgs),
    /// Tensor shift energies of a 2D set.
    Tensor(commands::TensorArgs),
    /// Wavelet grid runs: Monte Carlo chi or the smooth square function.
    Wavelet(commands::WaveletArgs),
    /// Export the ledger as CSV or JSON.
    Export(commands::ExportArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version on stdout with success; usage errors
            // go to stderr with exit code 2.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    return ExitCode::SUCCESS;
                }
                _ => 2,
            };
            eprint!("{e}");
            return ExitCode::from(code);
        }
    };

    let config = match &cli.config {
        Some(path) => match Config::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        },
        None => Config::default(),
    };
    let ledger_path = ledger::resolve_path(cli.ledger.clone(), config.get_string("ledger"));

    let outcome = match &cli.command {
        Command::Verify(args) => commands::run_verify(args, &config, &ledger_path),
        Command::Chi(args) => commands::run_chi(args, &config, &ledger_path),
        Command::Eta(args) => commands::run_eta(args, &config, &ledger_path),
        Command::Shift(args) => commands::run_shift(args, &config, &ledger_path),
        Command::Tensor(args) => commands::run_tensor(args, &config, &ledger_path),
        Command::Wavelet(args) => commands::run_wavelet(args, &config, &ledger_path),
        Command::Export(args) => commands::run_export(args, &config, &ledger_path),
    };

    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
