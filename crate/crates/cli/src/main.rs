//! `channel-stab`: command-line front end for the channel-flow
//! stability toolkit. Subcommands map one-to-one onto the library
//! workflows; every run echoes its effective configuration next to its
//! artifacts so results can be reproduced byte-for-byte.

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "channel-stab",
    version,
    about = "Spectral stability toolkit for 2-D plane Poiseuille flow with Navier-slip walls"
)]
pub struct Cli {
    /// Root directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub output_dir: PathBuf,

    /// Campaign name; artifacts land under <output-dir>/<campaign>/<subcommand>/.
    #[arg(long, global = true, default_value = "default")]
    pub campaign: String,

    /// error | warn | info | debug
    #[arg(long, global = true, default_value = "info")]
    pub log_level: String,

    /// Worker threads (default: CHANNEL_STAB_THREADS or all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Base RNG seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// JSON config for the subcommand payload; flags override file values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overwrite existing artifacts.
    #[arg(long, global = true)]
    pub force: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Resolvent-inequality sweep over (nu, k, lambda).
    Resolvent(commands::ResolventArgs),
    /// Linear evolution with space-time estimate verification.
    Evolve(commands::EvolveArgs),
    /// Nonlinear perturbation run with energy functional and outcome.
    Simulate(commands::SimulateArgs),
    /// Amplitude-threshold campaign (bisection per viscosity).
    Scan(commands::ScanArgs),
    /// Fit the threshold exponent from a campaign report.
    Fit(commands::FitArgs),
    /// Aggregate existing artifacts into a summary with plots.
    Report(commands::ReportArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    return ExitCode::SUCCESS;
                }
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();

    #[cfg(feature = "parallel")]
    {
        let threads = cli
            .threads
            .or_else(|| {
                std::env::var("CHANNEL_STAB_THREADS")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .unwrap_or(0);
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }

    match commands::dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                channel_stab_core::Error::InvalidArgument(_) => 64,
                channel_stab_core::Error::MissingInput(_) => 66,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
