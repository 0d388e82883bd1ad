//! `photonic-cz`: experiment runner for the heralded controlled-phase gates.
//!
//! Exit status: 0 on success, 2 on usage or configuration errors, 1 when an
//! optimization is infeasible, a verification fails or a run errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::GateName;
use config::{Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "photonic-cz",
    version,
    about = "Heralded photonic controlled-phase gate experiments"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Average success of both gates, intrinsic and with heralded ancillas.
    Tables,
    /// t1, t2 along the constraint curve.
    Fig5,
    /// r2·r3 along the constraint curve.
    Fig6,
    /// Success surface over real amplitudes.
    Fig7,
    /// Success surface with imaginary |1> amplitudes.
    Fig8,
    /// Average fidelity against detector efficiency.
    Fig9,
    /// Search NS gate parameters for a phase.
    OptimizeNs,
    /// Search destructive gate parameters for a phase.
    OptimizeDcz,
    /// Success of the N-path gate for N = 1..4.
    Npath,
    /// Run a circuit document and print the heralded output.
    Simulate { circuit: PathBuf },
    /// Write a gate as a circuit document.
    Gate {
        #[arg(value_enum)]
        name: GateName,
        /// Number of paths for the N-path gate.
        #[arg(long, default_value_t = 2)]
        paths: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::resolve(&cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Tables => commands::tables(&cfg),
        Command::Fig5 => commands::fig5(&cfg),
        Command::Fig6 => commands::fig6(&cfg),
        Command::Fig7 => commands::fig7(&cfg),
        Command::Fig8 => commands::fig8(&cfg),
        Command::Fig9 => commands::fig9(&cfg),
        Command::OptimizeNs => commands::optimize_ns(&cfg),
        Command::OptimizeDcz => commands::optimize_dcz(&cfg),
        Command::Npath => commands::npath(&cfg),
        Command::Simulate { circuit } => commands::simulate(&cfg, circuit).map(|(paths, out)| {
            print!("{out}");
            paths
        }),
        Command::Gate { name, paths } => commands::gate(&cfg, *name, *paths),
    };
    match result {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
