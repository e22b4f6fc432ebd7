//! `srbgrad`: experiment driver for SRB density-gradient estimation.

use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::Flags;

#[derive(Parser)]
#[command(
    name = "srbgrad",
    version,
    about = "Density gradients of SRB measures along chaotic orbits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lyapunov spectrum (JSON)
    Le(Flags),
    /// Per-step density gradient along one orbit (CSV)
    DensityGradient(Flags),
    /// Distance between two gradient recursions with different frames (CSV)
    Convergence(Flags),
    /// Both sides of the integration-by-parts identity (JSON)
    McIntegrate(Flags),
    /// Empirical SRB histogram (text)
    Histogram(Flags),
    /// PDF of the stable/unstable angle measure (CSV plus JSON summary)
    Hyperbolicity(Flags),
    /// Binned gradient of a one-dimensional map (CSV)
    #[command(name = "appendix-1d")]
    Appendix1d(Flags),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Le(f) => commands::le(f),
        Command::DensityGradient(f) => commands::density_gradient(f),
        Command::Convergence(f) => commands::convergence(f),
        Command::McIntegrate(f) => commands::mc_integrate(f),
        Command::Histogram(f) => commands::histogram(f),
        Command::Hyperbolicity(f) => commands::hyperbolicity(f),
        Command::Appendix1d(f) => commands::appendix_1d(f),
    };
    if let Err(e) = result {
        eprintln!("srbgrad: {e}");
        std::process::exit(e.exit_code());
    }
}
