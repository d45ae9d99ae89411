use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use qnslab::sim::EvolutionPath;
use qnslab_cli::{commands, CliResult, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "qnslab", version, about = "Noise spectroscopy with engineered non-Gaussian dephasing noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Noise realizations per sequence (or per detuning / power).
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Shots per realization and axis; 0 records exact expectations.
    #[arg(long, global = true)]
    shots: Option<u64>,
    #[arg(long, global = true, value_enum)]
    path: Option<PathArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep p0 with a 2-pulse CPMG and report the χ and φ power laws.
    ValidatePower,
    /// On/off Ramsey scans and the noise-mean estimate.
    EstimateMean,
    /// Reconstruct the PSD at the comb harmonics.
    EstimatePsd,
    /// Reconstruct the bispectrum on the principal-domain grid.
    EstimateBispectrum,
    /// L-curve tables for the bispectrum system.
    LCurve,
    /// Merge all stage outputs into report.json.
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Fast,
    Ode,
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply_env()?;
    cfg.apply(&Overrides {
        seed: cli.seed,
        out_dir: cli.out,
        samples: cli.samples,
        shots: cli.shots,
        path: cli.path.map(|p| match p {
            PathArg::Fast => EvolutionPath::Fast,
            PathArg::Ode => EvolutionPath::Ode,
        }),
    });
    cfg.validate()?;
    match cli.command {
        Command::ValidatePower => commands::validate_power(&cfg).map(drop),
        Command::EstimateMean => commands::estimate_mean(&cfg).map(drop),
        Command::EstimatePsd => commands::estimate_psd(&cfg).map(drop),
        Command::EstimateBispectrum => commands::estimate_bispectrum(&cfg).map(drop),
        Command::LCurve => commands::l_curve(&cfg).map(drop),
        Command::Report => commands::report(&cfg).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(cli) {
        Ok(()) => {
            eprintln!("[qnslab] done in {:.1} s", start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qnslab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
