use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use regime_scout_cli::commands::{self, Figure};
use regime_scout_cli::config::presets;
use regime_scout_cli::CliError;

#[derive(Parser)]
#[command(name = "regime-scout", version, about = "Map the response regimes of a dynamical system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the active-sampling exploration and write a run directory.
    Explore {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Suppress progress lines on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Integrate a single parameter point and write its time series.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated values, one per free axis.
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label an R x R grid with the brute-force ground truth.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a figure from a run directory as SVG.
    Plot {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum)]
        fig: Figure,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a bundled configuration (pendulum, lorenz or duffing).
    Preset { name: String },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("REGIME_SCOUT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("REGIME_SCOUT_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(CliError::runtime)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Explore { config, out, quiet } => {
            let report = commands::explore(&config, &out, !quiet)?;
            println!(
                "stopped ({}) after {} evaluations: {} regimes, max std {:.4}; wrote {}",
                report.stop_reason.as_str(),
                report.evaluations,
                report.n_regimes,
                report.max_std,
                out.display()
            );
        }
        Command::Simulate { config, theta, out } => commands::simulate(&config, &theta, &out)?,
        Command::Oracle { config, grid, out } => commands::oracle(&config, grid, &out)?,
        Command::Plot { run, fig, out } => commands::plot(&run, fig, &out)?,
        Command::Preset { name } => {
            let text = presets::by_name(&name)
                .ok_or_else(|| CliError::usage(format!("unknown preset {name:?}; try pendulum, lorenz or duffing")))?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
