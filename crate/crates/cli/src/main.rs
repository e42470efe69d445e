use std::path::PathBuf;
use std::process::ExitCode;

use bloch_cli::{parse_scenario, run_scenario, CliError, Method, Overrides, EXIT_FAILED};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bloch",
    version,
    about = "Open-system dynamics in the Bloch representation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a scenario file and write CSV output.
    Run {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        trajectories: Option<usize>,
    },
}

fn main() -> ExitCode {
    let Command::Run {
        scenario,
        method,
        out,
        seed,
        dt,
        order,
        trajectories,
    } = Cli::parse().command;
    let overrides = Overrides {
        method,
        seed,
        dt,
        order,
        trajectories,
    };
    match run(&scenario, &out, &overrides) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(path: &PathBuf, out: &PathBuf, overrides: &Overrides) -> Result<ExitCode, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let mut scenario = parse_scenario(&text).map_err(CliError::Scenario)?;
    overrides.apply(&mut scenario)?;
    let outcome = run_scenario(&scenario, out)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if let Some(report) = &outcome.report {
        print!("{report}");
    }
    Ok(if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    })
}
