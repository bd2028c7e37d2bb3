use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use vesselkit_cli::{load_config, run, scenarios, write_outcome, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "vesselkit", version, about = "Run vessel, Schur-step and interpolation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write report.json plus CSV curves.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the grid step count.
        #[arg(long)]
        steps: Option<usize>,
        /// Override the sampling seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the built-in fixtures as JSON.
    Fixtures,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("VESSELKIT_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::ConfigInvalid(format!("VESSELKIT_THREADS = {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::ConfigInvalid(e.to_string()))
}

fn main_inner(cli: Cli) -> Result<bool, CliError> {
    init_threads()?;
    match cli.command {
        Command::Run { config, out, steps, seed } => {
            let scenario = load_config(&config)?;
            let outcome = run(&scenario, &RunOptions { steps, seed })?;
            write_outcome(&outcome, &out)?;
            for c in outcome.checks.0.iter().filter(|c| !c.pass) {
                eprintln!("check {} failed: {:e} ({} {:e})", c.name, c.value, c.relation, c.threshold);
            }
            println!("{}: {}", scenario.name(), if outcome.passed() { "pass" } else { "FAIL" });
            Ok(outcome.passed())
        }
        Command::Fixtures => {
            let v = scenarios::fixtures_json()?;
            println!("{}", serde_json::to_string_pretty(&v).expect("serializable fixtures"));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
