use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use driftfree_cli::{run, CliError, Overrides, Scenario, Task};

#[derive(Parser)]
#[command(
    name = "driftfree",
    version,
    about = "Drift-free control systems on nilpotent Lie groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Group-path and ODE-oracle trajectories of a model.
    Simulate(Common),
    /// Wei–Norman coordinates and the quadrature plan.
    Wn(Common),
    /// Reduction through the quotient by the centre.
    Reduce(Common),
    /// Rank of a family of vector fields at sample points.
    Rank(Common),
    /// Closure of a family of vector fields under brackets.
    Close(Common),
    /// Self-checks for one model.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Write the table or report here instead of standard output.
    #[arg(long)]
    out: Option<String>,
    /// Override both the ODE and quadrature tolerances.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for randomized checks and sample points.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(task: Task, args: Common) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let scenario: Scenario = text.parse()?;
    let overrides = Overrides {
        out: args.out,
        tol: args.tol,
        seed: args.seed,
    };
    let outcome = run(task, scenario, &overrides)?;
    match &outcome.out {
        Some(path) => {
            std::fs::write(path, &outcome.body)?;
            for line in &outcome.summary {
                println!("{line}");
            }
        }
        None => print!("{}", outcome.body),
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = match cli.command {
        Command::Simulate(a) => (Task::Simulate, a),
        Command::Wn(a) => (Task::Wn, a),
        Command::Reduce(a) => (Task::Reduce, a),
        Command::Rank(a) => (Task::Rank, a),
        Command::Close(a) => (Task::Close, a),
        Command::Verify(a) => (Task::Verify, a),
    };
    match execute(task, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("driftfree: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
