use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rnls_core::io::RunConfig;
use rnls_ground::{bench, load_config, method_name, output_override, relation, solve, sweep, CliError};

/// Action ground states of the rotating nonlinear Schrödinger equation.
#[derive(Parser)]
#[command(name = "rnls-ground", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one ground state.
    Solve(RunArgs),
    /// Solve from every seed in `sweep.seeds` and keep the smallest action.
    Sweep(RunArgs),
    /// Compare the action ground state with the energy ground state of equal mass.
    Relation(RunArgs),
    /// Iterations and timings per method and angular velocity.
    Bench(RunArgs),
    /// Print the configuration reference with all defaults.
    Defaults,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory (overrides output.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// gfalm | pbb | pcg
    #[arg(long)]
    method: Option<String>,
    /// Frequency omega.
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<f64>,
    /// Angular velocity Omega.
    #[arg(long = "Omega", allow_hyphen_values = true)]
    rotation: Option<f64>,
    /// Extra `table.key=value` settings, applied last.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut overrides = Vec::new();
        if let Some(dir) = &self.out {
            overrides.push(output_override(dir));
        }
        if let Some(m) = &self.method {
            let method: rnls_core::solver::Method =
                m.parse().map_err(|e: rnls_core::Error| CliError::Config(e.to_string()))?;
            overrides.push(format!("solver.method=\"{}\"", method_name(method)));
        }
        if let Some(w) = self.omega {
            overrides.push(format!("problem.omega={w:?}"));
        }
        if let Some(r) = self.rotation {
            overrides.push(format!("problem.rotation={r:?}"));
        }
        overrides.extend(self.overrides.iter().cloned());
        load_config(&self.config, &overrides)
    }
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Defaults => print!("{}", RunConfig::reference()),
        Command::Solve(args) => print_json(&solve(&args.load()?)?),
        Command::Sweep(args) => print_json(&sweep(&args.load()?)?),
        Command::Relation(args) => print_json(&relation(&args.load()?)?),
        Command::Bench(args) => {
            let rows = bench(&args.load()?)?;
            println!("{:<6} {:>6} {:>9} {:>10} {:>18} {:>10} {:>10}", "method", "Omega", "iter", "CPU(s)", "S", "E_err", "r_err");
            for r in rows {
                println!(
                    "{:<6} {:>6} {:>9} {:>10.2} {:>18.10} {:>10.2e} {:>10.2e}",
                    method_name(r.method),
                    r.rotation,
                    r.iterations,
                    r.cpu_seconds,
                    r.action,
                    r.energy_error,
                    r.residual
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RNLS_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rnls-ground: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
