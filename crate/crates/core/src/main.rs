use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use cmcg_core::experiment::{self, exit_code, ExperimentConfig, SolverKind};
use cmcg_core::Error;

#[derive(Parser)]
#[command(name = "cmcg", version, about = "Time-harmonic Maxwell solver by controllability and conjugate gradients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments from JSON configs (or preset names).
    Run {
        #[arg(required = true)]
        configs: Vec<String>,
        /// Each run writes into <DIR>/<name>.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the simulated-period budget.
        #[arg(long)]
        max_periods: Option<usize>,
        /// Override the CG relative residual target.
        #[arg(long)]
        tol: Option<f64>,
        /// Override the solver (cmcg, fw, fs).
        #[arg(long, value_parser = parse_solver)]
        solver: Option<SolverKind>,
        /// Number of runs executed concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// List the preset configurations, or write them as JSON files.
    Presets {
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown solver {s:?} (expected cmcg, fw or fs)"))
}

fn load(arg: &str) -> Result<ExperimentConfig, Error> {
    let path = PathBuf::from(arg);
    if !path.exists() {
        if let Some(c) = experiment::preset(arg) {
            return Ok(c);
        }
    }
    ExperimentConfig::load(&path)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets { write } => {
            for c in experiment::presets() {
                match &write {
                    Some(dir) => {
                        let path = dir.join(format!("{}.json", c.name));
                        if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, c.to_json())) {
                            eprintln!("error: {}: {e}", path.display());
                            return ExitCode::from(1);
                        }
                        println!("{}", path.display());
                    }
                    None => println!(
                        "{:<16} {:<10} q={} periods={} mesh={}",
                        c.name,
                        c.experiment.name(),
                        c.degree,
                        c.max_periods,
                        serde_json::to_string(&c.mesh).unwrap_or_default()
                    ),
                }
            }
            ExitCode::SUCCESS
        }
        Command::Run { configs, output_dir, max_periods, tol, solver, jobs } => {
            let run_one = |arg: &String| -> i32 {
                let mut config = match load(arg) {
                    Ok(c) => c,
                    Err(e) => {
                        eprintln!("error: {arg}: {e}");
                        return exit_code(&e);
                    }
                };
                if let Some(n) = max_periods {
                    config.max_periods = n;
                }
                if let Some(t) = tol {
                    config.tolerance = t;
                }
                if let Some(s) = solver {
                    config.solver = s;
                }
                let out = match (&output_dir, &config.output_dir) {
                    (Some(d), _) => d.join(&config.name),
                    (None, Some(d)) => d.clone(),
                    (None, None) => PathBuf::from("output").join(&config.name),
                };
                if let Err(e) = config.validate() {
                    eprintln!("error: {}: {e}", config.name);
                    return exit_code(&e);
                }
                match experiment::run_experiment(&config, &out) {
                    Ok(s) => {
                        let n = s.history.last().map_or(0, |r| r.periods);
                        println!(
                            "{}: solver={:?} dofs={} steps/period={} N={} err={:.6e}{} -> {}",
                            s.name,
                            s.solver,
                            s.ndofs,
                            s.steps_per_period,
                            n,
                            s.final_error,
                            s.converged.map_or(String::new(), |c| format!(" converged={c}")),
                            s.output_dir.display()
                        );
                        0
                    }
                    Err(e) => {
                        eprintln!("error: {}: {e}", config.name);
                        exit_code(&e)
                    }
                }
            };
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let codes: Vec<i32> = if jobs > 1 {
                pool.install(|| configs.par_iter().map(run_one).collect())
            } else {
                configs.iter().map(run_one).collect()
            };
            ExitCode::from(codes.into_iter().max().unwrap_or(0) as u8)
        }
    }
}
