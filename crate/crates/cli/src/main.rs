use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dyknet_core::config::load_config;
use dyknet_core::metrics::{optimality_residual, solve_centralized};
use dyknet_core::scheduler::format_trace;
use dyknet_core::{
    preset_paper_sec4, run_experiment, ExperimentConfig, ExperimentError, Treatment,
};

#[derive(Parser)]
#[command(
    name = "dyknet",
    version,
    about = "Distributed dual optimization simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and emit per-round (or per-event) metrics as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; defaults to the config's `output`, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the schedule seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        p_deliver: Option<f64>,
        /// Also write the executed event sequence as a trace file.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Write a built-in experiment config.
    Preset {
        #[arg(value_enum)]
        name: PresetName,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        p_deliver: Option<f64>,
        /// Destination; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a config, including strong connectivity of the graph.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the centralized reference solution.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetName {
    /// Six nodes on two directed cycles sharing one node, optimum at all ones.
    #[value(alias = "two-cycle")]
    PaperSec4,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Prox,
    Subdiff,
}

fn write_file(path: &Path, text: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, text).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn base_dir(config: &Path) -> &Path {
    config.parent().unwrap_or_else(|| Path::new("."))
}

fn load(path: &Path) -> Result<ExperimentConfig, ExperimentError> {
    Ok(load_config(path)?)
}

fn execute(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::Run {
            config: path,
            out,
            seed,
            rounds,
            p_deliver,
            trace_out,
        } => {
            let mut config = load(&path)?;
            if let Some(seed) = seed {
                config.schedule.seed = seed;
            }
            if let Some(rounds) = rounds {
                config.rounds = rounds;
            }
            if let Some(p) = p_deliver {
                config.schedule.p_deliver = p;
            }
            let report = run_experiment(&config, base_dir(&path))?;
            if let Some(trace) = trace_out {
                write_file(&trace, &format_trace(&report.log.rounds))?;
            }
            match out.or(config.output.clone()) {
                Some(dest) => {
                    write_file(&dest, &report.csv)?;
                    println!("{}", report.summary);
                }
                None => {
                    print!("{}", report.csv);
                    eprintln!("{}", report.summary);
                }
            }
        }
        Command::Preset {
            name: PresetName::PaperSec4,
            mode,
            seed,
            p_deliver,
            out,
        } => {
            let treatment = match mode {
                Mode::Prox => Treatment::Proximable,
                Mode::Subdiff => Treatment::Subdifferentiable,
            };
            let mut config = preset_paper_sec4(seed, treatment);
            if let Some(p) = p_deliver {
                config.schedule.p_deliver = p;
            }
            config.validate()?;
            match out {
                Some(dest) => write_file(&dest, &config.to_json())?,
                None => print!("{}", config.to_json()),
            }
        }
        Command::Check { config: path } => {
            let config = load(&path)?;
            let topology = config.topology()?;
            config.policy(base_dir(&path))?;
            println!(
                "ok: {} nodes, {} edges, dimension {}",
                topology.node_count(),
                topology.edge_count(),
                config.dimension
            );
        }
        Command::Solve { config: path } => {
            let config = load(&path)?;
            let problem = config.problem()?;
            let reference = solve_centralized(&problem).map_err(|e| {
                ExperimentError::Simulation(dyknet_core::scheduler::RunError::Reference(e))
            })?;
            let residual = optimality_residual(&problem, &reference.x_star).map_err(|e| {
                ExperimentError::Simulation(dyknet_core::scheduler::RunError::Reference(e))
            })?;
            let x: Vec<String> = reference
                .x_star
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect();
            println!("x_star = [{}]", x.join(", "));
            println!("primal_value = {:.16e}", reference.primal_value);
            println!("optimality_residual = {residual:.3e}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
