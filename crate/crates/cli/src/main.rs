//! `qcs`: runs quantized compressive sensing sweeps and property checks.
//!
//! Exit codes: 0 success, 1 invalid input, 2 runtime failure,
//! 3 property-suite failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcs_core::harness::{
    emit_plot, read_csv, run_experiment, run_property_suite, summary, ExperimentConfig, RunOptions,
};
use qcs_core::{aggregate_trials, Error};

#[derive(Parser)]
#[command(
    name = "qcs",
    version,
    about = "Quantized compressive sensing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep from a config file or a preset.
    Run(RunArgs),
    /// Run the property suite.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Plot a CSV written by `run`.
    Plot { csv: PathBuf, out: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// Config file (`key = value` lines).
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["exp-a", "exp-b", "exp-c", "exp-d"])]
    preset: Option<String>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per grid point override.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Omit the generation-time line from the CSV.
    #[arg(long)]
    no_timestamp: bool,
    /// Skip the SVG plot.
    #[arg(long)]
    no_plot: bool,
    /// One operator and dither per grid point, shared by all trials.
    #[arg(long)]
    fixed_matrix: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

enum Failure {
    Invalid(String),
    Runtime(String),
    Property,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)
                .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => return Err(Failure::Invalid("give a config file or --preset".into())),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    cfg.fixed_matrix |= args.fixed_matrix;
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let cfg = load_config(&args)?;
    let opts = RunOptions {
        jobs: args.jobs,
        timestamp: !args.no_timestamp,
        out_dir: args.out_dir,
        plot: !args.no_plot,
    };
    let out = run_experiment(&cfg, &opts)?;
    print!("{}", summary(&out.sweep));
    println!("csv: {}", out.csv_path.display());
    if let Some(svg) = &out.svg_path {
        println!("svg: {}", svg.display());
    }
    let (s, p) = (out.support_violations(), out.projection_violations());
    if s + p > 0 {
        return Err(Failure::Runtime(format!(
            "{s} support-step and {p} projection-bound violations"
        )));
    }
    Ok(())
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run(args) => run(args),
        Command::Check { seed } => {
            let report = run_property_suite(seed)?;
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Property)
            }
        }
        Command::Plot { csv, out } => {
            let records = read_csv(&csv)?;
            let sweep = aggregate_trials(&records, None)?;
            emit_plot(&sweep, &out)?;
            println!("svg: {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Property) => ExitCode::from(3),
    }
}
