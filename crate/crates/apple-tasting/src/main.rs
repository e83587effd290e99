//! Command-line harness for running apple-tasting experiments.

use apple_tasting::config::ExperimentConfig;
use apple_tasting::envs::{builtin_problem, ProblemId};
use apple_tasting::harness::{run_experiment, sweep, SweepAxis};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "apple-tasting",
    about = "Simulation harness for Bayesian apple-tasting policies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to the JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output` field).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Replication-count override.
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and persist its artifacts.
    Run(ConfigArgs),
    /// Run the experiment once per axis value and tabulate final regrets.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Sweep axis: dimension, gibbs-m or lambda.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values, e.g. 2,5,10,20.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Describe the builtin problems.
    ListProblems,
    /// Check a configuration file and report every offending field.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch() -> apple_tasting::Result<()> {
    match Cli::parse().command {
        Command::Run(args) => {
            let cfg = load(&args)?;
            let data = run_experiment(&cfg)?;
            print_summary_table(&data.summary);
            if let Some(dir) = &cfg.output {
                println!("artifacts written to {}", dir.display());
            }
            Ok(())
        }
        Command::Sweep {
            config,
            axis,
            values,
        } => {
            let cfg = load(&config)?;
            let axis: SweepAxis = axis.parse()?;
            let out = cfg.output.clone();
            let rows = sweep(&cfg, axis, &values, out.as_deref())?;
            println!(
                "{:<10} {:>8} {:<16} {:>12} {:>12} {:>14}",
                "axis", "value", "policy", "mean", "median", "mean/sqrt(d)"
            );
            for r in &rows {
                let scaled = r
                    .mean_over_sqrt_d
                    .map(|v| format!("{v:.3}"))
                    .unwrap_or_else(|| "-".into());
                println!(
                    "{:<10} {:>8} {:<16} {:>12.3} {:>12.3} {:>14}",
                    r.axis, r.value, r.policy, r.final_regret_mean, r.final_regret_median, scaled
                );
            }
            if let Some(dir) = out {
                println!("sweep table written to {}", dir.join("sweep.csv").display());
            }
            Ok(())
        }
        Command::ListProblems => {
            list_problems();
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            cfg.validate()?;
            println!("{}: ok", config.display());
            Ok(())
        }
    }
}

fn load(args: &ConfigArgs) -> apple_tasting::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = args.reps {
        cfg.reps = reps;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary_table(summary: &apple_tasting::harness::Summary) {
    println!(
        "problem {} | {} reps | seed {}",
        summary.problem, summary.reps, summary.seed
    );
    println!(
        "{:<20} {:>12} {:>12} {:>12} {:>10} {:>10} {:>10}",
        "policy", "regret q05", "median", "q95", "precision", "recall", "secs"
    );
    for p in &summary.policies {
        let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<20} {:>12.3} {:>12.3} {:>12.3} {:>10} {:>10} {:>10.1}",
            p.name,
            p.final_regret_q05,
            p.final_regret_median,
            p.final_regret_q95,
            fmt_opt(p.precision_mean),
            fmt_opt(p.recall_mean),
            p.runtime_seconds
        );
    }
}

fn list_problems() {
    for id in [ProblemId::I, ProblemId::Ii, ProblemId::Iii] {
        let spec = builtin_problem(id);
        let g = &spec.game;
        println!(
            "{}: d={}, T={}, l01={}, l11={}",
            id,
            g.dim(),
            g.horizon(),
            g.l01(),
            g.l11()
        );
        match id {
            ProblemId::I => println!(
                "   theta* ~ U[-1,1]^d per coordinate; contexts N(0, I)"
            ),
            ProblemId::Ii => println!(
                "   theta*_j ~ U[-1,1] w.p. 0.75 else 0; contexts N(0, 8I)"
            ),
            ProblemId::Iii => println!(
                "   theta* = 1; scalar Gaussian contexts, sd 0.025, mean drifting -0.1 -> 0"
            ),
        }
    }
}
