use std::path::PathBuf;
use std::process::ExitCode;

use advbound::clever::CleverPreset;
use advbound::evaluation::{EvaluationReport, RadiusPolicy};
use advbound::io::{run_attack, run_clever, run_evaluate, run_tradeoff, RunConfig, SecondChoice};
use advbound::NormKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::LevelFilter;

/// Upper and lower bounds on the minimal adversarial distance of a
/// ReLU classifier.
#[derive(Debug, Parser)]
#[command(name = "advbound", version)]
struct Cli {
    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Early-stopping attack plus the second attack; no CLEVER.
    Attack(Common),
    /// CLEVER scores at a fixed radius.
    Clever {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        radius: f64,
    },
    /// Attacks, then CLEVER at the largest distance found.
    Evaluate(Common),
    /// Mean distance and runtime as the step size is halved.
    Tradeoff {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        halvings: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Policy {
    Global,
    PerPoint,
}

#[derive(Debug, Args)]
struct Common {
    /// Model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Dataset CSV with a leading `label` column.
    #[arg(long)]
    data: PathBuf,
    /// 1, 2 or inf.
    #[arg(long, value_parser = parse_with::<NormKind>)]
    norm: NormKind,
    #[arg(long)]
    eps_step: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// auto, hsj, cw, ead, deepfool or none.
    #[arg(long, default_value = "auto", value_parser = parse_with::<SecondChoice>)]
    second: SecondChoice,
    /// Iterations of the second attack.
    #[arg(long)]
    second_iters: Option<usize>,
    /// Samples x batches: 5x5, 20x10, 100x50 or 1024x500.
    #[arg(long, default_value = "100x50", value_parser = parse_with::<CleverPreset>)]
    clever_preset: CleverPreset,
    #[arg(long, value_enum, default_value_t = Policy::Global)]
    radius_policy: Policy,
    /// Comma-separated budgets for adversarial accuracy.
    #[arg(long, value_delimiter = ',')]
    eps_grid: Option<Vec<f64>>,
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    /// Use only the first N rows.
    #[arg(long)]
    limit: Option<usize>,
}

fn parse_with<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

impl Common {
    fn into_config(self) -> RunConfig {
        let mut cfg = RunConfig::new(self.model, self.data, self.norm, self.seed, self.out);
        cfg.eps_step = self.eps_step;
        cfg.max_iters = self.max_iters;
        cfg.second = self.second;
        cfg.second_iterations = self.second_iters;
        cfg.clever_preset = self.clever_preset;
        cfg.radius_policy = match self.radius_policy {
            Policy::Global => RadiusPolicy::GlobalMax,
            Policy::PerPoint => RadiusPolicy::PerPoint,
        };
        cfg.eps_grid = self.eps_grid;
        cfg.workers = self.workers;
        cfg.limit = self.limit;
        cfg
    }
}

fn print_report(report: &EvaluationReport<f64>) {
    println!("records: {}", report.records.len());
    println!("mean adversarial distance: {:.6}", report.mean_adversarial_distance);
    println!("radius max: {:.6}", report.radius_max);
    for (eps, acc) in &report.adversarial_accuracy_at {
        println!("adversarial accuracy at {eps}: {acc:.4}");
    }
    if let Some(err) = report.clever_error_ratio {
        println!("clever error ratio: {err:.4}");
    }
    if report.all_attacks_failed {
        println!("warning: every attack failed, distances are the raw budget");
    }
}

fn run(cli: Cli) -> advbound::Result<()> {
    match cli.command {
        Command::Attack(common) => {
            let cfg = common.into_config();
            print_report(&run_attack(&cfg)?);
            println!("wrote {}", cfg.out.display());
        }
        Command::Evaluate(common) => {
            let cfg = common.into_config();
            print_report(&run_evaluate(&cfg)?);
            println!("wrote {}", cfg.out.display());
        }
        Command::Clever { common, radius } => {
            let cfg = common.into_config();
            let rows = run_clever(&cfg, radius)?;
            let scored: Vec<f64> = rows.iter().filter_map(|r| r.score).collect();
            println!("scored {} of {} rows", scored.len(), rows.len());
            if !scored.is_empty() {
                println!("mean clever score: {:.6}", scored.iter().sum::<f64>() / scored.len() as f64);
            }
            println!("wrote {}", cfg.out.join("clever.csv").display());
        }
        Command::Tradeoff {
            common,
            halvings,
            repeats,
        } => {
            let cfg = common.into_config();
            for r in run_tradeoff(&cfg, halvings, repeats)? {
                println!(
                    "eps_step {:.4e}  max_iters {}  mean {:.6}  runtime {:.4}s",
                    r.eps_step,
                    r.max_iters,
                    r.mean_distance,
                    r.runtime.as_secs_f64()
                );
            }
            println!("wrote {}", cfg.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
