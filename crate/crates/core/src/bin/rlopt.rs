//! Command-line front end for the hyper-parameter tuning framework.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use rlopt::agent::HyperParams;
use rlopt::harness::{
    self, aggregate_curves, bandit_sweep, run_batch, Algorithm, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "rlopt", version, about = "Bayesian tuning of SARSA(λ) agents on a gridworld")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// TOML configuration file; defaults apply for every omitted key.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the base seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the grid layout file from the config.
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Ad-hoc config overrides, e.g. --set episodes_bo=15 --set bandit.policy="softmax".
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Directory for CSV artifacts and the manifest.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Bayesian optimizer batch and write runs.csv/curves.csv.
    Optimize(CommonOpts),
    /// Run the random-search baseline batch with the same artifacts.
    RandomSearch(CommonOpts),
    /// Optimize, then replay the best θ and the fixed reference θ head-to-head.
    ReplayBest {
        #[command(flatten)]
        common: CommonOpts,
        /// Fresh agents per θ during the replay.
        #[arg(long, default_value_t = 20)]
        repetitions: u32,
    },
    /// Compare bandit stop/resample policies and write sweep.csv.
    BanditSweep(CommonOpts),
    /// Parse and validate a configuration, printing the resolved form.
    ValidateConfig(CommonOpts),
}

fn load(common: &CommonOpts) -> Result<ExperimentConfig> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("reading config `{}`", path.display()))?,
        None => String::new(),
    };
    let mut config = harness::parse_config(&text, &common.sets)?;
    if let Some(seed) = common.seed {
        config.base_seed = seed;
    }
    if let Some(layout) = &common.layout {
        config.layout_path = layout.display().to_string();
    }
    config.validate()?;
    Ok(config)
}

fn write_batch_artifacts(config: &ExperimentConfig, common: &CommonOpts) -> Result<()> {
    let started = Instant::now();
    let runs = run_batch(config)?;
    let stats = aggregate_curves(&runs)?;
    let wall = started.elapsed().as_secs_f64();
    harness::write_artifact(&common.out_dir, "runs.csv", &harness::runs_csv(&runs))?;
    harness::write_artifact(&common.out_dir, "curves.csv", &harness::curves_csv(&stats))?;
    harness::write_artifact(&common.out_dir, "manifest.toml", &harness::manifest(config, wall))?;
    let last = stats.last().expect("non-empty batch");
    println!(
        "{} executions, final best {} = {:.4} ± {:.4} ({:.1}s)",
        runs.len(),
        config.metric.name(),
        last.mean,
        last.ci95_half_width,
        wall
    );
    println!("artifacts written to {}", common.out_dir.display());
    Ok(())
}

fn cmd_replay_best(common: &CommonOpts, repetitions: u32) -> Result<()> {
    let config = load(common)?;
    let spec = config.load_layout()?;
    let started = Instant::now();
    let runs = run_batch(&config)?;
    let best = runs
        .iter()
        .max_by(|a, b| {
            let (x, y) = match config.metric.direction() {
                rlopt::Direction::Maximize => (a.best_value, b.best_value),
                rlopt::Direction::Minimize => (b.best_value, a.best_value),
            };
            x.partial_cmp(&y).expect("finite objective")
        })
        .expect("non-empty batch");
    let trace = config.trace_variant.into();
    let replay_seed = config.base_seed.wrapping_mul(31).wrapping_add(1);
    let tuned = harness::replay_theta(
        &spec,
        "tuned",
        best.best_theta,
        repetitions,
        config.episodes_a,
        config.cutoff,
        trace,
        replay_seed,
    );
    let reference = harness::replay_theta(
        &spec,
        "reference",
        HyperParams::soar_default(),
        repetitions,
        config.episodes_a,
        config.cutoff,
        trace,
        replay_seed,
    );
    let wall = started.elapsed().as_secs_f64();
    harness::write_artifact(
        &common.out_dir,
        "replay.csv",
        &harness::replay_csv(&[tuned.clone(), reference.clone()]),
    )?;
    harness::write_artifact(&common.out_dir, "manifest.toml", &harness::manifest(&config, wall))?;
    let [a, e, g, l] = best.best_theta.as_array();
    println!("tuned θ = ({a:.4}, {e:.4}, {g:.4}, {l:.4})");
    println!(
        "tuned:     success {:.4}, steps {:.2}",
        tuned.overall_success, tuned.overall_steps
    );
    println!(
        "reference: success {:.4}, steps {:.2}",
        reference.overall_success, reference.overall_steps
    );
    println!("artifacts written to {}", common.out_dir.display());
    Ok(())
}

fn cmd_bandit_sweep(common: &CommonOpts) -> Result<()> {
    let config = load(common)?;
    let started = Instant::now();
    let rows = bandit_sweep(&config)?;
    let wall = started.elapsed().as_secs_f64();
    harness::write_artifact(&common.out_dir, "sweep.csv", &harness::sweep_csv(&rows))?;
    harness::write_artifact(&common.out_dir, "manifest.toml", &harness::manifest(&config, wall))?;
    for r in &rows {
        println!(
            "{:<10} queries {:>7.2}  reduction {:>6.2}%  final {:.4} ± {:.4}",
            r.policy, r.avg_queries, r.query_reduction_pct, r.final_best_mean, r.final_best_std
        );
    }
    println!("artifacts written to {}", common.out_dir.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Optimize(common) => {
            let mut config = load(&common)?;
            config.algorithm = Algorithm::Bo;
            write_batch_artifacts(&config, &common)
        }
        Command::RandomSearch(common) => {
            let mut config = load(&common)?;
            config.algorithm = Algorithm::RandomSearch;
            write_batch_artifacts(&config, &common)
        }
        Command::ReplayBest { common, repetitions } => cmd_replay_best(&common, repetitions),
        Command::BanditSweep(common) => cmd_bandit_sweep(&common),
        Command::ValidateConfig(common) => {
            let config = load(&common)?;
            config.load_layout()?;
            print!("{}", config.to_toml());
            Ok(())
        }
    }
}
