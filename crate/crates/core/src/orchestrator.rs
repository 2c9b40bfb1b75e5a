//! The meta-episode loop: propose θ, evaluate it as a batch of RL
//! episodes (re-queried under bandit control), grow the surrogate dataset
//! and repeat. Also hosts the metric definitions, the objective
//! standardization and the random-search baseline.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::acquisition::{self, AcquisitionConfig};
use crate::agent::{self, HyperParams, TraceKind};
use crate::bandit::{self, BanditPolicy, QoState};
use crate::env::GridSpec;
use crate::gp::{fit, GpDataset, GpError, KernelParams};
use crate::stats::{mean, sample_std};
use crate::Direction;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("metric over an empty episode list")]
    EmptyEpisodeList,
    #[error("optimizer budget must be at least one meta-episode")]
    ZeroBudget,
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Bandit(#[from] bandit::BanditError),
    #[error(transparent)]
    Agent(#[from] agent::AgentError),
}

/// The two performance metrics; each is bound to its direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SuccessRate,
    StepsPerEpisode,
}

impl Metric {
    pub fn direction(self) -> Direction {
        match self {
            Metric::SuccessRate => Direction::Maximize,
            Metric::StepsPerEpisode => Direction::Minimize,
        }
    }

    pub fn evaluate(self, results: &[agent::EpisodeResult]) -> Result<f64, RunError> {
        match self {
            Metric::SuccessRate => metric_success(results),
            Metric::StepsPerEpisode => metric_steps(results),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::SuccessRate => "success_rate",
            Metric::StepsPerEpisode => "steps_per_episode",
        }
    }
}

/// Fraction of successful episodes, in [0, 1].
pub fn metric_success(results: &[agent::EpisodeResult]) -> Result<f64, RunError> {
    if results.is_empty() {
        return Err(RunError::EmptyEpisodeList);
    }
    Ok(results.iter().filter(|r| r.success).count() as f64 / results.len() as f64)
}

/// Average steps per episode; cutoff counted in full for failures.
pub fn metric_steps(results: &[agent::EpisodeResult]) -> Result<f64, RunError> {
    if results.is_empty() {
        return Err(RunError::EmptyEpisodeList);
    }
    Ok(results.iter().map(|r| r.steps as f64).sum::<f64>() / results.len() as f64)
}

/// Standardize the raw objective values (mean 0, sample std 1, std floor
/// 1e-9) and negate for minimization, so downstream acquisition always
/// maximizes and the constant-zero GP prior mean is sensible.
pub fn y_transform(raw_values: &[f64], direction: Direction) -> Vec<f64> {
    let m = mean(raw_values);
    let s = sample_std(raw_values).max(1e-9);
    let sign = match direction {
        Direction::Maximize => 1.0,
        Direction::Minimize => -1.0,
    };
    raw_values.iter().map(|v| sign * (v - m) / s).collect()
}

/// One evaluated meta-episode: a θ with its per-query metric averages.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaEpisodeRecord {
    pub theta: HyperParams,
    pub query_values: Vec<f64>,
    pub f_avg: f64,
    pub query_count: u32,
    pub episodes_per_query: u32,
}

/// A full optimizer execution.
#[derive(Debug, Clone)]
pub struct OptimizerRun {
    pub records: Vec<MetaEpisodeRecord>,
    /// Running optimum of f_avg per meta-episode (monotone).
    pub best_curve: Vec<f64>,
    pub best_theta: HyperParams,
    pub best_value: f64,
    pub total_queries: u64,
    pub seed: u64,
    pub wall_time: Duration,
}

/// Everything one optimizer execution needs besides the layout and seed.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub metric: Metric,
    pub episodes_bo: u32,
    pub episodes_a: u32,
    pub cutoff: u32,
    pub min_runs: u32,
    pub max_runs: u32,
    /// None disables the bandit layer: every θ is queried exactly
    /// `max_runs` times (the fixed-k protocol).
    pub bandit_policy: Option<BanditPolicy>,
    pub kernel: KernelParams,
    pub init_lh: u32,
    pub acquisition: AcquisitionConfig,
    pub trace_kind: TraceKind,
    /// Observations imported from a previous execution, if any.
    pub prior_data: Vec<(HyperParams, f64)>,
}

impl RunConfig {
    pub fn defaults(metric: Metric) -> Self {
        RunConfig {
            metric,
            episodes_bo: 30,
            episodes_a: 50,
            cutoff: 400,
            min_runs: 2,
            max_runs: 5,
            bandit_policy: None,
            kernel: KernelParams::tuning_default(),
            init_lh: 0,
            acquisition: AcquisitionConfig::default(),
            trace_kind: TraceKind::Accumulating,
            prior_data: Vec::new(),
        }
    }
}

/// Evaluate one θ: repeated fresh-agent queries of `episodes_a` episodes,
/// re-query decisions delegated to the bandit, metric averaged over the
/// queries. The environment's obstacle schedule is keyed to the episode
/// index within each query.
#[allow(clippy::too_many_arguments)]
pub fn run_meta_episode<R: Rng>(
    theta: HyperParams,
    spec: &GridSpec,
    config: &RunConfig,
    qo: &mut QoState,
    prior_averages: &[f64],
    rng: &mut R,
) -> Result<MetaEpisodeRecord, RunError> {
    assert!(config.episodes_a >= 1);
    let mut query_values = Vec::new();
    loop {
        let (mut q, mut e) = agent::init_agent(spec);
        let mut results = Vec::with_capacity(config.episodes_a as usize);
        for ep in 0..config.episodes_a {
            results.push(agent::run_episode(
                spec,
                &mut q,
                &mut e,
                &theta,
                ep,
                config.cutoff,
                config.trace_kind,
                rng,
            ));
        }
        query_values.push(config.metric.evaluate(&results)?);

        let again = match config.bandit_policy {
            Some(policy) => bandit::decide_if_next_query(
                &query_values,
                prior_averages,
                qo,
                policy,
                config.min_runs,
                config.max_runs,
                config.metric.direction(),
                rng,
            )?,
            None => (query_values.len() as u32) < config.max_runs,
        };
        if !again {
            break;
        }
    }
    let f_avg = mean(&query_values);
    Ok(MetaEpisodeRecord {
        theta,
        query_count: query_values.len() as u32,
        query_values,
        f_avg,
        episodes_per_query: config.episodes_a,
    })
}

fn finish_run(
    records: Vec<MetaEpisodeRecord>,
    direction: Direction,
    seed: u64,
    started: Instant,
) -> OptimizerRun {
    let mut best_curve = Vec::with_capacity(records.len());
    let mut best_value = match direction {
        Direction::Maximize => f64::NEG_INFINITY,
        Direction::Minimize => f64::INFINITY,
    };
    let mut best_theta = records[0].theta;
    for rec in &records {
        if direction.at_least_as_good(rec.f_avg, best_value) && rec.f_avg != best_value {
            best_value = rec.f_avg;
            best_theta = rec.theta;
        }
        best_curve.push(best_value);
    }
    let total_queries = records.iter().map(|r| r.query_count as u64).sum();
    OptimizerRun {
        records,
        best_curve,
        best_theta,
        best_value,
        total_queries,
        seed,
        wall_time: started.elapsed(),
    }
}

fn theta_from_unit_box(v: &[f64]) -> HyperParams {
    HyperParams::from_array([
        v[0].clamp(0.0, 1.0),
        v[1].clamp(0.0, 1.0),
        v[2].clamp(0.0, 1.0),
        v[3].clamp(0.0, 1.0),
    ])
    .expect("clamped components are in range")
}

/// Full Bayesian-optimization execution.
///
/// Optionally seeds the dataset with `init_lh` Latin-hypercube points
/// (skipped when prior data is supplied), then runs `episodes_bo`
/// meta-episodes of fit → propose → evaluate → append.
pub fn run_optimizer(
    config: &RunConfig,
    spec: &GridSpec,
    seed: u64,
) -> Result<OptimizerRun, RunError> {
    run_impl(config, spec, seed, false)
}

/// Random-search baseline: identical protocol and query accounting, but θ
/// is drawn uniformly from the unit box instead of via the surrogate.
pub fn run_random_search(
    config: &RunConfig,
    spec: &GridSpec,
    seed: u64,
) -> Result<OptimizerRun, RunError> {
    run_impl(config, spec, seed, true)
}

fn run_impl(
    config: &RunConfig,
    spec: &GridSpec,
    seed: u64,
    random_search: bool,
) -> Result<OptimizerRun, RunError> {
    if config.episodes_bo == 0 {
        return Err(RunError::ZeroBudget);
    }
    let started = Instant::now();
    let direction = config.metric.direction();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut qo = QoState::default();

    let mut thetas: Vec<[f64; 4]> = Vec::new();
    let mut raw: Vec<f64> = Vec::new();
    let mut records: Vec<MetaEpisodeRecord> = Vec::new();

    for (hp, value) in &config.prior_data {
        thetas.push(hp.as_array());
        raw.push(*value);
    }

    let evaluate = |theta: HyperParams,
                        thetas: &mut Vec<[f64; 4]>,
                        raw: &mut Vec<f64>,
                        records: &mut Vec<MetaEpisodeRecord>,
                        qo: &mut QoState,
                        rng: &mut ChaCha8Rng|
     -> Result<(), RunError> {
        let prior_averages = raw.clone();
        let rec = run_meta_episode(theta, spec, config, qo, &prior_averages, rng)?;
        thetas.push(theta.as_array());
        raw.push(rec.f_avg);
        records.push(rec);
        Ok(())
    };

    if !random_search && config.init_lh > 0 && config.prior_data.is_empty() {
        for point in acquisition::latin_hypercube(config.init_lh as usize, 4, &mut rng) {
            let theta = theta_from_unit_box(&point);
            evaluate(theta, &mut thetas, &mut raw, &mut records, &mut qo, &mut rng)?;
        }
    }

    for _ in 0..config.episodes_bo {
        let theta = if random_search {
            HyperParams::from_array([
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>(),
            ])
            .expect("uniform draws are in range")
        } else {
            let transformed = if raw.is_empty() {
                Vec::new()
            } else {
                y_transform(&raw, direction)
            };
            let dataset = GpDataset::new(
                thetas.iter().map(|t| t.to_vec()).collect(),
                transformed.clone(),
                0.0,
            )?;
            let model = fit(dataset, config.kernel.clone())?;
            let f_best = transformed
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let candidate = acquisition::propose_next(&model, f_best, &config.acquisition, &mut rng);
            theta_from_unit_box(&candidate.theta)
        };
        evaluate(theta, &mut thetas, &mut raw, &mut records, &mut qo, &mut rng)?;
    }

    Ok(finish_run(records, direction, seed, started))
}
