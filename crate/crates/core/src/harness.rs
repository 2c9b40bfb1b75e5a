//! Experiment configuration, batch execution, aggregation statistics and
//! CSV artifact emission.
//!
//! Configuration files are TOML; unknown keys are rejected and every
//! invariant violation names the offending key. The emitted `manifest`
//! is itself a loadable configuration (fully resolved, with provenance in
//! comments), so any run can be reproduced from its artifacts alone.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::AcquisitionConfig;
use crate::agent::{self, HyperParams, TraceKind};
use crate::bandit::BanditPolicy;
use crate::env::{EnvError, GridSpec};
use crate::gp::KernelParams;
use crate::orchestrator::{
    run_optimizer, run_random_search, Metric, OptimizerRun, RunConfig, RunError,
};
use crate::stats::{mean, sample_std};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config file `{0}`: {1}")]
    ConfigIo(PathBuf, std::io::Error),
    #[error("config parse: {0}")]
    ConfigParse(String),
    #[error("config key `{key}`: {reason}")]
    ConfigInvalid { key: String, reason: String },
    #[error("override `{0}` is not of the form key=value")]
    BadOverride(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("execution with seed {seed} failed: {source}")]
    ExecutionFailed { seed: u64, source: RunError },
    #[error("aggregation over runs of unequal length ({0} vs {1})")]
    RaggedRuns(usize, usize),
    #[error("artifact i/o at `{0}`: {1}")]
    ArtifactIo(PathBuf, std::io::Error),
    #[error(transparent)]
    Agent(#[from] agent::AgentError),
    #[error(transparent)]
    Run(#[from] RunError),
}

fn invalid(key: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::ConfigInvalid {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Which search algorithm a batch runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Bo,
    RandomSearch,
}

/// Bandit layer selection as it appears in configuration files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BanditConfig {
    /// One of none, greedy, egreedy, softmax, ucb1, ucb1tuned.
    pub policy: String,
    pub epsilon: f64,
    pub tau: f64,
}

impl Default for BanditConfig {
    fn default() -> Self {
        BanditConfig {
            policy: "none".into(),
            epsilon: 0.2,
            tau: 1.0,
        }
    }
}

impl BanditConfig {
    pub fn to_policy(&self) -> Result<Option<BanditPolicy>, HarnessError> {
        let policy = match self.policy.as_str() {
            "none" => return Ok(None),
            "greedy" => BanditPolicy::Greedy,
            "egreedy" => BanditPolicy::EGreedy {
                epsilon: self.epsilon,
            },
            "softmax" => BanditPolicy::Softmax { tau: self.tau },
            "ucb1" => BanditPolicy::Ucb1,
            "ucb1tuned" => BanditPolicy::Ucb1Tuned,
            other => {
                return Err(invalid(
                    "bandit.policy",
                    format!("unknown policy `{other}`"),
                ))
            }
        };
        policy.validate().map_err(|e| {
            let key = match policy {
                BanditPolicy::EGreedy { .. } => "bandit.epsilon",
                BanditPolicy::Softmax { .. } => "bandit.tau",
                _ => "bandit.policy",
            };
            invalid(key, e.to_string())
        })?;
        Ok(Some(policy))
    }
}

/// Eligibility-trace variant as a config string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceVariant {
    Accumulating,
    Replacing,
}

impl From<TraceVariant> for TraceKind {
    fn from(v: TraceVariant) -> TraceKind {
        match v {
            TraceVariant::Accumulating => TraceKind::Accumulating,
            TraceVariant::Replacing => TraceKind::Replacing,
        }
    }
}

/// The full framework configuration vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub metric: Metric,
    pub algorithm: Algorithm,
    pub episodes_bo: u32,
    pub episodes_a: u32,
    pub cutoff: u32,
    pub min_runs: u32,
    pub max_runs: u32,
    pub init_lh: u32,
    pub n_executions: u32,
    pub base_seed: u64,
    /// Empty string means the built-in default layout.
    pub layout_path: String,
    pub trace_variant: TraceVariant,
    pub bandit: BanditConfig,
    pub kernel: KernelParams,
    pub acquisition: AcquisitionConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            metric: Metric::SuccessRate,
            algorithm: Algorithm::Bo,
            episodes_bo: 30,
            episodes_a: 50,
            cutoff: 400,
            min_runs: 2,
            max_runs: 5,
            init_lh: 0,
            n_executions: 10,
            base_seed: 42,
            layout_path: String::new(),
            trace_variant: TraceVariant::Accumulating,
            bandit: BanditConfig::default(),
            kernel: KernelParams::tuning_default(),
            acquisition: AcquisitionConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.episodes_bo < 1 {
            return Err(invalid("episodes_bo", "must be >= 1"));
        }
        if self.episodes_a < 1 {
            return Err(invalid("episodes_a", "must be >= 1"));
        }
        if self.cutoff < 1 {
            return Err(invalid("cutoff", "must be >= 1"));
        }
        if self.n_executions < 1 {
            return Err(invalid("n_executions", "must be >= 1"));
        }
        if self.min_runs < 1 || self.min_runs > self.max_runs {
            return Err(invalid(
                "min_runs/max_runs",
                format!(
                    "need 1 <= min_runs <= max_runs, got {} and {}",
                    self.min_runs, self.max_runs
                ),
            ));
        }
        self.bandit.to_policy()?;
        self.kernel
            .validate()
            .map_err(|e| invalid("kernel", e.to_string()))?;
        self.acquisition
            .validate()
            .map_err(|e| HarnessError::ConfigParse(e))?;
        Ok(())
    }

    /// Resolve the grid layout this config points at.
    pub fn load_layout(&self) -> Result<GridSpec, HarnessError> {
        if self.layout_path.is_empty() {
            Ok(GridSpec::default_layout())
        } else {
            Ok(GridSpec::load(Path::new(&self.layout_path))?)
        }
    }

    /// Lower to the per-execution run configuration.
    pub fn to_run_config(&self) -> Result<RunConfig, HarnessError> {
        let mut acquisition = self.acquisition.clone();
        acquisition.direction = self.metric.direction();
        Ok(RunConfig {
            metric: self.metric,
            episodes_bo: self.episodes_bo,
            episodes_a: self.episodes_a,
            cutoff: self.cutoff,
            min_runs: self.min_runs,
            max_runs: self.max_runs,
            bandit_policy: self.bandit.to_policy()?,
            kernel: self.kernel.clone(),
            init_lh: self.init_lh,
            acquisition,
            trace_kind: self.trace_variant.into(),
            prior_data: Vec::new(),
        })
    }

    /// Serialize back to TOML (the manifest body).
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parse a configuration from TOML text, then apply `key=value` overrides
/// (dotted keys address nested tables) and validate.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig, HarnessError> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| HarnessError::ConfigParse(e.to_string()))?;
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| HarnessError::BadOverride(item.clone()))?;
        let parsed: toml::Value = format!("v = {}", value.trim())
            .parse::<toml::Table>()
            .map(|mut t| t.remove("v").unwrap())
            .unwrap_or_else(|_| toml::Value::String(value.trim().to_string()));
        let mut node = &mut table;
        let parts: Vec<&str> = key.trim().split('.').collect();
        for part in &parts[..parts.len() - 1] {
            node = node
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| invalid(key.trim(), "path collides with a non-table value"))?;
        }
        node.insert(parts[parts.len() - 1].to_string(), parsed);
    }
    let config: ExperimentConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| HarnessError::ConfigParse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Load a configuration file; an empty file yields full defaults.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::ConfigIo(path.to_path_buf(), e))?;
    parse_config(&text, &[])
}

/// Run `n_executions` independent executions with seeds base_seed + i.
///
/// Executions run in parallel; output order is by execution index.
pub fn run_batch(config: &ExperimentConfig) -> Result<Vec<OptimizerRun>, HarnessError> {
    config.validate()?;
    let spec = config.load_layout()?;
    let run_config = config.to_run_config()?;
    (0..config.n_executions as u64)
        .into_par_iter()
        .map(|i| {
            let seed = config.base_seed + i;
            let result = match config.algorithm {
                Algorithm::Bo => run_optimizer(&run_config, &spec, seed),
                Algorithm::RandomSearch => run_random_search(&run_config, &spec, seed),
            };
            result.map_err(|source| HarnessError::ExecutionFailed { seed, source })
        })
        .collect()
}

/// Cross-execution statistics at one meta-episode index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveStats {
    pub mean: f64,
    pub std: f64,
    /// 95% half-width by the normal approximation, 1.96·std/√n.
    pub ci95_half_width: f64,
    pub min: f64,
    pub max: f64,
}

/// Aggregate best-so-far curves across executions.
pub fn aggregate_curves(runs: &[OptimizerRun]) -> Result<Vec<CurveStats>, HarnessError> {
    let len = runs.first().map_or(0, |r| r.best_curve.len());
    for r in runs {
        if r.best_curve.len() != len {
            return Err(HarnessError::RaggedRuns(len, r.best_curve.len()));
        }
    }
    let n = runs.len();
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let values: Vec<f64> = runs.iter().map(|r| r.best_curve[i]).collect();
        let m = mean(&values);
        let s = sample_std(&values);
        out.push(CurveStats {
            mean: m,
            std: s,
            ci95_half_width: if n >= 2 {
                1.96 * s / (n as f64).sqrt()
            } else {
                0.0
            },
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    Ok(out)
}

/// Per-episode averages of a fixed-θ replay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayPoint {
    pub episode: u32,
    pub mean_steps: f64,
    pub mean_success: f64,
    pub mean_reward: f64,
}

/// One labeled learning curve (a θ replayed over fresh agents).
#[derive(Debug, Clone)]
pub struct ReplayCurve {
    pub label: String,
    pub theta: HyperParams,
    pub points: Vec<ReplayPoint>,
    /// Metric averages over the whole replay, per the run's metric kinds.
    pub overall_success: f64,
    pub overall_steps: f64,
}

/// Replay a fixed θ for `repetitions` fresh agents of `episodes_a`
/// episodes each, averaging per-episode reward/steps/success.
#[allow(clippy::too_many_arguments)]
pub fn replay_theta(
    spec: &GridSpec,
    label: &str,
    theta: HyperParams,
    repetitions: u32,
    episodes_a: u32,
    cutoff: u32,
    trace_kind: TraceKind,
    seed: u64,
) -> ReplayCurve {
    use rand::SeedableRng;
    assert!(repetitions >= 1);
    let mut steps_sum = vec![0.0f64; episodes_a as usize];
    let mut success_sum = vec![0.0f64; episodes_a as usize];
    let mut total_success = 0.0;
    let mut total_steps = 0.0;
    for rep in 0..repetitions {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(rep as u64));
        let (mut q, mut e) = agent::init_agent(spec);
        for ep in 0..episodes_a {
            let res = agent::run_episode(
                spec, &mut q, &mut e, &theta, ep, cutoff, trace_kind, &mut rng,
            );
            steps_sum[ep as usize] += res.steps as f64;
            let s = if res.success { 1.0 } else { 0.0 };
            success_sum[ep as usize] += s;
            total_success += s;
            total_steps += res.steps as f64;
        }
    }
    let n = repetitions as f64;
    let points = (0..episodes_a)
        .map(|ep| ReplayPoint {
            episode: ep,
            mean_steps: steps_sum[ep as usize] / n,
            mean_success: success_sum[ep as usize] / n,
            mean_reward: success_sum[ep as usize] / n,
        })
        .collect();
    ReplayCurve {
        label: label.into(),
        theta,
        points,
        overall_success: total_success / (n * episodes_a as f64),
        overall_steps: total_steps / (n * episodes_a as f64),
    }
}

/// One row of the bandit policy comparison.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub policy: String,
    pub avg_queries: f64,
    pub avg_wall_time_s: f64,
    /// Percent reduction vs. the no-bandit row; 0 for the baseline itself.
    pub query_reduction_pct: f64,
    pub final_best_mean: f64,
    pub final_best_std: f64,
}

/// The policies compared by `bandit_sweep`, baseline first.
pub const SWEEP_POLICIES: [&str; 6] = ["none", "softmax", "egreedy", "greedy", "ucb1", "ucb1tuned"];

/// Run the batch once per bandit policy with shared seeds and summarize
/// query counts, wall time and final optima.
pub fn bandit_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>, HarnessError> {
    let mut rows = Vec::new();
    let mut baseline_queries = None;
    for policy in SWEEP_POLICIES {
        let mut cfg = config.clone();
        cfg.bandit.policy = policy.to_string();
        if policy == "none" {
            // Fixed-k accounting at max_runs queries per meta-episode.
            cfg.min_runs = cfg.max_runs;
        }
        let runs = run_batch(&cfg)?;
        let avg_queries = mean(
            &runs
                .iter()
                .map(|r| r.total_queries as f64)
                .collect::<Vec<_>>(),
        );
        let avg_wall_time_s = mean(
            &runs
                .iter()
                .map(|r| r.wall_time.as_secs_f64())
                .collect::<Vec<_>>(),
        );
        let finals: Vec<f64> = runs.iter().map(|r| r.best_value).collect();
        let reduction = match baseline_queries {
            None => {
                baseline_queries = Some(avg_queries);
                0.0
            }
            Some(base) => (1.0 - avg_queries / base) * 100.0,
        };
        rows.push(SweepRow {
            policy: policy.to_string(),
            avg_queries,
            avg_wall_time_s,
            query_reduction_pct: reduction,
            final_best_mean: mean(&finals),
            final_best_std: sample_std(&finals),
        });
    }
    Ok(rows)
}

// --- CSV artifact formatting -------------------------------------------

/// `runs.csv`: one row per (execution, meta-episode).
pub fn runs_csv(runs: &[OptimizerRun]) -> String {
    let mut out =
        String::from("execution,seed,meta_episode,alpha,epsilon,gamma,lambda,query_count,f_avg,best_so_far\n");
    for (i, run) in runs.iter().enumerate() {
        for (j, rec) in run.records.iter().enumerate() {
            let [a, e, g, l] = rec.theta.as_array();
            let _ = writeln!(
                out,
                "{i},{},{j},{a},{e},{g},{l},{},{},{}",
                run.seed, rec.query_count, rec.f_avg, run.best_curve[j]
            );
        }
    }
    out
}

/// `curves.csv`: aggregated best-so-far statistics per meta-episode.
pub fn curves_csv(stats: &[CurveStats]) -> String {
    let mut out = String::from("meta_episode,mean,std,ci95_half_width,min,max\n");
    for (i, s) in stats.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{}",
            s.mean, s.std, s.ci95_half_width, s.min, s.max
        );
    }
    out
}

/// `sweep.csv`: the bandit policy comparison table.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "policy,avg_queries,avg_wall_time_s,query_reduction_pct,final_best_mean,final_best_std\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.policy,
            r.avg_queries,
            r.avg_wall_time_s,
            r.query_reduction_pct,
            r.final_best_mean,
            r.final_best_std
        );
    }
    out
}

/// `replay.csv`: labeled per-episode learning curves.
pub fn replay_csv(curves: &[ReplayCurve]) -> String {
    let mut out =
        String::from("label,alpha,epsilon,gamma,lambda,episode,mean_steps,mean_success,mean_reward\n");
    for c in curves {
        let [a, e, g, l] = c.theta.as_array();
        for p in &c.points {
            let _ = writeln!(
                out,
                "{},{a},{e},{g},{l},{},{},{},{}",
                c.label, p.episode, p.mean_steps, p.mean_success, p.mean_reward
            );
        }
    }
    out
}

/// FNV-1a over the resolved config text; stable fingerprint for manifests.
pub fn config_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// The `manifest` artifact: a fully resolved, reloadable configuration
/// with provenance comments (hash, wall time).
pub fn manifest(config: &ExperimentConfig, wall_time_s: f64) -> String {
    let body = config.to_toml();
    format!(
        "# rlopt run manifest; load with `rlopt <subcommand> --config <this file>`\n\
         # config_hash = {:016x}\n\
         # wall_time_s = {wall_time_s}\n\
         {body}",
        config_hash(&body)
    )
}

/// Serialize an artifact to disk.
pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::ArtifactIo(dir.to_path_buf(), e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| HarnessError::ArtifactIo(path.clone(), e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestrator::MetaEpisodeRecord;
    use std::time::Duration;

    fn desk_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.episodes_bo = 3;
        c.episodes_a = 8;
        c.cutoff = 80;
        c.min_runs = 1;
        c.max_runs = 2;
        c.n_executions = 2;
        c.acquisition.n_random_starts = 100;
        c.acquisition.refine_iterations = 10;
        c
    }

    #[test]
    fn empty_config_gives_documented_defaults() {
        let c = parse_config("", &[]).unwrap();
        assert_eq!(c.episodes_bo, 30);
        assert_eq!(c.episodes_a, 50);
        assert_eq!(c.cutoff, 400);
        assert_eq!(c.min_runs, 2);
        assert_eq!(c.max_runs, 5);
        assert_eq!(c.n_executions, 10);
        assert_eq!(c.kernel.sigma_f2, 0.8);
        assert_eq!(c.kernel.sigma_n2, 0.17);
        assert_eq!(c.kernel.lengthscales, vec![0.12; 4]);
    }

    #[test]
    fn bad_run_bounds_rejected_naming_keys() {
        let err = parse_config("min_runs = 6\nmax_runs = 5\n", &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("min_runs") && msg.contains("max_runs"), "{msg}");
    }

    #[test]
    fn bad_epsilon_rejected() {
        let err = parse_config("[bandit]\npolicy = \"egreedy\"\nepsilon = 1.5\n", &[]).unwrap_err();
        assert!(err.to_string().contains("bandit.epsilon"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse_config("not_a_key = 1\n", &[]).unwrap_err();
        assert!(err.to_string().contains("not_a_key"), "{err}");
    }

    #[test]
    fn overrides_apply_with_dotted_paths() {
        let c = parse_config(
            "episodes_bo = 10\n",
            &[
                "episodes_bo=5".into(),
                "bandit.policy=\"softmax\"".into(),
                "kernel.sigma_n2=0.2".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.episodes_bo, 5);
        assert_eq!(c.bandit.policy, "softmax");
        assert_eq!(c.kernel.sigma_n2, 0.2);
    }

    #[test]
    fn manifest_round_trips() {
        let c = desk_config();
        let m = manifest(&c, 1.5);
        let reloaded = parse_config(&m, &[]).unwrap();
        assert_eq!(reloaded.to_toml(), c.to_toml());
    }

    #[test]
    fn batch_order_and_seeds() {
        let c = desk_config();
        let runs = run_batch(&c).unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].seed, c.base_seed);
        assert_eq!(runs[1].seed, c.base_seed + 1);
        assert_eq!(runs[0].records.len(), 3);
    }

    #[test]
    fn batch_deterministic() {
        let c = desk_config();
        let a = run_batch(&c).unwrap();
        let b = run_batch(&c).unwrap();
        assert_eq!(runs_csv(&a), runs_csv(&b));
    }

    fn fake_run(curve: &[f64], seed: u64) -> OptimizerRun {
        let records: Vec<MetaEpisodeRecord> = curve
            .iter()
            .map(|&v| MetaEpisodeRecord {
                theta: HyperParams::soar_default(),
                query_values: vec![v],
                f_avg: v,
                query_count: 1,
                episodes_per_query: 1,
            })
            .collect();
        OptimizerRun {
            best_curve: curve.to_vec(),
            best_theta: HyperParams::soar_default(),
            best_value: *curve.last().unwrap(),
            total_queries: curve.len() as u64,
            seed,
            wall_time: Duration::from_secs(0),
            records,
        }
    }

    #[test]
    fn aggregate_single_run_degenerate() {
        let stats = aggregate_curves(&[fake_run(&[0.1, 0.2], 1)]).unwrap();
        assert_eq!(stats[1].mean, 0.2);
        assert_eq!(stats[1].std, 0.0);
        assert_eq!(stats[1].ci95_half_width, 0.0);
    }

    #[test]
    fn aggregate_two_constant_curves() {
        let stats =
            aggregate_curves(&[fake_run(&[0.4, 0.4], 1), fake_run(&[0.6, 0.6], 2)]).unwrap();
        for s in &stats {
            assert!((s.mean - 0.5).abs() < 1e-12);
            assert!((s.std - 0.1414).abs() < 1e-3);
            assert_eq!(s.min, 0.4);
            assert_eq!(s.max, 0.6);
        }
    }

    #[test]
    fn aggregate_monotone_inputs_give_monotone_mean() {
        let stats = aggregate_curves(&[
            fake_run(&[0.1, 0.2, 0.3], 1),
            fake_run(&[0.0, 0.25, 0.5], 2),
        ])
        .unwrap();
        assert!(stats.windows(2).all(|w| w[1].mean >= w[0].mean));
    }

    #[test]
    fn aggregate_rejects_ragged() {
        let err = aggregate_curves(&[fake_run(&[0.1], 1), fake_run(&[0.1, 0.2], 2)]).unwrap_err();
        assert!(matches!(err, HarnessError::RaggedRuns(1, 2)));
    }

    #[test]
    fn replay_soar_default_labeled() {
        let spec = GridSpec::default_layout();
        let curve = replay_theta(
            &spec,
            "soar_default",
            HyperParams::soar_default(),
            2,
            10,
            80,
            TraceKind::Accumulating,
            7,
        );
        assert_eq!(curve.points.len(), 10);
        let csv = replay_csv(&[curve]);
        assert!(csv.contains("soar_default,0.3,0.1,0.9,0.001,"));
    }

    #[test]
    fn replay_single_repetition_is_one_trajectory() {
        let spec = GridSpec::default_layout();
        let c = replay_theta(
            &spec,
            "x",
            HyperParams::soar_default(),
            1,
            5,
            80,
            TraceKind::Accumulating,
            8,
        );
        for p in &c.points {
            assert!(p.mean_success == 0.0 || p.mean_success == 1.0);
            assert_eq!(p.mean_steps.fract(), 0.0);
        }
    }

    #[test]
    fn sweep_has_baseline_accounting() {
        let mut c = desk_config();
        c.episodes_bo = 2;
        c.n_executions = 1;
        c.min_runs = 1;
        c.max_runs = 2;
        let rows = bandit_sweep(&c).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].policy, "none");
        assert_eq!(rows[0].avg_queries, (2 * 2) as f64);
        assert_eq!(rows[0].query_reduction_pct, 0.0);
        for r in &rows[1..] {
            assert!(r.avg_queries >= 2.0 && r.avg_queries <= 4.0);
            let recomputed = (1.0 - r.avg_queries / rows[0].avg_queries) * 100.0;
            assert!((r.query_reduction_pct - recomputed).abs() < 1e-9);
        }
    }

    #[test]
    fn config_hash_stable() {
        assert_eq!(config_hash("abc"), config_hash("abc"));
        assert_ne!(config_hash("abc"), config_hash("abd"));
    }
}
