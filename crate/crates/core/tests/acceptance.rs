//! Acceptance gates for the full framework. Each test checks one release
//! criterion end to end and prints a single `acceptance N (<name>): pass`
//! line on success (visible with `cargo test -- --nocapture`).

use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rlopt::acquisition::{expected_improvement, latin_hypercube};
use rlopt::agent::{self, HyperParams, TraceKind};
use rlopt::bandit::{ucb1_score, ucb1tuned_score, ArmStats};
use rlopt::env::GridSpec;
use rlopt::gp::{fit, log_marginal_likelihood, se_kernel, GpDataset, KernelParams};
use rlopt::harness::{self, bandit_sweep, run_batch, Algorithm, ExperimentConfig};
use rlopt::orchestrator::{Metric, OptimizerRun};
use rlopt::Direction;

fn pass(n: u32, name: &str) {
    println!("acceptance {n} ({name}): pass");
}

/// Trend-scale configuration shared by the heavier gates.
fn trend_config(metric: Metric, n_executions: u32, base_seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.metric = metric;
    c.episodes_bo = 15;
    c.episodes_a = 30;
    c.n_executions = n_executions;
    c.base_seed = base_seed;
    c
}

fn success_batch() -> &'static Vec<OptimizerRun> {
    static BATCH: OnceLock<Vec<OptimizerRun>> = OnceLock::new();
    BATCH.get_or_init(|| run_batch(&trend_config(Metric::SuccessRate, 10, 1000)).unwrap())
}

fn steps_batch() -> &'static Vec<OptimizerRun> {
    static BATCH: OnceLock<Vec<OptimizerRun>> = OnceLock::new();
    BATCH.get_or_init(|| run_batch(&trend_config(Metric::StepsPerEpisode, 5, 2000)).unwrap())
}

/// Full-scale paired batches for the head-to-head against random search:
/// shared seeds and an equal budget of 30 evaluations × 10 queries per
/// execution (the optimizer spends 5 of its 30 on a Latin hypercube
/// warm start; random search has no use for one).
fn paired_config(algorithm: Algorithm) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.metric = Metric::SuccessRate;
    c.episodes_a = 50;
    c.n_executions = 30;
    c.base_seed = 5000;
    c.min_runs = 10;
    c.max_runs = 10;
    c.algorithm = algorithm;
    match algorithm {
        Algorithm::Bo => {
            c.episodes_bo = 25;
            c.init_lh = 5;
        }
        Algorithm::RandomSearch => c.episodes_bo = 30,
    }
    c
}

fn paired_bo_batch() -> &'static Vec<OptimizerRun> {
    static BATCH: OnceLock<Vec<OptimizerRun>> = OnceLock::new();
    BATCH.get_or_init(|| run_batch(&paired_config(Algorithm::Bo)).unwrap())
}

fn paired_rs_batch() -> &'static Vec<OptimizerRun> {
    static BATCH: OnceLock<Vec<OptimizerRun>> = OnceLock::new();
    BATCH.get_or_init(|| run_batch(&paired_config(Algorithm::RandomSearch)).unwrap())
}

/// Dense-inverse reference for the GP posterior and marginal likelihood.
fn dense_oracle(
    dataset: &GpDataset,
    params: &KernelParams,
    xstar: &[f64],
) -> (f64, f64, f64) {
    let n = dataset.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        se_kernel(&dataset.x[i], &dataset.x[j], params, i == j).unwrap()
    });
    let kinv = k.clone().try_inverse().expect("oracle inverse");
    let resid = DVector::from_fn(n, |i, _| dataset.y[i] - dataset.mu0);
    let kstar = DVector::from_fn(n, |i, _| {
        se_kernel(&dataset.x[i], xstar, params, false).unwrap()
    });
    let mean = dataset.mu0 + (kstar.transpose() * &kinv * &resid)[(0, 0)];
    let kss = se_kernel(xstar, xstar, params, false).unwrap();
    let var = kss - (kstar.transpose() * &kinv * &kstar)[(0, 0)];
    let quad = (resid.transpose() * &kinv * &resid)[(0, 0)];
    let lml = -0.5 * quad
        - 0.5 * k.determinant().ln()
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    (mean, var, lml)
}

#[test]
fn c01_gp_matches_dense_inverse_oracle() {
    let started = Instant::now();
    let params = KernelParams::tuning_default();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..50 {
        let n = rng.random_range(1..=25);
        let mut dataset = GpDataset::default();
        for _ in 0..n {
            let x: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            let y = rng.random_range(-2.0..2.0);
            dataset.push(x, y);
        }
        let lml = log_marginal_likelihood(&dataset, &params).unwrap();
        let model = fit(dataset.clone(), params.clone()).unwrap();
        assert_eq!(model.jitter, 0.0, "noisy kernel must not need jitter");
        for _ in 0..5 {
            let xstar: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            let post = model.posterior(&xstar, dataset.mu0).unwrap();
            let (mean, var, oracle_lml) = dense_oracle(&dataset, &params, &xstar);
            assert!((post.mean - mean).abs() < 1e-8, "mean {} vs {mean}", post.mean);
            assert!(
                (post.variance - var).abs() < 1e-8,
                "variance {} vs {var}",
                post.variance
            );
            assert!((lml - oracle_lml).abs() < 1e-8, "lml {lml} vs {oracle_lml}");
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 10, "oracle sweep took {elapsed:?}");
    pass(1, "gp cholesky path matches dense-inverse oracle");
}

#[test]
fn c02_closed_form_unit_values() {
    // EI at the incumbent with unit posterior std equals the standard
    // normal density at zero.
    let ei = expected_improvement(0.5, 1.0, 0.5);
    assert!((ei - 0.3989422804014327).abs() < 1e-9, "ei {ei}");

    // UCB hand cases at t = e (so ln t = 1) for a single-pull arm.
    let arm = ArmStats {
        pulls: 1,
        mean: 0.5,
        m2: 0.0,
    };
    let t = std::f64::consts::E;
    let u1 = ucb1_score(&arm, t);
    assert!((u1 - (0.5 + std::f64::consts::SQRT_2)).abs() < 1e-12, "ucb1 {u1}");
    // Variance estimate is 0 after one pull, so the tuned bound uses
    // min(1/4, 0 + sqrt(2 ln t / n)) = 1/4 and the bonus is sqrt(1/4).
    let u2 = ucb1tuned_score(&arm, t);
    assert!((u2 - 1.0).abs() < 1e-12, "ucb1tuned {u2}");

    // Softmax action distributions are normalized.
    let spec = GridSpec::default_layout();
    let (mut q, _) = agent::init_agent(&spec);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // Seed a few arbitrary values so the distribution is non-uniform.
    let theta = HyperParams::soar_default();
    let state = rlopt::env::reset(&spec, 0);
    let mut e = agent::TraceTable::new(spec.n_states());
    for _ in 0..20 {
        let s = spec.state_index(state.position);
        let a = agent::select_action_egreedy(&q, s, 1.0, &mut rng);
        agent::sarsa_lambda_update(
            &mut q,
            &mut e,
            s,
            a,
            rng.random::<f64>(),
            None,
            &theta,
            TraceKind::Accumulating,
        );
    }
    for s in 0..spec.n_states() {
        for tau in [0.1, 1.0, 7.3] {
            let p = agent::softmax_probs(&q, s, tau).unwrap();
            let total: f64 = p.iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "softmax sum {total}");
        }
    }
    pass(2, "closed-form unit values for ei, ucb variants and softmax");
}

#[test]
fn c03_protocol_query_accounting() {
    let mut c = ExperimentConfig::default();
    c.episodes_bo = 6;
    c.episodes_a = 5;
    c.cutoff = 60;
    c.n_executions = 2;
    c.base_seed = 300;

    // Bandit disabled: exactly episodes_bo × max_runs queries.
    let fixed = run_batch(&c).unwrap();
    for run in &fixed {
        assert_eq!(run.total_queries, 6 * 5, "fixed protocol");
    }

    // Any bandit with (min 2, max 5): bounded by the run limits.
    for policy in ["softmax", "egreedy", "greedy", "ucb1", "ucb1tuned"] {
        let mut cb = c.clone();
        cb.bandit.policy = policy.into();
        for run in &run_batch(&cb).unwrap() {
            assert!(
                (2 * 6..=5 * 6).contains(&(run.total_queries as u32)),
                "{policy}: {} queries",
                run.total_queries
            );
        }
    }
    pass(3, "query accounting with and without the bandit layer");
}

#[test]
fn c04_bandit_query_reduction() {
    let started = Instant::now();
    let mut c = trend_config(Metric::SuccessRate, 5, 3000);
    c.episodes_a = 30;
    let rows = bandit_sweep(&c).unwrap();
    assert_eq!(rows[0].policy, "none");
    assert_eq!(rows[0].avg_queries, 75.0);
    for row in &rows[1..] {
        let floor = match row.policy.as_str() {
            "ucb1" | "ucb1tuned" => 5.0,
            _ => 10.0,
        };
        assert!(
            row.query_reduction_pct >= floor,
            "{}: {:.2}% reduction (< {floor}%)",
            row.policy,
            row.query_reduction_pct
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 900, "sweep took {elapsed:?}");
    for row in &rows {
        println!(
            "  bandit sweep: {:<10} avg queries {:>6.2}, reduction {:>6.2}%",
            row.policy, row.avg_queries, row.query_reduction_pct
        );
    }
    pass(4, "bandit policies cut query counts vs fixed protocol");
}

#[test]
fn c05_optimizer_improves_over_first_proposal() {
    let success = success_batch();
    let first = mean(success.iter().map(|r| r.best_curve[0]));
    let last = mean(success.iter().map(|r| *r.best_curve.last().unwrap()));
    println!("  success metric: first {first:.4}, final {last:.4}");
    assert!(
        last >= first * 1.15,
        "success improvement {first:.4} -> {last:.4} below 15%"
    );

    let steps = steps_batch();
    let first_s = mean(steps.iter().map(|r| r.best_curve[0]));
    let last_s = mean(steps.iter().map(|r| *r.best_curve.last().unwrap()));
    println!("  steps metric: first {first_s:.2}, final {last_s:.2}");
    assert!(
        last_s <= first_s * 0.92,
        "steps improvement {first_s:.2} -> {last_s:.2} below 8%"
    );
    pass(5, "final optimum improves on the first meta-episode");
}

#[test]
fn c06_bo_at_least_matches_random_search() {
    let bo = paired_bo_batch();
    let rs = paired_rs_batch();
    assert_eq!(bo.len(), rs.len());
    let mut wins = 0;
    for (b, r) in bo.iter().zip(rs) {
        assert_eq!(b.seed, r.seed, "paired seeds");
        let (bf, rf) = (*b.best_curve.last().unwrap(), *r.best_curve.last().unwrap());
        if Direction::Maximize.at_least_as_good(bf, rf) {
            wins += 1;
        }
    }
    println!("  bo >= random search in {wins}/{} paired seeds", bo.len());
    assert!(wins * 10 >= bo.len() * 6, "only {wins}/{} wins", bo.len());
    pass(6, "bo matches or beats random search on most paired seeds");
}

#[test]
fn c07_tuned_theta_beats_reference_on_replay() {
    let spec = GridSpec::default_layout();
    let reference = HyperParams::soar_default();

    let best_success = success_batch()
        .iter()
        .max_by(|a, b| a.best_value.partial_cmp(&b.best_value).unwrap())
        .unwrap()
        .best_theta;
    let tuned = harness::replay_theta(
        &spec, "tuned", best_success, 20, 50, 400, TraceKind::Accumulating, 700,
    );
    let base = harness::replay_theta(
        &spec, "reference", reference, 20, 50, 400, TraceKind::Accumulating, 700,
    );
    println!(
        "  success replay: tuned {:.4} vs reference {:.4}",
        tuned.overall_success, base.overall_success
    );
    assert!(tuned.overall_success > base.overall_success);

    let best_steps = steps_batch()
        .iter()
        .min_by(|a, b| a.best_value.partial_cmp(&b.best_value).unwrap())
        .unwrap()
        .best_theta;
    let tuned_s = harness::replay_theta(
        &spec, "tuned", best_steps, 20, 50, 400, TraceKind::Accumulating, 701,
    );
    let base_s = harness::replay_theta(
        &spec, "reference", reference, 20, 50, 400, TraceKind::Accumulating, 701,
    );
    println!(
        "  steps replay: tuned {:.2} vs reference {:.2}",
        tuned_s.overall_steps, base_s.overall_steps
    );
    assert!(tuned_s.overall_steps < base_s.overall_steps);
    pass(7, "tuned θ beats the fixed reference on its own metric");
}

#[test]
fn c08_obstacle_schedule_and_reachability() {
    let spec = GridSpec::default_layout();
    spec.validate().unwrap();
    // Transitions exactly at episodes 15 and 30, constant in between.
    assert_eq!(spec.active_obstacles(0), spec.active_obstacles(14));
    assert_ne!(spec.active_obstacles(14), spec.active_obstacles(15));
    assert_eq!(spec.active_obstacles(15), spec.active_obstacles(29));
    assert_ne!(spec.active_obstacles(29), spec.active_obstacles(30));
    assert_eq!(spec.active_obstacles(30), spec.active_obstacles(10_000));
    // validate() already enforces start→goal reachability per phase; a
    // layout walling off the goal in any phase must be rejected.
    let bad = "5 3\nS . # . G\n. . # . .\n. . # . .\n";
    assert!(GridSpec::parse(bad).is_err());
    pass(8, "obstacle schedule switches at 15 and 30 with reachable goal");
}

#[test]
fn c09_manifest_rerun_reproduces_csvs() {
    let bin = env!("CARGO_BIN_EXE_rlopt");
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let run = |args: &[&str]| {
        let status = Command::new(bin).args(args).status().unwrap();
        assert!(status.success(), "rlopt {args:?}");
    };
    run(&[
        "optimize",
        "--set",
        "episodes_bo=3",
        "--set",
        "episodes_a=8",
        "--set",
        "cutoff=100",
        "--set",
        "n_executions=2",
        "--set",
        "bandit.policy=\"softmax\"",
        "--out-dir",
        out_a.to_str().unwrap(),
    ]);
    let manifest = out_a.join("manifest.toml");
    run(&[
        "optimize",
        "--config",
        manifest.to_str().unwrap(),
        "--out-dir",
        out_b.to_str().unwrap(),
    ]);
    for csv in ["runs.csv", "curves.csv"] {
        let a = std::fs::read(out_a.join(csv)).unwrap();
        let b = std::fs::read(out_b.join(csv)).unwrap();
        assert_eq!(a, b, "{csv} differs across manifest rerun");
    }
    pass(9, "manifest rerun reproduces csv artifacts byte for byte");
}

#[test]
fn c10_module_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    // Latin hypercube stratification: one point per stratum per dim.
    for _ in 0..20 {
        let n = rng.random_range(1..40);
        let pts = latin_hypercube(n, 4, &mut rng);
        for d in 0..4 {
            let mut strata: Vec<usize> =
                pts.iter().map(|p| (p[d] * n as f64) as usize).collect();
            strata.sort_unstable();
            assert!(strata.iter().enumerate().all(|(i, &s)| i == s));
        }
    }

    // Best-so-far curves are monotone in the metric's direction.
    for run in success_batch() {
        assert!(run.best_curve.windows(2).all(|w| w[1] >= w[0]));
    }
    for run in steps_batch() {
        assert!(run.best_curve.windows(2).all(|w| w[1] <= w[0]));
    }

    // Posterior variance stays within [0, σ_f² + σ_n²].
    let params = KernelParams::tuning_default();
    let mut dataset = GpDataset::default();
    for _ in 0..12 {
        let x: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let y = rng.random_range(-1.0..1.0);
        dataset.push(x, y);
    }
    let model = fit(dataset.clone(), params.clone()).unwrap();
    let cap = params.sigma_f2;
    for _ in 0..200 {
        let xstar: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let post = model.posterior(&xstar, 0.0).unwrap();
        assert!(post.variance >= 0.0 && post.variance <= cap + 1e-9);
    }

    // At λ = 0 the trace variant cannot matter.
    let spec = GridSpec::default_layout();
    let theta = HyperParams::new(0.4, 0.15, 0.9, 0.0).unwrap();
    let mut rng_a = ChaCha8Rng::seed_from_u64(11);
    let mut rng_b = ChaCha8Rng::seed_from_u64(11);
    let (mut qa, mut ea) = agent::init_agent(&spec);
    let (mut qb, mut eb) = agent::init_agent(&spec);
    for ep in 0..20 {
        let ra = agent::run_episode(
            &spec, &mut qa, &mut ea, &theta, ep, 150, TraceKind::Accumulating, &mut rng_a,
        );
        let rb = agent::run_episode(
            &spec, &mut qb, &mut eb, &theta, ep, 150, TraceKind::Replacing, &mut rng_b,
        );
        assert_eq!((ra.steps, ra.success), (rb.steps, rb.success));
    }
    assert_eq!(qa.values(), qb.values());

    // Lengthscale signs are inert.
    let mut flipped = params.clone();
    flipped.lengthscales = vec![-0.12, 0.12, -0.12, 0.12];
    let model_f = fit(dataset, flipped).unwrap();
    for _ in 0..50 {
        let xstar: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let a = model.posterior(&xstar, 0.0).unwrap();
        let b = model_f.posterior(&xstar, 0.0).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.variance, b.variance);
    }

    pass(10, "module invariants hold");
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}
