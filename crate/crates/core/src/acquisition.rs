//! Expected improvement acquisition, its maximization over the unit box,
//! and Latin hypercube initialization.
//!
//! Minimization metrics never reach this module: the orchestrator negates
//! the standardized objective first, so there is a single maximizing code
//! path.

use rand::Rng;

use crate::gp::GpModel;
use crate::stats::{normal_cdf, normal_pdf};
use crate::Direction;

/// Knobs for the inner acquisition maximizer (multi-start random search
/// plus coordinate-wise golden-section refinement).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionConfig {
    pub n_random_starts: usize,
    pub n_local_refine: usize,
    pub refine_iterations: usize,
    /// Direction of the raw metric; bookkeeping only — the acquisition
    /// itself always maximizes the transformed objective.
    pub direction: Direction,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        AcquisitionConfig {
            n_random_starts: 10_000,
            n_local_refine: 5,
            refine_iterations: 100,
            direction: Direction::Maximize,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_random_starts == 0 {
            return Err("acquisition.n_random_starts must be positive".into());
        }
        if self.refine_iterations == 0 {
            return Err("acquisition.refine_iterations must be positive".into());
        }
        Ok(())
    }
}

/// A proposed query point with its acquisition value.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub theta: Vec<f64>,
    pub acquisition_value: f64,
}

/// Expected improvement over the incumbent `f_best`.
///
/// For std > 0: Z = (mean − f_best)/std and
/// EI = (mean − f_best)·Φ(Z) + std·φ(Z); degenerate std collapses to the
/// deterministic improvement max(mean − f_best, 0).
pub fn expected_improvement(mean: f64, std: f64, f_best: f64) -> f64 {
    debug_assert!(std >= 0.0);
    let diff = mean - f_best;
    if std <= 0.0 {
        return diff.max(0.0);
    }
    let z = diff / std;
    (diff * normal_cdf(z) + std * normal_pdf(z)).max(0.0)
}

/// Latin hypercube sample: `n` points in [0,1]^d with exactly one point
/// per stratum [i/n, (i+1)/n) in every dimension, strata permuted
/// independently per dimension and offsets uniform within each stratum.
pub fn latin_hypercube<R: Rng>(n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    assert!(n >= 1 && d >= 1);
    let mut points = vec![vec![0.0; d]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for dim in 0..d {
        // Fisher-Yates permutation of strata for this dimension.
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            strata.swap(i, j);
        }
        for (i, point) in points.iter_mut().enumerate() {
            point[dim] = (strata[i] as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    points
}

/// Maximize EI over the unit box and return the best candidate.
///
/// Evaluates `n_random_starts` uniform points, refines the best
/// `n_local_refine` of them by coordinate-wise golden-section passes
/// (at most `refine_iterations` extra evaluations per start), and returns
/// the overall best; ties break toward the lowest sample index. With an
/// empty model every point scores alike, so a uniform random point is
/// returned as the documented bootstrap.
pub fn propose_next<R: Rng>(
    model: &GpModel,
    f_best: f64,
    config: &AcquisitionConfig,
    rng: &mut R,
) -> Candidate {
    let d = model.dim();
    let ei_at = |theta: &[f64]| {
        let post = model
            .posterior(theta, model.dataset.mu0)
            .expect("dimension fixed by construction");
        expected_improvement(post.mean, post.variance.sqrt(), f_best)
    };

    if model.is_empty() {
        let theta: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let acquisition_value = ei_at(&theta);
        return Candidate {
            theta,
            acquisition_value,
        };
    }

    let mut starts: Vec<(f64, usize, Vec<f64>)> = Vec::with_capacity(config.n_random_starts);
    for i in 0..config.n_random_starts {
        let theta: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        starts.push((ei_at(&theta), i, theta));
    }
    // Best first; ties by lowest sample index.
    starts.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    starts.truncate(config.n_local_refine.max(1));

    let (mut best_value, _, mut best_theta) = starts[0].clone();
    for (value, _, theta) in starts {
        let (refined, refined_value) =
            refine(&ei_at, theta, value, config.refine_iterations);
        if refined_value > best_value {
            best_value = refined_value;
            best_theta = refined;
        }
    }
    Candidate {
        theta: best_theta,
        acquisition_value: best_value,
    }
}

/// Coordinate-wise golden-section ascent clipped to [0,1]^d; spends at
/// most `budget` objective evaluations.
fn refine<F: Fn(&[f64]) -> f64>(
    objective: &F,
    mut point: Vec<f64>,
    mut value: f64,
    budget: usize,
) -> (Vec<f64>, f64) {
    const GOLDEN: f64 = 0.618_033_988_749_894_8;
    let d = point.len();
    let mut evals = 0;
    'passes: loop {
        let before = value;
        for dim in 0..d {
            let mut a = 0.0f64;
            let mut b = 1.0f64;
            let eval_coord = |t: f64, point: &mut Vec<f64>| {
                let old = point[dim];
                point[dim] = t;
                let v = objective(point);
                point[dim] = old;
                v
            };
            let mut c = b - GOLDEN * (b - a);
            let mut dd = a + GOLDEN * (b - a);
            let mut fc = eval_coord(c, &mut point);
            let mut fd = eval_coord(dd, &mut point);
            evals += 2;
            while evals < budget && (b - a) > 1e-4 {
                if fc > fd {
                    b = dd;
                    dd = c;
                    fd = fc;
                    c = b - GOLDEN * (b - a);
                    fc = eval_coord(c, &mut point);
                } else {
                    a = c;
                    c = dd;
                    fc = fd;
                    dd = a + GOLDEN * (b - a);
                    fd = eval_coord(dd, &mut point);
                }
                evals += 1;
            }
            let (t, ft) = if fc > fd { (c, fc) } else { (dd, fd) };
            if ft > value {
                point[dim] = t.clamp(0.0, 1.0);
                value = ft;
            }
            if evals >= budget {
                break 'passes;
            }
        }
        if value <= before {
            break;
        }
    }
    (point, value)
}
