//! Two-armed bandit deciding whether to re-evaluate the objective under
//! the current hyper-parameter vector (resample) or accept its average
//! and move on (stop).
//!
//! The reward signal is the standardized quality of the current vector:
//! r = Φ(z) with z the z-score of its sample mean against all prior
//! meta-episode averages. The resample arm is credited r, the stop arm
//! 1 − r, so resampling stays attractive exactly while the current vector
//! looks better than the history.

use rand::Rng;
use thiserror::Error;

use crate::stats::{mean, normal_cdf, sample_std};
use crate::Direction;

#[derive(Debug, Error)]
pub enum BanditError {
    #[error("run bounds invalid: min_runs = {min_runs}, max_runs = {max_runs} (need 1 <= min <= max)")]
    BadRunBounds { min_runs: u32, max_runs: u32 },
    #[error("policy parameter invalid: {0}")]
    BadPolicy(String),
    #[error("decide_if_next_query needs at least one sample for the current vector")]
    NoSamples,
}

/// Pull count plus streaming mean / sum-of-squared-deviations (Welford).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmStats {
    pub pulls: u64,
    pub mean: f64,
    pub m2: f64,
}

impl ArmStats {
    /// Sample variance m2/(n − 1); 0 for fewer than two pulls.
    pub fn variance(&self) -> f64 {
        if self.pulls < 2 {
            0.0
        } else {
            self.m2 / (self.pulls - 1) as f64
        }
    }
}

/// Streaming update of (pulls, mean, m2); permutation of a fixed reward
/// multiset leaves the final moments unchanged to rounding.
pub fn update_arm(arm: ArmStats, reward: f64) -> ArmStats {
    debug_assert!(reward.is_finite());
    let pulls = arm.pulls + 1;
    let delta = reward - arm.mean;
    let mean = arm.mean + delta / pulls as f64;
    let m2 = arm.m2 + delta * (reward - mean);
    ArmStats { pulls, mean, m2 }
}

/// The five selection policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BanditPolicy {
    Greedy,
    EGreedy { epsilon: f64 },
    Softmax { tau: f64 },
    Ucb1,
    Ucb1Tuned,
}

impl BanditPolicy {
    pub fn validate(&self) -> Result<(), BanditError> {
        match *self {
            BanditPolicy::EGreedy { epsilon } if !(0.0..=1.0).contains(&epsilon) => Err(
                BanditError::BadPolicy(format!("egreedy epsilon {epsilon} outside [0, 1]")),
            ),
            BanditPolicy::Softmax { tau } if tau <= 0.0 => Err(BanditError::BadPolicy(format!(
                "softmax tau {tau} must be > 0"
            ))),
            _ => Ok(()),
        }
    }
}

/// Which of the two arms was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Stop,
    Resample,
}

/// Bandit state for one optimizer execution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QoState {
    pub arm_stop: ArmStats,
    pub arm_resample: ArmStats,
}

impl QoState {
    pub fn total_pulls(&self) -> u64 {
        self.arm_stop.pulls + self.arm_resample.pulls
    }
}

/// UCB1 score μ̂ + √(2 ln t / n); +∞ for an unpulled arm so each arm is
/// explored at least once. `t` is passed as a real so scores can be
/// evaluated at arbitrary points.
pub fn ucb1_score(arm: &ArmStats, t: f64) -> f64 {
    if arm.pulls == 0 {
        return f64::INFINITY;
    }
    arm.mean + (2.0 * t.ln() / arm.pulls as f64).sqrt()
}

/// UCB1-Tuned score μ̂ + √((ln t / n)·min(¼, V)) with
/// V = σ̂² + √(2 ln t / n); +∞ for an unpulled arm.
pub fn ucb1tuned_score(arm: &ArmStats, t: f64) -> f64 {
    if arm.pulls == 0 {
        return f64::INFINITY;
    }
    let n = arm.pulls as f64;
    let v = arm.variance() + (2.0 * t.ln() / n).sqrt();
    arm.mean + (t.ln() / n * v.min(0.25)).sqrt()
}

/// Select stop or resample under the given policy. Ties resolve to
/// resample (exploration-favoring cold-start default).
pub fn select_arm<R: Rng>(policy: BanditPolicy, state: &QoState, rng: &mut R) -> Arm {
    let greedy_pick = |stop: f64, resample: f64| {
        if resample >= stop {
            Arm::Resample
        } else {
            Arm::Stop
        }
    };
    match policy {
        BanditPolicy::Greedy => greedy_pick(state.arm_stop.mean, state.arm_resample.mean),
        BanditPolicy::EGreedy { epsilon } => {
            if rng.random::<f64>() < epsilon {
                if rng.random::<f64>() < 0.5 {
                    Arm::Stop
                } else {
                    Arm::Resample
                }
            } else {
                greedy_pick(state.arm_stop.mean, state.arm_resample.mean)
            }
        }
        BanditPolicy::Softmax { tau } => {
            // P(i) ∝ exp(τ·μ̂_i), max-subtracted for safety.
            let s = tau * state.arm_stop.mean;
            let r = tau * state.arm_resample.mean;
            let m = s.max(r);
            let ps = (s - m).exp();
            let pr = (r - m).exp();
            if rng.random::<f64>() < ps / (ps + pr) {
                Arm::Stop
            } else {
                Arm::Resample
            }
        }
        BanditPolicy::Ucb1 | BanditPolicy::Ucb1Tuned => {
            if state.arm_resample.pulls == 0 {
                return Arm::Resample;
            }
            if state.arm_stop.pulls == 0 {
                return Arm::Stop;
            }
            let t = state.total_pulls() as f64;
            let score = match policy {
                BanditPolicy::Ucb1 => ucb1_score,
                _ => ucb1tuned_score,
            };
            greedy_pick(score(&state.arm_stop, t), score(&state.arm_resample, t))
        }
    }
}

/// Decide whether to query the objective again under the current vector.
///
/// Unconditionally true below `min_runs` samples and false at `max_runs`;
/// in between, both arms are credited from the standardized quality of the
/// current vector and the policy picks the arm.
#[allow(clippy::too_many_arguments)]
pub fn decide_if_next_query<R: Rng>(
    samples_for_current_theta: &[f64],
    all_prior_meta_averages: &[f64],
    qo: &mut QoState,
    policy: BanditPolicy,
    min_runs: u32,
    max_runs: u32,
    direction: Direction,
    rng: &mut R,
) -> Result<bool, BanditError> {
    if min_runs < 1 || min_runs > max_runs {
        return Err(BanditError::BadRunBounds { min_runs, max_runs });
    }
    policy.validate()?;
    let count = samples_for_current_theta.len() as u32;
    if count == 0 {
        return Err(BanditError::NoSamples);
    }
    if count < min_runs {
        return Ok(true);
    }
    if count >= max_runs {
        return Ok(false);
    }

    let current = mean(samples_for_current_theta);
    let z = if all_prior_meta_averages.len() < 2 {
        0.0
    } else {
        let prior_mean = mean(all_prior_meta_averages);
        let prior_std = sample_std(all_prior_meta_averages);
        if prior_std <= 0.0 {
            0.0
        } else {
            let raw = (current - prior_mean) / prior_std;
            match direction {
                Direction::Maximize => raw,
                Direction::Minimize => -raw,
            }
        }
    };
    let r = normal_cdf(z);
    qo.arm_resample = update_arm(qo.arm_resample, r);
    qo.arm_stop = update_arm(qo.arm_stop, 1.0 - r);
    Ok(select_arm(policy, qo, rng) == Arm::Resample)
}
