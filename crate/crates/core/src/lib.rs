//! Autonomous hyper-parameter tuning for a tabular SARSA(λ) agent.
//!
//! The optimizer treats the agent's performance under a hyper-parameter
//! vector θ = (α, ε, γ, λ) as an expensive black-box function, models it
//! with a Gaussian process and picks the next θ by maximizing expected
//! improvement. A two-armed bandit decides how many times each θ is
//! re-evaluated before its average enters the surrogate dataset.
//!
//! Modules map onto the moving parts:
//!
//! * [`env`] — gridworld with an episode-indexed obstacle schedule
//! * [`agent`] — tabular SARSA(λ) with ε-greedy / softmax selection
//! * [`gp`] — exact GP regression (squared-exponential kernel, Cholesky)
//! * [`acquisition`] — expected improvement + Latin hypercube seeding
//! * [`bandit`] — the stop-vs-resample query bandit
//! * [`orchestrator`] — the meta-episode loop and random-search baseline
//! * [`harness`] — configuration, batches, aggregation, CSV artifacts

pub mod acquisition;
pub mod agent;
pub mod bandit;
pub mod env;
pub mod gp;
pub mod harness;
pub mod orchestrator;
pub mod stats;

/// Direction of the raw performance metric being optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// True when `a` is at least as good as `b` under this direction.
    pub fn at_least_as_good(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Maximize => a >= b,
            Direction::Minimize => a <= b,
        }
    }

    /// The better of two values under this direction.
    pub fn better(self, a: f64, b: f64) -> f64 {
        match self {
            Direction::Maximize => a.max(b),
            Direction::Minimize => a.min(b),
        }
    }
}
