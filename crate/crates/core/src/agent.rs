//! Tabular SARSA(λ) with ε-greedy and softmax action selection.
//!
//! Tables are flat arrays over (state, action); eligibility traces keep a
//! list of active indices so the per-step update touches only pairs with
//! nonzero credit.

use rand::Rng;
use thiserror::Error;

use crate::env::{self, Action, GridSpec};

/// Traces below this magnitude are dropped from the active set.
const TRACE_PRUNE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("hyper-parameter {name} = {value} outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("softmax temperature must be positive, got {0}")]
    NonPositiveTau(f64),
}

/// The 4-vector θ = (α, ε, γ, λ) the optimizer searches over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl HyperParams {
    pub fn new(alpha: f64, epsilon: f64, gamma: f64, lambda: f64) -> Result<Self, AgentError> {
        let check = |name: &'static str, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(value)
            } else {
                Err(AgentError::OutOfRange { name, value })
            }
        };
        Ok(HyperParams {
            alpha: check("alpha", alpha)?,
            epsilon: check("epsilon", epsilon)?,
            gamma: check("gamma", gamma)?,
            lambda: check("lambda", lambda)?,
        })
    }

    /// SARSA(λ) defaults from the Soar cognitive architecture manual.
    pub fn soar_default() -> Self {
        HyperParams {
            alpha: 0.3,
            epsilon: 0.1,
            gamma: 0.9,
            lambda: 0.001,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.epsilon, self.gamma, self.lambda]
    }

    pub fn from_array(v: [f64; 4]) -> Result<Self, AgentError> {
        HyperParams::new(v[0], v[1], v[2], v[3])
    }
}

/// Accumulating traces add 1 on a visit; replacing traces reset to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceKind {
    #[default]
    Accumulating,
    Replacing,
}

/// Q(s, a) over grid states × 4 actions, default 0 for unseen pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
}

impl QTable {
    pub fn new(n_states: usize) -> Self {
        QTable {
            values: vec![0.0; n_states * 4],
        }
    }

    #[inline]
    pub fn get(&self, state: usize, action: Action) -> f64 {
        self.values[state * 4 + action.index()]
    }

    #[inline]
    #[cfg(test)]
    fn get_mut(&mut self, state: usize, action: Action) -> &mut f64 {
        &mut self.values[state * 4 + action.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Eligibility traces e(s, a) >= 0 with an index of active entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    values: Vec<f64>,
    active: Vec<usize>,
}

impl TraceTable {
    pub fn new(n_states: usize) -> Self {
        TraceTable {
            values: vec![0.0; n_states * 4],
            active: Vec::new(),
        }
    }

    pub fn get(&self, state: usize, action: Action) -> f64 {
        self.values[state * 4 + action.index()]
    }

    /// Number of pairs with nonzero trace.
    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    pub fn clear(&mut self) {
        for &i in &self.active {
            self.values[i] = 0.0;
        }
        self.active.clear();
    }
}

/// Fresh zeroed tables; carries nothing over from prior configurations.
pub fn init_agent(spec: &GridSpec) -> (QTable, TraceTable) {
    (QTable::new(spec.n_states()), TraceTable::new(spec.n_states()))
}

/// ε-greedy selection: random with probability ε (uniform over all four
/// actions), otherwise greedy with uniform tie-breaking.
pub fn select_action_egreedy<R: Rng>(
    q: &QTable,
    state: usize,
    epsilon: f64,
    rng: &mut R,
) -> Action {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Action::from_index(rng.random_range(0..4));
    }
    greedy_action(q, state, rng)
}

fn greedy_action<R: Rng>(q: &QTable, state: usize, rng: &mut R) -> Action {
    let mut best = f64::NEG_INFINITY;
    let mut ties: [usize; 4] = [0; 4];
    let mut n_ties = 0;
    for a in Action::ALL {
        let v = q.get(state, a);
        if v > best {
            best = v;
            ties[0] = a.index();
            n_ties = 1;
        } else if v == best {
            ties[n_ties] = a.index();
            n_ties += 1;
        }
    }
    if n_ties == 0 {
        // All values are NaN (divergent extreme hyper-parameters can blow
        // the table up); treat that as a four-way tie.
        return Action::from_index(rng.random_range(0..4));
    }
    let pick = if n_ties == 1 {
        ties[0]
    } else {
        ties[rng.random_range(0..n_ties)]
    };
    Action::from_index(pick)
}

/// Boltzmann action distribution p(a) ∝ exp(Q(s,a)/τ), max-subtracted.
pub fn softmax_probs(q: &QTable, state: usize, tau: f64) -> Result<[f64; 4], AgentError> {
    if tau <= 0.0 {
        return Err(AgentError::NonPositiveTau(tau));
    }
    let scaled: Vec<f64> = Action::ALL.iter().map(|&a| q.get(state, a) / tau).collect();
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs = [0.0; 4];
    let mut sum = 0.0;
    for (p, s) in probs.iter_mut().zip(&scaled) {
        *p = (s - max).exp();
        sum += *p;
    }
    if !sum.is_finite() || sum <= 0.0 {
        // Non-finite table values (divergent extreme hyper-parameters)
        // degrade to the uniform distribution.
        return Ok([0.25; 4]);
    }
    for p in &mut probs {
        *p /= sum;
    }
    Ok(probs)
}

/// Sample an action from the softmax distribution.
pub fn select_action_softmax<R: Rng>(
    q: &QTable,
    state: usize,
    tau: f64,
    rng: &mut R,
) -> Result<Action, AgentError> {
    let probs = softmax_probs(q, state, tau)?;
    let draw = rng.random::<f64>();
    let mut acc = 0.0;
    for a in Action::ALL {
        acc += probs[a.index()];
        if draw < acc {
            return Ok(a);
        }
    }
    Ok(Action::Right)
}

/// One SARSA(λ) backup over a transition (s, a, r, s', a').
///
/// δ = r + γ·Q(s',a') − Q(s,a), with the bootstrap term zero at terminal
/// states. The trace at (s,a) is bumped, every active pair gets α·δ·e and
/// traces decay by γλ, pruning entries below 1e-8.
#[allow(clippy::too_many_arguments)]
pub fn sarsa_lambda_update(
    q: &mut QTable,
    e: &mut TraceTable,
    state: usize,
    action: Action,
    reward: f64,
    next: Option<(usize, Action)>,
    hp: &HyperParams,
    trace_kind: TraceKind,
) {
    let bootstrap = match next {
        Some((s2, a2)) => q.get(s2, a2),
        None => 0.0,
    };
    let delta = reward + hp.gamma * bootstrap - q.get(state, action);

    let idx = state * 4 + action.index();
    if e.values[idx] == 0.0 {
        e.active.push(idx);
    }
    match trace_kind {
        TraceKind::Accumulating => e.values[idx] += 1.0,
        TraceKind::Replacing => e.values[idx] = 1.0,
    }

    let decay = hp.gamma * hp.lambda;
    let step = hp.alpha * delta;
    let mut kept = 0;
    for k in 0..e.active.len() {
        let i = e.active[k];
        q.values[i] += step * e.values[i];
        e.values[i] *= decay;
        if e.values[i] >= TRACE_PRUNE {
            e.active[kept] = i;
            kept += 1;
        } else {
            e.values[i] = 0.0;
        }
    }
    e.active.truncate(kept);
}

/// Outcome of one agent episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeResult {
    pub steps: u32,
    pub success: bool,
    pub episode_index: u32,
}

/// Run one ε-greedy episode: reset, act/step/update until goal or cutoff.
///
/// Traces are cleared at episode start. An episode is successful only when
/// the goal is reached in fewer than `cutoff` steps; otherwise `steps`
/// saturates at the cutoff.
#[allow(clippy::too_many_arguments)]
pub fn run_episode<R: Rng>(
    spec: &GridSpec,
    q: &mut QTable,
    e: &mut TraceTable,
    hp: &HyperParams,
    episode_index: u32,
    cutoff: u32,
    trace_kind: TraceKind,
    rng: &mut R,
) -> EpisodeResult {
    assert!(cutoff >= 1);
    e.clear();
    let mut state = env::reset(spec, episode_index);
    let mut s_idx = spec.state_index(state.position);
    let mut action = select_action_egreedy(q, s_idx, hp.epsilon, rng);

    loop {
        let (next_state, reward, terminal) =
            env::step(spec, &state, action).expect("episode loop never steps from goal");
        let n_idx = spec.state_index(next_state.position);
        if terminal {
            sarsa_lambda_update(q, e, s_idx, action, reward, None, hp, trace_kind);
            return EpisodeResult {
                steps: next_state.step_count,
                success: next_state.step_count < cutoff,
                episode_index,
            };
        }
        if next_state.step_count >= cutoff {
            // Cut off: no terminal bootstrap credit, episode unsuccessful.
            let next_action = select_action_egreedy(q, n_idx, hp.epsilon, rng);
            sarsa_lambda_update(
                q,
                e,
                s_idx,
                action,
                reward,
                Some((n_idx, next_action)),
                hp,
                trace_kind,
            );
            return EpisodeResult {
                steps: cutoff,
                success: false,
                episode_index,
            };
        }
        let next_action = select_action_egreedy(q, n_idx, hp.epsilon, rng);
        sarsa_lambda_update(
            q,
            e,
            s_idx,
            action,
            reward,
            Some((n_idx, next_action)),
            hp,
            trace_kind,
        );
        state = next_state;
        s_idx = n_idx;
        action = next_action;
    }
}
