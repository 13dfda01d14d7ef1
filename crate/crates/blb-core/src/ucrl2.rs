//! A self-contained optimistic average-reward learner with doubling episodes
//! and extended value iteration.
//!
//! The selection layer treats this as a black box: it constructs a fresh
//! instance per run, feeds it transitions, and reads back actions. Everything
//! here is deterministic given the observation stream; ties break toward the
//! lowest index throughout so traces replay exactly.

use rand::RngCore;
use thiserror::Error;

use crate::env::{EnvError, Environment};
use crate::history::History;
use crate::rep::Representation;

/// Sweep cap for extended value iteration.
pub const EVI_SWEEP_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Ucrl2Error {
    #[error("confidence parameter must be in (0, 1), got {0}")]
    InvalidConfidence(f64),
    #[error("state space and action space must be nonempty")]
    EmptyModel,
    #[error("state {state} out of range ({num_states} states)")]
    StateOutOfRange { state: usize, num_states: usize },
    #[error("action {action} out of range ({num_actions} actions)")]
    ActionOutOfRange { action: usize, num_actions: usize },
    #[error("observed reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("extended value iteration did not converge in {sweeps} sweeps (span {span})")]
    EviNonConvergence { sweeps: usize, span: f64 },
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// The optimistic MDP chosen by extended value iteration, together with its
/// gain estimate, value vector and greedy policy.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimisticModel {
    /// Optimistic reward upper bounds, capped at 1.
    pub reward_upper: Vec<Vec<f64>>,
    /// Chosen optimistic kernels, one distribution per (state, action).
    pub kernels: Vec<Vec<Vec<f64>>>,
    /// Midpoint of the final increment's range.
    pub gain: f64,
    /// Value vector at which the policy was extracted (min-normalized).
    pub value: Vec<f64>,
    /// Greedy policy, lowest action id on ties.
    pub policy: Vec<usize>,
    pub sweeps: usize,
}

/// Maximizer of `p . u` over the L1 ball of radius `width` around `p_hat`
/// (intersected with the simplex): raise the best-value state's mass by
/// `width / 2` (capped at 1), then strip the excess from the worst-value
/// states upward.
pub fn inner_max_transition(p_hat: &[f64], width: f64, u: &[f64]) -> Vec<f64> {
    let n = p_hat.len();
    let mut best = 0;
    for i in 1..n {
        if u[i] > u[best] {
            best = i;
        }
    }
    let mut p = p_hat.to_vec();
    p[best] = (p_hat[best] + width / 2.0).min(1.0);

    let mut order: Vec<usize> = (0..n).filter(|&i| i != best).collect();
    order.sort_by(|&a, &b| u[a].partial_cmp(&u[b]).unwrap().then(a.cmp(&b)));

    let mut excess: f64 = p.iter().sum::<f64>() - 1.0;
    for i in order {
        if excess <= 0.0 {
            break;
        }
        let cut = p[i].min(excess);
        p[i] -= cut;
        excess -= cut;
    }
    p
}

/// Extended value iteration over the plausible-MDP set described by reward
/// upper bounds and per-row L1 transition balls.
///
/// Iterates `u <- max_a [ r~(s,a) + p~(s,a) . u ]` with the optimistic kernel
/// from [`inner_max_transition`], re-centering by the minimum each sweep, and
/// stops once the span of the increment drops below `stop_span`. The gain is
/// the midpoint of the final increment's range; the greedy policy is
/// extracted from the same sweep.
pub fn extended_value_iteration(
    reward_upper: &[Vec<f64>],
    p_hat: &[Vec<Vec<f64>>],
    width_p: &[Vec<f64>],
    stop_span: f64,
    sweep_cap: usize,
) -> Result<OptimisticModel, Ucrl2Error> {
    let n = reward_upper.len();
    let num_actions = reward_upper[0].len();
    let mut u = vec![0.0f64; n];
    let mut next = vec![0.0f64; n];
    let mut policy = vec![0usize; n];
    let mut kernels = vec![vec![Vec::new(); num_actions]; n];
    let mut last_span = f64::INFINITY;

    for sweep in 1..=sweep_cap {
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut best_action = 0;
            for a in 0..num_actions {
                let kernel = inner_max_transition(&p_hat[s][a], width_p[s][a], &u);
                let mut q = reward_upper[s][a];
                for (s2, &p) in kernel.iter().enumerate() {
                    q += p * u[s2];
                }
                kernels[s][a] = kernel;
                if q > best {
                    best = q;
                    best_action = a;
                }
            }
            next[s] = best;
            policy[s] = best_action;
        }
        let lo = (0..n).map(|s| next[s] - u[s]).fold(f64::INFINITY, f64::min);
        let hi = (0..n)
            .map(|s| next[s] - u[s])
            .fold(f64::NEG_INFINITY, f64::max);
        last_span = hi - lo;
        if last_span < stop_span {
            let min_u = u.iter().copied().fold(f64::INFINITY, f64::min);
            return Ok(OptimisticModel {
                reward_upper: reward_upper.to_vec(),
                kernels,
                gain: 0.5 * (lo + hi),
                value: u.iter().map(|&v| v - min_u).collect(),
                policy,
                sweeps: sweep,
            });
        }
        let shift = next.iter().copied().fold(f64::INFINITY, f64::min);
        for s in 0..n {
            u[s] = next[s] - shift;
        }
    }
    Err(Ucrl2Error::EviNonConvergence {
        sweeps: sweep_cap,
        span: last_span,
    })
}

/// Learner state: visit counts, episode-local counts, transition counts,
/// accumulated rewards, and the current greedy policy.
///
/// `visit_count[s][a]` holds data folded in at episode boundaries while
/// `episode_count[s][a]` accumulates within the episode, so mid-episode the
/// bookkeeping identity is
/// `sum_s' transition_count[s][a][s'] = visit_count[s][a] + episode_count[s][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ucrl2 {
    num_states: usize,
    num_actions: usize,
    confidence: f64,
    t: u64,
    visit_count: Vec<Vec<u64>>,
    episode_count: Vec<Vec<u64>>,
    transition_count: Vec<Vec<Vec<u64>>>,
    reward_sum: Vec<Vec<f64>>,
    policy: Vec<usize>,
    episode_start: u64,
}

impl Ucrl2 {
    /// Fresh learner with zeroed counts; the initial policy comes from
    /// extended value iteration on vacuous data (fully optimistic model).
    pub fn new(num_states: usize, num_actions: usize, confidence: f64) -> Result<Self, Ucrl2Error> {
        if num_states == 0 || num_actions == 0 {
            return Err(Ucrl2Error::EmptyModel);
        }
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(Ucrl2Error::InvalidConfidence(confidence));
        }
        let mut agent = Self {
            num_states,
            num_actions,
            confidence,
            t: 1,
            visit_count: vec![vec![0; num_actions]; num_states],
            episode_count: vec![vec![0; num_actions]; num_states],
            transition_count: vec![vec![vec![0; num_states]; num_actions]; num_states],
            reward_sum: vec![vec![0.0; num_actions]; num_states],
            policy: vec![0; num_states],
            episode_start: 1,
        };
        agent.replan()?;
        Ok(agent)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Global step counter within this run: observed transitions + 1.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn visit_count(&self, state: usize, action: usize) -> u64 {
        self.visit_count[state][action]
    }

    pub fn episode_count(&self, state: usize, action: usize) -> u64 {
        self.episode_count[state][action]
    }

    pub fn transition_count(&self, state: usize, action: usize, next: usize) -> u64 {
        self.transition_count[state][action][next]
    }

    pub fn reward_sum(&self, state: usize, action: usize) -> f64 {
        self.reward_sum[state][action]
    }

    pub fn policy(&self) -> &[usize] {
        &self.policy
    }

    /// Confidence widths `(W_r, W_p)` for the reward mean and the transition
    /// row of `(state, action)`, from the folded visit count.
    pub fn confidence_widths(&self, state: usize, action: usize) -> (f64, f64) {
        let n = self.visit_count[state][action].max(1) as f64;
        let t = self.t as f64;
        let s_count = self.num_states as f64;
        let a_count = self.num_actions as f64;
        let w_r = (7.0 * (2.0 * s_count * a_count * t / self.confidence).ln() / (2.0 * n)).sqrt();
        let w_p = (14.0 * s_count * (2.0 * a_count * t / self.confidence).ln() / n).sqrt();
        (w_r, w_p)
    }

    /// Optimistic planning over the current confidence set, stopping at span
    /// `1 / sqrt(t)`.
    pub fn extended_value_iteration(&self) -> Result<OptimisticModel, Ucrl2Error> {
        let mut reward_upper = vec![vec![0.0; self.num_actions]; self.num_states];
        let mut p_hat = vec![vec![Vec::new(); self.num_actions]; self.num_states];
        let mut width_p = vec![vec![0.0; self.num_actions]; self.num_states];
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let observed: u64 = self.transition_count[s][a].iter().sum();
                let mean = self.reward_sum[s][a] / observed.max(1) as f64;
                let (w_r, w_p) = self.confidence_widths(s, a);
                reward_upper[s][a] = (mean + w_r).min(1.0);
                width_p[s][a] = w_p;
                p_hat[s][a] = if observed == 0 {
                    vec![1.0 / self.num_states as f64; self.num_states]
                } else {
                    self.transition_count[s][a]
                        .iter()
                        .map(|&c| c as f64 / observed as f64)
                        .collect()
                };
            }
        }
        let stop_span = 1.0 / (self.t as f64).sqrt();
        extended_value_iteration(&reward_upper, &p_hat, &width_p, stop_span, EVI_SWEEP_CAP)
    }

    fn replan(&mut self) -> Result<(), Ucrl2Error> {
        let model = self.extended_value_iteration()?;
        self.policy = model.policy;
        Ok(())
    }

    fn fold_episode(&mut self) {
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                self.visit_count[s][a] += self.episode_count[s][a];
                self.episode_count[s][a] = 0;
            }
        }
        self.episode_start = self.t;
    }

    /// Action for the current state. If the episode-local count of the pair
    /// about to be played has reached `max(1, N(s, a))`, the episode ends
    /// first: counts are folded in and the policy is recomputed.
    pub fn act(&mut self, state: usize) -> Result<usize, Ucrl2Error> {
        if state >= self.num_states {
            return Err(Ucrl2Error::StateOutOfRange {
                state,
                num_states: self.num_states,
            });
        }
        let action = self.policy[state];
        if self.episode_count[state][action] >= self.visit_count[state][action].max(1) {
            self.fold_episode();
            self.replan()?;
            return Ok(self.policy[state]);
        }
        Ok(action)
    }

    /// Record one observed transition.
    pub fn update(
        &mut self,
        state: usize,
        action: usize,
        reward: f64,
        next_state: usize,
    ) -> Result<(), Ucrl2Error> {
        if state >= self.num_states || next_state >= self.num_states {
            return Err(Ucrl2Error::StateOutOfRange {
                state: state.max(next_state),
                num_states: self.num_states,
            });
        }
        if action >= self.num_actions {
            return Err(Ucrl2Error::ActionOutOfRange {
                action,
                num_actions: self.num_actions,
            });
        }
        if !(0.0..=1.0).contains(&reward) {
            return Err(Ucrl2Error::RewardOutOfRange(reward));
        }
        self.episode_count[state][action] += 1;
        self.reward_sum[state][action] += reward;
        self.transition_count[state][action][next_state] += 1;
        self.t += 1;
        Ok(())
    }
}

/// Run a fresh learner on `env` through `rep` for `num_steps` steps,
/// extending the shared history in place. Returns the per-step rewards.
pub fn run(
    env: &dyn Environment,
    rep: &Representation,
    confidence: f64,
    num_steps: u64,
    history: &mut History,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>, Ucrl2Error> {
    let mut agent = Ucrl2::new(rep.state_count(), env.action_count(), confidence)?;
    let mut rewards = Vec::with_capacity(num_steps as usize);
    for _ in 0..num_steps {
        let state = rep.state_of(history);
        let action = agent.act(state)?;
        let (reward, observation) = env.step(history, action, rng)?;
        history.push(action, reward, observation);
        let next_state = rep.state_of(history);
        agent.update(state, action, reward, next_state)?;
        rewards.push(reward);
    }
    Ok(rewards)
}
