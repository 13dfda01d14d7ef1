//! Exact solvers on known tabular MDPs: optimal average reward, policy gain,
//! and diameter.
//!
//! These back regret accounting and test fixtures. They are never consulted
//! by the learning algorithms.

use thiserror::Error;

use crate::mdp::{MdpError, TabularMdp};

/// Default sweep cap for the iterative solvers.
pub const DEFAULT_SWEEP_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("value iteration did not converge in {sweeps} sweeps: span {span} > tol {tol}")]
    GainNonConvergence { sweeps: usize, span: f64, tol: f64 },
    #[error("stationary distribution did not converge in {sweeps} sweeps")]
    StationaryNonConvergence { sweeps: usize },
    #[error("hitting-time iteration for target {target} did not converge in {sweeps} sweeps")]
    HittingTimeNonConvergence { target: usize, sweeps: usize },
    #[error("infinite diameter: state {to} is unreachable from state {from}")]
    InfiniteDiameter { from: usize, to: usize },
    #[error("policy assigns invalid action {action} to state {state}")]
    InvalidPolicy { state: usize, action: usize },
    #[error(
        "no Markov model available: the model set must contain at least one representation \
         that is a Markov model of the environment, with its induced MDP supplied"
    )]
    NoMarkovModel,
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// Solution of the average-reward optimality equation.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSolution {
    /// Optimal gain rho*, clamped to the reward range.
    pub gain: f64,
    /// Bias vector normalized so its minimum entry is 0.
    pub bias: Vec<f64>,
    /// A gain-optimal deterministic policy (lowest action id on ties).
    pub policy: Vec<usize>,
    /// Sweeps used by relative value iteration.
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiameterResult {
    /// Max over ordered state pairs of the minimal expected travel time.
    pub diameter: f64,
    /// `hitting_times[from][to]`; the diagonal is 0.
    pub hitting_times: Vec<Vec<f64>>,
}

/// Optimal average reward by relative value iteration.
///
/// Each sweep applies the Bellman optimality operator of the half-lazy MDP
/// `P <- (I + P) / 2`, which leaves the gain and the greedy policy unchanged
/// while making every induced chain aperiodic, so the span of successive
/// increments converges for periodic instances too (the returned bias is
/// halved back to the original MDP's scale). Stops when that span drops
/// below `tol`; the gain is the midpoint of the final increment's range.
pub fn optimal_gain(mdp: &TabularMdp, tol: f64) -> Result<GainSolution, OracleError> {
    optimal_gain_with_cap(mdp, tol, DEFAULT_SWEEP_CAP)
}

pub fn optimal_gain_with_cap(
    mdp: &TabularMdp,
    tol: f64,
    sweep_cap: usize,
) -> Result<GainSolution, OracleError> {
    if tol <= 0.0 {
        return Err(OracleError::InvalidTolerance(tol));
    }
    let n = mdp.num_states();
    let mut u = vec![0.0f64; n];
    let mut next = vec![0.0f64; n];
    let mut policy = vec![0usize; n];
    let mut last_span = f64::INFINITY;

    for sweep in 1..=sweep_cap {
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut best_action = 0;
            for a in 0..mdp.num_actions() {
                let row = mdp.transition_row(s, a);
                let mut q = mdp.mean_reward(s, a) + 0.5 * u[s];
                for (s2, &p) in row.iter().enumerate() {
                    q += 0.5 * p * u[s2];
                }
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
        if last_span < tol {
            let gain = (0.5 * (lo + hi)).clamp(mdp.min_mean_reward(), mdp.max_mean_reward());
            let min_u = u.iter().copied().fold(f64::INFINITY, f64::min);
            let bias: Vec<f64> = u.iter().map(|&v| (v - min_u) / 2.0).collect();
            return Ok(GainSolution {
                gain,
                bias,
                policy,
                sweeps: sweep,
            });
        }
        let shift = next.iter().copied().fold(f64::INFINITY, f64::min);
        for s in 0..n {
            u[s] = next[s] - shift;
        }
    }
    Err(OracleError::GainNonConvergence {
        sweeps: sweep_cap,
        span: last_span,
        tol,
    })
}

/// Gain of the stationary chain induced by a deterministic policy.
///
/// Power-iterates the occupancy distribution of the half-lazy chain from the
/// point mass on state 0 (same stationary behavior, aperiodic), so the result
/// is the long-run occupancy of the recurrent class reached from state 0.
pub fn policy_gain(mdp: &TabularMdp, policy: &[usize], tol: f64) -> Result<f64, OracleError> {
    if tol <= 0.0 {
        return Err(OracleError::InvalidTolerance(tol));
    }
    let n = mdp.num_states();
    if policy.len() != n {
        return Err(OracleError::InvalidPolicy {
            state: policy.len(),
            action: 0,
        });
    }
    for (s, &a) in policy.iter().enumerate() {
        if a >= mdp.num_actions() {
            return Err(OracleError::InvalidPolicy { state: s, action: a });
        }
    }

    let mut mu = vec![0.0f64; n];
    mu[0] = 1.0;
    let mut next = vec![0.0f64; n];
    for _sweep in 0..DEFAULT_SWEEP_CAP {
        next.iter_mut().for_each(|v| *v = 0.0);
        for s in 0..n {
            if mu[s] == 0.0 {
                continue;
            }
            next[s] += 0.5 * mu[s];
            for (s2, &p) in mdp.transition_row(s, policy[s]).iter().enumerate() {
                next[s2] += 0.5 * mu[s] * p;
            }
        }
        let change: f64 = (0..n).map(|s| (next[s] - mu[s]).abs()).sum();
        std::mem::swap(&mut mu, &mut next);
        if change < tol {
            return Ok((0..n).map(|s| mu[s] * mdp.mean_reward(s, policy[s])).sum());
        }
    }
    Err(OracleError::StationaryNonConvergence {
        sweeps: DEFAULT_SWEEP_CAP,
    })
}

/// Minimal expected travel times between all ordered state pairs, and their
/// maximum (the diameter).
///
/// For each target the stochastic-shortest-path fixed point
/// `T(s) = 1 + min_a P(.|s,a) . T` with `T(target) = 0` is value-iterated to
/// `tol`. A target unreachable from some state is reported as an infinite
/// diameter with the offending pair.
pub fn diameter(mdp: &TabularMdp, tol: f64) -> Result<DiameterResult, OracleError> {
    if tol <= 0.0 {
        return Err(OracleError::InvalidTolerance(tol));
    }
    let n = mdp.num_states();
    let mut hitting = vec![vec![0.0f64; n]; n];
    let mut max_time = 0.0f64;

    for target in 0..n {
        // States that can reach the target at all; value iteration diverges
        // exactly on the complement.
        let mut reaches = vec![false; n];
        reaches[target] = true;
        loop {
            let mut grew = false;
            for s in 0..n {
                if reaches[s] {
                    continue;
                }
                let touches = (0..mdp.num_actions()).any(|a| {
                    mdp.transition_row(s, a)
                        .iter()
                        .enumerate()
                        .any(|(s2, &p)| p > 0.0 && reaches[s2])
                });
                if touches {
                    reaches[s] = true;
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        if let Some(from) = reaches.iter().position(|&r| !r) {
            return Err(OracleError::InfiniteDiameter { from, to: target });
        }

        let mut times = vec![0.0f64; n];
        let mut converged = false;
        for _sweep in 0..DEFAULT_SWEEP_CAP {
            let mut change = 0.0f64;
            for s in 0..n {
                if s == target {
                    continue;
                }
                let mut best = f64::INFINITY;
                for a in 0..mdp.num_actions() {
                    let mut q = 1.0;
                    for (s2, &p) in mdp.transition_row(s, a).iter().enumerate() {
                        if s2 != target {
                            q += p * times[s2];
                        }
                    }
                    best = best.min(q);
                }
                change = change.max((best - times[s]).abs());
                times[s] = best;
            }
            if change < tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(OracleError::HittingTimeNonConvergence {
                target,
                sweeps: DEFAULT_SWEEP_CAP,
            });
        }
        for s in 0..n {
            hitting[s][target] = if s == target { 0.0 } else { times[s] };
            max_time = max_time.max(hitting[s][target]);
        }
    }

    Ok(DiameterResult {
        diameter: max_time,
        hitting_times: hitting,
    })
}

/// Highest optimal gain among the Markov-flagged representations, given their
/// induced MDPs (`None` marks a non-Markov candidate). Ties go to the lowest
/// index.
pub fn best_markov_gain(
    candidates: &[Option<&TabularMdp>],
    tol: f64,
) -> Result<(f64, usize), OracleError> {
    let mut best: Option<(f64, usize)> = None;
    for (index, candidate) in candidates.iter().enumerate() {
        if let Some(mdp) = candidate {
            let gain = optimal_gain(mdp, tol)?.gain;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, index));
            }
        }
    }
    best.ok_or(OracleError::NoMarkovModel)
}
