//! Tabular MDPs: finite `S x A` transition kernels with mean-reward tables.
//!
//! These are inputs to the exact oracles and to synthetic environment
//! construction. The learning algorithms never see them.

use thiserror::Error;

/// Tolerance for transition rows summing to one.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("transition table is empty or ragged: {0}")]
    BadShape(String),
    #[error("transition row ({state}, {action}) sums to {sum}, not 1")]
    RowNotStochastic { state: usize, action: usize, sum: f64 },
    #[error("transition probability ({state}, {action}, {next}) = {value} outside [0, 1]")]
    ProbabilityOutOfRange {
        state: usize,
        action: usize,
        next: usize,
        value: f64,
    },
    #[error("mean reward ({state}, {action}) = {value} outside [0, 1]")]
    RewardOutOfRange { state: usize, action: usize, value: f64 },
    #[error("not weakly communicating: state {to} is unreachable from state {from}")]
    NotWeaklyCommunicating { from: usize, to: usize },
}

/// A finite MDP given by explicit tables.
///
/// `transitions[s][a]` is a row-stochastic distribution over next states and
/// `mean_rewards[s][a]` is the mean reward in `[0, 1]` for playing `a` in `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    transitions: Vec<Vec<Vec<f64>>>,
    mean_rewards: Vec<Vec<f64>>,
}

impl TabularMdp {
    /// Validate tables and build the MDP.
    ///
    /// Checks shapes, probability ranges, row sums (within [`ROW_SUM_TOL`])
    /// and reward ranges. Weak communication is a separate, optional check
    /// ([`TabularMdp::check_weakly_communicating`]) so that pathological
    /// instances can still be constructed and diagnosed.
    pub fn new(
        transitions: Vec<Vec<Vec<f64>>>,
        mean_rewards: Vec<Vec<f64>>,
    ) -> Result<Self, MdpError> {
        let num_states = transitions.len();
        if num_states == 0 {
            return Err(MdpError::BadShape("no states".into()));
        }
        let num_actions = transitions[0].len();
        if num_actions == 0 {
            return Err(MdpError::BadShape("no actions".into()));
        }
        if mean_rewards.len() != num_states {
            return Err(MdpError::BadShape(format!(
                "reward table has {} states, transitions have {}",
                mean_rewards.len(),
                num_states
            )));
        }
        for s in 0..num_states {
            if transitions[s].len() != num_actions || mean_rewards[s].len() != num_actions {
                return Err(MdpError::BadShape(format!(
                    "state {s} has inconsistent action count"
                )));
            }
            for a in 0..num_actions {
                let row = &transitions[s][a];
                if row.len() != num_states {
                    return Err(MdpError::BadShape(format!(
                        "transition row ({s}, {a}) has length {}, expected {num_states}",
                        row.len()
                    )));
                }
                for (next, &p) in row.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(MdpError::ProbabilityOutOfRange {
                            state: s,
                            action: a,
                            next,
                            value: p,
                        });
                    }
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(MdpError::RowNotStochastic {
                        state: s,
                        action: a,
                        sum,
                    });
                }
                let r = mean_rewards[s][a];
                if !(0.0..=1.0).contains(&r) {
                    return Err(MdpError::RewardOutOfRange {
                        state: s,
                        action: a,
                        value: r,
                    });
                }
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            transitions,
            mean_rewards,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn transition_row(&self, state: usize, action: usize) -> &[f64] {
        &self.transitions[state][action]
    }

    pub fn mean_reward(&self, state: usize, action: usize) -> f64 {
        self.mean_rewards[state][action]
    }

    pub fn min_mean_reward(&self) -> f64 {
        self.mean_rewards
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_mean_reward(&self) -> f64 {
        self.mean_rewards
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// States reachable from `from` in the union-over-actions support graph.
    pub(crate) fn reachable_from(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.num_states];
        let mut queue = vec![from];
        seen[from] = true;
        while let Some(s) = queue.pop() {
            for a in 0..self.num_actions {
                for (next, &p) in self.transitions[s][a].iter().enumerate() {
                    if p > 0.0 && !seen[next] {
                        seen[next] = true;
                        queue.push(next);
                    }
                }
            }
        }
        seen
    }

    /// Check that every ordered state pair is connected by some action
    /// sequence with positive probability (reachability closure on the
    /// union-over-actions support graph). Reports the first failing pair.
    pub fn check_weakly_communicating(&self) -> Result<(), MdpError> {
        for from in 0..self.num_states {
            let seen = self.reachable_from(from);
            if let Some(to) = seen.iter().position(|&r| !r) {
                return Err(MdpError::NotWeaklyCommunicating { from, to });
            }
        }
        Ok(())
    }
}

/// Ready-made instances used in experiments and tests.
pub mod builtins {
    use super::TabularMdp;

    /// Deterministic two-state cycle: every action moves to the other state;
    /// state 0 pays 0, state 1 pays 1. Optimal gain 1/2, diameter 1.
    pub fn two_cycle() -> TabularMdp {
        TabularMdp::new(
            vec![
                vec![vec![0.0, 1.0]],
                vec![vec![1.0, 0.0]],
            ],
            vec![vec![0.0], vec![1.0]],
        )
        .expect("static tables are valid")
    }

    /// Two states, two actions; reward is only paid in state 1 under action 0.
    /// Action 1 escapes state 0 quickly (0.9) and action 0 keeps state 1
    /// sticky (0.7), so the optimal policy is (1, 0) with gain 3/4; the
    /// diameter is 1.25.
    pub fn two_state() -> TabularMdp {
        TabularMdp::new(
            vec![
                vec![vec![0.9, 0.1], vec![0.1, 0.9]],
                vec![vec![0.3, 0.7], vec![0.8, 0.2]],
            ],
            vec![vec![0.0, 0.0], vec![1.0, 0.0]],
        )
        .expect("static tables are valid")
    }

    /// A swim-against-the-current chain: action 0 drifts left deterministically
    /// (small reward at the left bank), action 1 fights upstream (large reward
    /// at the right bank). A standard exploration stress test.
    pub fn riverswim(num_states: usize) -> TabularMdp {
        assert!(num_states >= 2, "riverswim needs at least 2 states");
        let n = num_states;
        let mut transitions = vec![vec![vec![0.0; n]; 2]; n];
        let mut rewards = vec![vec![0.0; 2]; n];
        for s in 0..n {
            // Action 0: move left.
            let left = s.saturating_sub(1);
            transitions[s][0][left] = 1.0;
            // Action 1: swim right.
            if s == 0 {
                transitions[s][1][0] = 0.4;
                transitions[s][1][1] = 0.6;
            } else if s == n - 1 {
                transitions[s][1][n - 2] = 0.4;
                transitions[s][1][n - 1] = 0.6;
            } else {
                transitions[s][1][s - 1] = 0.05;
                transitions[s][1][s] = 0.6;
                transitions[s][1][s + 1] = 0.35;
            }
        }
        rewards[0][0] = 0.005;
        rewards[n - 1][1] = 1.0;
        TabularMdp::new(transitions, rewards).expect("static tables are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_stochastic_row() {
        let err = TabularMdp::new(
            vec![vec![vec![0.5, 0.4]], vec![vec![1.0, 0.0]]],
            vec![vec![0.0], vec![0.0]],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            MdpError::RowNotStochastic { state: 0, action: 0, .. }
        ));
    }

    #[test]
    fn rejects_reward_out_of_range() {
        let err = TabularMdp::new(
            vec![vec![vec![1.0]]],
            vec![vec![1.5]],
        )
        .unwrap_err();
        assert!(matches!(err, MdpError::RewardOutOfRange { .. }));
    }

    #[test]
    fn two_cycle_is_weakly_communicating() {
        builtins::two_cycle().check_weakly_communicating().unwrap();
        builtins::two_state().check_weakly_communicating().unwrap();
        builtins::riverswim(6).check_weakly_communicating().unwrap();
    }

    #[test]
    fn detects_unreachable_pair() {
        // Two absorbing states: neither reaches the other.
        let mdp = TabularMdp::new(
            vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            vec![vec![0.0], vec![1.0]],
        )
        .unwrap();
        let err = mdp.check_weakly_communicating().unwrap_err();
        assert_eq!(err, MdpError::NotWeaklyCommunicating { from: 0, to: 1 });
    }
}
