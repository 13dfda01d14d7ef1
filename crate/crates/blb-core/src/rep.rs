//! State-representation functions: deterministic maps from histories to a
//! finite state set.
//!
//! A representation never sees more than the history, and the selection
//! algorithm never sees more than the representation's state ids. The
//! `is_markov_ground_truth` flag is harness metadata set by the experiment
//! builder from construction knowledge; it feeds regret accounting only and
//! is invisible to the learner.

use std::fmt;

use thiserror::Error;

use crate::history::History;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepresentationError {
    #[error("partition table has {got} entries but the environment emits {expected} observations")]
    PartitionNotCovering { got: usize, expected: usize },
    #[error("window length must be at least 1")]
    EmptyWindow,
    #[error("window state space overflows: {observations} observations, {actions} actions, k = {k}")]
    WindowTooLarge {
        observations: usize,
        actions: usize,
        k: usize,
    },
    #[error("environment must have at least one observation and one action")]
    DegenerateEnvironment,
}

/// Descriptor from which a representation is built.
#[derive(Debug, Clone, PartialEq)]
pub enum RepresentationSpec {
    /// State = the last observation.
    LastObs,
    /// State = the last observation plus the preceding `k - 1`
    /// (observation, action) pairs, mixed-radix encoded with a pad symbol
    /// for histories shorter than the window.
    WindowK { k: usize },
    /// State = `cells[last observation]`; the table must cover every
    /// observation id.
    Partition { cells: Vec<usize> },
    /// Every history maps to state 0.
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    LastObs,
    WindowK {
        k: usize,
        observation_count: usize,
        action_count: usize,
    },
    Partition {
        cells: Vec<usize>,
    },
    Constant,
}

/// A compiled representation function with its declared state count.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    kind: Kind,
    state_count: usize,
    is_markov_ground_truth: bool,
}

impl Representation {
    /// Build a representation for an environment with the given observation
    /// and action counts. The Markov flag defaults to `false`; the experiment
    /// builder sets it via [`Representation::with_markov_ground_truth`].
    pub fn new(
        spec: RepresentationSpec,
        observation_count: usize,
        action_count: usize,
    ) -> Result<Self, RepresentationError> {
        if observation_count == 0 || action_count == 0 {
            return Err(RepresentationError::DegenerateEnvironment);
        }
        let (kind, state_count) = match spec {
            RepresentationSpec::LastObs => (Kind::LastObs, observation_count),
            RepresentationSpec::Constant => (Kind::Constant, 1),
            RepresentationSpec::Partition { cells } => {
                if cells.len() != observation_count {
                    return Err(RepresentationError::PartitionNotCovering {
                        got: cells.len(),
                        expected: observation_count,
                    });
                }
                let count = cells.iter().max().copied().unwrap_or(0) + 1;
                (Kind::Partition { cells }, count)
            }
            RepresentationSpec::WindowK { k } => {
                if k == 0 {
                    return Err(RepresentationError::EmptyWindow);
                }
                // One slot of size |O| for the last observation, k - 1 slots
                // of size |O|*|A| + 1 (pair or pad) for the older steps.
                let pair_symbols = observation_count
                    .checked_mul(action_count)
                    .and_then(|n| n.checked_add(1))
                    .ok_or(RepresentationError::WindowTooLarge {
                        observations: observation_count,
                        actions: action_count,
                        k,
                    })?;
                let mut count = observation_count;
                for _ in 1..k {
                    count = count.checked_mul(pair_symbols).ok_or(
                        RepresentationError::WindowTooLarge {
                            observations: observation_count,
                            actions: action_count,
                            k,
                        },
                    )?;
                }
                (
                    Kind::WindowK {
                        k,
                        observation_count,
                        action_count,
                    },
                    count,
                )
            }
        };
        Ok(Self {
            kind,
            state_count,
            is_markov_ground_truth: false,
        })
    }

    pub fn with_markov_ground_truth(mut self, flag: bool) -> Self {
        self.is_markov_ground_truth = flag;
        self
    }

    /// Declared size of the state set `S_phi`.
    pub fn state_count(&self) -> usize {
        self.state_count
    }

    /// Harness metadata: whether the induced process is known (by
    /// construction) to be a weakly communicating MDP.
    pub fn is_markov_ground_truth(&self) -> bool {
        self.is_markov_ground_truth
    }

    /// Map a history to a state id in `[0, state_count)`.
    pub fn state_of(&self, history: &History) -> usize {
        let state = match &self.kind {
            Kind::Constant => 0,
            Kind::LastObs => history.last_observation(),
            Kind::Partition { cells } => cells[history.last_observation()],
            Kind::WindowK {
                k,
                observation_count,
                action_count,
            } => {
                let len = history.len();
                let pair_symbols = observation_count * action_count + 1;
                let pad = pair_symbols - 1;
                let mut code = history.last_observation();
                // Older slots, nearest first: slot j holds the pair
                // (o_{len-j}, a_{len-j+1}) or the pad symbol once the
                // history runs out.
                let mut radix = *observation_count;
                for j in 1..*k {
                    let digit = if len >= j {
                        let step = &history.steps()[len - j];
                        let obs_before = history.observation_at(len - j);
                        obs_before * action_count + step.action
                    } else {
                        pad
                    };
                    code += digit * radix;
                    radix *= pair_symbols;
                }
                code
            }
        };
        debug_assert!(state < self.state_count, "representation out of range");
        state
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::LastObs => write!(f, "last_obs[{}]", self.state_count),
            Kind::Constant => write!(f, "constant"),
            Kind::Partition { .. } => write!(f, "partition[{}]", self.state_count),
            Kind::WindowK { k, .. } => write!(f, "window_{k}[{}]", self.state_count),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn history_from(initial: usize, triples: &[(usize, usize)]) -> History {
        // (action, observation) pairs; rewards are irrelevant to any
        // representation and fixed at 0.
        let mut h = History::new(initial);
        for &(a, o) in triples {
            h.push(a, 0.0, o);
        }
        h
    }

    #[test]
    fn last_obs_is_identity_on_last_observation() {
        let rep = Representation::new(RepresentationSpec::LastObs, 4, 2).unwrap();
        assert_eq!(rep.state_count(), 4);
        let h = history_from(1, &[(0, 3), (1, 2)]);
        assert_eq!(rep.state_of(&h), 2);
        assert_eq!(rep.state_of(&history_from(1, &[])), 1);
    }

    #[test]
    fn constant_maps_everything_to_zero() {
        let rep = Representation::new(RepresentationSpec::Constant, 4, 2).unwrap();
        assert_eq!(rep.state_count(), 1);
        assert_eq!(rep.state_of(&history_from(3, &[(1, 2)])), 0);
        assert_eq!(rep.state_of(&history_from(0, &[])), 0);
    }

    #[test]
    fn partition_requires_full_coverage() {
        let err = Representation::new(
            RepresentationSpec::Partition { cells: vec![0, 1] },
            4,
            2,
        )
        .unwrap_err();
        assert_eq!(
            err,
            RepresentationError::PartitionNotCovering { got: 2, expected: 4 }
        );
    }

    #[test]
    fn partition_projects_observations() {
        let rep = Representation::new(
            RepresentationSpec::Partition {
                cells: vec![0, 0, 1, 1],
            },
            4,
            2,
        )
        .unwrap();
        assert_eq!(rep.state_count(), 2);
        assert_eq!(rep.state_of(&history_from(2, &[])), 1);
        assert_eq!(rep.state_of(&history_from(2, &[(0, 1)])), 0);
    }

    /// Window state counts: one |O| slot plus k-1 (|O|*|A| + 1) slots.
    #[test]
    fn window_state_count_formula() {
        let rep = Representation::new(RepresentationSpec::WindowK { k: 2 }, 2, 2).unwrap();
        assert_eq!(rep.state_count(), (2 * 2 + 1) * 2);
        let rep1 = Representation::new(RepresentationSpec::WindowK { k: 1 }, 5, 3).unwrap();
        assert_eq!(rep1.state_count(), 5);
    }

    /// Exhaustively enumerate all histories of length <= 3 on a 2-observation,
    /// 2-action alphabet and check that the window encoding is a bijection on
    /// window contents: codes stay in range, equal windows collide, distinct
    /// windows do not.
    #[test]
    fn window_encoding_is_injective_on_short_histories() {
        let rep = Representation::new(RepresentationSpec::WindowK { k: 2 }, 2, 2).unwrap();

        // The k=2 window of a history: (last observation, previous (obs,
        // action) pair or None).
        fn window(h: &History) -> (usize, Option<(usize, usize)>) {
            let len = h.len();
            let pair = if len >= 1 {
                Some((h.observation_at(len - 1), h.steps()[len - 1].action))
            } else {
                None
            };
            (h.last_observation(), pair)
        }

        let mut histories = vec![];
        for initial in 0..2 {
            histories.push(history_from(initial, &[]));
            for a1 in 0..2 {
                for o1 in 0..2 {
                    histories.push(history_from(initial, &[(a1, o1)]));
                    for a2 in 0..2 {
                        for o2 in 0..2 {
                            histories.push(history_from(initial, &[(a1, o1), (a2, o2)]));
                            for a3 in 0..2 {
                                for o3 in 0..2 {
                                    histories.push(history_from(
                                        initial,
                                        &[(a1, o1), (a2, o2), (a3, o3)],
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }

        for h1 in &histories {
            let s1 = rep.state_of(h1);
            assert!(s1 < rep.state_count());
            for h2 in &histories {
                let s2 = rep.state_of(h2);
                assert_eq!(
                    s1 == s2,
                    window(h1) == window(h2),
                    "encoding must separate exactly the distinct windows"
                );
            }
        }
    }

    proptest! {
        /// Purity: mapping the same history twice gives the same state, and
        /// the state is always in range.
        #[test]
        fn representation_is_pure_and_in_range(
            initial in 0usize..4,
            triples in proptest::collection::vec((0usize..3, 0usize..4), 0..12),
            k in 1usize..4,
        ) {
            let h = {
                let mut h = History::new(initial);
                for (a, o) in &triples {
                    h.push(*a, 0.5, *o);
                }
                h
            };
            let reps = vec![
                Representation::new(RepresentationSpec::LastObs, 4, 3).unwrap(),
                Representation::new(RepresentationSpec::Constant, 4, 3).unwrap(),
                Representation::new(RepresentationSpec::WindowK { k }, 4, 3).unwrap(),
                Representation::new(
                    RepresentationSpec::Partition { cells: vec![0, 1, 0, 2] },
                    4,
                    3,
                )
                .unwrap(),
            ];
            for rep in &reps {
                let s1 = rep.state_of(&h);
                let s2 = rep.state_of(&h);
                prop_assert_eq!(s1, s2);
                prop_assert!(s1 < rep.state_count());
            }
        }
    }
}
