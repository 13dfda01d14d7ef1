//! Interaction histories: the raw record of everything the learner has seen.
//!
//! A history starts with an initial observation `o_0` and grows by one
//! `(action, reward, observation)` triple per timestep. At time `t` the
//! learner holds the history `h_<t`, which contains `t - 1` triples;
//! representation functions map that history to a finite state id.

/// One completed timestep: the action taken, the reward received and the
/// observation that followed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryStep {
    pub action: usize,
    pub reward: f64,
    pub observation: usize,
}

/// The full interaction record `o_0, (a_1, r_1, o_1), (a_2, r_2, o_2), ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    initial_observation: usize,
    steps: Vec<HistoryStep>,
}

impl History {
    /// Start a history from the environment's first observation.
    pub fn new(initial_observation: usize) -> Self {
        Self {
            initial_observation,
            steps: Vec::new(),
        }
    }

    /// Append one completed timestep.
    ///
    /// Rewards must lie in `[0, 1]`; this is checked in debug/test builds.
    pub fn push(&mut self, action: usize, reward: f64, observation: usize) {
        debug_assert!(
            (0.0..=1.0).contains(&reward),
            "reward {reward} outside [0, 1]"
        );
        self.steps.push(HistoryStep {
            action,
            reward,
            observation,
        });
    }

    /// Number of completed timesteps (the history `h_<t` has `t - 1`).
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The current time index `t` (1-based): `len() + 1`.
    pub fn time(&self) -> u64 {
        self.steps.len() as u64 + 1
    }

    pub fn initial_observation(&self) -> usize {
        self.initial_observation
    }

    /// The most recent observation (the one the learner acts on).
    pub fn last_observation(&self) -> usize {
        self.steps
            .last()
            .map(|s| s.observation)
            .unwrap_or(self.initial_observation)
    }

    /// Observation by index: `0` is the initial observation, `i > 0` the
    /// observation produced by step `i`.
    pub fn observation_at(&self, index: usize) -> usize {
        if index == 0 {
            self.initial_observation
        } else {
            self.steps[index - 1].observation
        }
    }

    pub fn steps(&self) -> &[HistoryStep] {
        &self.steps
    }
}
