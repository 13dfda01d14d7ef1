//! Environments: conditional laws from (history, action) to (reward,
//! observation).
//!
//! The learner interacts with an environment through a single growing
//! history; all randomness flows through the caller-supplied RNG, so a run
//! is reproducible bit-for-bit from its seed.

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::history::History;
use crate::mdp::TabularMdp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("action {action} out of range: environment has {action_count} actions")]
    ActionOutOfRange { action: usize, action_count: usize },
}

/// A generative model of the interaction: given the history so far and an
/// action, sample the next reward and observation.
pub trait Environment {
    fn observation_count(&self) -> usize;

    fn action_count(&self) -> usize;

    /// Draw the first observation `o_0`.
    fn initial_observation(&self, rng: &mut dyn RngCore) -> usize;

    /// Sample `(reward, observation)` for an already-validated action.
    fn sample(&self, history: &History, action: usize, rng: &mut dyn RngCore) -> (f64, usize);

    /// Validated sampling step. Rewards in `[0, 1]` and observation range are
    /// checked in debug/test builds on every step.
    fn step(
        &self,
        history: &History,
        action: usize,
        rng: &mut dyn RngCore,
    ) -> Result<(f64, usize), EnvError> {
        if action >= self.action_count() {
            return Err(EnvError::ActionOutOfRange {
                action,
                action_count: self.action_count(),
            });
        }
        let (reward, observation) = self.sample(history, action, rng);
        debug_assert!(
            (0.0..=1.0).contains(&reward),
            "environment produced reward {reward} outside [0, 1]"
        );
        debug_assert!(
            observation < self.observation_count(),
            "environment produced observation {observation} >= {}",
            self.observation_count()
        );
        Ok((reward, observation))
    }
}

pub(crate) fn sample_categorical(weights: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// An environment backed by a tabular MDP, with the MDP state exposed through
/// the observation alongside `noise_bits` uniformly random bits:
/// `observation = state * 2^noise_bits + noise`.
///
/// Rewards are Bernoulli draws with mean `mean_rewards[s][a]`, so realized
/// rewards stay in {0, 1}. With `noise_bits = 0` the last-observation
/// representation is Markov by construction; a partition that keeps only the
/// noise bits is a useless representation by construction.
#[derive(Debug, Clone)]
pub struct MdpEnvironment {
    mdp: TabularMdp,
    noise_bits: u32,
    seed: u64,
    start_state: usize,
}

impl MdpEnvironment {
    pub fn new(mdp: TabularMdp, noise_bits: u32, seed: u64) -> Self {
        Self {
            mdp,
            noise_bits,
            seed,
            start_state: 0,
        }
    }

    /// Base seed of the environment; the harness mixes it with each run seed
    /// to derive the run's random stream.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn noise_bits(&self) -> u32 {
        self.noise_bits
    }

    /// Decode the MDP state carried by an observation.
    pub fn state_of_observation(&self, observation: usize) -> usize {
        observation >> self.noise_bits
    }

    fn encode(&self, state: usize, rng: &mut dyn RngCore) -> usize {
        let noise = if self.noise_bits == 0 {
            0
        } else {
            rng.random_range(0..(1usize << self.noise_bits))
        };
        (state << self.noise_bits) | noise
    }
}

impl Environment for MdpEnvironment {
    fn observation_count(&self) -> usize {
        self.mdp.num_states() << self.noise_bits
    }

    fn action_count(&self) -> usize {
        self.mdp.num_actions()
    }

    fn initial_observation(&self, rng: &mut dyn RngCore) -> usize {
        self.encode(self.start_state, rng)
    }

    fn sample(&self, history: &History, action: usize, rng: &mut dyn RngCore) -> (f64, usize) {
        let state = self.state_of_observation(history.last_observation());
        let mean = self.mdp.mean_reward(state, action);
        let reward = if rng.random::<f64>() < mean { 1.0 } else { 0.0 };
        let next = sample_categorical(self.mdp.transition_row(state, action), rng);
        (reward, self.encode(next, rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::builtins;
    use crate::rep::{Representation, RepresentationSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    #[test]
    fn constant_reward_environment_always_pays_one() {
        // A one-state MDP with mean reward 1: the Bernoulli draw is degenerate.
        let mdp = TabularMdp::new(vec![vec![vec![1.0]]], vec![vec![1.0]]).unwrap();
        let env = MdpEnvironment::new(mdp, 0, 0);
        let mut r = rng(7);
        let mut h = History::new(env.initial_observation(&mut r));
        for _ in 0..50 {
            let (reward, obs) = env.step(&h, 0, &mut r).unwrap();
            assert_eq!(reward, 1.0);
            assert!(obs < env.observation_count());
            h.push(0, reward, obs);
        }
    }

    #[test]
    fn deterministic_cycle_alternates() {
        let env = MdpEnvironment::new(builtins::two_cycle(), 0, 0);
        let mut r = rng(3);
        let mut h = History::new(env.initial_observation(&mut r));
        assert_eq!(h.last_observation(), 0);
        let (reward, obs) = env.step(&h, 0, &mut r).unwrap();
        assert_eq!((reward, obs), (0.0, 1));
        h.push(0, reward, obs);
        let (reward, obs) = env.step(&h, 0, &mut r).unwrap();
        assert_eq!((reward, obs), (1.0, 0));
    }

    #[test]
    fn rejects_out_of_range_action() {
        let env = MdpEnvironment::new(builtins::two_cycle(), 0, 0);
        let mut r = rng(3);
        let h = History::new(env.initial_observation(&mut r));
        let err = env.step(&h, 1, &mut r).unwrap_err();
        assert_eq!(
            err,
            EnvError::ActionOutOfRange { action: 1, action_count: 1 }
        );
    }

    #[test]
    fn same_seed_same_prefix_is_bit_reproducible() {
        let env = MdpEnvironment::new(builtins::two_state(), 1, 9);
        let run = |seed: u64| {
            let mut r = rng(seed);
            let mut h = History::new(env.initial_observation(&mut r));
            let mut out = vec![];
            for t in 0..200 {
                let a = t % 2;
                let (reward, obs) = env.step(&h, a, &mut r).unwrap();
                h.push(a, reward, obs);
                out.push((reward, obs));
            }
            out
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn cloned_rng_replays_one_step() {
        let env = MdpEnvironment::new(builtins::two_state(), 1, 0);
        let mut r1 = rng(5);
        let h = History::new(env.initial_observation(&mut r1));
        let mut r2 = r1.clone();
        assert_eq!(env.step(&h, 1, &mut r1).unwrap(), env.step(&h, 1, &mut r2).unwrap());
    }

    #[test]
    fn noise_bits_flag_markov_projections() {
        let env = MdpEnvironment::new(builtins::two_state(), 1, 0);
        assert_eq!(env.observation_count(), 4);
        // Projecting out the noise bit recovers the MDP state.
        assert_eq!(env.state_of_observation(0), 0);
        assert_eq!(env.state_of_observation(1), 0);
        assert_eq!(env.state_of_observation(2), 1);
        assert_eq!(env.state_of_observation(3), 1);
    }

    /// Empirical kernel of (last_obs state, action) -> next state matches the
    /// MDP rows on a long rollout under uniformly random actions.
    #[test]
    #[allow(clippy::needless_range_loop)]
    fn empirical_transition_frequencies_match_kernel() {
        let mdp = builtins::two_state();
        let env = MdpEnvironment::new(mdp.clone(), 0, 0);
        let rep = Representation::new(RepresentationSpec::LastObs, 2, 2).unwrap();
        let mut r = rng(1234);
        let mut h = History::new(env.initial_observation(&mut r));
        let mut counts = vec![vec![vec![0u64; 2]; 2]; 2];
        let steps = 100_000;
        for _ in 0..steps {
            let s = rep.state_of(&h);
            let a = r.random_range(0..2);
            let (reward, obs) = env.step(&h, a, &mut r).unwrap();
            h.push(a, reward, obs);
            let s2 = rep.state_of(&h);
            counts[s][a][s2] += 1;
        }
        for s in 0..2 {
            for a in 0..2 {
                let total: u64 = counts[s][a].iter().sum();
                assert!(total > 1000, "state-action ({s},{a}) undersampled");
                for s2 in 0..2 {
                    let freq = counts[s][a][s2] as f64 / total as f64;
                    let p = mdp.transition_row(s, a)[s2];
                    assert!(
                        (freq - p).abs() <= 0.02,
                        "empirical P({s2}|{s},{a}) = {freq}, kernel = {p}"
                    );
                }
            }
        }
    }

    /// Under the noise-only projection the next-state frequencies do not
    /// depend on the action: the representation carries no control signal.
    #[test]
    #[allow(clippy::needless_range_loop)]
    fn noise_only_projection_is_action_independent() {
        let env = MdpEnvironment::new(builtins::two_state(), 1, 0);
        let rep = Representation::new(
            RepresentationSpec::Partition { cells: vec![0, 1, 0, 1] },
            4,
            2,
        )
        .unwrap();
        let mut r = rng(99);
        let mut h = History::new(env.initial_observation(&mut r));
        let mut counts = vec![vec![vec![0u64; 2]; 2]; 2];
        for _ in 0..100_000 {
            let s = rep.state_of(&h);
            let a = r.random_range(0..2);
            let (reward, obs) = env.step(&h, a, &mut r).unwrap();
            h.push(a, reward, obs);
            counts[s][a][rep.state_of(&h)] += 1;
        }
        for s in 0..2 {
            let freq = |a: usize, s2: usize| {
                let total: u64 = counts[s][a].iter().sum();
                counts[s][a][s2] as f64 / total as f64
            };
            for s2 in 0..2 {
                assert!(
                    (freq(0, s2) - freq(1, s2)).abs() <= 0.02,
                    "noise projection leaked action dependence at state {s}"
                );
                // And the noise bit itself is a fair coin.
                assert!((freq(0, s2) - 0.5).abs() <= 0.02);
            }
        }
    }
}
