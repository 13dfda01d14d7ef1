//! Shared helpers for unit tests.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::mdp::TabularMdp;

/// Random communicating MDP: every kernel entry is bounded away from zero
/// (mix with the uniform row), so every policy's chain is irreducible and
/// aperiodic and the gain is start-state independent.
pub(crate) fn random_mdp(
    rng: &mut ChaCha12Rng,
    max_states: usize,
    max_actions: usize,
) -> TabularMdp {
    let n = rng.random_range(1..=max_states);
    let m = rng.random_range(1..=max_actions);
    let mut transitions = vec![vec![vec![0.0; n]; m]; n];
    let mut rewards = vec![vec![0.0; m]; n];
    for s in 0..n {
        for a in 0..m {
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            for s2 in 0..n {
                transitions[s][a][s2] = 0.9 * raw[s2] / total + 0.1 / n as f64;
            }
            // Absorb the float slack so the row sums to exactly 1.
            let sum: f64 = transitions[s][a].iter().sum();
            transitions[s][a][n - 1] += 1.0 - sum;
            rewards[s][a] = rng.random::<f64>();
        }
    }
    TabularMdp::new(transitions, rewards).unwrap()
}
