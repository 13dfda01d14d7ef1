//! Regret accounting against the oracle gain.

use blb_core::blb::RunTrace;

/// Per-timestep cumulative regret of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub rho_star: f64,
    /// `cumulative[t - 1] = t * rho_star - sum_{u <= t} r_u`, exactly. May
    /// dip negative on lucky prefixes.
    pub cumulative: Vec<f64>,
}

impl RegretReport {
    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// Exact cumulative sums of `t * rho_star - sum of rewards`.
pub fn compute_regret(trace: &RunTrace, rho_star: f64) -> RegretReport {
    assert!(
        (0.0..=1.0).contains(&rho_star),
        "rho* = {rho_star} outside [0, 1]"
    );
    let mut cumulative = Vec::with_capacity(trace.records.len());
    let mut reward_sum = 0.0f64;
    for (index, record) in trace.records.iter().enumerate() {
        reward_sum += record.reward;
        let t = (index + 1) as f64;
        cumulative.push(t * rho_star - reward_sum);
    }
    RegretReport {
        rho_star,
        cumulative,
    }
}
