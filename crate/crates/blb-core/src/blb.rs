//! Best-Lower-Bound model selection: doubling stages, round-robin
//! exploration of every candidate representation with a fresh optimistic
//! learner, pessimistic (lower-confidence-bound) selection for exploitation,
//! and an online elimination test that discards a model as soon as its
//! exploitation rewards fall below its own exploration-based lower bound.
//!
//! Stage `i` lasts `2^i` steps, split into an exploration prefix of roughly
//! `(2^i)^(2/3)` steps shared equally by the `J` models and an exploitation
//! remainder. All interaction happens on one global history; only the state
//! mapping changes when the active model changes.

use rand::RngCore;
use thiserror::Error;

use crate::env::{EnvError, Environment};
use crate::history::History;
use crate::rep::Representation;
use crate::ucrl2::{Ucrl2, Ucrl2Error};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlbError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("model selection requires a nonempty candidate set")]
    EmptyCandidates,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Ucrl2(#[from] Ucrl2Error),
}

/// Shape of the diameter guess `f` used inside the confidence bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FMode {
    /// `f(t) = log2(t) + 1`.
    Log2PlusOne,
    /// `f(t) = t^epsilon` with `epsilon` in (0, 1).
    Power { epsilon: f64 },
}

impl FMode {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            FMode::Log2PlusOne => t.log2() + 1.0,
            FMode::Power { epsilon } => t.powf(*epsilon),
        }
    }
}

/// Algorithm parameters.
///
/// `bound_scale` and `clip_bound_at_one` control the confidence bound used in
/// selection and testing: with the faithful constant (scale 1) the bound
/// exceeds 1 at any desk-scale stage, so clipping keeps the algorithm
/// well-defined (a bound of 1 makes every test pass and reduces selection to
/// the exploration-mean argmax), while a small scale gives an empirically
/// informative regime.
#[derive(Debug, Clone, PartialEq)]
pub struct BlbParams {
    /// Overall failure probability budget, in (0, 1).
    pub delta: f64,
    pub f_mode: FMode,
    /// Multiplier on the confidence bound (default 1).
    pub bound_scale: f64,
    /// Clip the bound at 1 before use (default true).
    pub clip_bound_at_one: bool,
    /// Number of candidate models J.
    pub num_models: usize,
}

impl BlbParams {
    pub fn new(delta: f64, num_models: usize) -> Self {
        Self {
            delta,
            f_mode: FMode::Log2PlusOne,
            bound_scale: 1.0,
            clip_bound_at_one: true,
            num_models,
        }
    }

    pub fn validate(&self) -> Result<(), BlbError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(BlbError::InvalidParams(format!(
                "delta must be in (0, 1), got {}",
                self.delta
            )));
        }
        if self.bound_scale <= 0.0 || self.bound_scale.is_nan() {
            return Err(BlbError::InvalidParams(format!(
                "bound_scale must be positive, got {}",
                self.bound_scale
            )));
        }
        if let FMode::Power { epsilon } = self.f_mode {
            if !(epsilon > 0.0 && epsilon < 1.0) {
                return Err(BlbError::InvalidParams(format!(
                    "power-mode epsilon must be in (0, 1), got {epsilon}"
                )));
            }
        }
        if self.num_models == 0 {
            return Err(BlbError::InvalidParams("num_models must be >= 1".into()));
        }
        Ok(())
    }
}

/// Integer step budget of one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSchedule {
    pub stage: u32,
    /// Stage length `tau_i = 2^i`.
    pub total: u64,
    /// Exploration steps per model: `ceil(tau_i^(2/3) / J)`.
    pub explore_per_model: u64,
    /// Total exploration length, `J * explore_per_model` clamped to `total`.
    pub explore_total: u64,
    /// Exploitation length, `total - explore_total`.
    pub exploit_total: u64,
}

/// The stage schedule: `tau_i = 2^i` with an exploration prefix of
/// `tau_i^(2/3)` rounded up to a whole number of equal per-model slots.
/// Early stages may have no exploitation at all.
pub fn stage_schedule(stage: u32, num_models: usize) -> StageSchedule {
    assert!(stage >= 1, "stages are numbered from 1");
    assert!(stage <= 63, "stage length overflows u64");
    assert!(num_models >= 1);
    let total = 1u64 << stage;
    let j = num_models as u64;
    let explore_per_model = if (2 * stage).is_multiple_of(3) {
        // tau_i^(2/3) is an exact power of two.
        (1u64 << (2 * stage / 3)).div_ceil(j)
    } else {
        (2f64.powf(2.0 * f64::from(stage) / 3.0) / j as f64).ceil() as u64
    };
    let explore_total = explore_per_model.saturating_mul(j).min(total);
    StageSchedule {
        stage,
        total,
        explore_per_model,
        explore_total,
        exploit_total: total - explore_total,
    }
}

/// Per-stage confidence parameter handed to the learner:
/// `delta_i = (2^i - (1/J + 1) 2^(2i/3) + 4)^(-1) * 2^(-i+1) * delta`,
/// with real-valued (unrounded) powers, independent of the integer schedule.
pub fn delta_i(stage: u32, num_models: usize, delta: f64) -> f64 {
    assert!(stage >= 1, "stages are numbered from 1");
    assert!(num_models >= 1);
    let i = f64::from(stage);
    let denom = 2f64.powf(i) - (1.0 / num_models as f64 + 1.0) * 2f64.powf(2.0 * i / 3.0) + 4.0;
    assert!(denom > 0.0, "budget denominator must be positive (stage {stage})");
    let out = 2f64.powf(-i + 1.0) * delta / denom;
    assert!(
        out > 0.0 && out < 1.0,
        "per-stage confidence {out} escaped (0, 1)"
    );
    out
}

/// Confidence bound attached to a model's exploration mean:
/// `scale * 34 * f(tau_i - 1 + tau_i1) * |S_phi| *
///  sqrt(A * ln(tau_i1J / delta_i) / tau_i1J)`,
/// clipped at 1 when requested. Only the returned (post-clip) value is ever
/// used by selection and testing.
pub fn bound_b(stage: u32, state_count: usize, params: &BlbParams, action_count: usize) -> f64 {
    let sched = stage_schedule(stage, params.num_models);
    let di = delta_i(stage, params.num_models, params.delta);
    let f_arg = (sched.total - 1 + sched.explore_total) as f64;
    let slot = sched.explore_per_model as f64;
    let raw = params.bound_scale
        * 34.0
        * params.f_mode.eval(f_arg)
        * state_count as f64
        * (action_count as f64 * (slot / di).ln() / slot).sqrt();
    if params.clip_bound_at_one {
        raw.min(1.0)
    } else {
        raw
    }
}

/// Pessimistic selection: the candidate maximizing `mean - 2 * bound`, ties
/// to the lowest index. The candidate list must be nonempty (the caller
/// resets it first).
pub fn select_model(
    candidates: &[usize],
    means: &[f64],
    bounds: &[f64],
) -> Result<usize, BlbError> {
    let mut best: Option<(usize, f64)> = None;
    for &j in candidates {
        let score = means[j] - 2.0 * bounds[j];
        match best {
            Some((_, s)) if score <= s => {}
            _ => best = Some((j, score)),
        }
    }
    best.map(|(j, _)| j).ok_or(BlbError::EmptyCandidates)
}

/// The elimination test: keep the model while its running exploitation mean
/// stays at or above its exploration mean minus twice the bound.
pub fn exploitation_test(run_mean: f64, explore_mean: f64, bound: f64) -> bool {
    run_mean >= explore_mean - 2.0 * bound
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Explore,
    Exploit,
}

/// One timestep of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// Global timestep, 1-based, strictly increasing by 1.
    pub t: u64,
    pub stage: u32,
    pub phase: Phase,
    /// Index of the model whose learner chose the action.
    pub model: usize,
    /// State under that model when the action was chosen.
    pub state: usize,
    pub action: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionEvent {
    /// Global t of the first step of the selected run.
    pub t: u64,
    pub model: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EliminationEvent {
    /// Global t of the step whose test failed.
    pub t: u64,
    pub model: usize,
    pub run_length: u64,
    pub run_mean: f64,
}

/// Everything that happened in one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSummary {
    pub stage: u32,
    pub schedule: StageSchedule,
    /// Steps actually taken (less than the schedule total in the final,
    /// truncated stage).
    pub steps_taken: u64,
    /// Exploration steps granted to each model.
    pub explore_steps: Vec<u64>,
    /// Mean exploration reward per model (0 for models that got no steps).
    pub explore_means: Vec<f64>,
    /// Post-clip confidence bound per model; empty if the stage never
    /// reached exploitation.
    pub bounds: Vec<f64>,
    pub selections: Vec<SelectionEvent>,
    pub eliminations: Vec<EliminationEvent>,
    /// Global t values at which the emptied candidate set was reset.
    pub resets: Vec<u64>,
    /// Total exploitation steps per model.
    pub exploit_steps: Vec<u64>,
    /// Model of the last exploitation step, if any.
    pub final_model: Option<usize>,
}

/// Full record of a run: one step record per timestep plus per-stage
/// summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<StepRecord>,
    pub stages: Vec<StageSummary>,
}

impl RunTrace {
    pub fn horizon(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.reward)
    }
}

fn agent_step(
    agent: &mut Ucrl2,
    env: &dyn Environment,
    rep: &Representation,
    history: &mut History,
    rng: &mut dyn RngCore,
) -> Result<(usize, usize, f64), BlbError> {
    let state = rep.state_of(history);
    let action = agent.act(state)?;
    let (reward, observation) = env.step(history, action, rng)?;
    history.push(action, reward, observation);
    let next_state = rep.state_of(history);
    agent.update(state, action, reward, next_state)?;
    Ok((state, action, reward))
}

/// Run one stage on the shared history: round-robin exploration with a fresh
/// learner per model, then exploitation runs with pessimistic selection and
/// the elimination test (applied at every step once the current run is longer
/// than the per-model exploration slot). An emptied candidate set is reset to
/// the full model list; exploration means are kept. Stops when the stage
/// budget or the remaining horizon is exhausted.
#[allow(clippy::too_many_arguments)]
pub fn run_stage(
    stage: u32,
    env: &dyn Environment,
    reps: &[Representation],
    params: &BlbParams,
    history: &mut History,
    rng: &mut dyn RngCore,
    remaining_horizon: u64,
    t_start: u64,
) -> Result<(StageSummary, Vec<StepRecord>), BlbError> {
    assert!(remaining_horizon >= 1);
    let num_models = reps.len();
    let schedule = stage_schedule(stage, num_models);
    let confidence = delta_i(stage, num_models, params.delta);
    let budget = schedule.total.min(remaining_horizon);

    let mut records: Vec<StepRecord> = Vec::with_capacity(budget as usize);
    let mut explore_steps = vec![0u64; num_models];
    let mut explore_means = vec![0.0f64; num_models];
    let mut used = 0u64;

    for (model, rep) in reps.iter().enumerate() {
        if used == budget {
            break;
        }
        let mut agent = Ucrl2::new(rep.state_count(), env.action_count(), confidence)?;
        let slot = schedule.explore_per_model.min(budget - used);
        let mut total_reward = 0.0;
        for _ in 0..slot {
            let (state, action, reward) = agent_step(&mut agent, env, rep, history, rng)?;
            records.push(StepRecord {
                t: t_start + used,
                stage,
                phase: Phase::Explore,
                model,
                state,
                action,
                reward,
            });
            used += 1;
            total_reward += reward;
        }
        explore_steps[model] = slot;
        if slot > 0 {
            explore_means[model] = total_reward / slot as f64;
        }
    }

    let mut summary = StageSummary {
        stage,
        schedule,
        steps_taken: used,
        explore_steps,
        explore_means,
        bounds: Vec::new(),
        selections: Vec::new(),
        eliminations: Vec::new(),
        resets: Vec::new(),
        exploit_steps: vec![0u64; num_models],
        final_model: None,
    };

    if used < budget {
        // Exploitation is only reachable when exploration ran in full.
        debug_assert_eq!(used, schedule.explore_total);
        summary.bounds = reps
            .iter()
            .map(|rep| bound_b(stage, rep.state_count(), params, env.action_count()))
            .collect();
        let mut candidates: Vec<usize> = (0..num_models).collect();

        'exploit: while used < budget {
            let chosen = select_model(&candidates, &summary.explore_means, &summary.bounds)?;
            summary.selections.push(SelectionEvent {
                t: t_start + used,
                model: chosen,
            });
            let rep = &reps[chosen];
            let mut agent = Ucrl2::new(rep.state_count(), env.action_count(), confidence)?;
            let mut run_length = 0u64;
            let mut run_reward = 0.0f64;

            while used < budget {
                let (state, action, reward) = agent_step(&mut agent, env, rep, history, rng)?;
                let t = t_start + used;
                records.push(StepRecord {
                    t,
                    stage,
                    phase: Phase::Exploit,
                    model: chosen,
                    state,
                    action,
                    reward,
                });
                used += 1;
                run_length += 1;
                run_reward += reward;

                if run_length > schedule.explore_per_model {
                    let run_mean = run_reward / run_length as f64;
                    if !exploitation_test(run_mean, summary.explore_means[chosen], summary.bounds[chosen])
                    {
                        summary.eliminations.push(EliminationEvent {
                            t,
                            model: chosen,
                            run_length,
                            run_mean,
                        });
                        summary.exploit_steps[chosen] += run_length;
                        candidates.retain(|&j| j != chosen);
                        if candidates.is_empty() {
                            candidates = (0..num_models).collect();
                            summary.resets.push(t);
                        }
                        continue 'exploit;
                    }
                }
            }
            summary.exploit_steps[chosen] += run_length;
        }
    }

    summary.steps_taken = used;
    summary.final_model = records
        .iter()
        .rev()
        .find(|r| r.phase == Phase::Exploit)
        .map(|r| r.model);
    Ok((summary, records))
}

/// Run the full selection strategy for exactly `horizon` steps: stages
/// `i = 1, 2, ...` of doubling length, the last one truncated. Deterministic
/// given the RNG and parameters.
pub fn run_blb(
    env: &dyn Environment,
    reps: &[Representation],
    params: &BlbParams,
    horizon: u64,
    rng: &mut dyn RngCore,
) -> Result<RunTrace, BlbError> {
    params.validate()?;
    if reps.is_empty() {
        return Err(BlbError::InvalidParams("no representations given".into()));
    }
    if reps.len() != params.num_models {
        return Err(BlbError::InvalidParams(format!(
            "params declare {} models but {} representations were given",
            params.num_models,
            reps.len()
        )));
    }
    if horizon == 0 {
        return Err(BlbError::InvalidParams("horizon must be >= 1".into()));
    }

    let mut history = History::new(env.initial_observation(rng));
    let mut trace = RunTrace {
        records: Vec::with_capacity(horizon as usize),
        stages: Vec::new(),
    };
    let mut consumed = 0u64;
    let mut stage = 1u32;
    while consumed < horizon {
        let (summary, mut records) = run_stage(
            stage,
            env,
            reps,
            params,
            &mut history,
            rng,
            horizon - consumed,
            consumed + 1,
        )?;
        consumed += summary.steps_taken;
        trace.records.append(&mut records);
        trace.stages.push(summary);
        stage += 1;
    }
    debug_assert_eq!(trace.records.len() as u64, horizon);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::MdpEnvironment;
    use crate::mdp::{builtins, TabularMdp};
    use crate::rep::RepresentationSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    /// Reward 1 while the history is shorter than `cutoff`, 0 afterwards.
    /// History-dependent on purpose: exploration looks great, exploitation
    /// collapses, so elimination and reset paths fire deterministically.
    struct DecayEnv {
        cutoff: usize,
    }

    impl Environment for DecayEnv {
        fn observation_count(&self) -> usize {
            1
        }
        fn action_count(&self) -> usize {
            1
        }
        fn initial_observation(&self, _rng: &mut dyn RngCore) -> usize {
            0
        }
        fn sample(&self, history: &History, _action: usize, _rng: &mut dyn RngCore) -> (f64, usize) {
            let reward = if history.len() < self.cutoff { 1.0 } else { 0.0 };
            (reward, 0)
        }
    }

    fn constant_rep() -> Representation {
        Representation::new(RepresentationSpec::Constant, 1, 1).unwrap()
    }

    fn tiny_bound_params(num_models: usize) -> BlbParams {
        BlbParams {
            delta: 0.1,
            f_mode: FMode::Log2PlusOne,
            bound_scale: 1e-9,
            clip_bound_at_one: false,
            num_models,
        }
    }

    #[test]
    fn schedule_matches_worked_examples() {
        let s = stage_schedule(3, 2);
        assert_eq!((s.total, s.explore_per_model, s.explore_total, s.exploit_total), (8, 2, 4, 4));
        let s = stage_schedule(6, 4);
        assert_eq!((s.total, s.explore_per_model, s.explore_total, s.exploit_total), (64, 4, 16, 48));
        // 16^(2/3) ~ 6.3496; ceil(6.3496 / 3) = 3.
        let s = stage_schedule(4, 3);
        assert_eq!((s.total, s.explore_per_model, s.explore_total, s.exploit_total), (16, 3, 9, 7));
    }

    #[test]
    fn schedule_identities_hold_broadly() {
        for stage in 1..=30 {
            for num_models in 1..=32 {
                let s = stage_schedule(stage, num_models);
                assert_eq!(s.total, 1u64 << stage);
                assert_eq!(s.explore_total + s.exploit_total, s.total);
                assert!(s.explore_per_model >= 1);
                if s.exploit_total > 0 {
                    assert_eq!(s.explore_total, s.explore_per_model * num_models as u64);
                }
            }
        }
    }

    #[test]
    fn delta_i_matches_direct_evaluation() {
        // (8 - 1.5*4 + 4)^(-1) * 2^(-2) * 0.12 = 0.12 / 24.
        assert!((delta_i(3, 2, 0.12) - 0.005).abs() < 1e-18);
        // (8 - 2*4 + 4)^(-1) * 0.25 * 0.12 = 0.0075.
        assert!((delta_i(3, 1, 0.12) - 0.0075).abs() < 1e-18);
    }

    #[test]
    fn delta_i_budget_identity() {
        // (2^i - (1 + 1/J) 2^(2i/3) + 4) * delta_i == 2^(-i+1) * delta, to
        // machine precision.
        for stage in 1..=20u32 {
            for &j in &[1usize, 2, 4, 8, 16] {
                for &delta in &[0.12, 0.5, 0.9] {
                    let i = f64::from(stage);
                    let denom =
                        2f64.powf(i) - (1.0 / j as f64 + 1.0) * 2f64.powf(2.0 * i / 3.0) + 4.0;
                    let lhs = denom * delta_i(stage, j, delta);
                    let rhs = 2f64.powf(-i + 1.0) * delta;
                    assert!(
                        (lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs,
                        "stage {stage}, J {j}: {lhs} vs {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn bound_matches_frozen_high_precision_value() {
        let params = BlbParams {
            delta: 0.12,
            f_mode: FMode::Log2PlusOne,
            bound_scale: 1.0,
            clip_bound_at_one: false,
            num_models: 2,
        };
        let b = bound_b(3, 2, &params, 2);
        #[allow(clippy::excessive_precision)]
        let expected = 742.25805355869423162; // 34 * (log2(11)+1) * 2 * sqrt(ln 400)
        assert!((b - expected).abs() / expected < 1e-12, "b = {b}");

        let clipped = BlbParams {
            clip_bound_at_one: true,
            ..params.clone()
        };
        assert_eq!(bound_b(3, 2, &clipped, 2), 1.0);

        // Degenerate scale: the bound vanishes and selection reduces to the
        // plain empirical-mean argmax.
        let scaled = BlbParams {
            bound_scale: 0.0,
            ..params
        };
        assert_eq!(bound_b(3, 2, &scaled, 2), 0.0);
    }

    #[test]
    fn select_model_takes_best_lower_bound() {
        let means = vec![0.5, 0.7, 0.6];
        let bounds = vec![0.025, 0.1, 0.025];
        // Lower bounds: 0.45, 0.5, 0.55.
        assert_eq!(select_model(&[0, 1, 2], &means, &bounds).unwrap(), 2);
        // Ties go to the lowest index.
        assert_eq!(
            select_model(&[0, 1, 2], &[0.5; 3], &[0.1; 3]).unwrap(),
            0
        );
        // Singleton candidate set.
        assert_eq!(select_model(&[1], &means, &bounds).unwrap(), 1);
        assert_eq!(
            select_model(&[], &means, &bounds).unwrap_err(),
            BlbError::EmptyCandidates
        );
    }

    #[test]
    fn exploitation_test_thresholds() {
        assert!(exploitation_test(0.51, 0.6, 0.05));
        assert!(!exploitation_test(0.49, 0.6, 0.05));
        // A bound of 1/2 or more makes the test vacuous.
        assert!(exploitation_test(0.0, 1.0, 0.5));
    }

    #[test]
    fn single_model_stage_fills_the_budget() {
        let env = MdpEnvironment::new(builtins::two_cycle(), 0, 0);
        let reps = vec![Representation::new(RepresentationSpec::LastObs, 2, 1).unwrap()];
        let params = BlbParams::new(0.1, 1);
        let mut r = rng(0);
        let mut history = History::new(env.initial_observation(&mut r));
        let (summary, records) =
            run_stage(4, &env, &reps, &params, &mut history, &mut r, 1000, 1).unwrap();
        assert_eq!(records.len(), 16);
        assert_eq!(summary.steps_taken, 16);
        assert_eq!(summary.final_model, Some(0));
        // With one model, every exploitation step belongs to it.
        assert_eq!(summary.exploit_steps[0], summary.schedule.exploit_total);
    }

    #[test]
    fn constant_reward_env_exploits_first_model_by_tie_rule() {
        let mdp = TabularMdp::new(vec![vec![vec![1.0], vec![1.0]]], vec![vec![1.0, 1.0]]).unwrap();
        let env = MdpEnvironment::new(mdp, 0, 0);
        let reps = vec![
            Representation::new(RepresentationSpec::Constant, 1, 2).unwrap(),
            Representation::new(RepresentationSpec::LastObs, 1, 2).unwrap(),
        ];
        let params = BlbParams::new(0.1, 2);
        let mut r = rng(5);
        let mut history = History::new(env.initial_observation(&mut r));
        let (summary, records) =
            run_stage(5, &env, &reps, &params, &mut history, &mut r, 1 << 20, 1).unwrap();
        assert_eq!(summary.explore_means, vec![1.0, 1.0]);
        assert!(summary.eliminations.is_empty());
        assert_eq!(summary.selections.len(), 1);
        assert_eq!(summary.selections[0].model, 0, "ties exploit the first model");
        assert!(records
            .iter()
            .filter(|rec| rec.phase == Phase::Exploit)
            .all(|rec| rec.model == 0));
    }

    #[test]
    fn decaying_rewards_eliminate_and_reset() {
        // Stage 5, J=2: slots of 6, exploration 12, exploitation 20. With the
        // cutoff at the end of exploration, both models test-fail as soon as
        // tests begin, emptying the candidate set and forcing a reset.
        let env = DecayEnv { cutoff: 12 };
        let reps = vec![constant_rep(), constant_rep()];
        let params = tiny_bound_params(2);
        let mut r = rng(1);
        let mut history = History::new(env.initial_observation(&mut r));
        let (summary, records) =
            run_stage(5, &env, &reps, &params, &mut history, &mut r, 1 << 20, 1).unwrap();

        assert_eq!(summary.explore_means, vec![1.0, 1.0]);
        assert_eq!(summary.eliminations.len(), 2);
        assert_eq!(summary.eliminations[0].model, 0);
        assert_eq!(summary.eliminations[1].model, 1);
        assert_eq!(summary.resets.len(), 1);
        // Tests fire only once a run exceeds the per-model slot (6): each
        // failing run is exactly 7 steps long.
        assert_eq!(summary.eliminations[0].run_length, 7);
        assert_eq!(summary.eliminations[1].run_length, 7);
        // After the reset the first model is selected again.
        assert_eq!(
            summary.selections.iter().map(|s| s.model).collect::<Vec<_>>(),
            vec![0, 1, 0]
        );
        // Between its elimination and the reset, model 0 never runs.
        let elim_t = summary.eliminations[0].t;
        let reset_t = summary.resets[0];
        assert!(records
            .iter()
            .filter(|rec| rec.t > elim_t && rec.t <= reset_t)
            .all(|rec| rec.model != 0));
        assert_eq!(summary.steps_taken, 32);
    }

    #[test]
    fn trace_lengths_and_stage_split_match_the_horizon() {
        let env = MdpEnvironment::new(builtins::two_state(), 0, 3);
        let reps = vec![Representation::new(RepresentationSpec::LastObs, 2, 2).unwrap()];
        let params = BlbParams::new(0.1, 1);

        let mut r = rng(2);
        let trace = run_blb(&env, &reps, &params, 2, &mut r).unwrap();
        assert_eq!(trace.horizon(), 2);
        assert_eq!(trace.stages.len(), 1);

        // 30 = 2 + 4 + 8 + 16: stages 1..4 complete exactly.
        let mut r = rng(2);
        let trace = run_blb(&env, &reps, &params, 30, &mut r).unwrap();
        assert_eq!(trace.horizon(), 30);
        assert_eq!(trace.stages.len(), 4);
        assert!(trace
            .stages
            .iter()
            .all(|s| s.steps_taken == s.schedule.total));
        let ts: Vec<u64> = trace.records.iter().map(|rec| rec.t).collect();
        assert_eq!(ts, (1..=30).collect::<Vec<_>>());
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        let env = MdpEnvironment::new(builtins::two_state(), 1, 7);
        let reps = vec![
            Representation::new(
                RepresentationSpec::Partition { cells: vec![0, 0, 1, 1] },
                4,
                2,
            )
            .unwrap()
            .with_markov_ground_truth(true),
            Representation::new(
                RepresentationSpec::Partition { cells: vec![0, 1, 0, 1] },
                4,
                2,
            )
            .unwrap(),
        ];
        let params = BlbParams {
            bound_scale: 0.01,
            ..BlbParams::new(0.1, 2)
        };
        let t1 = run_blb(&env, &reps, &params, 600, &mut rng(9)).unwrap();
        let t2 = run_blb(&env, &reps, &params, 600, &mut rng(9)).unwrap();
        assert_eq!(t1, t2);
        let t3 = run_blb(&env, &reps, &params, 600, &mut rng(10)).unwrap();
        assert_ne!(t1.records, t3.records);
    }

    #[test]
    fn longer_horizons_extend_shorter_ones() {
        // The strategy is anytime: it never looks at the horizon and consumes
        // randomness strictly step by step, so a shorter run is an exact
        // prefix of a longer one with the same seed.
        let env = MdpEnvironment::new(builtins::two_state(), 1, 7);
        let reps = vec![
            Representation::new(
                RepresentationSpec::Partition { cells: vec![0, 0, 1, 1] },
                4,
                2,
            )
            .unwrap(),
            Representation::new(
                RepresentationSpec::Partition { cells: vec![0, 1, 0, 1] },
                4,
                2,
            )
            .unwrap(),
        ];
        let params = BlbParams {
            bound_scale: 0.01,
            ..BlbParams::new(0.1, 2)
        };
        let short = run_blb(&env, &reps, &params, 300, &mut rng(4)).unwrap();
        let long = run_blb(&env, &reps, &params, 600, &mut rng(4)).unwrap();
        assert_eq!(short.records[..], long.records[..300]);
    }

    #[test]
    fn run_blb_validates_inputs() {
        let env = MdpEnvironment::new(builtins::two_cycle(), 0, 0);
        let reps = vec![Representation::new(RepresentationSpec::LastObs, 2, 1).unwrap()];
        assert!(matches!(
            run_blb(&env, &reps, &BlbParams::new(0.1, 1), 0, &mut rng(0)),
            Err(BlbError::InvalidParams(_))
        ));
        assert!(matches!(
            run_blb(&env, &reps, &BlbParams::new(0.1, 2), 10, &mut rng(0)),
            Err(BlbError::InvalidParams(_))
        ));
        assert!(matches!(
            run_blb(&env, &reps, &BlbParams::new(1.5, 1), 10, &mut rng(0)),
            Err(BlbError::InvalidParams(_))
        ));
    }
}
