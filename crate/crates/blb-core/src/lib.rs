//! Selecting the right state representation in average-reward reinforcement
//! learning.
//!
//! The learner interacts with an unknown environment through a single stream
//! of observations, actions and rewards, holding a finite set of candidate
//! state-representation functions of which at least one induces a weakly
//! communicating MDP. The Best-Lower-Bound strategy ([`blb`]) obtains the
//! optimal average reward of the best Markov candidate without ever learning
//! which candidate that is: it explores every model round-robin with a fresh
//! optimistic learner ([`ucrl2`]) in doubling stages, exploits the model with
//! the highest pessimistic reward estimate, and discards a model online the
//! moment its exploitation rewards fall below its own exploration-based lower
//! bound.
//!
//! The crate also carries the surrounding laboratory: synthetic environments
//! built from tabular MDPs with observation noise ([`env`], [`mdp`]),
//! representation families ([`rep`]), and exact gain/diameter oracles
//! ([`oracle`]) used for regret accounting, never by the learner.

pub mod blb;
pub mod env;
pub mod history;
pub mod mdp;
pub mod oracle;
pub mod rep;
pub mod ucrl2;

#[cfg(test)]
pub(crate) mod testutil;

pub use blb::{
    bound_b, delta_i, exploitation_test, run_blb, run_stage, select_model, stage_schedule,
    BlbError, BlbParams, EliminationEvent, FMode, Phase, RunTrace, SelectionEvent, StageSchedule,
    StageSummary, StepRecord,
};
pub use env::{EnvError, Environment, MdpEnvironment};
pub use history::{History, HistoryStep};
pub use mdp::{MdpError, TabularMdp};
pub use oracle::{
    best_markov_gain, diameter, optimal_gain, policy_gain, DiameterResult, GainSolution,
    OracleError,
};
pub use rep::{Representation, RepresentationError, RepresentationSpec};
pub use ucrl2::{extended_value_iteration, inner_max_transition, OptimisticModel, Ucrl2, Ucrl2Error};
