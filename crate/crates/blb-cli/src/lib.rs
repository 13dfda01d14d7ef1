//! Experiment harness around `blb-core`: TOML experiment configs, seeded
//! parallel runs, regret accounting against the exact oracle gain, CSV trace
//! emission and JSON summaries, horizon sweeps, and an oracle report command.

pub mod config;
pub mod output;
pub mod regret;
pub mod runner;

pub use config::{ConfigFile, Experiment};
pub use regret::{compute_regret, RegretReport};
pub use runner::{oracle_report, run_experiment, run_seed, sweep};
