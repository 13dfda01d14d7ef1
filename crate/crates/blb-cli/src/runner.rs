//! Seeded execution: per-seed runs (in parallel), regret accounting against
//! the oracle gain, file emission, horizon sweeps, and the oracle report.

use std::path::PathBuf;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

use blb_core::blb::{run_blb, BlbError, RunTrace};
use blb_core::mdp::MdpError;
use blb_core::oracle::{best_markov_gain, diameter, optimal_gain, OracleError};

use crate::config::Experiment;
use crate::output::{
    regret_path, stage_json, trace_path, write_regret_csv, write_summary_json, write_sweep_csv,
    write_trace_csv, AggregateJson, SeedJson, SummaryJson, SweepRow,
};
use crate::regret::{compute_regret, RegretReport};

const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("representation {index} flagged Markov is not weakly communicating")]
    NotWeaklyCommunicating { index: usize, source: MdpError },
    #[error("oracle failure: {0}")]
    Oracle(#[from] OracleError),
    #[error("run failure: {0}")]
    Run(#[from] BlbError),
    #[error("cannot write {path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("sweep horizons must be strictly increasing, got {0:?}")]
    HorizonsNotIncreasing(Vec<u64>),
}

fn io_err(path: PathBuf) -> impl FnOnce(std::io::Error) -> RunnerError {
    move |source| RunnerError::Io { path, source }
}

/// Derive the random stream of one run from the environment seed and the run
/// seed. Fixed constants pad the key so distinct (env, run) pairs give
/// unrelated streams.
pub fn run_rng(env_seed: u64, run_seed: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&env_seed.to_le_bytes());
    key[8..16].copy_from_slice(&run_seed.to_le_bytes());
    key[16..24].copy_from_slice(&0x9E37_79B9_7F4A_7C15u64.to_le_bytes());
    key[24..32].copy_from_slice(&0xD1B5_4A32_D192_ED03u64.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// Weak-communication check plus best Markov gain over the induced MDPs.
pub fn oracle_gain(experiment: &Experiment) -> Result<(f64, usize), RunnerError> {
    for (index, mdp) in experiment.induced.iter().enumerate() {
        if let Some(mdp) = mdp {
            mdp.check_weakly_communicating()
                .map_err(|source| RunnerError::NotWeaklyCommunicating { index, source })?;
        }
    }
    let candidates: Vec<Option<&blb_core::mdp::TabularMdp>> =
        experiment.induced.iter().map(Option::as_ref).collect();
    Ok(best_markov_gain(&candidates, ORACLE_TOL)?)
}

#[derive(Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    pub trace: RunTrace,
    pub report: RegretReport,
}

pub fn run_seed(
    experiment: &Experiment,
    seed: u64,
    horizon: u64,
    rho_star: f64,
) -> Result<SeedOutcome, RunnerError> {
    let mut rng = run_rng(experiment.environment.seed(), seed);
    let trace = run_blb(
        &experiment.environment,
        &experiment.representations,
        &experiment.params,
        horizon,
        &mut rng,
    )?;
    let report = compute_regret(&trace, rho_star);
    Ok(SeedOutcome { seed, trace, report })
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub rho_star: f64,
    pub best_markov_index: usize,
    pub outcomes: Vec<SeedOutcome>,
    pub summary_path: PathBuf,
}

/// Run every seed (in parallel), write per-seed trace and regret CSVs and the
/// aggregate JSON summary into the output directory.
pub fn run_experiment(experiment: &Experiment) -> Result<ExperimentOutput, RunnerError> {
    let (rho_star, best_markov_index) = oracle_gain(experiment)?;
    std::fs::create_dir_all(&experiment.output_dir)
        .map_err(io_err(experiment.output_dir.clone()))?;

    let outcomes: Vec<SeedOutcome> = experiment
        .seeds
        .par_iter()
        .map(|&seed| {
            let outcome = run_seed(experiment, seed, experiment.horizon, rho_star)?;
            let tpath = trace_path(&experiment.output_dir, seed);
            write_trace_csv(&tpath, &outcome.trace, &outcome.report).map_err(io_err(tpath))?;
            let rpath = regret_path(&experiment.output_dir, seed);
            write_regret_csv(&rpath, &outcome.report).map_err(io_err(rpath))?;
            Ok(outcome)
        })
        .collect::<Result<_, RunnerError>>()?;

    let finals: Vec<f64> = outcomes.iter().map(|o| o.report.final_regret()).collect();
    let aggregate = AggregateJson {
        mean_final_regret: finals.iter().sum::<f64>() / finals.len() as f64,
        min_final_regret: finals.iter().copied().fold(f64::INFINITY, f64::min),
        max_final_regret: finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    let seeds_json: Vec<SeedJson> = outcomes
        .iter()
        .map(|outcome| {
            let mut end_t = 0u64;
            let stages = outcome
                .trace
                .stages
                .iter()
                .map(|stage| {
                    end_t += stage.steps_taken;
                    stage_json(stage, &outcome.report, end_t)
                })
                .collect();
            let total_reward: f64 = outcome.trace.rewards().sum();
            SeedJson {
                seed: outcome.seed,
                final_regret: outcome.report.final_regret(),
                mean_reward: total_reward / outcome.trace.horizon() as f64,
                stages,
            }
        })
        .collect();
    let summary = SummaryJson {
        rho_star,
        best_markov_index,
        horizon: experiment.horizon,
        aggregate,
        seeds: seeds_json,
    };
    let summary_path = experiment.output_dir.join("summary.json");
    write_summary_json(&summary_path, &summary).map_err(io_err(summary_path.clone()))?;

    Ok(ExperimentOutput {
        rho_star,
        best_markov_index,
        outcomes,
        summary_path,
    })
}

/// One row per (horizon, seed) plus one mean row per horizon, written to
/// `sweep.csv`. Each (horizon, seed) pair is a fresh, independent run.
pub fn sweep(experiment: &Experiment, horizons: &[u64]) -> Result<(PathBuf, Vec<SweepRow>), RunnerError> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RunnerError::HorizonsNotIncreasing(horizons.to_vec()));
    }
    let (rho_star, _) = oracle_gain(experiment)?;
    std::fs::create_dir_all(&experiment.output_dir)
        .map_err(io_err(experiment.output_dir.clone()))?;

    let mut jobs: Vec<(u64, u64)> = Vec::new();
    for &horizon in horizons {
        for &seed in &experiment.seeds {
            jobs.push((horizon, seed));
        }
    }
    let results: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(horizon, seed)| {
            let outcome = run_seed(experiment, seed, horizon, rho_star)?;
            let regret = outcome.report.final_regret();
            Ok(SweepRow {
                horizon,
                seed: Some(seed),
                regret,
                regret_per_step: regret / horizon as f64,
                regret_per_t23: regret / (horizon as f64).powf(2.0 / 3.0),
            })
        })
        .collect::<Result<_, RunnerError>>()?;

    let mut rows = results;
    for &horizon in horizons {
        let horizon_rows: Vec<&SweepRow> = rows
            .iter()
            .filter(|r| r.horizon == horizon && r.seed.is_some())
            .collect();
        let n = horizon_rows.len() as f64;
        let mean = |f: fn(&SweepRow) -> f64| horizon_rows.iter().map(|r| f(r)).sum::<f64>() / n;
        let mean_row = SweepRow {
            horizon,
            seed: None,
            regret: mean(|r| r.regret),
            regret_per_step: mean(|r| r.regret_per_step),
            regret_per_t23: mean(|r| r.regret_per_t23),
        };
        rows.push(mean_row);
    }

    let path = experiment.output_dir.join("sweep.csv");
    write_sweep_csv(&path, &rows).map_err(io_err(path.clone()))?;
    Ok((path, rows))
}

/// Text report of the exact oracles for every Markov-flagged representation:
/// optimal gain and policy, diameter, and hitting-time extremes.
pub fn oracle_report(experiment: &Experiment) -> Result<String, RunnerError> {
    use std::fmt::Write;

    let mut out = String::new();
    let (rho_star, best) = oracle_gain(experiment)?;
    for (index, mdp) in experiment.induced.iter().enumerate() {
        let Some(mdp) = mdp else { continue };
        let gain = optimal_gain(mdp, ORACLE_TOL)?;
        let dia = diameter(mdp, ORACLE_TOL)?;
        let mut max_pair = (0, 0);
        let mut min_pair = (0, 0);
        let mut min_time = f64::INFINITY;
        for from in 0..mdp.num_states() {
            for to in 0..mdp.num_states() {
                if from == to {
                    continue;
                }
                let time = dia.hitting_times[from][to];
                if time == dia.diameter {
                    max_pair = (from, to);
                }
                if time < min_time {
                    min_time = time;
                    min_pair = (from, to);
                }
            }
        }
        writeln!(
            out,
            "representation {index} ({}):",
            experiment.representations[index]
        )
        .unwrap();
        writeln!(out, "  optimal gain rho = {:.9}", gain.gain).unwrap();
        writeln!(out, "  optimal policy   = {:?}", gain.policy).unwrap();
        if mdp.num_states() > 1 {
            writeln!(
                out,
                "  diameter D       = {:.9} (slowest pair {} -> {})",
                dia.diameter, max_pair.0, max_pair.1
            )
            .unwrap();
            writeln!(
                out,
                "  fastest pair     = {} -> {} ({:.9} steps)",
                min_pair.0, min_pair.1, min_time
            )
            .unwrap();
        } else {
            writeln!(out, "  diameter D       = 0 (single state)").unwrap();
        }
    }
    writeln!(
        out,
        "rho* = {rho_star:.9} (best Markov representation: index {best})"
    )
    .unwrap();
    Ok(out)
}
