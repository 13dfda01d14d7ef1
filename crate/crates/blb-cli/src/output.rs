//! File emission: per-seed trace and regret CSVs, the aggregate JSON summary,
//! and the sweep CSV.
//!
//! Floats are written with 17 significant digits so parsing an emitted file
//! reproduces the in-memory values bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use blb_core::blb::{Phase, RunTrace, StageSummary};

use crate::regret::RegretReport;

pub const TRACE_HEADER: &str =
    "t,stage,phase,model_index,rep_state,action,reward,cum_reward,cum_regret";

/// 17 significant digits: enough for exact f64 round-trips.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn phase_name(phase: Phase) -> &'static str {
    match phase {
        Phase::Explore => "explore",
        Phase::Exploit => "exploit",
    }
}

pub fn trace_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("trace_seed{seed}.csv"))
}

pub fn regret_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("regret_seed{seed}.csv"))
}

pub fn write_trace_csv(path: &Path, trace: &RunTrace, report: &RegretReport) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{TRACE_HEADER}")?;
    let mut cum_reward = 0.0f64;
    for (record, regret) in trace.records.iter().zip(&report.cumulative) {
        cum_reward += record.reward;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            record.t,
            record.stage,
            phase_name(record.phase),
            record.model,
            record.state,
            record.action,
            fmt_f64(record.reward),
            fmt_f64(cum_reward),
            fmt_f64(*regret),
        )?;
    }
    out.flush()
}

pub fn write_regret_csv(path: &Path, report: &RegretReport) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "t,cum_regret")?;
    for (index, regret) in report.cumulative.iter().enumerate() {
        writeln!(out, "{},{}", index + 1, fmt_f64(*regret))?;
    }
    out.flush()
}

#[derive(Debug, Serialize)]
pub struct EventJson {
    pub t: u64,
    pub model: usize,
}

#[derive(Debug, Serialize)]
pub struct EliminationJson {
    pub t: u64,
    pub model: usize,
    pub run_length: u64,
}

#[derive(Debug, Serialize)]
pub struct StageJson {
    pub stage: u32,
    pub total: u64,
    pub explore_per_model: u64,
    pub steps_taken: u64,
    pub explore_means: Vec<f64>,
    pub bounds: Vec<f64>,
    pub selections: Vec<EventJson>,
    pub eliminations: Vec<EliminationJson>,
    pub resets: Vec<u64>,
    pub exploit_steps: Vec<u64>,
    pub final_model: Option<usize>,
    /// Cumulative regret at the stage's last step.
    pub regret_at_end: f64,
}

#[derive(Debug, Serialize)]
pub struct SeedJson {
    pub seed: u64,
    pub final_regret: f64,
    pub mean_reward: f64,
    pub stages: Vec<StageJson>,
}

#[derive(Debug, Serialize)]
pub struct AggregateJson {
    pub mean_final_regret: f64,
    pub min_final_regret: f64,
    pub max_final_regret: f64,
}

#[derive(Debug, Serialize)]
pub struct SummaryJson {
    pub rho_star: f64,
    pub best_markov_index: usize,
    pub horizon: u64,
    pub aggregate: AggregateJson,
    pub seeds: Vec<SeedJson>,
}

pub fn stage_json(summary: &StageSummary, report: &RegretReport, stage_end_t: u64) -> StageJson {
    StageJson {
        stage: summary.stage,
        total: summary.schedule.total,
        explore_per_model: summary.schedule.explore_per_model,
        steps_taken: summary.steps_taken,
        explore_means: summary.explore_means.clone(),
        bounds: summary.bounds.clone(),
        selections: summary
            .selections
            .iter()
            .map(|s| EventJson { t: s.t, model: s.model })
            .collect(),
        eliminations: summary
            .eliminations
            .iter()
            .map(|e| EliminationJson {
                t: e.t,
                model: e.model,
                run_length: e.run_length,
            })
            .collect(),
        resets: summary.resets.clone(),
        exploit_steps: summary.exploit_steps.clone(),
        final_model: summary.final_model,
        regret_at_end: report.cumulative[stage_end_t as usize - 1],
    }
}

pub fn write_summary_json(path: &Path, summary: &SummaryJson) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, summary)?;
    writeln!(out)?;
    out.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub horizon: u64,
    /// `None` marks a per-horizon mean row.
    pub seed: Option<u64>,
    pub regret: f64,
    pub regret_per_step: f64,
    pub regret_per_t23: f64,
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "horizon,seed,regret,regret_per_step,regret_per_t23")?;
    for row in rows {
        let seed = row
            .seed
            .map(|s| s.to_string())
            .unwrap_or_else(|| "mean".into());
        writeln!(
            out,
            "{},{},{},{},{}",
            row.horizon,
            seed,
            fmt_f64(row.regret),
            fmt_f64(row.regret_per_step),
            fmt_f64(row.regret_per_t23),
        )?;
    }
    out.flush()
}
