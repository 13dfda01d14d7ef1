//! Experiment configuration: TOML schema, validation, and resolution into
//! core types.
//!
//! A config names an environment (explicit tables or a builtin), a list of
//! representations with ground-truth Markov flags (Markov ones must supply
//! their induced MDP tables, or the `"env"` alias when the representation
//! recovers the environment MDP exactly), the algorithm parameters, a
//! horizon, a seed list, and output settings.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use blb_core::blb::{BlbParams, FMode};
use blb_core::env::{Environment, MdpEnvironment};
use blb_core::mdp::{builtins, TabularMdp};
use blb_core::rep::{Representation, RepresentationSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(
        "config field `representations`: no representation is flagged `is_markov` with an \
         induced MDP; the model set must contain at least one Markov model of the environment"
    )]
    NoMarkovModel,
}

fn field_err(field: impl Into<String>, message: impl ToString) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub environment: EnvironmentConfig,
    pub representations: Vec<RepresentationConfig>,
    pub blb: BlbConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    /// "tables", "two_state", "two_cycle", or "riverswim".
    pub kind: String,
    pub transitions: Option<Vec<Vec<Vec<f64>>>>,
    pub rewards: Option<Vec<Vec<f64>>>,
    /// Uniformly random bits appended to the MDP state in each observation.
    #[serde(default)]
    pub noise_bits: u32,
    /// Environment base seed, mixed with each run seed.
    #[serde(default)]
    pub seed: u64,
    /// Chain length for the riverswim builtin (default 6).
    pub num_states: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationConfig {
    /// "last_obs", "window", "partition", or "constant".
    pub kind: String,
    /// Window length (window kind only).
    pub k: Option<usize>,
    /// Observation id -> cell id table (partition kind only).
    pub cells: Option<Vec<usize>>,
    /// Ground-truth flag set from construction knowledge; never shown to the
    /// algorithm.
    #[serde(default)]
    pub is_markov: bool,
    /// Induced MDP for Markov-flagged representations: explicit tables or the
    /// string "env" when the representation recovers the environment MDP.
    pub induced_mdp: Option<InducedMdpConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum InducedMdpConfig {
    Alias(String),
    Tables {
        transitions: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlbConfig {
    pub delta: f64,
    /// "log2_plus_one" (default) or "power" (requires `epsilon`).
    #[serde(default = "default_f_mode")]
    pub f_mode: String,
    pub epsilon: Option<f64>,
    #[serde(default = "default_bound_scale")]
    pub bound_scale: f64,
    #[serde(default = "default_clip")]
    pub clip_bound_at_one: bool,
}

fn default_f_mode() -> String {
    "log2_plus_one".into()
}

fn default_bound_scale() -> f64 {
    1.0
}

fn default_clip() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_format() -> String {
    "csv".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            format: default_format(),
        }
    }
}

/// A fully validated experiment, ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub environment: MdpEnvironment,
    pub representations: Vec<Representation>,
    /// Induced MDP per representation; `None` for non-Markov ones.
    pub induced: Vec<Option<TabularMdp>>,
    pub params: BlbParams,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(toml::from_str(&text)?)
    }

    pub fn resolve(&self) -> Result<Experiment, ConfigError> {
        if self.horizon == 0 {
            return Err(field_err("horizon", "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(field_err("seeds", "at least one seed is required"));
        }
        if self.output.format != "csv" {
            return Err(field_err(
                "output.format",
                format!("unsupported format `{}` (only `csv`)", self.output.format),
            ));
        }

        let env_mdp = self.environment.build_mdp()?;
        let environment =
            MdpEnvironment::new(env_mdp.clone(), self.environment.noise_bits, self.environment.seed);
        let observation_count = environment.observation_count();
        let action_count = env_mdp.num_actions();

        if self.representations.is_empty() {
            return Err(field_err("representations", "at least one representation is required"));
        }
        let mut representations = Vec::new();
        let mut induced = Vec::new();
        for (index, rep) in self.representations.iter().enumerate() {
            let field = format!("representations[{index}]");
            let spec = rep.spec(&field)?;
            let built = Representation::new(spec, observation_count, action_count)
                .map_err(|e| field_err(&field, e))?
                .with_markov_ground_truth(rep.is_markov);
            representations.push(built);

            match (&rep.induced_mdp, rep.is_markov) {
                (None, false) => induced.push(None),
                (None, true) => {
                    return Err(field_err(
                        format!("{field}.induced_mdp"),
                        "required for representations flagged is_markov",
                    ))
                }
                (Some(_), false) => {
                    return Err(field_err(
                        format!("{field}.induced_mdp"),
                        "only read for representations flagged is_markov",
                    ))
                }
                (Some(InducedMdpConfig::Alias(alias)), true) => {
                    if alias != "env" {
                        return Err(field_err(
                            format!("{field}.induced_mdp"),
                            format!("unknown alias `{alias}` (only \"env\")"),
                        ));
                    }
                    induced.push(Some(env_mdp.clone()));
                }
                (Some(InducedMdpConfig::Tables { transitions, rewards }), true) => {
                    let mdp = TabularMdp::new(transitions.clone(), rewards.clone())
                        .map_err(|e| field_err(format!("{field}.induced_mdp"), e))?;
                    induced.push(Some(mdp));
                }
            }
        }
        if !induced.iter().any(Option::is_some) {
            return Err(ConfigError::NoMarkovModel);
        }

        let params = self.blb.build_params(representations.len())?;
        Ok(Experiment {
            environment,
            representations,
            induced,
            params,
            horizon: self.horizon,
            seeds: self.seeds.clone(),
            output_dir: self.output.dir.clone(),
        })
    }
}

impl EnvironmentConfig {
    fn build_mdp(&self) -> Result<TabularMdp, ConfigError> {
        let tables_given = self.transitions.is_some() || self.rewards.is_some();
        match self.kind.as_str() {
            "tables" => match (&self.transitions, &self.rewards) {
                (Some(t), Some(r)) => TabularMdp::new(t.clone(), r.clone())
                    .map_err(|e| field_err("environment", e)),
                _ => Err(field_err(
                    "environment",
                    "kind \"tables\" requires both `transitions` and `rewards`",
                )),
            },
            kind => {
                if tables_given {
                    return Err(field_err(
                        "environment.transitions",
                        format!("only valid with kind \"tables\", not \"{kind}\""),
                    ));
                }
                match kind {
                    "two_state" => Ok(builtins::two_state()),
                    "two_cycle" => Ok(builtins::two_cycle()),
                    "riverswim" => {
                        let n = self.num_states.unwrap_or(6);
                        if n < 2 {
                            return Err(field_err(
                                "environment.num_states",
                                "riverswim needs at least 2 states",
                            ));
                        }
                        Ok(builtins::riverswim(n))
                    }
                    other => Err(field_err(
                        "environment.kind",
                        format!(
                            "unknown kind `{other}` (expected tables, two_state, two_cycle, riverswim)"
                        ),
                    )),
                }
            }
        }
    }
}

impl RepresentationConfig {
    fn spec(&self, field: &str) -> Result<RepresentationSpec, ConfigError> {
        match self.kind.as_str() {
            "last_obs" => Ok(RepresentationSpec::LastObs),
            "constant" => Ok(RepresentationSpec::Constant),
            "window" => {
                let k = self
                    .k
                    .ok_or_else(|| field_err(format!("{field}.k"), "required for kind \"window\""))?;
                Ok(RepresentationSpec::WindowK { k })
            }
            "partition" => {
                let cells = self.cells.clone().ok_or_else(|| {
                    field_err(format!("{field}.cells"), "required for kind \"partition\"")
                })?;
                Ok(RepresentationSpec::Partition { cells })
            }
            other => Err(field_err(
                format!("{field}.kind"),
                format!("unknown kind `{other}` (expected last_obs, window, partition, constant)"),
            )),
        }
    }
}

impl BlbConfig {
    fn build_params(&self, num_models: usize) -> Result<BlbParams, ConfigError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(field_err("blb.delta", "must lie in (0, 1)"));
        }
        if self.bound_scale <= 0.0 || self.bound_scale.is_nan() {
            return Err(field_err("blb.bound_scale", "must be positive"));
        }
        let f_mode = match self.f_mode.as_str() {
            "log2_plus_one" => {
                if self.epsilon.is_some() {
                    return Err(field_err(
                        "blb.epsilon",
                        "only valid with f_mode \"power\"",
                    ));
                }
                FMode::Log2PlusOne
            }
            "power" => {
                let epsilon = self.epsilon.ok_or_else(|| {
                    field_err("blb.epsilon", "required for f_mode \"power\"")
                })?;
                if !(epsilon > 0.0 && epsilon < 1.0) {
                    return Err(field_err("blb.epsilon", "must lie in (0, 1)"));
                }
                FMode::Power { epsilon }
            }
            other => {
                return Err(field_err(
                    "blb.f_mode",
                    format!("unknown mode `{other}` (expected log2_plus_one or power)"),
                ))
            }
        };
        Ok(BlbParams {
            delta: self.delta,
            f_mode,
            bound_scale: self.bound_scale,
            clip_bound_at_one: self.clip_bound_at_one,
            num_models,
        })
    }
}
