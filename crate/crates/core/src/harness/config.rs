//! Experiment configuration file.
//!
//! TOML with one table per component; every key is optional:
//!
//! ```toml
//! [experiment]
//! algorithm = "explore_go"     # or "ppo"
//! seeds = [0, 1, 2]
//! total_timesteps = 50000
//! eval_every = 1000
//! eval_episodes = 10
//! greedy_eval = false
//! env_config = "cross.toml"    # task set in a separate file, or use [env]
//!
//! [env]
//! timeout = 20
//!
//! [ppo]
//! learning_rate = 1e-4
//!
//! [explore_go]
//! K = 8
//! pe_agent = "uniform_random"
//!
//! [rnd]
//! embedding_dim = 32
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::cross::{CrossConfig, CrossConfigFile};
use crate::exploration::RndConfig;
use crate::explore_go::ExploreGoConfig;
use crate::ppo::PpoConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ppo,
    ExploreGo,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ppo => "ppo",
            Algorithm::ExploreGo => "explore-go",
        }
    }
}

pub const DEFAULT_SEED_COUNT: u64 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub total_timesteps: u64,
    pub eval_every: u64,
    /// Evaluation episodes per task.
    pub eval_episodes: usize,
    /// Act with the most likely action at evaluation instead of sampling.
    pub greedy_eval: bool,
    pub env: CrossConfig,
    pub ppo: PpoConfig,
    pub explore_go: ExploreGoConfig,
    pub rnd: RndConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
            total_timesteps: 50_000,
            eval_every: 1000,
            eval_episodes: 10,
            greedy_eval: false,
            env: CrossConfig::default(),
            ppo: PpoConfig::default(),
            explore_go: ExploreGoConfig::default(),
            rnd: RndConfig::default(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    algorithm: Option<Algorithm>,
    seeds: Option<Vec<u64>>,
    total_timesteps: Option<u64>,
    eval_every: Option<u64>,
    eval_episodes: Option<usize>,
    greedy_eval: Option<bool>,
    env_config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    experiment: ExperimentSection,
    env: Option<CrossConfigFile>,
    #[serde(default)]
    ppo: PpoConfig,
    #[serde(default)]
    explore_go: ExploreGoConfig,
    #[serde(default)]
    rnd: RndConfig,
}

impl ExperimentConfig {
    /// Parses a config; relative `env_config` paths resolve against `base`.
    pub fn from_toml_str(text: &str, base: Option<&Path>) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text)?;
        let defaults = Self::default();
        let ex = file.experiment;
        let env = match (ex.env_config, file.env) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either experiment.env_config or [env], not both".into()))
            }
            (Some(path), None) => {
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path,
                };
                CrossConfig::from_file(path)?
            }
            (None, Some(inline)) => inline.resolve()?,
            (None, None) => defaults.env,
        };
        let mut explore_go = file.explore_go;
        if let Some(algorithm) = ex.algorithm {
            explore_go.enabled = algorithm == Algorithm::ExploreGo;
        }
        let config = Self {
            seeds: ex.seeds.unwrap_or(defaults.seeds),
            total_timesteps: ex.total_timesteps.unwrap_or(defaults.total_timesteps),
            eval_every: ex.eval_every.unwrap_or(defaults.eval_every),
            eval_episodes: ex.eval_episodes.unwrap_or(defaults.eval_episodes),
            greedy_eval: ex.greedy_eval.unwrap_or(defaults.greedy_eval),
            env,
            ppo: file.ppo,
            explore_go,
            rnd: file.rnd,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::ConfigFile { path: path.to_owned(), source })?;
        Self::from_toml_str(&text, path.parent())
    }

    pub fn algorithm(&self) -> Algorithm {
        if self.explore_go.enabled {
            Algorithm::ExploreGo
        } else {
            Algorithm::Ppo
        }
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.explore_go.enabled = algorithm == Algorithm::ExploreGo;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.ppo.validate()?;
        self.env.validate()?;
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be positive".into()));
        }
        if self.rnd.embedding_dim == 0 || self.rnd.hidden_dims.contains(&0) {
            return Err(Error::Config("RND layer sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Parses `a..b` (exclusive), `a..=b`, a single seed, or a comma list.
pub fn parse_seed_range(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("cannot parse seed range {text:?}"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    if let Some((a, b)) = text.split_once("..=") {
        let (a, b) = (num(a)?, num(b)?);
        return if a <= b { Ok((a..=b).collect()) } else { Err(bad()) };
    }
    if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        return if a < b { Ok((a..b).collect()) } else { Err(bad()) };
    }
    text.split(',').map(num).collect()
}
