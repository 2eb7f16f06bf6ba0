//! Per-environment transition storage for one rollout.

use crate::env::{Action, Position, TaskId};
use crate::{Error, Result};

use super::gae::compute_gae;

/// Which agent generated a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// The main (PPO) agent.
    Main,
    /// The pure-exploration agent at the start of an episode.
    PureExploration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub obs: Vec<f64>,
    pub action: Action,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    /// Entered a terminal (goal) state.
    pub terminated: bool,
    /// Trajectory cut here without a terminal state: the episode timed out,
    /// or (in exploration buffers) the exploration phase handed over.
    pub truncated: bool,
    /// Value of the state after this step; read when `truncated` or when
    /// this is the last record of its environment.
    pub bootstrap_value: f64,
    /// Observation after the step, kept only where a consumer needs it.
    pub next_obs: Option<Vec<f64>>,
    pub position: Position,
    pub task: TaskId,
    /// Steps taken in the episode before this one (exploration included).
    pub episode_step: u32,
    /// First record this buffer holds for its episode.
    pub episode_start: bool,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    phase: Phase,
    envs: Vec<Vec<StepRecord>>,
    advantages: Option<Vec<Vec<f64>>>,
    returns: Option<Vec<Vec<f64>>>,
}

/// One flattened training example.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub obs: &'a [f64],
    pub action: Action,
    pub log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

impl RolloutBuffer {
    pub fn new(phase: Phase, n_envs: usize) -> Self {
        Self { phase, envs: vec![Vec::new(); n_envs], advantages: None, returns: None }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn n_envs(&self) -> usize {
        self.envs.len()
    }

    pub fn push(&mut self, env: usize, record: StepRecord) {
        assert_eq!(record.phase, self.phase, "transition pushed into the other phase's buffer");
        self.envs[env].push(record);
        self.advantages = None;
        self.returns = None;
    }

    pub fn len(&self) -> usize {
        self.envs.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn env(&self, env: usize) -> &[StepRecord] {
        &self.envs[env]
    }

    pub fn env_mut(&mut self, env: usize) -> &mut Vec<StepRecord> {
        self.advantages = None;
        self.returns = None;
        &mut self.envs[env]
    }

    pub fn records(&self) -> impl Iterator<Item = &StepRecord> {
        self.envs.iter().flatten()
    }

    pub fn records_mut(&mut self) -> impl Iterator<Item = &mut StepRecord> {
        self.advantages = None;
        self.returns = None;
        self.envs.iter_mut().flatten()
    }

    pub fn compute_advantages(&mut self, gamma: f64, lambda: f64) -> Result<()> {
        let mut advantages = Vec::with_capacity(self.envs.len());
        let mut returns = Vec::with_capacity(self.envs.len());
        for records in &self.envs {
            let col = |f: fn(&StepRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
            let flag = |f: fn(&StepRecord) -> bool| records.iter().map(f).collect::<Vec<_>>();
            let (a, r) = compute_gae(
                &col(|s| s.reward),
                &col(|s| s.value),
                &flag(|s| s.terminated),
                &flag(|s| s.truncated),
                &col(|s| s.bootstrap_value),
                gamma,
                lambda,
            )?;
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("advantages"));
            }
            advantages.push(a);
            returns.push(r);
        }
        self.advantages = Some(advantages);
        self.returns = Some(returns);
        Ok(())
    }

    pub fn advantages(&self) -> Option<&[Vec<f64>]> {
        self.advantages.as_deref()
    }

    pub fn returns(&self) -> Option<&[Vec<f64>]> {
        self.returns.as_deref()
    }

    /// Flattened samples in env-major order; requires advantages.
    pub fn samples(&self) -> Result<Vec<Sample<'_>>> {
        let (Some(adv), Some(ret)) = (&self.advantages, &self.returns) else {
            return Err(Error::Usage("advantages have not been computed".into()));
        };
        let mut out = Vec::with_capacity(self.len());
        for (e, records) in self.envs.iter().enumerate() {
            for (t, r) in records.iter().enumerate() {
                out.push(Sample {
                    obs: &r.obs,
                    action: r.action,
                    log_prob: r.log_prob,
                    advantage: adv[e][t],
                    ret: ret[e][t],
                });
            }
        }
        Ok(out)
    }
}

/// Shifts and scales advantages to mean 0 and (population) std 1. Batches
/// of fewer than two samples are left alone.
pub fn normalize_advantages(samples: &mut [Sample<'_>]) {
    let n = samples.len();
    if n < 2 {
        return;
    }
    let mean = samples.iter().map(|s| s.advantage).sum::<f64>() / n as f64;
    let var = samples.iter().map(|s| (s.advantage - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt().max(1e-8);
    for s in samples.iter_mut() {
        s.advantage = (s.advantage - mean) / std;
    }
}
