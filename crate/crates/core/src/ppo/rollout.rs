//! Lockstep vectorised environments and baseline rollout collection.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::env::{Action, ContextualEnv, EnvState, Task, TaskId, Transition};
use crate::rng::Rng as StreamRng;
use crate::{Error, Result};

use super::agent::PpoAgent;
use super::buffer::{Phase, RolloutBuffer, StepRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub task: TaskId,
    pub ret: f64,
    pub length: u32,
    pub reached_goal: bool,
}

/// `n` independent episodes of one environment, each reset to a uniformly
/// drawn task when it ends.
#[derive(Debug, Clone)]
pub struct VecEnv<E> {
    env: E,
    tasks: Vec<Task>,
    states: Vec<EnvState>,
    obs: Vec<Vec<f64>>,
    returns: Vec<f64>,
    rng: StreamRng,
    finished: Vec<EpisodeSummary>,
}

impl<E: ContextualEnv> VecEnv<E> {
    pub fn new(env: E, tasks: Vec<Task>, n_envs: usize, mut rng: StreamRng) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::Config("no tasks to sample from".into()));
        }
        let mut states = Vec::with_capacity(n_envs);
        let mut obs = Vec::with_capacity(n_envs);
        for _ in 0..n_envs {
            let task = tasks.choose(&mut rng).expect("non-empty");
            let s = env.reset(task)?;
            obs.push(env.render(&s)?.into_vec());
            states.push(s);
        }
        Ok(Self { env, tasks, states, obs, returns: vec![0.0; n_envs], rng, finished: Vec::new() })
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &EnvState {
        &self.states[i]
    }

    pub fn obs(&self, i: usize) -> &[f64] {
        &self.obs[i]
    }

    /// Steps environment `i`; a finished episode is reset in place.
    pub fn step(&mut self, i: usize, action: Action) -> Result<Transition> {
        let t = self.env.step(&self.states[i], action)?;
        self.returns[i] += t.reward;
        if t.done {
            self.finished.push(EpisodeSummary {
                task: t.state.task.id,
                ret: self.returns[i],
                length: t.next_state.steps_elapsed,
                reached_goal: t.terminated(),
            });
            self.returns[i] = 0.0;
            let task = *self.tasks.choose(&mut self.rng).expect("non-empty");
            self.states[i] = self.env.reset(&task)?;
        } else {
            self.states[i] = t.next_state;
        }
        self.obs[i] = self.env.render(&self.states[i])?.into_vec();
        Ok(t)
    }

    /// Episodes completed since the last call.
    pub fn drain_finished(&mut self) -> Vec<EpisodeSummary> {
        std::mem::take(&mut self.finished)
    }
}

/// Observation of a transition's successor; `None` when it is terminal.
pub fn next_observation<E: ContextualEnv>(env: &E, t: &Transition) -> Result<Option<Vec<f64>>> {
    if t.next_state.terminal {
        Ok(None)
    } else {
        Ok(Some(env.render(&t.next_state)?.into_vec()))
    }
}

/// Steps every environment `rollout_len` times with the agent's policy.
/// Episodes continue across calls.
pub fn collect_rollout<E: ContextualEnv, R: Rng + ?Sized>(
    venv: &mut VecEnv<E>,
    agent: &PpoAgent,
    rollout_len: usize,
    rng: &mut R,
) -> Result<RolloutBuffer> {
    let n = venv.len();
    let mut buffer = RolloutBuffer::new(Phase::Main, n);
    for _ in 0..rollout_len {
        for e in 0..n {
            let obs = venv.obs(e).to_vec();
            let out = agent.act(&obs, rng)?;
            let t = venv.step(e, out.action)?;
            buffer.push(e, main_record(venv.env(), agent, obs, out, &t)?);
        }
    }
    finish_bootstrap(venv, &mut buffer, |obs| agent.value(obs))?;
    Ok(buffer)
}

/// Record for a main-agent step; a timed-out step bootstraps from the
/// critic's value of the truncating state.
pub(crate) fn main_record<E: ContextualEnv>(
    env: &E,
    agent: &PpoAgent,
    obs: Vec<f64>,
    out: super::agent::ActOutput,
    t: &Transition,
) -> Result<StepRecord> {
    let bootstrap_value = if t.truncated { agent.value(&env.render(&t.next_state)?.into_vec())? } else { 0.0 };
    Ok(StepRecord {
        obs,
        action: out.action,
        log_prob: out.log_prob,
        value: out.value,
        reward: t.reward,
        terminated: t.terminated(),
        truncated: t.truncated,
        bootstrap_value,
        next_obs: None,
        position: t.state.position,
        task: t.state.task.id,
        episode_step: t.state.steps_elapsed,
        episode_start: t.state.steps_elapsed == 0,
        phase: Phase::Main,
    })
}

/// Gives each environment's unfinished final record the value of the
/// state the environment is currently in.
pub(crate) fn finish_bootstrap<E: ContextualEnv>(
    venv: &VecEnv<E>,
    buffer: &mut RolloutBuffer,
    value: impl Fn(&[f64]) -> Result<f64>,
) -> Result<()> {
    for e in 0..buffer.n_envs() {
        if let Some(last) = buffer.env_mut(e).last_mut() {
            if !last.terminated && !last.truncated {
                last.bootstrap_value = value(venv.obs(e))?;
            }
        }
    }
    Ok(())
}
