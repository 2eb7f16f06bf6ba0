//! Rollout collection with a pure-exploration prefix on every episode.
//!
//! At the start of each episode an environment draws `k` uniformly from
//! `{0, ..., K}`. Its first `k` steps are taken by the exploration agent and
//! stored in the exploration buffer; the remaining steps are taken by the
//! main agent and stored in the main buffer, so the state reached after the
//! exploration phase acts as the main agent's start state. Exploration
//! steps count against the episode's timeout. When an episode ends (in
//! either phase) `k` is redrawn.

use rand::Rng;
use serde::Deserialize;

use crate::env::ContextualEnv;
use crate::exploration::{PeAgent, PeAgentKind};
use crate::ppo::rollout::{finish_bootstrap, main_record, next_observation};
use crate::ppo::{Phase, PpoAgent, RolloutBuffer, StepRecord, VecEnv};
use crate::rng::Rng as StreamRng;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExploreGoConfig {
    /// Run Explore-Go instead of plain PPO.
    pub enabled: bool,
    /// Longest exploration phase, inclusive.
    #[serde(rename = "K")]
    pub max_explore_steps: u32,
    pub pe_agent: PeAgentKind,
}

impl Default for ExploreGoConfig {
    fn default() -> Self {
        Self { enabled: false, max_explore_steps: 8, pe_agent: PeAgentKind::UniformRandom }
    }
}

impl ExploreGoConfig {
    /// Exploration-phase cap used at Procgen scale.
    pub const PROCGEN_MAX_EXPLORE_STEPS: u32 = 200;
}

/// Integer uniform over `{0, ..., max}`.
pub fn sample_k<R: Rng + ?Sized>(rng: &mut R, max: u32) -> u32 {
    rng.gen_range(0..=max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodePhase {
    /// Exploration steps drawn for the current episode.
    pub k: u32,
    /// Steps taken so far in the current episode.
    pub i: u32,
}

impl EpisodePhase {
    pub fn exploring(&self) -> bool {
        self.i < self.k
    }
}

/// Per-environment phase bookkeeping that persists across rollouts.
#[derive(Debug, Clone)]
pub struct ExploreGoCollector {
    config: ExploreGoConfig,
    phases: Vec<EpisodePhase>,
    k_rng: StreamRng,
    k_counts: Vec<u64>,
}

impl ExploreGoCollector {
    pub fn new(config: ExploreGoConfig, n_envs: usize, mut k_rng: StreamRng) -> Self {
        let mut k_counts = vec![0; config.max_explore_steps as usize + 1];
        let phases = (0..n_envs)
            .map(|_| {
                let k = sample_k(&mut k_rng, config.max_explore_steps);
                k_counts[k as usize] += 1;
                EpisodePhase { k, i: 0 }
            })
            .collect();
        Self { config, phases, k_rng, k_counts }
    }

    pub fn config(&self) -> &ExploreGoConfig {
        &self.config
    }

    pub fn phases(&self) -> &[EpisodePhase] {
        &self.phases
    }

    /// How often each exploration length has been drawn.
    pub fn k_counts(&self) -> &[u64] {
        &self.k_counts
    }

    /// Steps every environment `rollout_len` times and returns the main
    /// buffer and the exploration buffer.
    pub fn collect<E: ContextualEnv, R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &mut self,
        venv: &mut VecEnv<E>,
        agent: &PpoAgent,
        explorer: &PeAgent,
        rollout_len: usize,
        action_rng: &mut R1,
        explore_rng: &mut R2,
    ) -> Result<(RolloutBuffer, RolloutBuffer)> {
        let n = venv.len();
        debug_assert_eq!(n, self.phases.len());
        let mut main = RolloutBuffer::new(Phase::Main, n);
        let mut explore = RolloutBuffer::new(Phase::PureExploration, n);
        for _ in 0..rollout_len {
            for e in 0..n {
                let phase = self.phases[e];
                debug_assert_eq!(phase.i, venv.state(e).steps_elapsed);
                let obs = venv.obs(e).to_vec();
                let t = if phase.exploring() {
                    let out = explorer.act(&obs, explore_rng)?;
                    let t = venv.step(e, out.action)?;
                    let handover = !t.done && phase.i + 1 == phase.k;
                    let next_obs = if explorer.needs_next_obs() { next_observation(venv.env(), &t)? } else { None };
                    // only the learned explorer has values; it always keeps next_obs
                    let bootstrap_value = match (&next_obs, t.truncated || handover) {
                        (Some(next), true) => explorer.value(next)?,
                        _ => 0.0,
                    };
                    explore.push(
                        e,
                        StepRecord {
                            obs,
                            action: out.action,
                            log_prob: out.log_prob,
                            value: out.value,
                            reward: t.reward,
                            terminated: t.terminated(),
                            truncated: t.truncated || handover,
                            bootstrap_value,
                            next_obs,
                            position: t.state.position,
                            task: t.state.task.id,
                            episode_step: phase.i,
                            episode_start: phase.i == 0,
                            phase: Phase::PureExploration,
                        },
                    );
                    t
                } else {
                    let out = agent.act(&obs, action_rng)?;
                    let t = venv.step(e, out.action)?;
                    let mut record = main_record(venv.env(), agent, obs, out, &t)?;
                    record.episode_start = phase.i == phase.k;
                    main.push(e, record);
                    t
                };
                let phase = &mut self.phases[e];
                phase.i += 1;
                if t.done {
                    phase.k = sample_k(&mut self.k_rng, self.config.max_explore_steps);
                    phase.i = 0;
                    self.k_counts[phase.k as usize] += 1;
                }
            }
        }
        finish_bootstrap(venv, &mut main, |obs| agent.value(obs))?;
        finish_bootstrap(venv, &mut explore, |obs| explorer.value(obs))?;
        Ok((main, explore))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn k_zero_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..1000).all(|_| sample_k(&mut rng, 0) == 0));
    }

    #[test]
    fn k_is_inclusive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<u32> = (0..2000).map(|_| sample_k(&mut rng, 3)).collect();
        assert!(draws.contains(&0) && draws.contains(&3));
        assert!(draws.iter().all(|&k| k <= 3));
    }

    #[test]
    fn config_keys() {
        let c: ExploreGoConfig = toml::from_str("enabled = true\nK = 5\npe_agent = \"rnd_ppo\"").unwrap();
        assert_eq!(c.max_explore_steps, 5);
        assert_eq!(c.pe_agent, PeAgentKind::RndPpo);
        assert!(c.enabled);
        let d: ExploreGoConfig = toml::from_str("").unwrap();
        assert_eq!(d, ExploreGoConfig::default());
    }

    #[test]
    fn phase_predicate() {
        assert!(EpisodePhase { k: 3, i: 2 }.exploring());
        assert!(!EpisodePhase { k: 3, i: 3 }.exploring());
        assert!(!EpisodePhase { k: 0, i: 0 }.exploring());
    }
}
