//! Pure-exploration agents.
//!
//! Two flavours: a uniform-random policy, and a PPO policy trained only on
//! random-network-distillation (RND) bonuses. The RND bonus for a step is
//! the squared distance between a trained predictor and a frozen random
//! target evaluated on the next observation, divided by a running standard
//! deviation of the raw bonuses.

use rand::Rng;
use serde::Deserialize;

use crate::env::{Action, ContextualEnv};
use crate::nn::{Adam, AdamConfig, Mlp};
use crate::ppo::{ActOutput, PpoAgent, PpoConfig, RolloutBuffer, UpdateStats};
use crate::{Error, Result};

pub fn uniform_random_action<R: Rng + ?Sized>(rng: &mut R, num_actions: usize) -> usize {
    assert!(num_actions >= 1, "need at least one action");
    rng.gen_range(0..num_actions)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RndConfig {
    pub embedding_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub learning_rate: f64,
    pub std_floor: f64,
}

impl Default for RndConfig {
    fn default() -> Self {
        Self { embedding_dim: 32, hidden_dims: vec![128, 64], learning_rate: 1e-4, std_floor: 1e-8 }
    }
}

impl RndConfig {
    /// Embedding size used with convolutional encoders at Procgen scale.
    pub const PROCGEN_EMBEDDING_DIM: usize = 512;
}

/// Streaming mean/variance of raw bonuses (Welford).
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStd {
    count: u64,
    mean: f64,
    m2: f64,
    sum_squares: f64,
    floor: f64,
}

impl RunningStd {
    pub fn new(floor: f64) -> Self {
        Self { count: 0, mean: 0.0, m2: 0.0, sum_squares: 0.0, floor }
    }

    pub fn update(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.sum_squares += x * x;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Unbiased sample std once two values have been seen; with a single
    /// value, its magnitude. Never below the floor.
    pub fn std(&self) -> f64 {
        let raw = match self.count {
            0 => 0.0,
            1 => self.sum_squares.sqrt(),
            n => (self.m2 / (n - 1) as f64).sqrt(),
        };
        raw.max(self.floor)
    }
}

#[derive(Debug, Clone)]
pub struct Rnd {
    target: Mlp,
    predictor: Mlp,
    optimizer: Adam,
}

impl Rnd {
    pub fn new<R: Rng + ?Sized>(obs_len: usize, config: &RndConfig, rng: &mut R) -> Result<Self> {
        let mut dims = vec![obs_len];
        dims.extend(&config.hidden_dims);
        dims.push(config.embedding_dim);
        let target = Mlp::orthogonal(&dims, 1.0, rng)?;
        let predictor = Mlp::orthogonal(&dims, 1.0, rng)?;
        let adam = AdamConfig { learning_rate: config.learning_rate, ..AdamConfig::default() };
        Self::from_networks(target, predictor, adam)
    }

    pub fn from_networks(target: Mlp, predictor: Mlp, adam: AdamConfig) -> Result<Self> {
        if target.dims() != predictor.dims() {
            return Err(Error::Config("RND target and predictor must share an architecture".into()));
        }
        let optimizer = Adam::new(adam, predictor.num_params());
        Ok(Self { target, predictor, optimizer })
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }

    pub fn predictor(&self) -> &Mlp {
        &self.predictor
    }

    /// Squared L2 distance between predictor and target embeddings.
    pub fn raw_bonus(&self, obs: &[f64]) -> Result<f64> {
        let p = self.predictor.predict(obs)?;
        let t = self.target.predict(obs)?;
        Ok(p.iter().zip(&t).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    /// One Adam step on the mean squared prediction error over `batch`.
    /// Returns the loss before the step, or `None` for an empty batch.
    pub fn update_predictor(&mut self, batch: &[&[f64]]) -> Result<Option<f64>> {
        if batch.is_empty() {
            return Ok(None);
        }
        let dim = self.target.output_len() as f64;
        let scale = 1.0 / (batch.len() as f64 * dim);
        let mut grads = vec![0.0; self.predictor.num_params()];
        let mut loss = 0.0;
        for obs in batch {
            let target = self.target.predict(obs)?;
            let cache = self.predictor.forward(obs)?;
            let diff: Vec<f64> = cache.output().iter().zip(&target).map(|(p, t)| p - t).collect();
            loss += diff.iter().map(|d| d * d).sum::<f64>() * scale;
            let g: Vec<f64> = diff.iter().map(|d| 2.0 * d * scale).collect();
            self.predictor.backward(&cache, &g, &mut grads)?;
        }
        self.optimizer.step(self.predictor.params_mut(), &grads)?;
        Ok(Some(loss))
    }
}

/// Normalised bonus for one next-observation; the running statistics are
/// updated with the raw bonus first.
pub fn intrinsic_reward(rnd: &Rnd, next_obs: &[f64], running: &mut RunningStd) -> Result<f64> {
    let raw = rnd.raw_bonus(next_obs)?;
    running.update(raw);
    Ok(raw / running.std())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PeAgentKind {
    #[default]
    UniformRandom,
    RndPpo,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PeUpdateStats {
    pub transitions: usize,
    pub mean_raw_bonus: f64,
    pub mean_intrinsic_reward: f64,
    pub predictor_loss: f64,
    pub ppo: Option<UpdateStats>,
}

/// PPO agent maximising normalised RND bonuses only.
#[derive(Debug, Clone)]
pub struct RndPpoAgent {
    pub policy: PpoAgent,
    pub rnd: Rnd,
    pub running: RunningStd,
}

impl RndPpoAgent {
    pub fn new<R: Rng + ?Sized>(
        obs_len: usize,
        num_actions: usize,
        ppo: PpoConfig,
        rnd: &RndConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let policy = PpoAgent::new(obs_len, num_actions, ppo, rng)?;
        let net = Rnd::new(obs_len, rnd, rng)?;
        Ok(Self { policy, rnd: net, running: RunningStd::new(rnd.std_floor) })
    }

    /// Replaces the buffer's rewards by intrinsic rewards, runs PPO on them
    /// and trains the predictor on the buffer's observations.
    pub fn update<R: Rng + ?Sized>(&mut self, buffer: &mut RolloutBuffer, rng: &mut R) -> Result<PeUpdateStats> {
        let n = buffer.len();
        if n == 0 {
            return Ok(PeUpdateStats::default());
        }
        let mut raw_sum = 0.0;
        let mut int_sum = 0.0;
        for record in buffer.records_mut() {
            // goal transitions have no next observation and earn no bonus
            let reward = match &record.next_obs {
                Some(next) => {
                    raw_sum += self.rnd.raw_bonus(next)?;
                    intrinsic_reward(&self.rnd, next, &mut self.running)?
                }
                None => 0.0,
            };
            int_sum += reward;
            record.reward = reward;
        }
        let cfg = &self.policy.config;
        buffer.compute_advantages(cfg.gamma, cfg.gae_lambda)?;
        let ppo = self.policy.update(buffer, rng)?;
        let observations: Vec<&[f64]> = buffer.records().map(|r| r.obs.as_slice()).collect();
        let predictor_loss = self.rnd.update_predictor(&observations)?.unwrap_or(0.0);
        Ok(PeUpdateStats {
            transitions: n,
            mean_raw_bonus: raw_sum / n as f64,
            mean_intrinsic_reward: int_sum / n as f64,
            predictor_loss,
            ppo,
        })
    }
}

/// The agent acting during the pure-exploration phase.
#[derive(Debug, Clone)]
pub enum PeAgent {
    UniformRandom { num_actions: usize },
    RndPpo(Box<RndPpoAgent>),
}

impl PeAgent {
    pub fn build<E: ContextualEnv, R: Rng + ?Sized>(
        kind: PeAgentKind,
        env: &E,
        ppo: &PpoConfig,
        rnd: &RndConfig,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(match kind {
            PeAgentKind::UniformRandom => PeAgent::UniformRandom { num_actions: env.num_actions() },
            PeAgentKind::RndPpo => PeAgent::RndPpo(Box::new(RndPpoAgent::new(
                env.observation_len(),
                env.num_actions(),
                ppo.clone(),
                rnd,
                rng,
            )?)),
        })
    }

    pub fn kind(&self) -> PeAgentKind {
        match self {
            PeAgent::UniformRandom { .. } => PeAgentKind::UniformRandom,
            PeAgent::RndPpo(_) => PeAgentKind::RndPpo,
        }
    }

    /// The uniform policy ignores `obs` entirely.
    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<ActOutput> {
        match self {
            PeAgent::UniformRandom { num_actions } => {
                let a = uniform_random_action(rng, *num_actions);
                Ok(ActOutput { action: Action::from_index(a)?, log_prob: -(*num_actions as f64).ln(), value: 0.0 })
            }
            PeAgent::RndPpo(agent) => agent.policy.act(obs, rng),
        }
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        match self {
            PeAgent::UniformRandom { .. } => Ok(0.0),
            PeAgent::RndPpo(agent) => agent.policy.value(obs),
        }
    }

    /// Whether exploration records must carry their next observation.
    pub fn needs_next_obs(&self) -> bool {
        matches!(self, PeAgent::RndPpo(_))
    }

    /// Trains the exploration agent on its own buffer. The uniform policy
    /// has nothing to learn.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        buffer: &mut RolloutBuffer,
        rng: &mut R,
    ) -> Result<Option<PeUpdateStats>> {
        match self {
            PeAgent::UniformRandom { .. } => {
                log::debug!("uniform-random exploration agent has no update");
                Ok(None)
            }
            PeAgent::RndPpo(_) if buffer.is_empty() => Ok(None),
            PeAgent::RndPpo(agent) => agent.update(buffer, rng).map(Some),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_action_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[uniform_random_action(&mut rng, 4)] += 1;
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * 0.25).abs() <= 3.0 * sigma);
        }
        assert!((0..100).all(|_| uniform_random_action(&mut rng, 1) == 0));
    }

    #[test]
    fn running_std() {
        let mut r = RunningStd::new(1e-8);
        assert_eq!(r.std(), 1e-8);
        r.update(0.0);
        assert_eq!(r.std(), 1e-8);
        r.update(2.0);
        // unbiased std of {0, 2}
        assert!((r.std() - 2f64.sqrt()).abs() < 1e-15);
        let mut r = RunningStd::new(1e-8);
        r.update(3.0);
        assert_eq!(r.std(), 3.0);
        assert_eq!(r.count(), 1);
    }

    #[test]
    fn copied_predictor_has_zero_bonus() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let target = Mlp::orthogonal(&[5, 8, 3], 1.0, &mut rng).unwrap();
        let rnd = Rnd::from_networks(target.clone(), target, AdamConfig::default()).unwrap();
        assert_eq!(rnd.raw_bonus(&[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_architectures_rejected() {
        let a = Mlp::zeros(&[5, 3]).unwrap();
        let b = Mlp::zeros(&[5, 4]).unwrap();
        assert!(Rnd::from_networks(a, b, AdamConfig::default()).is_err());
    }

    #[test]
    fn zero_learning_rate_keeps_predictor() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cfg = RndConfig { learning_rate: 0.0, ..RndConfig::default() };
        let mut rnd = Rnd::new(6, &cfg, &mut rng).unwrap();
        let before = rnd.predictor().clone();
        rnd.update_predictor(&[&[0.5; 6]]).unwrap();
        assert_eq!(rnd.predictor().params(), before.params());
        assert_eq!(rnd.update_predictor(&[]).unwrap(), None);
    }

    #[test]
    fn uniform_agent_ignores_observation() {
        let agent = PeAgent::UniformRandom { num_actions: 4 };
        let a = agent.act(&[0.0; 75], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = agent.act(&[1.0; 75], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert!((a.log_prob + 4f64.ln()).abs() < 1e-15);
    }
}
