use rand::seq::SliceRandom;
use rand::Rng;

use crate::env::Action;
use crate::nn::{clip_global_norm, Adam, Categorical, Mlp};
use crate::{Error, Result};

use super::buffer::{normalize_advantages, RolloutBuffer};
use super::config::PpoConfig;
use super::loss::ppo_loss;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActOutput {
    pub action: Action,
    pub log_prob: f64,
    pub value: f64,
}

/// Mean statistics over every minibatch of one update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub samples: usize,
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    /// Clip fraction of the very first minibatch, before any parameter moved.
    pub first_clip_fraction: f64,
    pub grad_norm: f64,
}

/// Separate actor and critic networks with their own Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoAgent {
    pub actor: Mlp,
    pub critic: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
    pub config: PpoConfig,
}

/// Splits `n` items into `parts` contiguous chunk lengths differing by at
/// most one; empty chunks are dropped.
pub fn chunk_lengths(n: usize, parts: usize) -> Vec<usize> {
    let parts = parts.max(1);
    (0..parts).map(|i| n / parts + usize::from(i < n % parts)).filter(|&l| l > 0).collect()
}

impl PpoAgent {
    pub fn new<R: Rng + ?Sized>(obs_len: usize, num_actions: usize, config: PpoConfig, rng: &mut R) -> Result<Self> {
        let mut actor_dims = vec![obs_len];
        actor_dims.extend(&config.hidden_dims);
        let mut critic_dims = actor_dims.clone();
        actor_dims.push(num_actions);
        critic_dims.push(1);
        let actor = Mlp::orthogonal(&actor_dims, config.actor_output_gain, rng)?;
        let critic = Mlp::orthogonal(&critic_dims, config.critic_output_gain, rng)?;
        Ok(Self::from_networks(actor, critic, config))
    }

    pub fn from_networks(actor: Mlp, critic: Mlp, config: PpoConfig) -> Self {
        let adam = config.adam();
        Self {
            actor_opt: Adam::new(adam, actor.num_params()),
            critic_opt: Adam::new(adam, critic.num_params()),
            actor,
            critic,
            config,
        }
    }

    pub fn policy(&self, obs: &[f64]) -> Result<Categorical> {
        Ok(Categorical::from_logits(&self.actor.predict(obs)?))
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.critic.predict(obs)?[0])
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<ActOutput> {
        let dist = self.policy(obs)?;
        let index = dist.sample(rng);
        Ok(ActOutput { action: Action::from_index(index)?, log_prob: dist.log_prob(index), value: self.value(obs)? })
    }

    pub fn greedy_action(&self, obs: &[f64]) -> Result<Action> {
        Action::from_index(self.policy(obs)?.mode())
    }

    /// Multi-epoch minibatch update on a buffer whose advantages are
    /// computed. An empty buffer is skipped and yields `None`.
    pub fn update<R: Rng + ?Sized>(&mut self, buffer: &RolloutBuffer, rng: &mut R) -> Result<Option<UpdateStats>> {
        let mut samples = buffer.samples()?;
        if samples.is_empty() {
            log::warn!("skipping PPO update on an empty buffer");
            return Ok(None);
        }
        if self.config.normalize_advantages {
            normalize_advantages(&mut samples);
        }
        let lengths = chunk_lengths(samples.len(), self.config.minibatches);
        let mut indices: Vec<usize> = (0..samples.len()).collect();
        let mut stats = UpdateStats { samples: samples.len(), ..UpdateStats::default() };
        let mut count = 0usize;
        for _ in 0..self.config.epochs {
            indices.shuffle(rng);
            let mut start = 0;
            for &len in &lengths {
                let batch: Vec<_> = indices[start..start + len].iter().map(|&i| samples[i]).collect();
                start += len;
                let mut out = ppo_loss(&batch, &self.actor, &self.critic, &self.config)?;
                let norm = clip_global_norm(
                    &mut [&mut out.actor_grads[..], &mut out.critic_grads[..]],
                    self.config.max_grad_norm,
                );
                if !norm.is_finite() {
                    return Err(Error::NonFinite("gradient norm"));
                }
                self.actor_opt.step(self.actor.params_mut(), &out.actor_grads)?;
                self.critic_opt.step(self.critic.params_mut(), &out.critic_grads)?;
                if count == 0 {
                    stats.first_clip_fraction = out.clip_fraction;
                }
                count += 1;
                stats.loss += out.loss;
                stats.policy_loss += out.policy_loss;
                stats.value_loss += out.value_loss;
                stats.entropy += out.entropy;
                stats.clip_fraction += out.clip_fraction;
                stats.approx_kl += out.approx_kl;
                stats.grad_norm += norm;
            }
        }
        let c = count as f64;
        stats.loss /= c;
        stats.policy_loss /= c;
        stats.value_loss /= c;
        stats.entropy /= c;
        stats.clip_fraction /= c;
        stats.approx_kl /= c;
        stats.grad_norm /= c;
        Ok(Some(stats))
    }
}
