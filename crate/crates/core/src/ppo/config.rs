use serde::Deserialize;

use crate::nn::AdamConfig;
use crate::{Error, Result};

/// PPO hyperparameters. Defaults are the illustrative-gridworld settings.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Steps collected per environment per rollout.
    pub rollout_len: usize,
    pub n_envs: usize,
    pub epochs: usize,
    pub minibatches: usize,
    pub reward_normalisation: bool,
    pub normalize_advantages: bool,
    pub max_grad_norm: f64,
    pub learning_rate: f64,
    pub adam_epsilon: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub hidden_dims: Vec<usize>,
    pub actor_output_gain: f64,
    pub critic_output_gain: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            rollout_len: 10,
            n_envs: 4,
            epochs: 3,
            minibatches: 8,
            reward_normalisation: false,
            normalize_advantages: true,
            max_grad_norm: 0.5,
            learning_rate: 1e-4,
            adam_epsilon: 1e-5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            hidden_dims: vec![128, 64, 32],
            actor_output_gain: 0.01,
            critic_output_gain: 1.0,
        }
    }
}

impl PpoConfig {
    /// Procgen-scale settings, kept for reference only; nothing in this
    /// crate can run them (the encoders are convolutional there).
    pub fn procgen_reference() -> Self {
        Self {
            gamma: 0.999,
            rollout_len: 256,
            n_envs: 64,
            reward_normalisation: true,
            learning_rate: 5e-4,
            hidden_dims: vec![256],
            ..Self::default()
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    pub fn batch_size(&self) -> usize {
        self.rollout_len * self.n_envs
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("gamma", self.gamma),
            ("gae_lambda", self.gae_lambda),
            ("clip_eps", self.clip_eps),
            ("entropy_coef", self.entropy_coef),
            ("value_coef", self.value_coef),
            ("max_grad_norm", self.max_grad_norm),
            ("learning_rate", self.learning_rate),
            ("adam_epsilon", self.adam_epsilon),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("ppo.{name} must be a non-negative number, got {v}")));
            }
        }
        if self.gamma > 1.0 || self.gae_lambda > 1.0 {
            return Err(Error::Config("ppo.gamma and ppo.gae_lambda must be at most 1".into()));
        }
        if self.rollout_len == 0 || self.n_envs == 0 || self.epochs == 0 || self.minibatches == 0 {
            return Err(Error::Config("rollout_len, n_envs, epochs and minibatches must be positive".into()));
        }
        if self.batch_size() % self.minibatches != 0 {
            return Err(Error::Config(format!(
                "rollout_len * n_envs = {} is not divisible by minibatches = {}",
                self.batch_size(),
                self.minibatches
            )));
        }
        if self.reward_normalisation {
            return Err(Error::Unsupported("reward normalisation is not implemented".into()));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        Ok(())
    }
}
