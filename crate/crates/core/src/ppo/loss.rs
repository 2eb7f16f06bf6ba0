//! Clipped-surrogate PPO loss with value and entropy terms.

use crate::nn::{Categorical, Mlp};
use crate::{Error, Result};

use super::buffer::Sample;
use super::config::PpoConfig;

/// `min(ratio * adv, clip(ratio, 1 - eps, 1 + eps) * adv)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps);
    (ratio * advantage).min(clipped * advantage)
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub actor_grads: Vec<f64>,
    pub critic_grads: Vec<f64>,
}

/// Mean loss over `batch` and its gradients with respect to both networks:
///
/// `-mean(surrogate) + value_coef * mean((V - R)^2) - entropy_coef * mean(H)`
pub fn ppo_loss(batch: &[Sample<'_>], actor: &Mlp, critic: &Mlp, config: &PpoConfig) -> Result<LossOutput> {
    if batch.is_empty() {
        return Err(Error::Usage("empty minibatch".into()));
    }
    let n = batch.len() as f64;
    let mut out = LossOutput {
        loss: 0.0,
        policy_loss: 0.0,
        value_loss: 0.0,
        entropy: 0.0,
        clip_fraction: 0.0,
        approx_kl: 0.0,
        actor_grads: vec![0.0; actor.num_params()],
        critic_grads: vec![0.0; critic.num_params()],
    };
    let mut clipped = 0usize;
    for s in batch {
        let cache = actor.forward(s.obs)?;
        let dist = Categorical::from_logits(cache.output());
        let a = s.action.index();
        let log_ratio = dist.log_prob(a) - s.log_prob;
        let ratio = log_ratio.exp();
        if !ratio.is_finite() {
            return Err(Error::NonFinite("probability ratio"));
        }
        if (ratio - 1.0).abs() > config.clip_eps {
            clipped += 1;
        }
        let unclipped = ratio * s.advantage;
        let surrogate = clipped_surrogate(ratio, s.advantage, config.clip_eps);
        let entropy = dist.entropy();
        out.policy_loss -= surrogate / n;
        out.entropy += entropy / n;
        out.approx_kl += ((ratio - 1.0) - log_ratio) / n;

        // d(-surrogate/n)/d log_prob; zero when the clipped branch is active
        let d_log_prob = if unclipped <= surrogate { -unclipped / n } else { 0.0 };
        let d_entropy = -config.entropy_coef / n;
        let grad_logits: Vec<f64> = dist
            .grad_log_prob(a)
            .iter()
            .zip(dist.grad_entropy())
            .map(|(gl, ge)| d_log_prob * gl + d_entropy * ge)
            .collect();
        actor.backward(&cache, &grad_logits, &mut out.actor_grads)?;

        let cache = critic.forward(s.obs)?;
        let err = cache.output()[0] - s.ret;
        out.value_loss += err * err / n;
        critic.backward(&cache, &[2.0 * config.value_coef * err / n], &mut out.critic_grads)?;
    }
    out.clip_fraction = clipped as f64 / n;
    out.loss = out.policy_loss + config.value_coef * out.value_loss - config.entropy_coef * out.entropy;
    if !out.loss.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    Ok(out)
}
