use super::policy::PolicyParams;
use crate::error::{Error, Result};
use crate::network::Action;
use crate::nn;

/// One stored transition together with what the old policy and the critic
/// said about it at collection time.
#[derive(Debug, Clone)]
pub struct Experience {
    pub observation: Vec<f64>,
    pub votes: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_observation: Vec<f64>,
    pub done: bool,
    /// One-step advantage `r + gamma V(x') - V(x)`, with `V(x') = 0` at the end.
    pub advantage: f64,
    /// Discounted return to the end of the episode; the critic's target.
    pub ret: f64,
    pub old_log_prob: f64,
    pub value: f64,
    pub next_value: f64,
}

/// One-step advantages and discounted returns for a single episode.
pub fn compute_advantages(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    dones: &[bool],
    gamma: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(values.len() == n && next_values.len() == n && dones.len() == n);
    let advantages = (0..n)
        .map(|t| {
            let bootstrap = if dones[t] { 0.0 } else { next_values[t] };
            rewards[t] + gamma * bootstrap - values[t]
        })
        .collect();
    let mut returns = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        if dones[t] {
            acc = 0.0;
        }
        acc = rewards[t] + gamma * acc;
        returns[t] = acc;
    }
    (advantages, returns)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub normalize_advantages: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            clip: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            normalize_advantages: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub total: f64,
    /// `-mean min(ratio A, clip(ratio) A)`
    pub actor_loss: f64,
    /// `mean (G - V)^2`, before the coefficient.
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub mean_ratio: f64,
    pub actor_grads: Vec<f64>,
    pub log_std_grads: Vec<f64>,
    pub critic_grads: Vec<f64>,
}

/// Clipped-surrogate objective for one sample: the value and its
/// derivative with respect to the probability ratio.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> (f64, f64) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    if unclipped <= clipped {
        (unclipped, advantage)
    } else {
        (clipped, 0.0)
    }
}

/// Combined loss `actor_loss + c1 * value_loss - c2 * entropy` and its
/// analytic gradients with respect to actor, log-std and critic parameters.
pub fn ppo_loss(
    batch: &[&Experience],
    params: &PolicyParams,
    cfg: &LossConfig,
) -> Result<LossOutput> {
    let b = batch.len();
    if b == 0 {
        return Err(Error::Config("empty minibatch".into()));
    }
    let obs_dim = params.obs_dim();
    let vote_dim = params.vote_dim();
    let mut x = Vec::with_capacity(b * obs_dim);
    for e in batch {
        if e.observation.len() != obs_dim {
            return Err(Error::Dimension {
                expected: obs_dim,
                got: e.observation.len(),
            });
        }
        x.extend_from_slice(&e.observation);
    }

    let mut adv: Vec<f64> = batch.iter().map(|e| e.advantage).collect();
    if cfg.normalize_advantages && b > 1 {
        let mean = adv.iter().sum::<f64>() / b as f64;
        let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
        let std = var.sqrt() + 1e-8;
        adv.iter_mut().for_each(|a| *a = (*a - mean) / std);
    }

    let actor_acts = params.actor.forward_batch(&x, b);
    let means = actor_acts.output();
    let log_std = params.head.log_std();
    let inv_var: Vec<f64> = log_std.iter().map(|l| (-2.0 * l).exp()).collect();

    let mut d_mean = vec![0.0; b * vote_dim];
    let mut log_std_grads = vec![0.0; vote_dim];
    let (mut surrogate, mut clipped, mut ratio_sum) = (0.0, 0usize, 0.0);
    for (i, e) in batch.iter().enumerate() {
        let mu = &means[i * vote_dim..(i + 1) * vote_dim];
        let lp = nn::log_prob(mu, log_std, &e.votes);
        let ratio = (lp - e.old_log_prob).exp();
        let (obj, d_ratio) = clipped_surrogate(ratio, adv[i], cfg.clip);
        surrogate += obj;
        ratio_sum += ratio;
        if (ratio - 1.0).abs() > cfg.clip {
            clipped += 1;
        }
        // d(actor_loss)/d(log_prob) = -(1/B) * d_obj/d_ratio * ratio
        let d_lp = -d_ratio * ratio / b as f64;
        if d_lp != 0.0 {
            let row = &mut d_mean[i * vote_dim..(i + 1) * vote_dim];
            for j in 0..vote_dim {
                let diff = e.votes[j] - mu[j];
                row[j] = d_lp * diff * inv_var[j];
                log_std_grads[j] += d_lp * (diff * diff * inv_var[j] - 1.0);
            }
        }
    }
    let actor_loss = -surrogate / b as f64;
    let entropy = nn::entropy(log_std);
    log_std_grads
        .iter_mut()
        .for_each(|g| *g -= cfg.entropy_coef);
    let actor_grads = params.actor.backward(&actor_acts, &d_mean);

    let critic_acts = params.critic.forward_batch(&x, b);
    let values = critic_acts.output();
    let mut value_loss = 0.0;
    let mut d_value = vec![0.0; b];
    for (i, e) in batch.iter().enumerate() {
        let err = values[i] - e.ret;
        value_loss += err * err;
        d_value[i] = cfg.value_coef * 2.0 * err / b as f64;
    }
    value_loss /= b as f64;
    let critic_grads = params.critic.backward(&critic_acts, &d_value);

    let total = actor_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy;
    if !total.is_finite() {
        return Err(Error::NonFinite(format!(
            "loss {total} (actor {actor_loss}, value {value_loss}, entropy {entropy})"
        )));
    }
    Ok(LossOutput {
        total,
        actor_loss,
        value_loss,
        entropy,
        clip_fraction: clipped as f64 / b as f64,
        mean_ratio: ratio_sum / b as f64,
        actor_grads,
        log_std_grads,
        critic_grads,
    })
}
