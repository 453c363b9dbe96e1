use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::decode::decode_votes;
use super::loss::{compute_advantages, ppo_loss, Experience, LossConfig};
use super::policy::PolicyParams;
use crate::env::{Env, Observation, SimRng};
use crate::error::{Error, Result};
use crate::network::{average_aoi, Topology};
use crate::nn::{self, clip_grad_norm, Adam, DEFAULT_LEARNING_RATE};
use crate::par::{self, derive_seed, Execution};

/// Episodes simulated in lockstep by one collection worker. Fixed so that
/// results do not depend on the number of threads.
pub const COLLECT_CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub clip: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch: usize,
    /// Replay buffer capacity; episodes per iteration default to `buffer / T`.
    pub buffer: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub total_episodes: usize,
    pub episodes_per_iteration: Option<usize>,
    pub max_grad_norm: Option<f64>,
    pub normalize_advantages: bool,
    pub hidden: usize,
    pub stack: usize,
    pub seed: u64,
    pub checkpoint_every: Option<usize>,
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            clip: 0.2,
            learning_rate: DEFAULT_LEARNING_RATE,
            epochs: 10,
            minibatch: 512,
            buffer: 2048,
            value_coef: 0.5,
            entropy_coef: 0.01,
            total_episodes: 20_000,
            episodes_per_iteration: None,
            max_grad_norm: Some(0.5),
            normalize_advantages: true,
            hidden: nn::HIDDEN,
            stack: 4,
            seed: 0,
            checkpoint_every: None,
            execution: Execution::Parallel,
        }
    }
}

impl TrainConfig {
    pub fn episodes_per_iteration(&self, horizon: u32) -> usize {
        self.episodes_per_iteration
            .unwrap_or(self.buffer / horizon as usize)
            .max(1)
    }

    pub fn iterations(&self, horizon: u32) -> usize {
        self.total_episodes
            .div_ceil(self.episodes_per_iteration(horizon))
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            clip: self.clip,
            value_coef: self.value_coef,
            entropy_coef: self.entropy_coef,
            normalize_advantages: self.normalize_advantages,
        }
    }

    pub fn validate(&self, horizon: u32) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad(format!("clip range {} must lie in (0, 1)", self.clip));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("discount {} must lie in [0, 1]", self.gamma));
        }
        if self.learning_rate.is_nan() || self.learning_rate < 0.0 {
            return bad(format!(
                "learning rate {} must be non-negative",
                self.learning_rate
            ));
        }
        if self.epochs == 0 || self.minibatch == 0 || self.hidden == 0 || self.stack == 0 {
            return bad("epochs, minibatch, hidden width and stack must be positive".into());
        }
        let capacity = self.episodes_per_iteration(horizon) * horizon as usize;
        if self.minibatch > capacity {
            return bad(format!(
                "minibatch {} exceeds buffer of {capacity} transitions",
                self.minibatch
            ));
        }
        if self.total_episodes == 0 {
            return bad("total episodes must be positive".into());
        }
        Ok(())
    }
}

/// One line of the learning curve.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    pub episodes_seen: usize,
    pub mean_reward: f64,
    pub mean_aoi_tbs: f64,
    pub mean_aoi_relay: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
}

pub const TRAINING_LOG_HEADER: &str =
    "iteration,episodes_seen,mean_reward,mean_aoi_tbs,mean_aoi_relay,actor_loss,critic_loss,entropy";

impl IterationLog {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.iteration,
            self.episodes_seen,
            self.mean_reward,
            self.mean_aoi_tbs,
            self.mean_aoi_relay,
            self.actor_loss,
            self.critic_loss,
            self.entropy
        )
    }
}

/// Per-episode statistics gathered during collection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub total_reward: f64,
    pub avg_aoi_tbs: f64,
    pub avg_aoi_relay: f64,
}

/// Experiences of one iteration, in episode order.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub buffer: Vec<Experience>,
    pub episodes: Vec<EpisodeStats>,
}

/// Run `seeds.len()` episodes in lockstep under the stochastic policy.
/// Each seed pair is `(environment seed, policy seed)`.
fn collect_chunk(
    params: &PolicyParams,
    topo: &Arc<Topology>,
    horizon: u32,
    stack: usize,
    gamma: f64,
    seeds: &[(u64, u64)],
) -> Result<(Vec<Experience>, Vec<EpisodeStats>)> {
    let n = seeds.len();
    let obs_dim = params.obs_dim();
    let vote_dim = params.vote_dim();
    let t_len = horizon as usize;
    let mut envs = Vec::with_capacity(n);
    let mut obs: Vec<Observation> = Vec::with_capacity(n);
    let mut rngs = Vec::with_capacity(n);
    for &(env_seed, policy_seed) in seeds {
        let (env, o) = Env::reset(Arc::clone(topo), horizon, stack, env_seed);
        envs.push(env);
        obs.push(o);
        rngs.push(SimRng::seed_from_u64(policy_seed));
    }
    let mut episodes: Vec<Vec<Experience>> = (0..n).map(|_| Vec::with_capacity(t_len)).collect();
    let mut snapshots: Vec<Vec<_>> = (0..n).map(|_| Vec::with_capacity(t_len)).collect();
    let mut values: Vec<Vec<f64>> = (0..n).map(|_| Vec::with_capacity(t_len + 1)).collect();
    let mut x = vec![0.0; n * obs_dim];

    for _ in 0..t_len {
        for (row, o) in x.chunks_exact_mut(obs_dim).zip(&obs) {
            row.copy_from_slice(o.as_slice());
        }
        let means = params.actor.forward_batch(&x, n);
        let means = means.output();
        let v = params.critic.forward_batch(&x, n);
        let v = v.output();
        for i in 0..n {
            let mu = &means[i * vote_dim..(i + 1) * vote_dim];
            let votes = params.head.sample(mu, &mut rngs[i]);
            let old_log_prob = params.head.log_prob(mu, &votes);
            let action = decode_votes(&votes, topo)?;
            let tr = envs[i].step(&action)?;
            values[i].push(v[i]);
            snapshots[i].push(tr.snapshot);
            let observation = std::mem::replace(&mut obs[i], tr.observation);
            episodes[i].push(Experience {
                observation: observation.into_vec(),
                votes,
                action,
                reward: tr.reward,
                next_observation: obs[i].as_slice().to_vec(),
                done: tr.done,
                advantage: 0.0,
                ret: 0.0,
                old_log_prob,
                value: v[i],
                next_value: 0.0,
            });
        }
    }

    let mut buffer = Vec::with_capacity(n * t_len);
    let mut stats = Vec::with_capacity(n);
    for ((mut steps, vals), snaps) in episodes.into_iter().zip(values).zip(snapshots) {
        for t in 0..t_len {
            steps[t].next_value = if steps[t].done { 0.0 } else { vals[t + 1] };
        }
        let rewards: Vec<f64> = steps.iter().map(|e| e.reward).collect();
        let next: Vec<f64> = steps.iter().map(|e| e.next_value).collect();
        let dones: Vec<bool> = steps.iter().map(|e| e.done).collect();
        let (adv, ret) = compute_advantages(&rewards, &vals, &next, &dones, gamma);
        for ((e, a), g) in steps.iter_mut().zip(adv).zip(ret) {
            e.advantage = a;
            e.ret = g;
        }
        let (relay, tbs) = average_aoi(&snaps)?;
        stats.push(EpisodeStats {
            total_reward: rewards.iter().sum(),
            avg_aoi_tbs: tbs,
            avg_aoi_relay: relay,
        });
        buffer.extend(steps);
    }
    Ok((buffer, stats))
}

/// Losses averaged over every minibatch of one optimization phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub minibatches: usize,
}

/// Clipped-PPO trainer over one fixed topology.
#[derive(Debug, Clone)]
pub struct Trainer {
    topo: Arc<Topology>,
    horizon: u32,
    cfg: TrainConfig,
    params: PolicyParams,
    actor_opt: Adam,
    log_std_opt: Adam,
    critic_opt: Adam,
    iteration: usize,
    episodes_seen: usize,
}

impl Trainer {
    /// Start from `init`, or from a fresh seeded initialization.
    pub fn new(
        topo: Arc<Topology>,
        horizon: u32,
        cfg: TrainConfig,
        init: Option<PolicyParams>,
    ) -> Result<Self> {
        cfg.validate(horizon)?;
        let params = match init {
            Some(p) => p,
            None => {
                let mut rng = SimRng::seed_from_u64(derive_seed(cfg.seed, u64::MAX, 0));
                PolicyParams::for_topology(&topo, cfg.stack, cfg.hidden, &mut rng)
            }
        };
        let expected = crate::env::observation_dim(topo.devices(), cfg.stack);
        if params.obs_dim() != expected || params.vote_dim() != 2 * topo.devices() {
            return Err(Error::Architecture(format!(
                "policy maps {} inputs to {} votes, scenario needs {} to {}",
                params.obs_dim(),
                params.vote_dim(),
                expected,
                2 * topo.devices()
            )));
        }
        let lr = cfg.learning_rate;
        Ok(Self {
            actor_opt: Adam::new(params.actor.params().len(), lr),
            log_std_opt: Adam::new(params.head.dim(), lr),
            critic_opt: Adam::new(params.critic.params().len(), lr),
            topo,
            horizon,
            cfg,
            params,
            iteration: 0,
            episodes_seen: 0,
        })
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn into_params(self) -> PolicyParams {
        self.params
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn episodes_seen(&self) -> usize {
        self.episodes_seen
    }

    /// Collect `E` episodes under the current parameters, which act as
    /// the old policy for the following update.
    pub fn collect(&self, iteration: usize) -> Result<Rollout> {
        let e = self.cfg.episodes_per_iteration(self.horizon);
        let seeds: Vec<(u64, u64)> = (0..e as u64)
            .map(|i| {
                let ep = (iteration as u64) << 32 | i;
                (
                    derive_seed(self.cfg.seed, ep, 1),
                    derive_seed(self.cfg.seed, ep, 2),
                )
            })
            .collect();
        let chunks: Vec<Vec<(u64, u64)>> = seeds.chunks(COLLECT_CHUNK).map(<[_]>::to_vec).collect();
        let params = &self.params;
        let topo = &self.topo;
        let (horizon, stack, gamma) = (self.horizon, self.cfg.stack, self.cfg.gamma);
        let parts = par::map(self.cfg.execution, chunks, |c| {
            collect_chunk(params, topo, horizon, stack, gamma, &c)
        });
        let mut rollout = Rollout {
            buffer: Vec::with_capacity(e * horizon as usize),
            episodes: Vec::with_capacity(e),
        };
        for part in parts {
            let (buffer, episodes) = part?;
            rollout.buffer.extend(buffer);
            rollout.episodes.extend(episodes);
        }
        Ok(rollout)
    }

    /// `eta` epochs of shuffled minibatch updates over `buffer`.
    pub fn optimize(&mut self, buffer: &[Experience], iteration: usize) -> Result<UpdateStats> {
        let diverged = |detail: String| Error::Divergence { iteration, detail };
        let loss_cfg = self.cfg.loss_config();
        let mut order: Vec<usize> = (0..buffer.len()).collect();
        let mut rng = SimRng::seed_from_u64(derive_seed(self.cfg.seed, iteration as u64, 3));
        let mut stats = UpdateStats::default();
        for _ in 0..self.cfg.epochs {
            order.shuffle(&mut rng);
            for idx in order.chunks(self.cfg.minibatch) {
                let batch: Vec<&Experience> = idx.iter().map(|&i| &buffer[i]).collect();
                let mut out = ppo_loss(&batch, &self.params, &loss_cfg)
                    .map_err(|e| diverged(e.to_string()))?;
                if let Some(max) = self.cfg.max_grad_norm {
                    clip_grad_norm(&mut [&mut out.actor_grads, &mut out.log_std_grads], max);
                    clip_grad_norm(&mut [&mut out.critic_grads], max);
                }
                self.actor_opt
                    .step(self.params.actor.params_mut(), &out.actor_grads)
                    .map_err(|e| diverged(e.to_string()))?;
                self.log_std_opt
                    .step(self.params.head.log_std_mut(), &out.log_std_grads)
                    .map_err(|e| diverged(e.to_string()))?;
                self.critic_opt
                    .step(self.params.critic.params_mut(), &out.critic_grads)
                    .map_err(|e| diverged(e.to_string()))?;
                stats.actor_loss += out.actor_loss;
                stats.critic_loss += out.value_loss;
                stats.entropy += out.entropy;
                stats.clip_fraction += out.clip_fraction;
                stats.minibatches += 1;
            }
        }
        if !self.params.is_finite() {
            return Err(diverged("parameters became non-finite".into()));
        }
        let k = stats.minibatches.max(1) as f64;
        stats.actor_loss /= k;
        stats.critic_loss /= k;
        stats.entropy /= k;
        stats.clip_fraction /= k;
        Ok(stats)
    }

    /// One collect/update cycle.
    pub fn step(&mut self) -> Result<IterationLog> {
        let iteration = self.iteration;
        let rollout = self.collect(iteration)?;
        let stats = self.optimize(&rollout.buffer, iteration)?;
        self.iteration += 1;
        self.episodes_seen += rollout.episodes.len();
        let k = rollout.episodes.len() as f64;
        let mean = |f: fn(&EpisodeStats) -> f64| rollout.episodes.iter().map(f).sum::<f64>() / k;
        Ok(IterationLog {
            iteration,
            episodes_seen: self.episodes_seen,
            mean_reward: mean(|s| s.total_reward),
            mean_aoi_tbs: mean(|s| s.avg_aoi_tbs),
            mean_aoi_relay: mean(|s| s.avg_aoi_relay),
            actor_loss: stats.actor_loss,
            critic_loss: stats.critic_loss,
            entropy: stats.entropy,
        })
    }

    /// Train for the configured number of iterations. `on_iteration` sees
    /// every log line together with the parameters after that update.
    pub fn run(
        &mut self,
        mut on_iteration: impl FnMut(&IterationLog, &PolicyParams) -> Result<()>,
    ) -> Result<Vec<IterationLog>> {
        let total = self.cfg.iterations(self.horizon);
        let mut log = Vec::with_capacity(total.saturating_sub(self.iteration));
        while self.iteration < total {
            let line = self.step()?;
            on_iteration(&line, &self.params)?;
            log.push(line);
        }
        Ok(log)
    }
}

/// Writes `policy_<iteration>.ckpt` every `every` iterations and
/// `policy_final.ckpt` whenever asked.
#[derive(Debug, Clone)]
pub struct CheckpointSink {
    dir: PathBuf,
    every: Option<usize>,
}

impl CheckpointSink {
    pub fn new(dir: impl AsRef<Path>, every: Option<usize>) -> Self {
        Self {
            dir: dir.as_ref().to_path_buf(),
            every,
        }
    }

    pub fn observe(&self, log: &IterationLog, params: &PolicyParams) -> Result<()> {
        match self.every {
            Some(k) if k > 0 && (log.iteration + 1).is_multiple_of(k) => params.save(
                self.dir
                    .join(format!("policy_{:05}.ckpt", log.iteration + 1)),
            ),
            _ => Ok(()),
        }
    }

    pub fn finish(&self, params: &PolicyParams) -> Result<PathBuf> {
        let path = self.dir.join("policy_final.ckpt");
        params.save(&path)?;
        Ok(path)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub log: Vec<IterationLog>,
}

/// Train a policy on `topo`, optionally writing checkpoints.
pub fn train(
    topo: Arc<Topology>,
    horizon: u32,
    cfg: TrainConfig,
    init: Option<PolicyParams>,
    sink: Option<&CheckpointSink>,
) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(topo, horizon, cfg, init)?;
    let log = trainer.run(|line, params| match sink {
        Some(s) => s.observe(line, params),
        None => Ok(()),
    })?;
    let params = trainer.into_params();
    if let Some(s) = sink {
        s.finish(&params)?;
    }
    Ok(TrainOutcome { params, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    fn small() -> (Arc<Topology>, TrainConfig) {
        let cfg = ScenarioConfig {
            devices: 4,
            relays: 1,
            relay_channels: 2,
            tbs_channels: 1,
            ..ScenarioConfig::default()
        };
        let topo = Arc::new(Topology::from_config(&cfg).unwrap());
        let tc = TrainConfig {
            hidden: 16,
            buffer: 200,
            minibatch: 64,
            epochs: 2,
            total_episodes: 20,
            ..TrainConfig::default()
        };
        (topo, tc)
    }

    #[test]
    fn episodes_per_iteration_truncates_buffer() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.episodes_per_iteration(20), 102);
        assert_eq!(cfg.iterations(20), 20_000usize.div_ceil(102));
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate(20).is_ok());
        for bad in [
            TrainConfig {
                clip: 0.0,
                ..ok.clone()
            },
            TrainConfig {
                clip: 1.0,
                ..ok.clone()
            },
            TrainConfig {
                gamma: 1.5,
                ..ok.clone()
            },
            TrainConfig {
                minibatch: 4096,
                ..ok.clone()
            },
        ] {
            assert!(matches!(bad.validate(20), Err(Error::Config(_))));
        }
    }

    #[test]
    fn buffer_holds_exactly_e_times_t() {
        let (topo, cfg) = small();
        let trainer = Trainer::new(topo, 20, cfg, None).unwrap();
        let rollout = trainer.collect(0).unwrap();
        assert_eq!(rollout.buffer.len(), 10 * 20);
        assert_eq!(rollout.episodes.len(), 10);
    }

    #[test]
    fn stored_advantages_match_formula() {
        let (topo, cfg) = small();
        let gamma = cfg.gamma;
        let trainer = Trainer::new(topo, 20, cfg, None).unwrap();
        let rollout = trainer.collect(0).unwrap();
        let params = trainer.params();
        for e in &rollout.buffer {
            assert_eq!(e.value, params.value(&e.observation).unwrap());
            let next = if e.done {
                0.0
            } else {
                params.value(&e.next_observation).unwrap()
            };
            assert_eq!(e.next_value, next);
            assert_eq!(e.advantage, e.reward + gamma * next - e.value);
        }
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let (topo, cfg) = small();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..cfg
        };
        let mut trainer = Trainer::new(topo, 20, cfg, None).unwrap();
        let before = trainer.params().clone();
        let log = trainer.run(|_, _| Ok(())).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(trainer.params(), &before);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let (topo, cfg) = small();
        let seq = TrainConfig {
            execution: Execution::Sequential,
            ..cfg.clone()
        };
        let a = train(topo.clone(), 20, seq, None, None).unwrap();
        let b = train(topo, 20, cfg, None, None).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn checkpoints_written() {
        let (topo, cfg) = small();
        let dir = tempfile::tempdir().unwrap();
        let sink = CheckpointSink::new(dir.path(), Some(1));
        let out = train(topo, 20, cfg, None, Some(&sink)).unwrap();
        assert!(dir.path().join("policy_00001.ckpt").exists());
        assert!(dir.path().join("policy_00002.ckpt").exists());
        let back = PolicyParams::load(dir.path().join("policy_final.ckpt")).unwrap();
        assert_eq!(back, out.params);
    }
}
