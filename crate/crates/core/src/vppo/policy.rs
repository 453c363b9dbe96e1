use std::path::Path;

use rand::Rng;

use super::decode::decode_votes;
use crate::env::{observation_dim, DecisionContext, Observation, Scheduler, SimRng};
use crate::error::{Error, Result};
use crate::network::{Action, Topology};
use crate::nn::{Checkpoint, GaussianHead, Mlp, Tensor};

/// Actor output layer gain; keeps the initial vote means near zero.
pub const ACTOR_HEAD_GAIN: f64 = 0.01;
pub const CRITIC_HEAD_GAIN: f64 = 1.0;
/// Starting log-standard deviation of every vote, `ln 0.5`.
pub const INITIAL_LOG_STD: f64 = -std::f64::consts::LN_2;

/// Actor network with its Gaussian vote head, plus a separate critic.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub actor: Mlp,
    pub head: GaussianHead,
    pub critic: Mlp,
}

impl PolicyParams {
    pub fn new(obs_dim: usize, devices: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let actor = Mlp::new(
            &[obs_dim, hidden, hidden, 2 * devices],
            ACTOR_HEAD_GAIN,
            rng,
        );
        let critic = Mlp::new(&[obs_dim, hidden, hidden, 1], CRITIC_HEAD_GAIN, rng);
        Self {
            actor,
            head: GaussianHead::from_log_std(vec![INITIAL_LOG_STD; 2 * devices]),
            critic,
        }
    }

    /// Fresh parameters sized for `topo` observed through a `stack`-slot window.
    pub fn for_topology(topo: &Topology, stack: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        Self::new(
            observation_dim(topo.devices(), stack),
            topo.devices(),
            hidden,
            rng,
        )
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn vote_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn hidden(&self) -> usize {
        self.actor.sizes()[1]
    }

    pub fn same_architecture(&self, other: &PolicyParams) -> bool {
        self.actor.sizes() == other.actor.sizes()
            && self.critic.sizes() == other.critic.sizes()
            && self.head.dim() == other.head.dim()
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite()
            && self.critic.is_finite()
            && self.head.log_std().iter().all(|v| v.is_finite())
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.critic.forward(obs)?[0])
    }

    /// Choose an action. Stochastic mode samples votes from the Gaussian
    /// head; deterministic mode uses the means.
    pub fn act(
        &self,
        obs: &Observation,
        topo: &Topology,
        rng: &mut impl Rng,
        deterministic: bool,
    ) -> Result<(Action, Vec<f64>, f64)> {
        let mean = self.actor.forward(obs.as_slice())?;
        let votes = if deterministic {
            mean.clone()
        } else {
            self.head.sample(&mean, rng)
        };
        let log_prob = self.head.log_prob(&mean, &votes);
        let action = decode_votes(&votes, topo)?;
        Ok((action, votes, log_prob))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint::new();
        ckpt.push("actor", Tensor::Mlp(self.actor.clone()));
        ckpt.push("log_std", Tensor::Vector(self.head.log_std().to_vec()));
        ckpt.push("critic", Tensor::Mlp(self.critic.clone()));
        ckpt
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let actor = ckpt.mlp("actor")?.clone();
        let critic = ckpt.mlp("critic")?.clone();
        let log_std = ckpt.vector("log_std")?.to_vec();
        if log_std.len() != actor.output_dim()
            || critic.output_dim() != 1
            || critic.input_dim() != actor.input_dim()
        {
            return Err(Error::Architecture(
                "checkpoint actor, head and critic disagree".into(),
            ));
        }
        Ok(Self {
            actor,
            head: GaussianHead::from_log_std(log_std),
            critic,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

/// Trained policy wrapped as a scheduler.
#[derive(Debug, Clone)]
pub struct VppoScheduler {
    params: PolicyParams,
    deterministic: bool,
}

impl VppoScheduler {
    pub fn new(params: PolicyParams, deterministic: bool) -> Self {
        Self {
            params,
            deterministic,
        }
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }
}

impl Scheduler for VppoScheduler {
    fn name(&self) -> &str {
        "vppo"
    }

    fn decide(&mut self, ctx: &DecisionContext<'_>, rng: &mut SimRng) -> Action {
        self.params
            .act(ctx.observation, ctx.topology, rng, self.deterministic)
            .expect("observation width matches the policy")
            .0
    }
}
