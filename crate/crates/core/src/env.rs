//! Finite-horizon episodic environment over the network model.
//!
//! Observations stack the `z` most recent AoI snapshots, newest first; each
//! slot contributes `[slot / T, relay ages / T, base-station ages / T]`.
//! Reward after each decision is the negative mean base-station AoI of the
//! following slot. An episode is exactly `T` decisions long.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{average_aoi, Action, AoiSnapshot, NetState, StepOutcome, Topology};

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Observation(Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

pub fn observation_dim(devices: usize, stack: usize) -> usize {
    stack * (2 * devices + 1)
}

/// Encode a snapshot window (oldest first) into a stacked observation. A
/// window shorter than `stack` is padded with its oldest entry.
pub fn encode_observation(window: &[AoiSnapshot], stack: usize, horizon: u32) -> Observation {
    assert!(!window.is_empty(), "observation window must be non-empty");
    let m = window[0].devices();
    let scale = 1.0 / f64::from(horizon);
    let mut out = Vec::with_capacity(observation_dim(m, stack));
    for back in 0..stack {
        let snap = &window[window.len().saturating_sub(back + 1)];
        out.push(f64::from(snap.slot) * scale);
        out.extend(snap.aoi_relay.iter().map(|&a| f64::from(a) * scale));
        out.extend(snap.aoi_tbs.iter().map(|&a| f64::from(a) * scale));
    }
    Observation(out)
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    /// Snapshot after the transition.
    pub snapshot: AoiSnapshot,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone)]
pub struct Env {
    topo: Arc<Topology>,
    horizon: u32,
    stack: usize,
    state: NetState,
    history: VecDeque<AoiSnapshot>,
    rng: SimRng,
    steps: u32,
}

impl Env {
    pub fn reset(
        topo: Arc<Topology>,
        horizon: u32,
        stack: usize,
        seed: u64,
    ) -> (Self, Observation) {
        assert!(stack >= 1, "stack size must be at least 1");
        assert!(horizon >= 1, "horizon must be at least 1");
        let state = NetState::new(&topo);
        let mut history = VecDeque::with_capacity(stack);
        history.push_back(state.snapshot());
        let env = Self {
            topo,
            horizon,
            stack,
            state,
            history,
            rng: SimRng::seed_from_u64(seed),
            steps: 0,
        };
        let obs = env.observation();
        (env, obs)
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn shared_topology(&self) -> Arc<Topology> {
        Arc::clone(&self.topo)
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn stack(&self) -> usize {
        self.stack
    }

    pub fn steps_taken(&self) -> u32 {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.steps >= self.horizon
    }

    pub fn snapshot(&self) -> &AoiSnapshot {
        self.history.back().expect("history is never empty")
    }

    pub fn observation(&self) -> Observation {
        let window: Vec<AoiSnapshot> = self.history.iter().cloned().collect();
        encode_observation(&window, self.stack, self.horizon)
    }

    /// Ground truth, for tests and traces only.
    pub fn state(&self) -> &NetState {
        &self.state
    }

    pub fn step(&mut self, action: &Action) -> Result<Transition> {
        if self.is_done() {
            return Err(Error::EpisodeDone);
        }
        let outcome = self.state.step(&self.topo, action, &mut self.rng)?;
        self.steps += 1;
        let snapshot = self.state.snapshot();
        if self.history.len() == self.stack {
            self.history.pop_front();
        }
        self.history.push_back(snapshot.clone());
        Ok(Transition {
            observation: self.observation(),
            reward: -snapshot.mean_tbs(),
            done: self.is_done(),
            snapshot,
            outcome,
        })
    }
}

/// What a scheduler is allowed to see when deciding.
pub struct DecisionContext<'a> {
    pub snapshot: &'a AoiSnapshot,
    pub observation: &'a Observation,
    pub topology: &'a Topology,
}

pub trait Scheduler {
    fn name(&self) -> &str;

    /// Called before the first decision of every episode.
    fn begin_episode(&mut self, _topo: &Topology) {}

    fn decide(&mut self, ctx: &DecisionContext<'_>, rng: &mut SimRng) -> Action;
}

#[derive(Debug, Clone)]
pub struct StepRecord {
    pub observation: Observation,
    pub action: Action,
    pub reward: f64,
    pub next_observation: Observation,
    pub done: bool,
    /// Snapshot the decision was taken in.
    pub before: AoiSnapshot,
    pub outcome: StepOutcome,
}

/// One complete episode. The averages run over the `T` post-decision
/// snapshots (slots 2..=T+1), the same slots the rewards are read from.
#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub steps: Vec<StepRecord>,
    pub snapshots: Vec<AoiSnapshot>,
    pub avg_aoi_relay: f64,
    pub avg_aoi_tbs: f64,
}

impl EpisodeRecord {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

pub fn run_episode(
    topo: Arc<Topology>,
    horizon: u32,
    stack: usize,
    env_seed: u64,
    scheduler: &mut dyn Scheduler,
    policy_rng: &mut SimRng,
) -> Result<EpisodeRecord> {
    let (mut env, mut obs) = Env::reset(topo, horizon, stack, env_seed);
    scheduler.begin_episode(env.topology());
    let mut steps = Vec::with_capacity(horizon as usize);
    let mut snapshots = Vec::with_capacity(horizon as usize);
    while !env.is_done() {
        let before = env.snapshot().clone();
        let action = {
            let ctx = DecisionContext {
                snapshot: &before,
                observation: &obs,
                topology: env.topology(),
            };
            scheduler.decide(&ctx, policy_rng)
        };
        let tr = env.step(&action)?;
        snapshots.push(tr.snapshot.clone());
        steps.push(StepRecord {
            observation: obs,
            action,
            reward: tr.reward,
            next_observation: tr.observation.clone(),
            done: tr.done,
            before,
            outcome: tr.outcome,
        });
        obs = tr.observation;
    }
    let (avg_aoi_relay, avg_aoi_tbs) = average_aoi(&snapshots)?;
    Ok(EpisodeRecord {
        steps,
        snapshots,
        avg_aoi_relay,
        avg_aoi_tbs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Traffic;

    fn lossless(m: usize) -> Arc<Topology> {
        Arc::new(
            Topology::new(
                vec![(0..m).collect()],
                m,
                m,
                vec![0.0; m],
                vec![0.0; m],
                vec![Traffic::GenerateAtWill; m],
                None,
            )
            .unwrap(),
        )
    }

    #[test]
    fn reset_observation() {
        let (_, obs) = Env::reset(lossless(2), 20, 1, 0);
        let x = 1.0 / 20.0;
        assert_eq!(obs.as_slice(), &[x, x, x, x, x]);
        let (_, obs4) = Env::reset(lossless(2), 20, 4, 0);
        assert_eq!(obs4.len(), 4 * 5);
        let (_, again) = Env::reset(lossless(2), 20, 4, 0);
        assert_eq!(obs4, again);
    }

    #[test]
    fn reward_and_horizon() {
        let topo = lossless(3);
        let all = Action::new(vec![vec![0, 1, 2]], vec![0, 1, 2]);
        let (mut env, _) = Env::reset(topo, 20, 4, 0);
        let first = env.step(&all).unwrap();
        assert_eq!(first.snapshot.aoi_tbs, vec![2, 2, 2]);
        for i in 1..20 {
            let tr = env.step(&all).unwrap();
            assert_eq!(tr.reward, -2.0);
            assert_eq!(tr.done, i == 19);
        }
        assert!(matches!(env.step(&all), Err(Error::EpisodeDone)));
    }

    #[test]
    fn padding_and_order() {
        let topo = lossless(1);
        let (mut env, obs) = Env::reset(topo.clone(), 10, 3, 0);
        // padded with the slot-1 snapshot three times
        assert_eq!(
            obs.as_slice(),
            &[0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]
        );
        let idle = Action::idle(&topo);
        env.step(&idle).unwrap();
        let obs = env.step(&idle).unwrap().observation;
        // newest first: slot 3, then 2, then 1
        let v = obs.as_slice();
        assert!((v[0] - 0.3).abs() < 1e-12);
        assert!((v[3] - 0.2).abs() < 1e-12);
        assert!((v[6] - 0.1).abs() < 1e-12);
        // ages grow without scheduling
        assert!(v[1] > v[4] && v[4] > v[7]);
    }

    #[test]
    fn encode_single_snapshot() {
        let s = AoiSnapshot {
            slot: 4,
            aoi_relay: vec![2, 3],
            aoi_tbs: vec![4, 4],
        };
        let obs = encode_observation(&[s], 1, 4);
        assert_eq!(obs.as_slice(), &[1.0, 0.5, 0.75, 1.0, 1.0]);
    }

    struct Idle;
    impl Scheduler for Idle {
        fn name(&self) -> &str {
            "idle"
        }
        fn decide(&mut self, ctx: &DecisionContext<'_>, _: &mut SimRng) -> Action {
            Action::idle(ctx.topology)
        }
    }

    #[test]
    fn episode_return_identity() {
        let mut rng = SimRng::seed_from_u64(0);
        let ep = run_episode(lossless(4), 20, 2, 1, &mut Idle, &mut rng).unwrap();
        assert_eq!(ep.steps.len(), 20);
        assert_eq!(ep.total_reward(), -20.0 * ep.avg_aoi_tbs);
        // ages at slots 2..=21 with no scheduling
        assert_eq!(ep.avg_aoi_tbs, 11.5);
        assert!(ep
            .steps
            .iter()
            .all(|s| s.reward <= -1.0 && s.reward >= -21.0));
    }
}
