//! Non-learning schedulers: MAF-MAD, MAF, round robin and random.
//!
//! All of them see only the current AoI snapshot and the relay groups; none
//! knows link losses or traffic periods. Ties are broken towards the lowest
//! device index.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{DecisionContext, Scheduler, SimRng};
use crate::error::Error;
use crate::network::{Action, AoiSnapshot, Topology};

/// The `k` candidates with the largest score, ties to the lowest index.
/// Returned in ascending device order.
pub fn top_k(candidates: &[usize], k: usize, score: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut order: Vec<usize> = candidates.to_vec();
    order.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

fn max_relay_age_sampling(snapshot: &AoiSnapshot, topo: &Topology) -> Vec<Vec<usize>> {
    (0..topo.relays())
        .map(|n| {
            top_k(topo.group(n), topo.sample_quota(n), |d| {
                f64::from(snapshot.aoi_relay[d])
            })
        })
        .collect()
}

/// Sample the oldest devices at each relay; update the devices whose
/// base-station age exceeds their relay age the most.
pub fn maf_mad(snapshot: &AoiSnapshot, topo: &Topology) -> Action {
    let all: Vec<usize> = (0..topo.devices()).collect();
    let update = top_k(&all, topo.update_quota(), |d| {
        f64::from(snapshot.aoi_tbs[d]) - f64::from(snapshot.aoi_relay[d])
    });
    Action::new(max_relay_age_sampling(snapshot, topo), update)
}

/// Sample the oldest devices at each relay; update the devices oldest at
/// the base station.
pub fn maf(snapshot: &AoiSnapshot, topo: &Topology) -> Action {
    let all: Vec<usize> = (0..topo.devices()).collect();
    let update = top_k(&all, topo.update_quota(), |d| {
        f64::from(snapshot.aoi_tbs[d])
    });
    Action::new(max_relay_age_sampling(snapshot, topo), update)
}

/// Circular cursors: one per relay over its group, one over all devices for
/// the base station.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRobinState {
    relay_cursor: Vec<usize>,
    tbs_cursor: usize,
}

impl RoundRobinState {
    pub fn new(topo: &Topology) -> Self {
        Self {
            relay_cursor: vec![0; topo.relays()],
            tbs_cursor: 0,
        }
    }

    /// Position of relay `n`'s cursor inside its group.
    pub fn relay_cursor(&self, relay: usize) -> usize {
        self.relay_cursor[relay]
    }

    pub fn tbs_cursor(&self) -> usize {
        self.tbs_cursor
    }
}

fn window(items: &[usize], start: usize, count: usize) -> Vec<usize> {
    (0..count)
        .map(|i| items[(start + i) % items.len()])
        .collect()
}

/// Grant the channels to the next devices after each cursor, wrapping around.
pub fn round_robin(state: &RoundRobinState, topo: &Topology) -> (Action, RoundRobinState) {
    let mut next = state.clone();
    let samples = (0..topo.relays())
        .map(|n| {
            let group = topo.group(n);
            let quota = topo.sample_quota(n);
            next.relay_cursor[n] = (state.relay_cursor[n] + quota) % group.len();
            window(group, state.relay_cursor[n], quota)
        })
        .collect();
    let all: Vec<usize> = (0..topo.devices()).collect();
    let quota = topo.update_quota();
    next.tbs_cursor = (state.tbs_cursor + quota) % all.len();
    let update = window(&all, state.tbs_cursor, quota);
    (Action::new(samples, update), next)
}

/// Uniformly random subsets of the permitted sizes.
pub fn random_sched(topo: &Topology, rng: &mut impl Rng) -> Action {
    let samples = (0..topo.relays())
        .map(|n| {
            let group = topo.group(n);
            index::sample(rng, group.len(), topo.sample_quota(n))
                .into_iter()
                .map(|i| group[i])
                .collect()
        })
        .collect();
    let update = index::sample(rng, topo.devices(), topo.update_quota()).into_vec();
    Action::new(samples, update)
}

/// Scheduler selection token: `maf_mad | maf | rr | random | vppo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    MafMad,
    Maf,
    #[serde(rename = "rr")]
    RoundRobin,
    Random,
    Vppo,
}

impl SchedulerKind {
    pub const BASELINES: [SchedulerKind; 4] = [
        SchedulerKind::MafMad,
        SchedulerKind::Maf,
        SchedulerKind::RoundRobin,
        SchedulerKind::Random,
    ];

    pub fn token(self) -> &'static str {
        match self {
            SchedulerKind::MafMad => "maf_mad",
            SchedulerKind::Maf => "maf",
            SchedulerKind::RoundRobin => "rr",
            SchedulerKind::Random => "random",
            SchedulerKind::Vppo => "vppo",
        }
    }

    /// A fresh instance of a non-learning scheduler; `None` for `vppo`.
    pub fn baseline(self) -> Option<Box<dyn Scheduler + Send>> {
        match self {
            SchedulerKind::MafMad => Some(Box::new(MafMad)),
            SchedulerKind::Maf => Some(Box::new(Maf)),
            SchedulerKind::RoundRobin => Some(Box::new(RoundRobin::default())),
            SchedulerKind::Random => Some(Box::new(RandomScheduler)),
            SchedulerKind::Vppo => None,
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "maf_mad" => Ok(SchedulerKind::MafMad),
            "maf" => Ok(SchedulerKind::Maf),
            "rr" => Ok(SchedulerKind::RoundRobin),
            "random" => Ok(SchedulerKind::Random),
            "vppo" => Ok(SchedulerKind::Vppo),
            other => Err(Error::Config(format!("unknown scheduler `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MafMad;

impl Scheduler for MafMad {
    fn name(&self) -> &str {
        "maf_mad"
    }

    fn decide(&mut self, ctx: &DecisionContext<'_>, _rng: &mut SimRng) -> Action {
        maf_mad(ctx.snapshot, ctx.topology)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Maf;

impl Scheduler for Maf {
    fn name(&self) -> &str {
        "maf"
    }

    fn decide(&mut self, ctx: &DecisionContext<'_>, _rng: &mut SimRng) -> Action {
        maf(ctx.snapshot, ctx.topology)
    }
}

/// Round robin with cursors restarted at every episode.
#[derive(Debug, Clone, Default)]
pub struct RoundRobin {
    state: Option<RoundRobinState>,
}

impl Scheduler for RoundRobin {
    fn name(&self) -> &str {
        "rr"
    }

    fn begin_episode(&mut self, topo: &Topology) {
        self.state = Some(RoundRobinState::new(topo));
    }

    fn decide(&mut self, ctx: &DecisionContext<'_>, _rng: &mut SimRng) -> Action {
        let state = self
            .state
            .take()
            .unwrap_or_else(|| RoundRobinState::new(ctx.topology));
        let (action, next) = round_robin(&state, ctx.topology);
        self.state = Some(next);
        action
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RandomScheduler;

impl Scheduler for RandomScheduler {
    fn name(&self) -> &str {
        "random"
    }

    fn decide(&mut self, ctx: &DecisionContext<'_>, rng: &mut SimRng) -> Action {
        random_sched(ctx.topology, rng)
    }
}
