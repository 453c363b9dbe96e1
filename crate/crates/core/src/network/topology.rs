use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ScenarioConfig, TrafficKind};
use crate::error::{Error, Result};

/// Packet generation model of one device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Traffic {
    /// A fresh packet is created whenever the device is sampled.
    GenerateAtWill,
    /// A packet is created every `p` slots, at slots `0, p, 2p, ...`.
    Periodic(u32),
}

impl Traffic {
    /// Generation slot of the newest packet a device holds at slot `t`.
    ///
    /// A generate-at-will device only creates a packet when sampled, so it
    /// reports `t` when `sampled_now` and `0` otherwise (callers keep the
    /// previous generation in that case).
    pub fn latest_generation(self, t: u32, sampled_now: bool) -> u32 {
        match self {
            Traffic::GenerateAtWill => {
                if sampled_now {
                    t
                } else {
                    0
                }
            }
            Traffic::Periodic(p) => p * (t / p),
        }
    }
}

/// Static description of a relayed network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Topology {
    assignment: Vec<usize>,
    groups: Vec<Vec<usize>>,
    relay_channels: usize,
    tbs_channels: usize,
    loss_sample: Vec<f64>,
    loss_update: Vec<f64>,
    traffic: Vec<Traffic>,
    positions: Option<Vec<(f64, f64)>>,
}

fn check_prob(name: &str, v: &[f64]) -> Result<()> {
    for (m, &p) in v.iter().enumerate() {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Config(format!(
                "{name}[{m}] = {p} must lie in [0, 1)"
            )));
        }
    }
    Ok(())
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if !(0.0..1.0).contains(&lo) || !(0.0..1.0).contains(&hi) || lo > hi {
        return Err(Error::Config(format!(
            "{name} [{lo}, {hi}] must satisfy 0 <= lo <= hi < 1"
        )));
    }
    Ok(())
}

fn draw_in(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

impl Topology {
    /// Assemble a topology from relay groups (each a list of device indices).
    pub fn new(
        groups: Vec<Vec<usize>>,
        relay_channels: usize,
        tbs_channels: usize,
        loss_sample: Vec<f64>,
        loss_update: Vec<f64>,
        traffic: Vec<Traffic>,
        positions: Option<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::Config("at least one relay is required".into()));
        }
        if relay_channels < 1 || tbs_channels < 1 {
            return Err(Error::Config("L and K must be at least 1".into()));
        }
        let m = groups.iter().map(Vec::len).sum::<usize>();
        if m == 0 {
            return Err(Error::Config("at least one device is required".into()));
        }
        let mut assignment = vec![usize::MAX; m];
        for (n, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::Config(format!("relay {n} serves no devices")));
            }
            for &d in group {
                if d >= m || assignment[d] != usize::MAX {
                    return Err(Error::Config(format!(
                        "device {d} is out of range or assigned twice"
                    )));
                }
                assignment[d] = n;
            }
        }
        for (name, len) in [
            ("loss_sample", loss_sample.len()),
            ("loss_update", loss_update.len()),
            ("traffic", traffic.len()),
        ] {
            if len != m {
                return Err(Error::Config(format!("{name} has {len} entries, M = {m}")));
            }
        }
        if let Some(p) = &positions {
            if p.len() != m {
                return Err(Error::Config(format!(
                    "positions has {} entries, M = {m}",
                    p.len()
                )));
            }
        }
        check_prob("loss_sample", &loss_sample)?;
        check_prob("loss_update", &loss_update)?;
        if traffic.iter().any(|t| matches!(t, Traffic::Periodic(0))) {
            return Err(Error::Config("periodicity must be at least 1 slot".into()));
        }
        let mut groups = groups;
        for g in &mut groups {
            g.sort_unstable();
        }
        Ok(Self {
            assignment,
            groups,
            relay_channels,
            tbs_channels,
            loss_sample,
            loss_update,
            traffic,
            positions,
        })
    }

    /// Build the scenario's topology, drawing unspecified per-device
    /// parameters from the configured ranges with a generator seeded by
    /// `cfg.seed`.
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self::build(cfg, &mut rng)
    }

    pub fn build(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Result<Self> {
        let (m, n) = (cfg.devices, cfg.relays);
        if m < 1 || n < 1 || cfg.relay_channels < 1 || cfg.tbs_channels < 1 {
            return Err(Error::Config("M, N, L and K must all be at least 1".into()));
        }
        if n > m {
            return Err(Error::Config(format!(
                "N = {n} relays exceed M = {m} devices"
            )));
        }
        let sizes = match &cfg.groups {
            Some(g) => {
                if g.len() != n || g.iter().sum::<usize>() != m || g.contains(&0) {
                    return Err(Error::Config(format!(
                        "groups {g:?} inconsistent with N = {n}, M = {m}"
                    )));
                }
                g.clone()
            }
            None => (0..n).map(|i| m / n + usize::from(i < m % n)).collect(),
        };
        let mut next = 0;
        let groups: Vec<Vec<usize>> = sizes
            .iter()
            .map(|&s| {
                let g = (next..next + s).collect();
                next += s;
                g
            })
            .collect();

        check_range("loss_sample_range", cfg.loss_sample_range)?;
        check_range("loss_update_range", cfg.loss_update_range)?;
        let loss_sample: Vec<f64> = (0..m)
            .map(|_| draw_in(rng, cfg.loss_sample_range))
            .collect();
        let loss_update: Vec<f64> = (0..m)
            .map(|_| draw_in(rng, cfg.loss_update_range))
            .collect();
        if cfg.periodicity_set.is_empty() || cfg.periodicity_set.contains(&0) {
            return Err(Error::Config(
                "periodicity_set must hold positive periods".into(),
            ));
        }
        let mut distinct = cfg.periodicity_set.clone();
        distinct.sort_unstable();
        distinct.dedup();
        // every device gets its own period whenever the set is large enough
        let periods: Vec<u32> = if distinct.len() >= m {
            distinct.choose_multiple(rng, m).copied().collect()
        } else {
            (0..m)
                .map(|_| *cfg.periodicity_set.choose(rng).expect("non-empty"))
                .collect()
        };
        let positions = cfg.area.map(|(l, b)| {
            (0..m)
                .map(|_| (rng.gen_range(0.0..=l), rng.gen_range(0.0..=b)))
                .collect::<Vec<_>>()
        });

        let pick = |name: &str, explicit: &Option<Vec<f64>>, drawn: Vec<f64>| -> Result<Vec<f64>> {
            match explicit {
                Some(v) if v.len() != m => Err(Error::Config(format!(
                    "{name} has {} entries, M = {m}",
                    v.len()
                ))),
                Some(v) => Ok(v.clone()),
                None => Ok(drawn),
            }
        };
        let loss_sample = pick("loss_sample", &cfg.loss_sample, loss_sample)?;
        let loss_update = pick("loss_update", &cfg.loss_update, loss_update)?;
        let periods = match &cfg.periodicity {
            Some(v) if v.len() != m => {
                return Err(Error::Config(format!(
                    "periodicity has {} entries, M = {m}",
                    v.len()
                )))
            }
            Some(v) => v.clone(),
            None => periods,
        };
        let traffic = periods
            .into_iter()
            .map(|p| match cfg.traffic_model {
                TrafficKind::GenerateAtWill => Traffic::GenerateAtWill,
                TrafficKind::Periodic => Traffic::Periodic(p),
            })
            .collect();

        Self::new(
            groups,
            cfg.relay_channels,
            cfg.tbs_channels,
            loss_sample,
            loss_update,
            traffic,
            positions,
        )
    }

    pub fn devices(&self) -> usize {
        self.assignment.len()
    }

    pub fn relays(&self) -> usize {
        self.groups.len()
    }

    pub fn relay_channels(&self) -> usize {
        self.relay_channels
    }

    pub fn tbs_channels(&self) -> usize {
        self.tbs_channels
    }

    pub fn relay_of(&self, device: usize) -> usize {
        self.assignment[device]
    }

    pub fn group(&self, relay: usize) -> &[usize] {
        &self.groups[relay]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn loss_sample(&self) -> &[f64] {
        &self.loss_sample
    }

    pub fn loss_update(&self) -> &[f64] {
        &self.loss_update
    }

    pub fn traffic(&self) -> &[Traffic] {
        &self.traffic
    }

    pub fn positions(&self) -> Option<&[(f64, f64)]> {
        self.positions.as_deref()
    }

    /// Number of devices relay `n` can sample per slot.
    pub fn sample_quota(&self, relay: usize) -> usize {
        self.relay_channels.min(self.groups[relay].len())
    }

    /// Number of devices the base station can receive per slot.
    pub fn update_quota(&self) -> usize {
        self.tbs_channels.min(self.devices())
    }

    /// Copy with the link losses of `devices` re-drawn from the given ranges.
    pub fn with_resampled_losses(
        &self,
        devices: &[usize],
        sample_range: (f64, f64),
        update_range: (f64, f64),
        rng: &mut impl Rng,
    ) -> Result<Self> {
        check_range("loss_sample_range", sample_range)?;
        check_range("loss_update_range", update_range)?;
        let mut out = self.clone();
        for &d in devices {
            out.loss_sample[d] = draw_in(rng, sample_range);
            out.loss_update[d] = draw_in(rng, update_range);
        }
        Ok(out)
    }

    /// Copy with the periods of `devices` re-drawn from `set`, always
    /// differing from the old period when the set allows it, and avoiding
    /// periods held by other devices when enough remain.
    pub fn with_resampled_periods(
        &self,
        devices: &[usize],
        set: &[u32],
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if set.is_empty() || set.contains(&0) {
            return Err(Error::Config(
                "periodicity_set must hold positive periods".into(),
            ));
        }
        let mut out = self.clone();
        for &d in devices {
            let old = match out.traffic[d] {
                Traffic::Periodic(p) => p,
                Traffic::GenerateAtWill => continue,
            };
            let taken: Vec<u32> = (0..out.traffic.len())
                .filter(|&o| o != d)
                .filter_map(|o| match out.traffic[o] {
                    Traffic::Periodic(p) => Some(p),
                    Traffic::GenerateAtWill => None,
                })
                .collect();
            let mut choices: Vec<u32> = set.iter().copied().filter(|&p| p != old).collect();
            choices.sort_unstable();
            choices.dedup();
            let free: Vec<u32> = choices
                .iter()
                .copied()
                .filter(|p| !taken.contains(p))
                .collect();
            let pool = if free.is_empty() { &choices } else { &free };
            let p = pool.choose(rng).copied().unwrap_or(old);
            out.traffic[d] = Traffic::Periodic(p);
        }
        Ok(out)
    }
}
