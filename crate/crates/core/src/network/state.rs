use rand::Rng;
use serde::Serialize;

use super::topology::{Topology, Traffic};
use crate::error::{Error, Result};

/// One slot's scheduling decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Action {
    /// Devices each relay samples, sorted ascending, indexed by relay.
    pub sample_sets: Vec<Vec<usize>>,
    /// Devices whose relay-held packet is forwarded to the base station.
    pub update_set: Vec<usize>,
}

impl Action {
    pub fn new(mut sample_sets: Vec<Vec<usize>>, mut update_set: Vec<usize>) -> Self {
        for s in &mut sample_sets {
            s.sort_unstable();
        }
        update_set.sort_unstable();
        Self {
            sample_sets,
            update_set,
        }
    }

    /// Schedule nothing.
    pub fn idle(topo: &Topology) -> Self {
        Self::new(vec![Vec::new(); topo.relays()], Vec::new())
    }

    /// Check the per-relay and base-station channel budgets and membership.
    pub fn validate(&self, topo: &Topology) -> Result<()> {
        if self.sample_sets.len() != topo.relays() {
            return Err(Error::ConstraintViolation(format!(
                "{} sampling sets for {} relays",
                self.sample_sets.len(),
                topo.relays()
            )));
        }
        let m = topo.devices();
        let mut seen = vec![false; m];
        for (n, set) in self.sample_sets.iter().enumerate() {
            if set.len() > topo.relay_channels() {
                return Err(Error::ConstraintViolation(format!(
                    "relay {n} samples {} devices with L = {}",
                    set.len(),
                    topo.relay_channels()
                )));
            }
            for &d in set {
                if d >= m || topo.relay_of(d) != n {
                    return Err(Error::ConstraintViolation(format!(
                        "device {d} is not served by relay {n}"
                    )));
                }
                if std::mem::replace(&mut seen[d], true) {
                    return Err(Error::ConstraintViolation(format!(
                        "device {d} sampled twice"
                    )));
                }
            }
        }
        if self.update_set.len() > topo.tbs_channels() {
            return Err(Error::ConstraintViolation(format!(
                "{} updates with K = {}",
                self.update_set.len(),
                topo.tbs_channels()
            )));
        }
        let mut seen = vec![false; m];
        for &d in &self.update_set {
            if d >= m {
                return Err(Error::ConstraintViolation(format!("unknown device {d}")));
            }
            if std::mem::replace(&mut seen[d], true) {
                return Err(Error::ConstraintViolation(format!(
                    "device {d} updated twice"
                )));
            }
        }
        Ok(())
    }

    pub fn sampled_mask(&self, devices: usize) -> Vec<bool> {
        let mut mask = vec![false; devices];
        for &d in self.sample_sets.iter().flatten() {
            mask[d] = true;
        }
        mask
    }

    pub fn updated_mask(&self, devices: usize) -> Vec<bool> {
        let mut mask = vec![false; devices];
        for &d in &self.update_set {
            mask[d] = true;
        }
        mask
    }
}

/// AoI of every device at the relays and at the base station for one slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AoiSnapshot {
    pub slot: u32,
    pub aoi_relay: Vec<u32>,
    pub aoi_tbs: Vec<u32>,
}

impl AoiSnapshot {
    pub fn devices(&self) -> usize {
        self.aoi_relay.len()
    }

    pub fn mean_tbs(&self) -> f64 {
        self.aoi_tbs.iter().map(|&a| f64::from(a)).sum::<f64>() / self.devices() as f64
    }

    pub fn mean_relay(&self) -> f64 {
        self.aoi_relay.iter().map(|&a| f64::from(a)).sum::<f64>() / self.devices() as f64
    }
}

/// Which scheduled transmissions of a slot went through.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct StepOutcome {
    pub sampled: Vec<bool>,
    pub updated: Vec<bool>,
    pub sample_lost: Vec<bool>,
    pub update_lost: Vec<bool>,
}

/// Ground-truth packet generation slots along the device → relay → base
/// station chain. Freshness is monotone along the chain:
/// `tbs_gen <= relay_gen <= dev_gen <= slot`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetState {
    slot: u32,
    dev_gen: Vec<u32>,
    relay_gen: Vec<u32>,
    tbs_gen: Vec<u32>,
}

impl NetState {
    /// State at slot 1: every device holds a packet stamped slot 0 (a
    /// period-1 device already holds its slot-1 packet), and both relay and
    /// base station hold slot-0 information, so every AoI starts at 1.
    pub fn new(topo: &Topology) -> Self {
        let m = topo.devices();
        let dev_gen = topo
            .traffic()
            .iter()
            .map(|t| match t {
                Traffic::Periodic(_) => t.latest_generation(1, false),
                Traffic::GenerateAtWill => 0,
            })
            .collect();
        Self {
            slot: 1,
            dev_gen,
            relay_gen: vec![0; m],
            tbs_gen: vec![0; m],
        }
    }

    pub fn slot(&self) -> u32 {
        self.slot
    }

    pub fn dev_gen(&self) -> &[u32] {
        &self.dev_gen
    }

    pub fn relay_gen(&self) -> &[u32] {
        &self.relay_gen
    }

    pub fn tbs_gen(&self) -> &[u32] {
        &self.tbs_gen
    }

    pub fn snapshot(&self) -> AoiSnapshot {
        AoiSnapshot {
            slot: self.slot,
            aoi_relay: self.relay_gen.iter().map(|&g| self.slot - g).collect(),
            aoi_tbs: self.tbs_gen.iter().map(|&g| self.slot - g).collect(),
        }
    }

    /// Advance one slot under `action`.
    ///
    /// Updates forward the relay buffer as it stood at the start of the slot,
    /// so a packet sampled in slot `t` reaches the base station at `t + 1`
    /// at the earliest. Two uniforms are drawn per device every slot whether
    /// or not it is scheduled, which keeps loss draws aligned across
    /// schedulers sharing a seed.
    pub fn step(
        &mut self,
        topo: &Topology,
        action: &Action,
        rng: &mut impl Rng,
    ) -> Result<StepOutcome> {
        action.validate(topo)?;
        let m = topo.devices();
        let t = self.slot;
        let sampled = action.sampled_mask(m);
        let updated = action.updated_mask(m);
        let mut sample_lost = vec![false; m];
        let mut update_lost = vec![false; m];

        for d in 0..m {
            let u_sample: f64 = rng.gen();
            let u_update: f64 = rng.gen();
            if updated[d] {
                if u_update < topo.loss_update()[d] {
                    update_lost[d] = true;
                } else {
                    // relay_gen[d] has not been touched yet this slot
                    self.tbs_gen[d] = self.relay_gen[d];
                }
            }
            let traffic = topo.traffic()[d];
            if sampled[d] {
                let gen = match traffic {
                    Traffic::GenerateAtWill => t,
                    Traffic::Periodic(_) => traffic.latest_generation(t, true),
                };
                self.dev_gen[d] = gen;
                if u_sample < topo.loss_sample()[d] {
                    sample_lost[d] = true;
                } else {
                    self.relay_gen[d] = self.relay_gen[d].max(gen);
                }
            }
        }

        self.slot = t + 1;
        for d in 0..m {
            if let Traffic::Periodic(_) = topo.traffic()[d] {
                self.dev_gen[d] = topo.traffic()[d].latest_generation(self.slot, false);
            }
        }
        Ok(StepOutcome {
            sampled,
            updated,
            sample_lost,
            update_lost,
        })
    }

    pub fn chain_holds(&self) -> bool {
        (0..self.relay_gen.len()).all(|d| {
            self.tbs_gen[d] <= self.relay_gen[d]
                && self.relay_gen[d] <= self.dev_gen[d]
                && self.dev_gen[d] <= self.slot
        })
    }
}
