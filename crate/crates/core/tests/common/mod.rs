//! Reference slot dynamics written directly from the model definition,
//! used as an oracle against the library simulator.

#![allow(dead_code)]

use relay_aoi::network::{AoiSnapshot, Traffic};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RefState {
    pub slot: u32,
    pub relay_gen: Vec<u32>,
    pub tbs_gen: Vec<u32>,
}

impl RefState {
    pub fn new(devices: usize) -> Self {
        Self {
            slot: 1,
            relay_gen: vec![0; devices],
            tbs_gen: vec![0; devices],
        }
    }

    pub fn snapshot(&self) -> AoiSnapshot {
        AoiSnapshot {
            slot: self.slot,
            aoi_relay: self.relay_gen.iter().map(|g| self.slot - g).collect(),
            aoi_tbs: self.tbs_gen.iter().map(|g| self.slot - g).collect(),
        }
    }

    pub fn mean_tbs(&self) -> f64 {
        let m = self.tbs_gen.len() as f64;
        self.tbs_gen
            .iter()
            .map(|g| f64::from(self.slot - g))
            .sum::<f64>()
            / m
    }
}

/// Generation slot of the newest packet a device can hand over at slot `t`.
pub fn newest_packet(traffic: Traffic, t: u32) -> u32 {
    match traffic {
        Traffic::GenerateAtWill => t,
        Traffic::Periodic(p) => (t / p) * p,
    }
}

/// One slot: a successful update copies the relay's packet as it was when
/// the slot began; a successful sample stores the device's newest packet.
pub fn ref_step(
    s: &RefState,
    traffic: &[Traffic],
    sampled: &[bool],
    updated: &[bool],
    sample_ok: &[bool],
    update_ok: &[bool],
) -> RefState {
    let t = s.slot;
    let m = s.relay_gen.len();
    let mut next = s.clone();
    for d in 0..m {
        if updated[d] && update_ok[d] {
            next.tbs_gen[d] = s.relay_gen[d];
        }
        if sampled[d] && sample_ok[d] {
            next.relay_gen[d] = s.relay_gen[d].max(newest_packet(traffic[d], t));
        }
    }
    next.slot = t + 1;
    next
}

pub fn mask(devices: usize, set: &[usize]) -> Vec<bool> {
    let mut v = vec![false; devices];
    for &d in set {
        v[d] = true;
    }
    v
}

/// All `k`-subsets of `items` in lexicographic order.
pub fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        for mut rest in subsets(&items[i + 1..], k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Central finite difference of `f` along coordinate `i` of `x`.
pub fn central_diff(x: &mut [f64], i: usize, h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let x0 = x[i];
    x[i] = x0 + h;
    let up = f(x);
    x[i] = x0 - h;
    let down = f(x);
    x[i] = x0;
    (up - down) / (2.0 * h)
}

/// Largest relative error between analytic and numerical gradients, with
/// components below `floor` in magnitude compared on an absolute scale.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// True when `chosen` is a valid top-`quota` pick from `pool` under
/// `score`: the right size, drawn from the pool, and no excluded candidate
/// outranks an included one (ties rank the lower index first).
pub fn is_top_pick(pool: &[usize], chosen: &[usize], quota: usize, score: &[f64]) -> bool {
    if chosen.len() != quota.min(pool.len()) || !chosen.iter().all(|d| pool.contains(d)) {
        return false;
    }
    let outranks = |a: usize, b: usize| score[a] > score[b] || (score[a] == score[b] && a < b);
    pool.iter()
        .filter(|d| !chosen.contains(d))
        .all(|&out| chosen.iter().all(|&inn| outranks(inn, out)))
}
