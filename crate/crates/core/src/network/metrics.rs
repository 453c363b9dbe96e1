use num_bigint::BigUint;

use super::state::AoiSnapshot;
use super::topology::Topology;
use crate::error::{Error, Result};

/// Time- and device-averaged AoI over a trace: `(relay, base station)`.
pub fn average_aoi(trace: &[AoiSnapshot]) -> Result<(f64, f64)> {
    let first = trace.first().ok_or(Error::EmptyTrace)?;
    let m = first.devices();
    let (mut relay, mut tbs) = (0u64, 0u64);
    for snap in trace {
        if snap.devices() != m || snap.aoi_tbs.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: snap.devices(),
            });
        }
        relay += snap.aoi_relay.iter().map(|&a| u64::from(a)).sum::<u64>();
        tbs += snap.aoi_tbs.iter().map(|&a| u64::from(a)).sum::<u64>();
    }
    let denom = (trace.len() * m) as f64;
    Ok((relay as f64 / denom, tbs as f64 / denom))
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Size of the joint scheduling action space against the size of the vote
/// vector that encodes it.
pub fn action_space_cardinality(topo: &Topology) -> (BigUint, usize) {
    let m = topo.devices();
    let sampling = topo
        .groups()
        .iter()
        .map(|g| binomial(g.len(), topo.relay_channels().min(g.len())))
        .product::<BigUint>();
    let combinatorial = sampling * binomial(m, topo.tbs_channels().min(m));
    (combinatorial, 2 * m)
}
