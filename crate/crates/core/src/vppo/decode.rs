use crate::baselines::top_k;
use crate::error::{Error, Result};
use crate::network::{Action, Topology};

/// Turn `2M` votes into a schedule: the first `M` entries are sampling votes,
/// the last `M` update votes. Each relay samples its top-`L` voted devices;
/// the base station takes the top-`K` update votes overall. Ties go to the
/// lowest device index.
pub fn decode_votes(votes: &[f64], topo: &Topology) -> Result<Action> {
    let m = topo.devices();
    if votes.len() != 2 * m {
        return Err(Error::Dimension {
            expected: 2 * m,
            got: votes.len(),
        });
    }
    let (sample_votes, update_votes) = votes.split_at(m);
    let samples = (0..topo.relays())
        .map(|n| top_k(topo.group(n), topo.sample_quota(n), |d| sample_votes[d]))
        .collect();
    let all: Vec<usize> = (0..m).collect();
    let update = top_k(&all, topo.update_quota(), |d| update_votes[d]);
    Ok(Action::new(samples, update))
}
