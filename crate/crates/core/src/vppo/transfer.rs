use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;

use super::policy::{PolicyParams, ACTOR_HEAD_GAIN, INITIAL_LOG_STD};
use crate::env::SimRng;
use crate::error::{Error, Result};

/// How a pretrained policy seeds training on a changed network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransferMode {
    /// Train from a fresh random initialization.
    Uninitialized,
    /// Keep the trunk and critic, re-initialize the actor head.
    Explore,
    /// Reuse every parameter.
    Adapt,
}

impl TransferMode {
    pub const ALL: [TransferMode; 3] = [Self::Uninitialized, Self::Explore, Self::Adapt];

    pub fn token(self) -> &'static str {
        match self {
            Self::Uninitialized => "uninitialized",
            Self::Explore => "explore",
            Self::Adapt => "adapt",
        }
    }
}

impl fmt::Display for TransferMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for TransferMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.token() == s)
            .ok_or_else(|| Error::Config(format!("unknown transfer mode `{s}`")))
    }
}

/// Build the starting parameters for training on a changed network.
/// The actor head is the actor's output layer together with the vote
/// log-standard deviations.
pub fn transfer_init(
    pretrained: &PolicyParams,
    target: &PolicyParams,
    mode: TransferMode,
    seed: u64,
) -> Result<PolicyParams> {
    if mode != TransferMode::Uninitialized && !pretrained.same_architecture(target) {
        return Err(Error::Architecture(format!(
            "pretrained actor {:?} does not match target {:?}",
            pretrained.actor.sizes(),
            target.actor.sizes()
        )));
    }
    let mut rng = SimRng::seed_from_u64(seed);
    Ok(match mode {
        TransferMode::Uninitialized => PolicyParams::new(
            target.obs_dim(),
            target.vote_dim() / 2,
            target.hidden(),
            &mut rng,
        ),
        TransferMode::Adapt => pretrained.clone(),
        TransferMode::Explore => {
            let mut p = pretrained.clone();
            let head = p.actor.num_layers() - 1;
            p.actor.reinit_layer(head, ACTOR_HEAD_GAIN, &mut rng);
            p.head.log_std_mut().fill(INITIAL_LOG_STD);
            p
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pretrained() -> PolicyParams {
        let mut rng = SimRng::seed_from_u64(9);
        let mut p = PolicyParams::new(12, 3, 8, &mut rng);
        p.head.log_std_mut().fill(-0.7);
        p
    }

    #[test]
    fn adapt_copies_everything() {
        let p = pretrained();
        assert_eq!(transfer_init(&p, &p, TransferMode::Adapt, 1).unwrap(), p);
    }

    #[test]
    fn explore_keeps_trunk_and_critic() {
        let p = pretrained();
        let q = transfer_init(&p, &p, TransferMode::Explore, 1).unwrap();
        for l in 0..2 {
            let r = p.actor.layer_range(l);
            assert_eq!(p.actor.params()[r.clone()], q.actor.params()[r]);
        }
        let head = p.actor.layer_range(2);
        assert_ne!(p.actor.params()[head.clone()], q.actor.params()[head]);
        assert_eq!(q.critic, p.critic);
        assert!(q.head.log_std().iter().all(|&v| v == INITIAL_LOG_STD));
    }

    #[test]
    fn uninitialized_is_seeded() {
        let p = pretrained();
        let a = transfer_init(&p, &p, TransferMode::Uninitialized, 4).unwrap();
        let b = transfer_init(&p, &p, TransferMode::Uninitialized, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, p);
        assert!(a.same_architecture(&p));
    }

    #[test]
    fn mismatch_rejected() {
        let p = pretrained();
        let mut rng = SimRng::seed_from_u64(0);
        let other = PolicyParams::new(12, 4, 8, &mut rng);
        for mode in [TransferMode::Explore, TransferMode::Adapt] {
            assert!(matches!(
                transfer_init(&p, &other, mode, 0),
                Err(Error::Architecture(_))
            ));
        }
        assert!(transfer_init(&p, &other, TransferMode::Uninitialized, 0).is_ok());
    }

    #[test]
    fn mode_tokens_round_trip() {
        for m in TransferMode::ALL {
            assert_eq!(m.token().parse::<TransferMode>().unwrap(), m);
        }
        assert!("warm".parse::<TransferMode>().is_err());
    }
}
