use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigUint;
use rand::seq::index;
use rand::SeedableRng;

use super::eval::run_eval;
use super::{ExperimentSpec, ResultRow, SweepVar};
use crate::baselines::SchedulerKind;
use crate::env::{observation_dim, SimRng};
use crate::error::{Error, Result};
use crate::network::{action_space_cardinality, Topology, Traffic};
use crate::par::derive_seed;
use crate::vppo::{train, transfer_init, IterationLog, PolicyParams, Trainer, TransferMode};

/// Evaluate every scheduler in `kinds` at each sweep value. A `vppo` entry
/// is trained from scratch at each value with the experiment's training budget.
pub fn run_sweep(
    spec: &ExperimentSpec,
    var: SweepVar,
    values: &[usize],
    kinds: &[SchedulerKind],
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &value in values {
        let point = spec.with_value(var, value)?;
        let topo = point.topology()?;
        for &kind in kinds {
            let policy = match kind {
                SchedulerKind::Vppo => Some(
                    train(
                        Arc::clone(&topo),
                        point.horizon(),
                        point.train.clone(),
                        None,
                        None,
                    )?
                    .params,
                ),
                _ => None,
            };
            rows.extend(run_eval(&point, kind, policy.as_ref(), Some((var, value)))?);
        }
    }
    Ok(rows)
}

/// What changes between the pretraining and the target network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perturbation {
    /// Link losses of the chosen devices are re-drawn.
    Channel,
    /// Generation periods of the chosen devices are re-drawn.
    Periodicity,
}

impl Perturbation {
    pub fn token(self) -> &'static str {
        match self {
            Perturbation::Channel => "channel",
            Perturbation::Periodicity => "periodicity",
        }
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Perturbation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "channel" => Ok(Perturbation::Channel),
            "periodicity" => Ok(Perturbation::Periodicity),
            other => Err(Error::Config(format!(
                "unknown perturbation `{other}`, expected channel or periodicity"
            ))),
        }
    }
}

/// Copy of the experiment's topology with `ceil(0.1 M)` devices, chosen by a
/// seeded draw, given new losses or new periods.
pub fn perturb(
    spec: &ExperimentSpec,
    kind: Perturbation,
    seed: u64,
) -> Result<(Topology, Vec<usize>)> {
    let topo = spec.topology()?;
    let m = topo.devices();
    let count = m.div_ceil(10);
    let mut rng = SimRng::seed_from_u64(derive_seed(seed, 0x7472_616e, 0));
    let mut devices = index::sample(&mut rng, m, count).into_vec();
    devices.sort_unstable();
    let cfg = &spec.scenario;
    let out = match kind {
        Perturbation::Channel => topo.with_resampled_losses(
            &devices,
            cfg.loss_sample_range,
            cfg.loss_update_range,
            &mut rng,
        )?,
        Perturbation::Periodicity => {
            if topo.traffic().iter().all(|t| *t == Traffic::GenerateAtWill) {
                return Err(Error::Config(
                    "periodicity perturbation needs periodic traffic".into(),
                ));
            }
            topo.with_resampled_periods(&devices, &cfg.periodicity_set, &mut rng)?
        }
    };
    Ok((out, devices))
}

#[derive(Debug, Clone)]
pub struct TransferOutcome {
    pub topology: Arc<Topology>,
    pub perturbed: Vec<usize>,
    pub mode: TransferMode,
    pub log: Vec<IterationLog>,
    pub params: PolicyParams,
}

/// Train on the perturbed network starting from `transfer_init(mode)`.
pub fn run_transfer(
    spec: &ExperimentSpec,
    pretrained: Option<&PolicyParams>,
    mode: TransferMode,
    kind: Perturbation,
) -> Result<TransferOutcome> {
    let (topo, perturbed) = perturb(spec, kind, spec.train.seed)?;
    let topo = Arc::new(topo);
    let mut rng = SimRng::seed_from_u64(derive_seed(spec.train.seed, u64::MAX, 0));
    let template = PolicyParams::for_topology(&topo, spec.stack(), spec.train.hidden, &mut rng);
    let init = match (mode, pretrained) {
        (TransferMode::Uninitialized, _) => template,
        (_, Some(p)) => transfer_init(p, &template, mode, derive_seed(spec.train.seed, 1, 1))?,
        (_, None) => {
            return Err(Error::Config(format!(
                "transfer mode {mode} needs a pretrained checkpoint"
            )))
        }
    };
    let mut trainer = Trainer::new(
        Arc::clone(&topo),
        spec.horizon(),
        spec.train.clone(),
        Some(init),
    )?;
    let log = trainer.run(|_, _| Ok(()))?;
    Ok(TransferOutcome {
        topology: topo,
        perturbed,
        mode,
        log,
        params: trainer.into_params(),
    })
}

/// First iteration whose `window`-smoothed training AoI lies within
/// `tolerance` (relative) of the final level, taken as the mean of the
/// last `window` iterations.
pub fn convergence_iteration(log: &[IterationLog], tolerance: f64, window: usize) -> Option<usize> {
    let w = window.max(1);
    if log.len() < w {
        return None;
    }
    let curve: Vec<f64> = log.iter().map(|l| l.mean_aoi_tbs).collect();
    let last = curve[curve.len() - w..].iter().sum::<f64>() / w as f64;
    (0..=curve.len() - w).find(|&i| {
        let smooth = curve[i..i + w].iter().sum::<f64>() / w as f64;
        (smooth - last).abs() <= tolerance * last
    })
}

#[derive(Debug, Clone)]
pub struct StackRun {
    pub stack: usize,
    pub obs_dim: usize,
    pub log: Vec<IterationLog>,
    pub params: PolicyParams,
}

/// Train one policy per stack size on the same topology.
pub fn run_stack_study(spec: &ExperimentSpec, stacks: &[usize]) -> Result<Vec<StackRun>> {
    let topo = spec.topology()?;
    stacks
        .iter()
        .map(|&z| {
            let point = spec.with_value(SweepVar::Stack, z)?;
            let out = train(
                Arc::clone(&topo),
                point.horizon(),
                point.train.clone(),
                None,
                None,
            )?;
            Ok(StackRun {
                stack: z,
                obs_dim: observation_dim(topo.devices(), z),
                log: out.log,
                params: out.params,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpaceRow {
    pub devices: usize,
    pub relays: usize,
    pub relay_channels: usize,
    pub tbs_channels: usize,
    pub combinatorial: BigUint,
    pub linear: usize,
}

pub const ACTION_SPACE_HEADER: &str = "M,N,L,K,combinatorial,linear";

impl ActionSpaceRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.devices,
            self.relays,
            self.relay_channels,
            self.tbs_channels,
            self.combinatorial,
            self.linear
        )
    }
}

/// One relay serving every device, half the devices sampled and half
/// updated per slot.
pub fn default_action_space_cases(devices: &[usize]) -> Vec<(usize, usize, usize, usize)> {
    devices
        .iter()
        .map(|&m| (m, 1, (m / 2).max(1), (m / 2).max(1)))
        .collect()
}

/// Exact joint-schedule counts next to the `2M` vote dimension.
pub fn analyze_action_space(cases: &[(usize, usize, usize, usize)]) -> Result<Vec<ActionSpaceRow>> {
    cases
        .iter()
        .map(|&(m, n, l, k)| {
            let cfg = crate::config::ScenarioConfig {
                devices: m,
                relays: n,
                relay_channels: l,
                tbs_channels: k,
                area: None,
                ..Default::default()
            };
            let topo = Topology::from_config(&cfg)?;
            let (combinatorial, linear) = action_space_cardinality(&topo);
            Ok(ActionSpaceRow {
                devices: m,
                relays: n,
                relay_channels: l,
                tbs_channels: k,
                combinatorial,
                linear,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{EnvMode, ScenarioConfig};

    fn log(curve: &[f64]) -> Vec<IterationLog> {
        curve
            .iter()
            .enumerate()
            .map(|(i, &a)| IterationLog {
                iteration: i,
                episodes_seen: i,
                mean_reward: -a,
                mean_aoi_tbs: a,
                mean_aoi_relay: a,
                actor_loss: 0.0,
                critic_loss: 0.0,
                entropy: 0.0,
            })
            .collect()
    }

    #[test]
    fn convergence_on_step_curve() {
        let l = log(&[10.0, 9.0, 8.0, 5.0, 5.0, 5.0, 5.0]);
        assert_eq!(convergence_iteration(&l, 0.05, 1), Some(3));
        assert_eq!(convergence_iteration(&l, 0.05, 2), Some(3));
        assert_eq!(convergence_iteration(&log(&[5.0; 4]), 0.05, 2), Some(0));
        assert_eq!(convergence_iteration(&log(&[5.0]), 0.05, 2), None);
    }

    #[test]
    fn action_space_small_and_sixteen_device_cases() {
        let rows = analyze_action_space(&[(2, 1, 1, 1)]).unwrap();
        assert_eq!(rows[0].combinatorial, BigUint::from(4u32));
        assert_eq!(rows[0].linear, 4);
        let rows = analyze_action_space(&default_action_space_cases(&[8, 16])).unwrap();
        assert_eq!(rows[1].linear, 2 * rows[0].linear);
        assert_eq!(rows[1].linear, 32);
        assert_eq!(rows[1].combinatorial, BigUint::from(165_636_900u64));
    }

    #[test]
    fn perturbation_touches_ten_percent() {
        let spec = ExperimentSpec::new(ScenarioConfig::default(), EnvMode::Practical).unwrap();
        let base = spec.topology().unwrap();
        let (chan, devs) = perturb(&spec, Perturbation::Channel, 3).unwrap();
        assert_eq!(devs.len(), 1);
        for d in 0..8 {
            let moved = chan.loss_sample()[d] != base.loss_sample()[d];
            assert_eq!(moved, devs.contains(&d));
            assert_eq!(chan.traffic()[d], base.traffic()[d]);
        }
        let (per, devs) = perturb(&spec, Perturbation::Periodicity, 3).unwrap();
        for d in 0..8 {
            assert_eq!(per.traffic()[d] != base.traffic()[d], devs.contains(&d));
            assert_eq!(per.loss_sample()[d], base.loss_sample()[d]);
        }
        let big = spec.with_value(SweepVar::Devices, 30).unwrap();
        assert_eq!(perturb(&big, Perturbation::Channel, 0).unwrap().1.len(), 3);
    }

    #[test]
    fn transfer_requires_pretrained() {
        let spec = ExperimentSpec::new(ScenarioConfig::default(), EnvMode::Practical).unwrap();
        assert!(matches!(
            run_transfer(&spec, None, TransferMode::Adapt, Perturbation::Channel),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn perturbation_tokens() {
        assert_eq!(
            "channel".parse::<Perturbation>().unwrap(),
            Perturbation::Channel
        );
        assert_eq!(
            "periodicity".parse::<Perturbation>().unwrap().token(),
            "periodicity"
        );
        assert!("noise".parse::<Perturbation>().is_err());
    }
}
