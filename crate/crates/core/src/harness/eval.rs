use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;

use super::{ExperimentSpec, ResultRow, SweepVar};
use crate::baselines::SchedulerKind;
use crate::env::{run_episode, EpisodeRecord, Scheduler, SimRng};
use crate::error::{Error, Result};
use crate::network::{AoiSnapshot, StepOutcome, Topology};
use crate::par::{self, derive_seed, Execution};
use crate::vppo::{PolicyParams, VppoScheduler};

/// Episodes handled by one evaluation worker.
const EVAL_CHUNK: usize = 25;

/// A fresh scheduler instance; `vppo` evaluates `policy` deterministically.
pub fn make_scheduler(
    kind: SchedulerKind,
    policy: Option<&PolicyParams>,
) -> Result<Box<dyn Scheduler + Send>> {
    match kind.baseline() {
        Some(s) => Ok(s),
        None => policy
            .map(|p| Box::new(VppoScheduler::new(p.clone(), true)) as Box<dyn Scheduler + Send>)
            .ok_or_else(|| Error::Config("vppo evaluation needs a trained checkpoint".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub avg_aoi_relay: f64,
    pub avg_aoi_tbs: f64,
}

fn episode_seeds(seed: u64, episode: u64) -> (u64, u64) {
    (derive_seed(seed, episode, 0), derive_seed(seed, episode, 1))
}

/// Run `episodes` episodes of one scheduler under evaluation seed `seed`.
/// Episode `i` always sees the same link outcomes regardless of the
/// scheduler, so schedulers are compared on common random numbers.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_scheduler(
    topo: &Arc<Topology>,
    horizon: u32,
    stack: usize,
    kind: SchedulerKind,
    policy: Option<&PolicyParams>,
    seed: u64,
    episodes: usize,
    exec: Execution,
) -> Result<Vec<EpisodeSummary>> {
    make_scheduler(kind, policy)?;
    let chunks: Vec<Vec<u64>> = (0..episodes as u64)
        .collect::<Vec<_>>()
        .chunks(EVAL_CHUNK)
        .map(<[_]>::to_vec)
        .collect();
    let parts = par::map(exec, chunks, |eps| -> Result<Vec<EpisodeSummary>> {
        let mut sched = make_scheduler(kind, policy)?;
        eps.into_iter()
            .map(|ep| {
                let (env_seed, policy_seed) = episode_seeds(seed, ep);
                let mut rng = SimRng::seed_from_u64(policy_seed);
                let rec = run_episode(
                    Arc::clone(topo),
                    horizon,
                    stack,
                    env_seed,
                    sched.as_mut(),
                    &mut rng,
                )?;
                Ok(EpisodeSummary {
                    avg_aoi_relay: rec.avg_aoi_relay,
                    avg_aoi_tbs: rec.avg_aoi_tbs,
                })
            })
            .collect()
    });
    let mut out = Vec::with_capacity(episodes);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Full record of the first episode of `seed`, for trace export.
pub fn record_trace(
    topo: &Arc<Topology>,
    horizon: u32,
    stack: usize,
    kind: SchedulerKind,
    policy: Option<&PolicyParams>,
    seed: u64,
) -> Result<(EpisodeRecord, Vec<(AoiSnapshot, StepOutcome)>)> {
    let mut sched = make_scheduler(kind, policy)?;
    let (env_seed, policy_seed) = episode_seeds(seed, 0);
    let mut rng = SimRng::seed_from_u64(policy_seed);
    let rec = run_episode(
        Arc::clone(topo),
        horizon,
        stack,
        env_seed,
        sched.as_mut(),
        &mut rng,
    )?;
    let steps = rec
        .steps
        .iter()
        .map(|s| (s.before.clone(), s.outcome.clone()))
        .collect();
    Ok((rec, steps))
}

fn row(
    kind: SchedulerKind,
    seed: u64,
    sweep: Option<(SweepVar, usize)>,
    eps: &[EpisodeSummary],
    wall_time_s: f64,
) -> ResultRow {
    let n = eps.len() as f64;
    let fold = |f: fn(&EpisodeSummary) -> f64| {
        let mean = eps.iter().map(f).sum::<f64>() / n;
        let min = eps.iter().map(f).fold(f64::INFINITY, f64::min);
        let max = eps.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        (mean, min, max)
    };
    let (mean_aoi_relay, min_aoi_relay, max_aoi_relay) = fold(|e| e.avg_aoi_relay);
    let (mean_aoi_tbs, min_aoi_tbs, max_aoi_tbs) = fold(|e| e.avg_aoi_tbs);
    ResultRow {
        scheduler: kind,
        seed,
        sweep,
        episodes: eps.len(),
        mean_aoi_relay,
        min_aoi_relay,
        max_aoi_relay,
        mean_aoi_tbs,
        min_aoi_tbs,
        max_aoi_tbs,
        wall_time_s,
    }
}

/// One result row per evaluation seed for `kind` on the experiment's scenario.
pub fn run_eval(
    spec: &ExperimentSpec,
    kind: SchedulerKind,
    policy: Option<&PolicyParams>,
    sweep: Option<(SweepVar, usize)>,
) -> Result<Vec<ResultRow>> {
    run_eval_on(spec, &spec.topology()?, kind, policy, sweep)
}

/// As [`run_eval`], on an explicit topology such as a perturbed network.
pub fn run_eval_on(
    spec: &ExperimentSpec,
    topo: &Arc<Topology>,
    kind: SchedulerKind,
    policy: Option<&PolicyParams>,
    sweep: Option<(SweepVar, usize)>,
) -> Result<Vec<ResultRow>> {
    spec.seeds
        .iter()
        .map(|&seed| {
            let start = Instant::now();
            let eps = evaluate_scheduler(
                topo,
                spec.horizon(),
                spec.stack(),
                kind,
                policy,
                seed,
                spec.eval_episodes,
                spec.execution,
            )?;
            Ok(row(kind, seed, sweep, &eps, start.elapsed().as_secs_f64()))
        })
        .collect()
}

/// Mean over seeds of the per-seed mean TBS AoI, with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedSummary {
    pub mean: f64,
    pub std_error: f64,
    pub seeds: usize,
}

impl SeedSummary {
    pub fn lower(&self) -> f64 {
        self.mean - self.std_error
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.std_error
    }
}

pub fn summarize(values: &[f64]) -> SeedSummary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    SeedSummary {
        mean,
        std_error,
        seeds: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{EnvMode, ScenarioConfig};

    fn spec(mode: EnvMode) -> ExperimentSpec {
        let mut s = ExperimentSpec::new(ScenarioConfig::default(), mode).unwrap();
        s.eval_episodes = 30;
        s.seeds = vec![0, 1];
        s
    }

    #[test]
    fn rows_are_consistent() {
        let s = spec(EnvMode::Practical);
        for kind in SchedulerKind::BASELINES {
            for r in run_eval(&s, kind, None, None).unwrap() {
                assert_eq!(r.episodes, 30);
                assert!(r.min_aoi_tbs <= r.mean_aoi_tbs && r.mean_aoi_tbs <= r.max_aoi_tbs);
                assert!(r.min_aoi_relay <= r.mean_aoi_relay && r.mean_aoi_relay <= r.max_aoi_relay);
                assert!(r.mean_aoi_tbs >= r.mean_aoi_relay);
            }
        }
    }

    #[test]
    fn execution_modes_agree() {
        let mut s = spec(EnvMode::Practical);
        let par = run_eval(&s, SchedulerKind::Random, None, None).unwrap();
        s.execution = Execution::Sequential;
        let seq = run_eval(&s, SchedulerKind::Random, None, None).unwrap();
        let csv = |rows: &[ResultRow]| rows.iter().map(ResultRow::csv_row).collect::<Vec<_>>();
        assert_eq!(csv(&par), csv(&seq));
    }

    #[test]
    fn vppo_without_policy_is_an_error() {
        let s = spec(EnvMode::Ideal);
        assert!(matches!(
            run_eval(&s, SchedulerKind::Vppo, None, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn single_device_all_schedulers_tie() {
        let cfg = ScenarioConfig {
            devices: 1,
            relays: 1,
            relay_channels: 1,
            tbs_channels: 1,
            ..ScenarioConfig::default()
        };
        let mut s = ExperimentSpec::new(cfg, EnvMode::Practical).unwrap();
        s.eval_episodes = 20;
        let reference = run_eval(&s, SchedulerKind::MafMad, None, None).unwrap();
        for kind in SchedulerKind::BASELINES {
            let rows = run_eval(&s, kind, None, None).unwrap();
            for (a, b) in rows.iter().zip(&reference) {
                assert_eq!(a.mean_aoi_tbs, b.mean_aoi_tbs);
                assert_eq!(a.mean_aoi_relay, b.mean_aoi_relay);
            }
        }
    }

    #[test]
    fn ample_channels_pipeline_bound() {
        let cfg = ScenarioConfig {
            devices: 4,
            relays: 2,
            relay_channels: 2,
            tbs_channels: 4,
            ..ScenarioConfig::default()
        };
        let mut s = ExperimentSpec::new(cfg, EnvMode::Ideal).unwrap();
        s.eval_episodes = 5;
        for kind in SchedulerKind::BASELINES {
            for r in run_eval(&s, kind, None, None).unwrap() {
                assert_eq!(r.mean_aoi_tbs, 2.0, "{kind}");
            }
        }
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std_error - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(summarize(&[4.0]).std_error, 0.0);
    }
}
