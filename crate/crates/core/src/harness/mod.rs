//! Experiment orchestration: seeded evaluation of schedulers, parameter
//! sweeps, transfer and stack-size studies, action-space analysis, and the
//! CSV and manifest files they emit.

mod eval;
pub mod output;
mod studies;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

pub use eval::{
    evaluate_scheduler, make_scheduler, record_trace, run_eval, run_eval_on, summarize,
    EpisodeSummary, SeedSummary,
};
pub use studies::{
    analyze_action_space, convergence_iteration, default_action_space_cases, perturb,
    run_stack_study, run_sweep, run_transfer, ActionSpaceRow, Perturbation, StackRun,
    TransferOutcome,
};

use crate::baselines::SchedulerKind;
use crate::config::{EnvMode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::network::Topology;
use crate::par::Execution;
use crate::vppo::TrainConfig;

/// Default number of evaluation episodes per seed.
pub const EVAL_EPISODES: usize = 200;
/// Default number of evaluation seeds.
pub const EVAL_SEEDS: usize = 5;

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVar {
    Devices,
    Relays,
    RelayChannels,
    TbsChannels,
    Stack,
}

impl SweepVar {
    pub fn token(self) -> &'static str {
        match self {
            SweepVar::Devices => "M",
            SweepVar::Relays => "N",
            SweepVar::RelayChannels => "L",
            SweepVar::TbsChannels => "K",
            SweepVar::Stack => "z",
        }
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "M" => Ok(SweepVar::Devices),
            "N" => Ok(SweepVar::Relays),
            "L" => Ok(SweepVar::RelayChannels),
            "K" => Ok(SweepVar::TbsChannels),
            "z" => Ok(SweepVar::Stack),
            other => Err(Error::Config(format!(
                "unknown sweep variable `{other}`, expected M, N, L, K or z"
            ))),
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub config_path: Option<PathBuf>,
    /// Scenario after the environment mode has been applied.
    pub scenario: ScenarioConfig,
    pub mode: EnvMode,
    pub scheduler: SchedulerKind,
    /// Evaluation seeds; each drives its own stream of episodes.
    pub seeds: Vec<u64>,
    pub eval_episodes: usize,
    pub sweep: Option<(SweepVar, Vec<usize>)>,
    /// Training budget and hyper-parameters; `train.stack` is the
    /// observation stack `z` used by every v-PPO run.
    pub train: TrainConfig,
    pub out_dir: PathBuf,
    pub execution: Execution,
}

impl ExperimentSpec {
    pub fn new(scenario: ScenarioConfig, mode: EnvMode) -> Result<Self> {
        Ok(Self {
            config_path: None,
            scenario: scenario.with_mode(mode)?,
            mode,
            scheduler: SchedulerKind::MafMad,
            seeds: (0..EVAL_SEEDS as u64).collect(),
            eval_episodes: EVAL_EPISODES,
            sweep: None,
            train: TrainConfig::default(),
            out_dir: PathBuf::from("out"),
            execution: Execution::Parallel,
        })
    }

    pub fn horizon(&self) -> u32 {
        self.scenario.horizon
    }

    pub fn stack(&self) -> usize {
        self.train.stack
    }

    pub fn topology(&self) -> Result<Arc<Topology>> {
        Ok(Arc::new(Topology::from_config(&self.scenario)?))
    }

    /// Copy with one sweep variable set to `value`.
    pub fn with_value(&self, var: SweepVar, value: usize) -> Result<Self> {
        if value == 0 {
            return Err(Error::Config(format!("{var} must be at least 1")));
        }
        let mut out = self.clone();
        match var {
            SweepVar::Devices => out.scenario.devices = value,
            SweepVar::Relays => out.scenario.relays = value,
            SweepVar::RelayChannels => out.scenario.relay_channels = value,
            SweepVar::TbsChannels => out.scenario.tbs_channels = value,
            SweepVar::Stack => out.train.stack = value,
        }
        if matches!(var, SweepVar::Devices | SweepVar::Relays) {
            out.scenario.groups = None;
            out.scenario.loss_sample = None;
            out.scenario.loss_update = None;
            out.scenario.periodicity = None;
        }
        Ok(out)
    }
}

/// Aggregate of one (scheduler, seed, sweep value) cell over its episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub sweep: Option<(SweepVar, usize)>,
    pub episodes: usize,
    pub mean_aoi_relay: f64,
    pub min_aoi_relay: f64,
    pub max_aoi_relay: f64,
    pub mean_aoi_tbs: f64,
    pub min_aoi_tbs: f64,
    pub max_aoi_tbs: f64,
    /// Kept out of the CSV so identical runs give identical files.
    pub wall_time_s: f64,
}

pub const RESULTS_HEADER: &str = "scheduler,seed,sweep_var,sweep_value,episodes,\
mean_aoi_relay,min_aoi_relay,max_aoi_relay,mean_aoi_tbs,min_aoi_tbs,max_aoi_tbs";

impl ResultRow {
    pub fn csv_row(&self) -> String {
        let (var, value) = match self.sweep {
            Some((v, x)) => (v.token().to_string(), x.to_string()),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.scheduler,
            self.seed,
            var,
            value,
            self.episodes,
            self.mean_aoi_relay,
            self.min_aoi_relay,
            self.max_aoi_relay,
            self.mean_aoi_tbs,
            self.min_aoi_tbs,
            self.max_aoi_tbs
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_tokens() {
        for t in ["M", "N", "L", "K", "z"] {
            assert_eq!(t.parse::<SweepVar>().unwrap().token(), t);
        }
        assert!("Q".parse::<SweepVar>().is_err());
    }

    #[test]
    fn with_value_sets_field() {
        let spec = ExperimentSpec::new(ScenarioConfig::default(), EnvMode::Practical).unwrap();
        assert_eq!(
            spec.with_value(SweepVar::Devices, 12)
                .unwrap()
                .scenario
                .devices,
            12
        );
        assert_eq!(spec.with_value(SweepVar::Stack, 16).unwrap().stack(), 16);
        assert_eq!(
            spec.with_value(SweepVar::TbsChannels, 2)
                .unwrap()
                .scenario
                .tbs_channels,
            2
        );
        assert!(spec.with_value(SweepVar::RelayChannels, 0).is_err());
    }

    #[test]
    fn ideal_spec_forces_lossless() {
        let spec = ExperimentSpec::new(ScenarioConfig::default(), EnvMode::Ideal).unwrap();
        let topo = spec.topology().unwrap();
        assert!(topo.loss_sample().iter().all(|&l| l == 0.0));
        assert!(topo
            .traffic()
            .iter()
            .all(|t| *t == crate::network::Traffic::GenerateAtWill));
    }
}
