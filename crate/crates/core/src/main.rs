use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use relay_aoi::baselines::SchedulerKind;
use relay_aoi::config::{EnvMode, ScenarioConfig};
use relay_aoi::harness::{self, output, ExperimentSpec, Perturbation, ResultRow, SweepVar};
use relay_aoi::par::Execution;
use relay_aoi::vppo::{self, CheckpointSink, PolicyParams, TrainConfig, TransferMode};
use relay_aoi::{Error, Result};

/// Age-of-Information scheduling experiments for relayed IoT networks.
#[derive(Debug, Parser)]
#[command(name = "relay-aoi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the non-learning schedulers and export a trace.
    Simulate(Common),
    /// Train a v-PPO scheduler and write its checkpoints and learning curve.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Evaluate schedulers, including a trained v-PPO checkpoint.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// v-PPO checkpoint to evaluate.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Evaluate schedulers over a range of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
        /// Parameter to vary: M, N, L, K or z.
        #[arg(long)]
        var: SweepVar,
        /// Comma-separated values of the parameter.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
    },
    /// Retrain on a network where 10% of the devices changed.
    Transfer {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
        /// uninitialized, explore or adapt.
        #[arg(long = "transfer-mode", alias = "tmode")]
        transfer_mode: TransferMode,
        /// What changes: channel or periodicity.
        #[arg(long, default_value = "channel")]
        perturb: Perturbation,
        /// Pretrained checkpoint, required for explore and adapt.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Compare joint-schedule counts with the linear vote dimension.
    ActionSpace {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Device counts; each uses one relay and M/2 relay and base-station channels.
        #[arg(long, value_delimiter = ',', default_value = "8,12,16")]
        devices: Vec<usize>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed: evaluation seeds are S, S+1, ... and training uses S.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated schedulers: maf_mad, maf, rr, random, vppo.
    #[arg(long, value_delimiter = ',')]
    scheduler: Vec<SchedulerKind>,
    /// ideal or practical.
    #[arg(long, default_value = "practical")]
    mode: EnvMode,
    /// Number of evaluation seeds.
    #[arg(long, default_value_t = harness::EVAL_SEEDS)]
    seeds: usize,
    /// Evaluation episodes per seed.
    #[arg(long, default_value_t = harness::EVAL_EPISODES)]
    episodes: usize,
    /// Run everything on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Total training episodes.
    #[arg(long, default_value_t = 20_000)]
    train_episodes: usize,
    /// Observation stack size z.
    #[arg(long, default_value_t = 4)]
    stack: usize,
    #[arg(long, default_value_t = relay_aoi::nn::HIDDEN)]
    hidden: usize,
    #[arg(long, default_value_t = relay_aoi::nn::DEFAULT_LEARNING_RATE)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.5)]
    value_coef: f64,
    #[arg(long, default_value_t = 0.01)]
    entropy_coef: f64,
    /// Write a checkpoint every this many iterations.
    #[arg(long)]
    checkpoint_every: Option<usize>,
}

impl Common {
    fn spec(&self) -> Result<ExperimentSpec> {
        let scenario = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if self.seeds == 0 || self.episodes == 0 {
            return Err(Error::Config("seeds and episodes must be positive".into()));
        }
        let mut spec = ExperimentSpec::new(scenario, self.mode)?;
        spec.config_path = self.config.clone();
        spec.seeds = (0..self.seeds as u64).map(|i| self.seed + i).collect();
        spec.eval_episodes = self.episodes;
        spec.out_dir = self.out.clone();
        spec.execution = if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        };
        spec.train.seed = self.seed;
        spec.train.execution = spec.execution;
        if let Some(&first) = self.scheduler.first() {
            spec.scheduler = first;
        }
        Ok(spec)
    }

    fn schedulers(&self, default: &[SchedulerKind]) -> Vec<SchedulerKind> {
        if self.scheduler.is_empty() {
            default.to_vec()
        } else {
            self.scheduler.clone()
        }
    }
}

impl TrainArgs {
    fn apply(&self, spec: &mut ExperimentSpec) {
        spec.train = TrainConfig {
            total_episodes: self.train_episodes,
            stack: self.stack,
            hidden: self.hidden,
            learning_rate: self.learning_rate,
            value_coef: self.value_coef,
            entropy_coef: self.entropy_coef,
            checkpoint_every: self.checkpoint_every,
            ..spec.train.clone()
        };
    }
}

fn manifest(
    command: &str,
    spec: &ExperimentSpec,
    schedulers: &[SchedulerKind],
    extra: serde_json::Value,
    outputs: &[&str],
    start: Instant,
) -> output::Manifest {
    let names: Vec<&str> = schedulers.iter().map(|s| s.token()).collect();
    output::Manifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION"),
        config_path: spec.config_path.clone(),
        mode: spec.mode.to_string(),
        scenario: spec.scenario.clone(),
        scheduler: (!names.is_empty()).then(|| names.join(",")),
        seeds: spec.seeds.clone(),
        train_seed: Some(spec.train.seed),
        eval_episodes: Some(spec.eval_episodes),
        extra,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

fn train_json(cfg: &TrainConfig, horizon: u32) -> serde_json::Value {
    json!({
        "gamma": cfg.gamma,
        "clip": cfg.clip,
        "learning_rate": cfg.learning_rate,
        "epochs": cfg.epochs,
        "minibatch": cfg.minibatch,
        "buffer": cfg.buffer,
        "episodes_per_iteration": cfg.episodes_per_iteration(horizon),
        "value_coef": cfg.value_coef,
        "entropy_coef": cfg.entropy_coef,
        "total_episodes": cfg.total_episodes,
        "max_grad_norm": cfg.max_grad_norm,
        "hidden": cfg.hidden,
        "stack": cfg.stack,
        "seed": cfg.seed,
    })
}

fn print_rows(rows: &[ResultRow]) {
    println!(
        "{:<8} {:>6} {:>6} {:>10} {:>10}",
        "sched", "seed", "value", "aoi_relay", "aoi_tbs"
    );
    for r in rows {
        let value = r.sweep.map(|(_, v)| v.to_string()).unwrap_or_default();
        println!(
            "{:<8} {:>6} {:>6} {:>10.4} {:>10.4}",
            r.scheduler.token(),
            r.seed,
            value,
            r.mean_aoi_relay,
            r.mean_aoi_tbs
        );
    }
}

fn eval_all(
    spec: &ExperimentSpec,
    kinds: &[SchedulerKind],
    policy: Option<&PolicyParams>,
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &k in kinds {
        rows.extend(harness::run_eval(spec, k, policy, None)?);
    }
    Ok(rows)
}

fn write_trace(
    spec: &ExperimentSpec,
    kind: SchedulerKind,
    policy: Option<&PolicyParams>,
) -> Result<()> {
    let topo = spec.topology()?;
    let seed = spec.seeds[0];
    let (_, steps) =
        harness::record_trace(&topo, spec.horizon(), spec.stack(), kind, policy, seed)?;
    output::write_trace(&spec.out_dir.join("trace.csv"), &steps)
}

fn simulate(common: &Common) -> Result<()> {
    let start = Instant::now();
    let spec = common.spec()?;
    let kinds = common.schedulers(&SchedulerKind::BASELINES);
    if kinds.contains(&SchedulerKind::Vppo) {
        return Err(Error::Config(
            "simulate runs baselines only; use evaluate for vppo".into(),
        ));
    }
    let rows = eval_all(&spec, &kinds, None)?;
    output::write_results(&spec.out_dir.join("results.csv"), &rows)?;
    write_trace(&spec, kinds[0], None)?;
    print_rows(&rows);
    let m = manifest(
        "simulate",
        &spec,
        &kinds,
        json!({}),
        &["results.csv", "trace.csv"],
        start,
    );
    output::write_manifest(&spec.out_dir.join("manifest.json"), &m)
}

fn train(common: &Common, args: &TrainArgs) -> Result<()> {
    let start = Instant::now();
    let mut spec = common.spec()?;
    args.apply(&mut spec);
    let topo = spec.topology()?;
    let sink = CheckpointSink::new(&spec.out_dir, spec.train.checkpoint_every);
    std::fs::create_dir_all(&spec.out_dir)?;
    let mut trainer =
        vppo::Trainer::new(Arc::clone(&topo), spec.horizon(), spec.train.clone(), None)?;
    let total = spec.train.iterations(spec.horizon());
    let log = trainer.run(|line, params| {
        if line.iteration % 10 == 0 || line.iteration + 1 == total {
            println!(
                "iteration {:>5}/{total} episodes {:>7} mean TBS AoI {:.4}",
                line.iteration + 1,
                line.episodes_seen,
                line.mean_aoi_tbs
            );
        }
        sink.observe(line, params)
    })?;
    let params = trainer.into_params();
    let ckpt = sink.finish(&params)?;
    output::write_training_log(&spec.out_dir.join("training_log.csv"), &log)?;
    let rows = eval_all(&spec, &[SchedulerKind::Vppo], Some(&params))?;
    output::write_results(&spec.out_dir.join("results.csv"), &rows)?;
    print_rows(&rows);
    let extra = json!({ "train": train_json(&spec.train, spec.horizon()), "checkpoint": ckpt });
    let m = manifest(
        "train",
        &spec,
        &[SchedulerKind::Vppo],
        extra,
        &["training_log.csv", "results.csv", "policy_final.ckpt"],
        start,
    );
    output::write_manifest(&spec.out_dir.join("manifest.json"), &m)
}

fn load_policy(path: Option<&Path>) -> Result<Option<PolicyParams>> {
    path.map(PolicyParams::load).transpose()
}

fn evaluate(common: &Common, checkpoint: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let mut spec = common.spec()?;
    let policy = load_policy(checkpoint)?;
    if let Some(p) = &policy {
        let per_slot = 2 * spec.scenario.devices + 1;
        if p.obs_dim() % per_slot != 0 {
            return Err(Error::Architecture(format!(
                "checkpoint expects {} inputs, not a multiple of {per_slot}",
                p.obs_dim()
            )));
        }
        spec.train.stack = p.obs_dim() / per_slot;
    }
    let mut default: Vec<SchedulerKind> = SchedulerKind::BASELINES.to_vec();
    if policy.is_some() {
        default.insert(0, SchedulerKind::Vppo);
    }
    let kinds = common.schedulers(&default);
    let rows = eval_all(&spec, &kinds, policy.as_ref())?;
    output::write_results(&spec.out_dir.join("results.csv"), &rows)?;
    write_trace(&spec, kinds[0], policy.as_ref())?;
    print_rows(&rows);
    let extra = json!({ "checkpoint": checkpoint, "stack": spec.stack() });
    let m = manifest(
        "evaluate",
        &spec,
        &kinds,
        extra,
        &["results.csv", "trace.csv"],
        start,
    );
    output::write_manifest(&spec.out_dir.join("manifest.json"), &m)
}

fn sweep(common: &Common, args: &TrainArgs, var: SweepVar, values: &[usize]) -> Result<()> {
    let start = Instant::now();
    let mut spec = common.spec()?;
    args.apply(&mut spec);
    spec.sweep = Some((var, values.to_vec()));
    let kinds = common.schedulers(&SchedulerKind::BASELINES);
    let rows = harness::run_sweep(&spec, var, values, &kinds)?;
    output::write_results(&spec.out_dir.join("results.csv"), &rows)?;
    print_rows(&rows);
    let mut extra = json!({ "sweep_var": var.token(), "values": values });
    if kinds.contains(&SchedulerKind::Vppo) {
        extra["train"] = train_json(&spec.train, spec.horizon());
    }
    let m = manifest("sweep", &spec, &kinds, extra, &["results.csv"], start);
    output::write_manifest(&spec.out_dir.join("manifest.json"), &m)
}

fn transfer(
    common: &Common,
    args: &TrainArgs,
    mode: TransferMode,
    perturb: Perturbation,
    checkpoint: Option<&Path>,
) -> Result<()> {
    let start = Instant::now();
    let mut spec = common.spec()?;
    args.apply(&mut spec);
    let pretrained = load_policy(checkpoint)?;
    let out = harness::run_transfer(&spec, pretrained.as_ref(), mode, perturb)?;
    output::write_training_log(&spec.out_dir.join("training_log.csv"), &out.log)?;
    let ckpt = CheckpointSink::new(&spec.out_dir, None).finish(&out.params)?;
    let mut rows = harness::run_eval_on(
        &spec,
        &out.topology,
        SchedulerKind::Vppo,
        Some(&out.params),
        None,
    )?;
    rows.extend(harness::run_eval_on(
        &spec,
        &out.topology,
        SchedulerKind::MafMad,
        None,
        None,
    )?);
    output::write_results(&spec.out_dir.join("results.csv"), &rows)?;
    print_rows(&rows);
    if let Some(it) = harness::convergence_iteration(&out.log, 0.05, 5) {
        println!("{mode}: within 5% of final AoI from iteration {it}");
    }
    let extra = json!({
        "transfer_mode": mode.token(),
        "perturbation": perturb.token(),
        "perturbed_devices": out.perturbed,
        "pretrained": checkpoint,
        "checkpoint": ckpt,
        "train": train_json(&spec.train, spec.horizon()),
    });
    let m = manifest(
        "transfer",
        &spec,
        &[SchedulerKind::Vppo, SchedulerKind::MafMad],
        extra,
        &["training_log.csv", "results.csv", "policy_final.ckpt"],
        start,
    );
    output::write_manifest(&spec.out_dir.join("manifest.json"), &m)
}

fn action_space(out: &Path, devices: &[usize]) -> Result<()> {
    let start = Instant::now();
    let rows = harness::analyze_action_space(&harness::default_action_space_cases(devices))?;
    output::write_action_space(&out.join("action_space.csv"), &rows)?;
    println!(
        "{:>4} {:>3} {:>4} {:>4} {:>30} {:>6}",
        "M", "N", "L", "K", "joint schedules", "votes"
    );
    for r in &rows {
        println!(
            "{:>4} {:>3} {:>4} {:>4} {:>30} {:>6}",
            r.devices, r.relays, r.relay_channels, r.tbs_channels, r.combinatorial, r.linear
        );
    }
    let spec = ExperimentSpec::new(ScenarioConfig::default(), EnvMode::Practical)?;
    let m = output::Manifest {
        seeds: Vec::new(),
        train_seed: None,
        eval_episodes: None,
        scheduler: None,
        ..manifest(
            "action-space",
            &spec,
            &[],
            json!({ "devices": devices }),
            &["action_space.csv"],
            start,
        )
    };
    output::write_manifest(&out.join("manifest.json"), &m)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(common) => simulate(common),
        Command::Train { common, train: t } => train(common, t),
        Command::Evaluate { common, checkpoint } => evaluate(common, checkpoint.as_deref()),
        Command::Sweep {
            common,
            train: t,
            var,
            values,
        } => sweep(common, t, *var, values),
        Command::Transfer {
            common,
            train: t,
            transfer_mode,
            perturb,
            checkpoint,
        } => transfer(common, t, *transfer_mode, *perturb, checkpoint.as_deref()),
        Command::ActionSpace { out, devices } => action_space(out, devices),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
