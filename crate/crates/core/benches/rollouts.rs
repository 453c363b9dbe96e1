//! Sequential against data-parallel execution for scheduler evaluation and
//! v-PPO rollout collection on the desk-scale scenario.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use relay_aoi::baselines::SchedulerKind;
use relay_aoi::config::{EnvMode, ScenarioConfig};
use relay_aoi::harness::evaluate_scheduler;
use relay_aoi::network::Topology;
use relay_aoi::par::Execution;
use relay_aoi::vppo::{TrainConfig, Trainer};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn topology() -> Arc<Topology> {
    let cfg = ScenarioConfig::default()
        .with_mode(EnvMode::Practical)
        .unwrap();
    Arc::new(Topology::from_config(&cfg).unwrap())
}

fn evaluation(c: &mut Criterion) {
    let topo = topology();
    let mut group = c.benchmark_group("evaluate_maf_mad_200");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                evaluate_scheduler(&topo, 20, 4, SchedulerKind::MafMad, None, 0, 200, exec).unwrap()
            })
        });
    }
    group.finish();
}

fn collection(c: &mut Criterion) {
    let topo = topology();
    let mut group = c.benchmark_group("collect_102_episodes");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = TrainConfig {
            execution: exec,
            ..TrainConfig::default()
        };
        let trainer = Trainer::new(Arc::clone(&topo), 20, cfg, None).unwrap();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| trainer.collect(0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, evaluation, collection);
criterion_main!(benches);
