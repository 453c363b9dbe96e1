mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use relay_aoi::baselines::SchedulerKind;
use relay_aoi::config::ScenarioConfig;
use relay_aoi::env::{run_episode, SimRng};
use relay_aoi::network::{Topology, Traffic};
use relay_aoi::nn;
use relay_aoi::vppo::{decode_votes, ppo_loss, Experience, TrainConfig, Trainer};

use common::is_top_pick;

fn scenario() -> Arc<Topology> {
    let cfg = ScenarioConfig {
        devices: 6,
        relays: 2,
        relay_channels: 2,
        tbs_channels: 2,
        horizon: 12,
        ..ScenarioConfig::default()
    };
    Arc::new(Topology::from_config(&cfg).unwrap())
}

fn trainer(topo: &Arc<Topology>) -> Trainer {
    let cfg = TrainConfig {
        hidden: 16,
        buffer: 12 * 20,
        minibatch: 64,
        total_episodes: 40,
        seed: 9,
        ..TrainConfig::default()
    };
    Trainer::new(Arc::clone(topo), 12, cfg, None).unwrap()
}

#[test]
fn ratio_is_one_before_the_first_update() {
    let topo = scenario();
    let t = trainer(&topo);
    let rollout = t.collect(0).unwrap();
    let p = t.params();
    for e in &rollout.buffer {
        let mean = p.actor.forward(&e.observation).unwrap();
        let lp = nn::log_prob(&mean, p.head.log_std(), &e.votes);
        assert!(((lp - e.old_log_prob).exp() - 1.0).abs() < 1e-9);
    }
    let batch: Vec<&Experience> = rollout.buffer.iter().collect();
    let out = ppo_loss(&batch, p, &t.config().loss_config()).unwrap();
    assert!((out.mean_ratio - 1.0).abs() < 1e-9);
    assert_eq!(out.clip_fraction, 0.0);
}

#[test]
fn rewards_sum_to_negative_horizon_times_average_age() {
    let topo = scenario();
    for kind in SchedulerKind::BASELINES {
        let mut sched = kind.baseline().unwrap();
        let mut rng = SimRng::seed_from_u64(3);
        let rec = run_episode(Arc::clone(&topo), 12, 4, 21, sched.as_mut(), &mut rng).unwrap();
        assert!((rec.total_reward() + 12.0 * rec.avg_aoi_tbs).abs() < 1e-9);
    }
    let rollout = trainer(&topo).collect(0).unwrap();
    for ep in &rollout.episodes {
        assert!((ep.total_reward + 12.0 * ep.avg_aoi_tbs).abs() < 1e-9);
    }
}

#[test]
fn stored_values_advantages_and_returns_are_consistent() {
    let topo = scenario();
    let t = trainer(&topo);
    let gamma = t.config().gamma;
    let rollout = t.collect(0).unwrap();
    let critic = &t.params().critic;
    for episode in rollout.buffer.chunks(12) {
        assert!(episode[11].done && episode[..11].iter().all(|e| !e.done));
        let mut g = 0.0;
        for e in episode.iter().rev() {
            let v = critic.forward(&e.observation).unwrap()[0];
            let v_next = if e.done {
                0.0
            } else {
                critic.forward(&e.next_observation).unwrap()[0]
            };
            assert!((e.value - v).abs() < 1e-9);
            assert!((e.next_value - v_next).abs() < 1e-9);
            assert!((e.advantage - (e.reward + gamma * v_next - v)).abs() < 1e-9);
            g = e.reward + gamma * g;
            assert!((e.ret - g).abs() < 1e-9);
        }
    }
}

fn topo_with_groups(groups: &[usize], l: usize, k: usize) -> Topology {
    let mut next = 0;
    let groups: Vec<Vec<usize>> = groups
        .iter()
        .map(|&s| {
            let g = (next..next + s).collect();
            next += s;
            g
        })
        .collect();
    let m = next;
    Topology::new(
        groups,
        l,
        k,
        vec![0.0; m],
        vec![0.0; m],
        vec![Traffic::GenerateAtWill; m],
        None,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn decoded_votes_are_top_picks(
        groups in prop::collection::vec(1usize..6, 1..5),
        l in 1usize..5,
        k in 1usize..8,
        raw in prop::collection::vec(prop_oneof![(-3i32..3).prop_map(f64::from), -2.0f64..2.0], 40),
    ) {
        let topo = topo_with_groups(&groups, l, k);
        let m = topo.devices();
        let votes = &raw[..2 * m];
        let action = decode_votes(votes, &topo).unwrap();
        prop_assert!(action.validate(&topo).is_ok());
        for n in 0..topo.relays() {
            prop_assert!(is_top_pick(topo.group(n), &action.sample_sets[n], l, &votes[..m]));
        }
        let all: Vec<usize> = (0..m).collect();
        prop_assert!(is_top_pick(&all, &action.update_set, k, &votes[m..]));
    }
}
