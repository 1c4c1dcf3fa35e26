#![allow(dead_code)]

use std::collections::BTreeMap;

use gim_morl::env::FEATURE_WIDTH;
use gim_morl::nn::{LayerSpec, Network};
use gim_morl::skills::{SkillPolicy, SkillSet, SKILLS};
use gim_morl_harness::config::{ExperimentConfig, ScheduleEntry};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A complete skill set of small random actors.
pub fn random_skills(seed: u64) -> SkillSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let policies = SKILLS
        .iter()
        .map(|s| {
            let actor = Network::new(FEATURE_WIDTH, &[LayerSpec::relu(8), LayerSpec::linear(4)], &mut rng).unwrap();
            (
                s.id,
                SkillPolicy {
                    skill: s.id,
                    actor,
                    mean_reward: 0.0,
                    success_ratio: 0.0,
                },
            )
        })
        .collect::<BTreeMap<_, _>>();
    SkillSet { policies, seed }
}

/// Few short episodes and small networks.
pub fn tiny_config(schedule: Vec<ScheduleEntry>, training: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.runs = 2;
    c.skills.cycles = 2;
    c.skills.episodes_per_cycle = 2;
    c.skills.episode_length = 20;
    c.skills.ddpg.batch_size = 4;
    c.skills.ddpg.hidden = [16, 16];
    c.morl.training_episodes = training;
    c.morl.testing_episodes = schedule.iter().map(|e| e.span).sum();
    c.morl.schedule = schedule;
    c.morl.episode_length = 30;
    c.morl.relocation_period = 3;
    c.morl.hddpg.ddpg.batch_size = 4;
    c.morl.hddpg.ddpg.hidden = [16, 16];
    c.morl.baseline.ddpg.batch_size = 4;
    c.morl.baseline.ddpg.hidden = [16, 16];
    c
}
