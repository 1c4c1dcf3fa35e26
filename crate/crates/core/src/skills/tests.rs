use super::*;
use rand::Rng;
use crate::env::{EntityKind, RobotParams};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn act(fl: f64, fr: f64, dl: Direction, dr: Direction) -> Action {
    Action::new(fl, fr, dl, dr).unwrap()
}

use Direction::{Backward as B, Forward as F};

fn reward_of(id: usize, a: &Action) -> f64 {
    let obs = Observation::empty();
    let state = RobotState::at(5.0, 5.0, 0.0);
    skill_reward(&SKILLS[id], a, &obs, &state, &obs, &SkillRewardConfig::default())
}

/// Camera with one obstacle cell block on the given side.
fn obstacle_on(left: bool) -> Observation {
    let mut obs = Observation::empty();
    let col = if left { 5 } else { 58 };
    for r in 10..20 {
        obs.camera[r * CAMERA_SIDE + col] = EntityKind::Obstacle.camera_code();
    }
    obs
}

#[test]
fn move_forward_cases() {
    assert_eq!(reward_of(0, &act(0.8, 0.8, F, F)), 1.0);
    assert_eq!(reward_of(0, &act(0.8, 0.8, F, B)), 0.0);
    assert_eq!(reward_of(0, &act(0.8, 0.9, F, F)), 1.0);
    assert_eq!(reward_of(0, &act(0.5, 0.8, F, F)), 0.0);
    assert_eq!(reward_of(1, &act(0.3, 0.3, B, B)), 1.0);
}

#[test]
fn turn_cases_follow_force_order() {
    assert_eq!(reward_of(2, &act(0.2, 0.6, F, F)), 1.0);
    assert_eq!(reward_of(2, &act(0.6, 0.2, F, F)), 0.0);
    assert_eq!(reward_of(3, &act(0.6, 0.2, F, F)), 1.0);
    assert_eq!(reward_of(3, &act(0.6, 0.2, B, B)), 0.0);
}

#[test]
fn quick_skills_pay_normalized_rpm() {
    let p = RobotParams::default();
    let cfg = SkillRewardConfig::default();
    let obs = Observation::empty();
    let start = RobotState::at(5.0, 5.0, 0.0);
    let full = act(1.0, 1.0, F, F);
    let moved = crate::env::kinematic_step(&start, &full, &[], 10.0, &p);
    assert!((skill_reward(&SKILLS[4], &full, &obs, &moved, &obs, &cfg) - 1.0).abs() < 1e-12);
    let half = act(0.5, 0.5, F, F);
    let moved = crate::env::kinematic_step(&start, &half, &[], 10.0, &p);
    assert!((skill_reward(&SKILLS[4], &half, &obs, &moved, &obs, &cfg) - 0.5).abs() < 1e-12);
    assert_eq!(skill_reward(&SKILLS[5], &half, &obs, &moved, &obs, &cfg), 0.0);
}

#[test]
fn bounce_back_penalizes_close_readings() {
    let mut obs = Observation::empty();
    let state = RobotState::at(5.0, 5.0, 0.0);
    let cfg = SkillRewardConfig::default();
    let a = Action::stop();
    assert_eq!(skill_reward(&SKILLS[8], &a, &obs, &state, &obs, &cfg), 0.0);
    obs.proximity[3] = 0.05;
    assert_eq!(skill_reward(&SKILLS[8], &a, &obs, &state, &obs, &cfg), -1.0);
    obs.proximity[3] = 0.15;
    assert_eq!(skill_reward(&SKILLS[8], &a, &obs, &state, &obs, &cfg), 0.0);
}

#[test]
fn turn_around_rewards_side_switch() {
    let state = RobotState::at(5.0, 5.0, 0.0);
    let cfg = SkillRewardConfig::default();
    let a = Action::stop();
    let (l, r, none) = (obstacle_on(true), obstacle_on(false), Observation::empty());
    assert_eq!(skill_reward(&SKILLS[9], &a, &r, &state, &l, &cfg), 1.0);
    assert_eq!(skill_reward(&SKILLS[9], &a, &l, &state, &r, &cfg), 1.0);
    assert_eq!(skill_reward(&SKILLS[9], &a, &l, &state, &l, &cfg), 0.0);
    assert_eq!(skill_reward(&SKILLS[9], &a, &l, &state, &none, &cfg), 0.0);
}

proptest! {
    #[test]
    fn rewards_bounded_and_direction_gated(
        fl in 0.0f64..=1.0, fr in 0.0f64..=1.0, dl in any::<bool>(), dr in any::<bool>(),
        prox in prop::collection::vec(0.0f64..=1.0, 16),
        rpm_l in -60.0f64..60.0, rpm_r in -60.0f64..60.0,
    ) {
        let d = |b: bool| if b { F } else { B };
        let a = act(fl, fr, d(dl), d(dr));
        let mut obs = Observation::empty();
        obs.proximity = prox;
        let mut state = RobotState::at(5.0, 5.0, 0.0);
        state.left_rpm = rpm_l;
        state.right_rpm = rpm_r;
        let cfg = SkillRewardConfig::default();
        for s in &SKILLS {
            let r = skill_reward(s, &a, &obs, &state, &obs, &cfg);
            prop_assert!((-1.0..=1.0).contains(&r));
            let (lo, hi) = s.reward_range();
            prop_assert!(r >= lo && r <= hi);
        }
        if !(dl && dr) {
            for id in [0, 2, 3, 4, 6, 7] {
                prop_assert_eq!(skill_reward(&SKILLS[id], &a, &obs, &state, &obs, &cfg), 0.0);
            }
        }
        if dl || dr {
            for id in [1, 5] {
                prop_assert_eq!(skill_reward(&SKILLS[id], &a, &obs, &state, &obs, &cfg), 0.0);
            }
        }
    }

    #[test]
    fn wheel_encoding_vjp_matches_finite_differences(raw in prop::collection::vec(-3.0f64..3.0, 4), g in prop::collection::vec(-1.0f64..1.0, 4)) {
        let mut out = [0.0; 4];
        WheelEncoding.smooth_vjp(&raw, &g, &mut out);
        for i in 0..4 {
            let h = 1e-6;
            let (mut p, mut m) = (raw.clone(), raw.clone());
            p[i] += h;
            m[i] -= h;
            let (mut ep, mut em) = ([0.0; 4], [0.0; 4]);
            WheelEncoding.smooth(&p, &mut ep);
            WheelEncoding.smooth(&m, &mut em);
            let n: f64 = (0..4).map(|k| g[k] * (ep[k] - em[k]) / (2.0 * h)).sum();
            prop_assert!((out[i] - n).abs() < 1e-7);
        }
    }
}

#[test]
fn success_ratio_cases() {
    assert_eq!(success_ratio(&[1.0; 5], 5, 1.0).unwrap(), 1.0);
    assert_eq!(success_ratio(&[0.0; 5], 5, 1.0).unwrap(), 0.0);
    assert_eq!(success_ratio(&[1.0, 1.0, 0.0, 0.0], 4, 1.0).unwrap(), 0.5);
    assert_eq!(success_ratio(&[0.0, 0.0, 1.0, 1.0], 2, 1.0).unwrap(), 1.0);
    assert!(matches!(success_ratio(&[], 1, 1.0), Err(Error::UndefinedInput(_))));
    assert!(success_ratio(&[1.0], 2, 1.0).is_err());
    // bounce_back: a clean episode has mean 0, which meets half of a zero maximum
    assert_eq!(success_ratio(&[0.0, -0.2], 2, 0.0).unwrap(), 0.5);
}

#[test]
fn gime_greedy_ties_and_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let cfg = GimeConfig {
        epsilon: 0.0,
        ..GimeConfig::default()
    };
    let mut s = SamplerState::new(cfg, 1).unwrap();
    assert_eq!(sample_skill_gime(&s, &mut rng), 0);
    let bin = s.state_bin();
    s.q_table[bin][9] = 0.3;
    assert_eq!(sample_skill_gime(&s, &mut rng), 9);
}

#[test]
fn gime_full_exploration_is_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = GimeConfig {
        epsilon: 1.0,
        ..GimeConfig::default()
    };
    let mut s = SamplerState::new(cfg, 1).unwrap();
    s.q_table[0][4] = 10.0;
    let n = 10_000;
    let mut counts = [0usize; SKILL_COUNT];
    for _ in 0..n {
        counts[sample_skill_gime(&s, &mut rng)] += 1;
    }
    let expected = n as f64 / SKILL_COUNT as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(9.0).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 {chi2}, p {p}");
}

#[test]
fn random_sampler_frequencies_and_determinism() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut counts = [0usize; SKILL_COUNT];
    for _ in 0..100_000 {
        let s = sample_skill_random(&mut rng);
        assert!(s < SKILL_COUNT);
        counts[s] += 1;
    }
    assert!(counts.iter().all(|&c| (c as f64 / 1e5 - 0.1).abs() <= 0.01));
    let draw = |seed| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..20).map(|_| sample_skill_random(&mut r)).collect::<Vec<_>>()
    };
    assert_eq!(draw(9), draw(9));
}

#[test]
fn gime_progress_is_accuracy_difference() {
    let mut s = SamplerState::new(GimeConfig::default(), 2).unwrap();
    let before = s.accuracy(3, 0.9).unwrap();
    let step = gime_update(&mut s, 3, 0.9, 5).unwrap();
    assert_eq!(step.rho_before, before);
    assert_eq!(step.rho_after, s.accuracy(3, 0.9).unwrap());
    assert_eq!(step.progress, step.rho_after - step.rho_before);
    assert_eq!(s.rho[3], step.rho_after);
    assert_eq!(s.history, vec![3]);
    assert!(s.q_table.iter().flatten().all(|q| q.is_finite()));
    assert!(gime_update(&mut s, 3, f64::NAN, 5).is_err());
}

#[test]
fn gime_progress_telescopes_for_a_fixed_skill() {
    let mut s = SamplerState::new(GimeConfig::default(), 5).unwrap();
    let initial = s.accuracy(2, 0.3).unwrap();
    let mut total = 0.0;
    for _ in 0..12 {
        total += gime_update(&mut s, 2, 0.3, 5).unwrap().progress;
    }
    let last = s.rho[2];
    assert!((total - (last - initial)).abs() < 1e-12);
}

#[test]
fn converged_prediction_makes_little_progress() {
    let cfg = GimeConfig {
        learning_rate: 0.01,
        ..GimeConfig::default()
    };
    let mut s = SamplerState::new(cfg, 6).unwrap();
    for _ in 0..200 {
        gime_update(&mut s, 1, 0.6, 5).unwrap();
    }
    let q_before = s.q_table.clone();
    let step = gime_update(&mut s, 1, 0.6, 5).unwrap();
    assert!(step.progress.abs() < 0.02, "{step:?}");
    let change: f64 = s
        .q_table
        .iter()
        .flatten()
        .zip(q_before.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .sum();
    assert!(change < 0.1);
}

#[test]
fn volatile_skill_earns_more_progress_than_constant_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut s = SamplerState::new(GimeConfig::default(), 8).unwrap();
    let (volatile, steady) = (8, 0);
    let (mut abs_v, mut abs_s) = (0.0, 0.0);
    for _ in 0..100 {
        abs_v += gime_update(&mut s, volatile, rng.random::<f64>(), 5).unwrap().progress.abs();
        abs_s += gime_update(&mut s, steady, 0.5, 5).unwrap().progress.abs();
    }
    let q = |k: usize| s.q_table.iter().map(|row| row[k]).sum::<f64>();
    assert!(abs_v > abs_s, "{abs_v} vs {abs_s}");
    assert!(q(volatile) > q(steady), "{} vs {}", q(volatile), q(steady));
}

#[test]
fn exploration_ratios_sum_to_one() {
    let r = exploration_ratios(&[0, 1, 1, 9, 9, 9]);
    assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(r[9], 0.5);
    assert_eq!(exploration_ratios(&[]), [0.0; SKILL_COUNT]);
}

fn tiny_arena() -> ScenarioConfig {
    let mut c = default_config(Scenario::Static);
    c.episode_length = 12;
    c
}

fn tiny_ddpg() -> DdpgConfig {
    DdpgConfig {
        batch_size: 8,
        buffer_capacity: 50,
        ..DdpgConfig::default()
    }
}

#[test]
fn zero_episodes_leave_policy_unchanged() {
    let mut env = Environment::new(tiny_arena(), 0).unwrap();
    let mut l = SkillLearner::new(SKILLS[0], tiny_ddpg(), NoiseConfig::default(), SkillRewardConfig::default(), 1).unwrap();
    let before = l.agent.actor.checksum();
    assert!(train_skill_ddpg(&mut env, &mut l, 0).unwrap().is_empty());
    assert_eq!(l.agent.actor.checksum(), before);
}

#[test]
fn training_is_deterministic_and_bounded() {
    let run = || {
        let mut env = Environment::new(tiny_arena(), 3).unwrap();
        let mut l = SkillLearner::new(SKILLS[8], tiny_ddpg(), NoiseConfig::default(), SkillRewardConfig::default(), 4).unwrap();
        let trace = train_skill_ddpg(&mut env, &mut l, 8).unwrap();
        assert!(l.buffer.len() <= 50);
        (trace, l.agent.actor.checksum())
    };
    let (a, ca) = run();
    let (b, cb) = run();
    assert_eq!(a, b);
    assert_eq!(ca, cb);
    assert_eq!(a.len(), 8);
}

#[test]
fn skill_set_round_trip_and_completeness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut set = SkillSet {
        seed: 42,
        ..SkillSet::default()
    };
    for s in &SKILLS[..9] {
        let actor = Network::new(FEATURE_WIDTH, &[LayerSpec::relu(4), LayerSpec::linear(4)], &mut rng).unwrap();
        set.policies.insert(
            s.id,
            SkillPolicy {
                skill: s.id,
                actor,
                mean_reward: 0.25,
                success_ratio: 0.5,
            },
        );
    }
    assert!(matches!(set.require_complete(), Err(Error::Config(m)) if m.contains("turn_around")));
    let dir = std::env::temp_dir().join(format!("gim-morl-skills-{}", std::process::id()));
    set.save(&dir).unwrap();
    let back = SkillSet::load(&dir).unwrap();
    assert_eq!(back, set);
    fs::remove_dir_all(dir).ok();
}

#[test]
fn curriculum_single_cycle_trains_one_skill() {
    let cfg = CurriculumConfig {
        cycles: 1,
        episodes_per_cycle: 2,
        arena: tiny_arena(),
        ddpg: tiny_ddpg(),
        ..CurriculumConfig::default()
    };
    let report = run_skill_curriculum(&cfg, 0).unwrap();
    assert_eq!(report.cycles.len(), 1);
    let trained = report.cycles[0].skill;
    assert_eq!(report.exploration[trained], 1.0);
    assert!(report.skill_set.is_complete());
}
