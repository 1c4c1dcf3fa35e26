use super::*;
use crate::env::{default_config, Scenario, ScenarioConfig};
use crate::nn::{LayerSpec, Loss};
use crate::skills::{SkillPolicy, SKILLS};
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::BTreeMap;

fn dummy_skills(seed: u64) -> SkillSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policies = BTreeMap::new();
    for s in &SKILLS {
        let actor = Network::new(
            FEATURE_WIDTH,
            &[LayerSpec::relu(8), LayerSpec::linear(4)],
            &mut rng,
        )
        .unwrap();
        policies.insert(
            s.id,
            SkillPolicy {
                skill: s.id,
                actor,
                mean_reward: 0.0,
                success_ratio: 0.0,
            },
        );
    }
    SkillSet { policies, seed }
}

fn short_env(length: usize) -> Environment {
    let mut cfg: ScenarioConfig = default_config(Scenario::Ts);
    cfg.episode_length = length;
    Environment::new(cfg, 3).unwrap()
}

fn small_config() -> HddpgConfig {
    let mut c = HddpgConfig::default();
    c.ddpg.batch_size = 4;
    c.ddpg.hidden = [16, 16];
    c
}

fn random_experience(rng: &mut ChaCha8Rng, done: bool) -> Experience {
    Experience {
        state: (0..FEATURE_WIDTH).map(|_| rng.random_range(0.0..1.0)).collect(),
        action: one_hot_skill(rng.random_range(0..SKILL_COUNT)),
        reward: rng.random_range(-1.0..1.0),
        next_state: (0..FEATURE_WIDTH).map(|_| rng.random_range(0.0..1.0)).collect(),
        done,
    }
}

#[test]
fn select_skill_examples() {
    let zero = [0.0; SKILL_COUNT];
    let mut scores = [0.1; SKILL_COUNT];
    scores[3] = 0.9;
    assert_eq!(select_skill(&scores, &zero).unwrap(), 3);
    let mut noise = [0.0; SKILL_COUNT];
    noise[7] = 10.0;
    assert_eq!(select_skill(&scores, &noise).unwrap(), 7);
    assert_eq!(select_skill(&[0.5; SKILL_COUNT], &[0.5; SKILL_COUNT]).unwrap(), 0);
    assert!(matches!(select_skill(&scores, &[0.0; 3]), Err(Error::Dimension { .. })));
}

proptest! {
    #[test]
    fn select_skill_ignores_constant_shift(
        scores in prop::array::uniform10(-5.0f64..5.0),
        noise in prop::array::uniform10(-1.0f64..1.0),
        c in -100.0f64..100.0,
    ) {
        let base = select_skill(&scores, &noise).unwrap();
        let shifted: Vec<f64> = scores.iter().map(|s| s + c).collect();
        let perturbed: Vec<f64> = scores.iter().zip(&noise).map(|(s, n)| s + n).collect();
        let mut sorted = perturbed.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // skip near ties that rounding of the shift could flip
        prop_assume!(sorted[0] - sorted[1] > 1e-9 * (1.0 + c.abs()));
        prop_assert_eq!(select_skill(&shifted, &noise).unwrap(), base);
    }

    #[test]
    fn softmax_vjp_matches_finite_differences(
        raw in prop::array::uniform10(-3.0f64..3.0),
        grad in prop::array::uniform10(-1.0f64..1.0),
    ) {
        let enc = SkillEncoding;
        let mut out = [0.0; SKILL_COUNT];
        enc.smooth_vjp(&raw, &grad, &mut out);
        let h = 1e-6;
        for i in 0..SKILL_COUNT {
            let mut p = raw;
            let mut m = raw;
            p[i] += h;
            m[i] -= h;
            let (mut sp, mut sm) = ([0.0; SKILL_COUNT], [0.0; SKILL_COUNT]);
            enc.smooth(&p, &mut sp);
            enc.smooth(&m, &mut sm);
            let fd: f64 = (0..SKILL_COUNT).map(|k| grad[k] * (sp[k] - sm[k]) / (2.0 * h)).sum();
            prop_assert!((fd - out[i]).abs() < 1e-7);
        }
    }
}

#[test]
fn executed_action_is_one_hot_of_argmax() {
    let mut raw = [0.0; SKILL_COUNT];
    raw[4] = 2.0;
    raw[6] = 2.0;
    let mut out = [9.0; SKILL_COUNT];
    SkillEncoding.executed(&raw, &mut out);
    assert_eq!(out.to_vec(), one_hot_skill(4));
}

#[test]
fn execute_skill_single_step() {
    let skills = dummy_skills(1);
    let mut env = short_env(150);
    let obs = env.reset(0).unwrap();
    let step = execute_skill(2, &skills, &mut env, &obs, 1).unwrap();
    assert_eq!(step.steps, 1);
    assert_eq!(env.steps(), 1);
    assert!(!step.done);
}

#[test]
fn execute_skill_stops_at_done() {
    let skills = dummy_skills(1);
    let mut env = short_env(2);
    let obs = env.reset(0).unwrap();
    let step = execute_skill(0, &skills, &mut env, &obs, 5).unwrap();
    assert_eq!(step.steps, 2);
    assert!(step.done);
}

#[test]
fn execute_skill_requires_the_skill() {
    let mut skills = dummy_skills(1);
    skills.policies.remove(&5);
    let mut env = short_env(10);
    let obs = env.reset(0).unwrap();
    assert!(matches!(execute_skill(5, &skills, &mut env, &obs, 3), Err(Error::Config(_))));
    let err = run_hddpg(&Preference::from_first(0.5).unwrap(), None, &mut env, &skills, 1, 0, &small_config(), 0);
    assert!(matches!(err, Err(Error::Config(_))));
}

fn constant_critic(value: f64, config: &HddpgConfig, rng: &mut ChaCha8Rng) -> ActorCritic {
    let mut agent = ActorCritic::new(FEATURE_WIDTH, &SkillEncoding, config.ddpg, rng).unwrap();
    let last = agent.critic.layers_mut().last_mut().unwrap();
    last.weight.values_mut().iter_mut().for_each(|w| *w = 0.0);
    last.bias[0] = value;
    ActorCritic::from_networks(agent.actor, agent.critic, config.ddpg)
}

#[test]
fn exact_targets_give_zero_loss_and_no_critic_change() {
    let mut config = small_config();
    config.ddpg.gamma = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let agent = constant_critic(1.0, &config, &mut rng);
    let before = agent.critic.clone();
    let mut policy = HierarchicalPolicy { agent };
    let batch: Vec<Experience> = (0..4)
        .map(|_| Experience {
            reward: 1.0,
            ..random_experience(&mut rng, false)
        })
        .collect();
    let refs: Vec<&Experience> = batch.iter().collect();
    let stats = hddpg_update(&mut policy, &refs).unwrap();
    assert_eq!(stats.critic_loss, 0.0);
    assert!(stats.td_errors.iter().all(|&d| d == 0.0));
    assert_eq!(policy.agent.critic, before);
}

#[test]
fn terminal_targets_ignore_target_networks() {
    let config = small_config();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut a = ActorCritic::new(FEATURE_WIDTH, &SkillEncoding, config.ddpg, &mut rng).unwrap();
    let e = random_experience(&mut rng, true);
    let y1 = a.targets(&SkillEncoding, &[&e]).unwrap();
    a.critic_target = Network::new(FEATURE_WIDTH + SKILL_COUNT, &[LayerSpec::relu(16), LayerSpec::relu(16), LayerSpec::linear(1)], &mut rng).unwrap();
    a.actor_target = Network::new(FEATURE_WIDTH, &[LayerSpec::relu(16), LayerSpec::relu(16), LayerSpec::linear(SKILL_COUNT)], &mut rng).unwrap();
    let y2 = a.targets(&SkillEncoding, &[&e]).unwrap();
    assert_eq!(y1, vec![e.reward]);
    assert_eq!(y2, vec![e.reward]);

    let live = Experience { done: false, ..e.clone() };
    let y3 = a.targets(&SkillEncoding, &[&live]).unwrap();
    // bootstrapped target: r + γ·Q′(s′, one-hot of the target actor's argmax)
    let skill = argmax(&a.actor_target.forward(&live.next_state).unwrap());
    let mut x = live.next_state.clone();
    x.extend(one_hot_skill(skill));
    let q = a.critic_target.forward(&x).unwrap()[0];
    assert!((y3[0] - (live.reward + config.ddpg.gamma * q)).abs() < 1e-12);
}

#[test]
fn critic_gradient_matches_finite_differences() {
    let config = small_config();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let agent = ActorCritic::new(FEATURE_WIDTH, &SkillEncoding, config.ddpg, &mut rng).unwrap();
    let batch = [random_experience(&mut rng, false), random_experience(&mut rng, true)];
    let refs: Vec<&Experience> = batch.iter().collect();
    let y = agent.targets(&SkillEncoding, &refs).unwrap();
    let input: Vec<f64> = batch
        .iter()
        .flat_map(|e| e.state.iter().chain(&e.action).copied())
        .collect();
    let loss = |net: &Network<f64>| {
        let q0 = net.forward(&input[..FEATURE_WIDTH + SKILL_COUNT]).unwrap()[0];
        let q1 = net.forward(&input[FEATURE_WIDTH + SKILL_COUNT..]).unwrap()[0];
        ((y[0] - q0).powi(2) + (y[1] - q1).powi(2)) / 2.0
    };
    let (l, grads) = agent.critic.loss_gradients(&input, &y, 2, Loss::Mse).unwrap();
    assert!((l - loss(&agent.critic)).abs() < 1e-12);
    let h = 1e-6;
    for layer in 0..agent.critic.layers().len() {
        let n = agent.critic.layers()[layer].weight.values().len();
        for idx in (0..n).step_by(n / 7 + 1) {
            let mut p = agent.critic.clone();
            let mut m = agent.critic.clone();
            p.layers_mut()[layer].weight.values_mut()[idx] += h;
            m.layers_mut()[layer].weight.values_mut()[idx] -= h;
            let fd = (loss(&p) - loss(&m)) / (2.0 * h);
            let g = grads.weights[layer][idx];
            assert!((fd - g).abs() <= 1e-4 * fd.abs().max(g.abs()).max(1e-3), "layer {layer} idx {idx}: {fd} vs {g}");
        }
        let mut p = agent.critic.clone();
        let mut m = agent.critic.clone();
        p.layers_mut()[layer].bias[0] += h;
        m.layers_mut()[layer].bias[0] -= h;
        let fd = (loss(&p) - loss(&m)) / (2.0 * h);
        let g = grads.biases[layer][0];
        assert!((fd - g).abs() <= 1e-4 * fd.abs().max(g.abs()).max(1e-3));
    }
}

#[test]
fn soft_update_contracts_by_one_minus_tau() {
    let config = small_config();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let source = ActorCritic::new(FEATURE_WIDTH, &SkillEncoding, config.ddpg, &mut rng).unwrap().critic;
    let mut target = ActorCritic::new(FEATURE_WIDTH, &SkillEncoding, config.ddpg, &mut rng).unwrap().critic;
    let tau = config.ddpg.tau;
    for _ in 0..20 {
        let before = target.max_abs_diff(&source).unwrap();
        target.soft_update(&source, tau).unwrap();
        let after = target.max_abs_diff(&source).unwrap();
        assert!((after - (1.0 - tau) * before).abs() < 1e-12);
    }
}

#[test]
fn replay_sampling_is_uniform() {
    let mut buf = ReplayBuffer::new(100).unwrap();
    for i in 0..250 {
        buf.push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut counts = [0u64; 100];
    for _ in 0..10_000 {
        for i in buf.sample_indices(10, &mut rng).unwrap() {
            counts[i] += 1;
        }
    }
    let expected = 1000.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(99.0).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 {chi2}, p {p}");
}

#[test]
fn ou_matches_ar1_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut p = OUProcess::standard(1);
    let n = 1_000_000;
    let xs: Vec<f64> = (0..n).map(|_| p.step(&mut rng)[0]).collect();
    let m = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let target = 0.04 / (1.0 - 0.85f64.powi(2));
    assert!((var / target - 1.0).abs() < 0.1, "{var} vs {target}");
    assert!((p.stationary_variance() - target).abs() < 1e-12);
    let lag1 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / (n - 1) as f64 / var;
    assert!((lag1 - 0.85).abs() < 0.02, "{lag1}");
}

#[test]
fn zero_episodes_keep_initial_params() {
    let skills = dummy_skills(2);
    let config = small_config();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let init = HierarchicalPolicy::fresh(&config, &mut rng).unwrap().params();
    let mut env = short_env(20);
    let pref = Preference::from_first(0.66).unwrap();
    let (policy, trace) = run_hddpg(&pref, Some(&init), &mut env, &skills, 0, 0, &config, 1).unwrap();
    assert!(trace.is_empty());
    assert!(policy.eval_history.is_empty());
    assert_eq!(policy.params, init);

    let (a, _) = run_hddpg(&pref, None, &mut env, &skills, 0, 0, &config, 1).unwrap();
    let (b, _) = run_hddpg(&pref, None, &mut env, &skills, 0, 0, &config, 1).unwrap();
    assert_eq!(a.params, b.params);
    assert_ne!(a.params, init);
}

#[test]
fn training_records_tail_mean_and_leaves_skills_frozen() {
    let skills = dummy_skills(3);
    let before = skills.checksums();
    let mut config = small_config();
    config.eval_window = 3;
    let mut env = short_env(40);
    let pref = Preference::from_first(0.3).unwrap();
    let (policy, trace) = run_hddpg(&pref, None, &mut env, &skills, 5, 0, &config, 2).unwrap();
    assert_eq!(skills.checksums(), before);
    assert_eq!(trace.len(), 5);
    for e in &trace {
        assert!((pref.scalarize(&e.components).unwrap() - e.scalarized).abs() < 1e-9);
    }
    let tail = trace[2..].iter().map(|e| e.scalarized).sum::<f64>() / 3.0;
    assert_eq!(policy.eval_history.len(), 1);
    assert!((policy.eval_history[0].1 - tail).abs() < 1e-12);
    assert_eq!(policy.region, fuzzy_membership(&pref));
}

#[test]
fn runs_are_deterministic() {
    let skills = dummy_skills(4);
    let config = small_config();
    let pref = Preference::from_first(0.71).unwrap();
    let run = || {
        let mut env = short_env(30);
        run_hddpg(&pref, None, &mut env, &skills, 3, 5, &config, 11).unwrap()
    };
    let (a, ta) = run();
    let (b, tb) = run();
    assert_eq!(ta, tb);
    assert_eq!(a.params.actor.checksum(), b.params.actor.checksum());
}

#[test]
fn warm_start_rejects_foreign_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let actor = Network::new(5, &[LayerSpec::linear(SKILL_COUNT)], &mut rng).unwrap();
    let critic = Network::new(FEATURE_WIDTH + SKILL_COUNT, &[LayerSpec::linear(1)], &mut rng).unwrap();
    let p = PolicyParams { actor, critic };
    assert!(matches!(HierarchicalPolicy::from_params(&p, &small_config()), Err(Error::Dimension { .. })));
}

#[test]
fn frozen_evaluation_matches_preference() {
    let skills = dummy_skills(5);
    let config = small_config();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let p = HierarchicalPolicy::fresh(&config, &mut rng).unwrap();
    let pref = Preference::from_first(0.5).unwrap();
    let mut env = short_env(25);
    let out = evaluate_hierarchical(&p.agent.actor, &pref, &mut env, &skills, 2, 0, 10).unwrap();
    assert_eq!(out.len(), 2);
    for e in &out {
        assert!(e.components[0] <= -1.0 && e.components[0] >= -25.0);
        assert!((pref.scalarize(&e.components).unwrap() - e.scalarized).abs() < 1e-12);
    }
}
