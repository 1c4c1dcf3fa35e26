//! Phase one: generic skills, a DDPG optimizer over wheel commands and the
//! intrinsically motivated skill sampler.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ddpg::{ActionEncoding, ActorCritic, DdpgConfig, Experience, OUProcess, ReplayBuffer};
use crate::env::{
    default_config, Action, Direction, Environment, Observation, RobotState, Scenario, ScenarioConfig, CAMERA_SIDE,
    FEATURE_WIDTH,
};
use crate::error::{Error, Result};
use crate::nn::{logistic, AdamConfig, AdamState, LayerSpec, Loss, Network};
use crate::seed::seed_tree;

pub const SKILL_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SkillDef {
    pub id: usize,
    pub name: &'static str,
}

pub const SKILLS: [SkillDef; SKILL_COUNT] = [
    SkillDef { id: 0, name: "move_forward" },
    SkillDef { id: 1, name: "move_backward" },
    SkillDef { id: 2, name: "turn_right" },
    SkillDef { id: 3, name: "turn_left" },
    SkillDef { id: 4, name: "quick_forward" },
    SkillDef { id: 5, name: "quick_backward" },
    SkillDef { id: 6, name: "quick_turn_right" },
    SkillDef { id: 7, name: "quick_turn_left" },
    SkillDef { id: 8, name: "bounce_back" },
    SkillDef { id: 9, name: "turn_around" },
];

pub const MOVE_FORWARD: usize = 0;
pub const BOUNCE_BACK: usize = 8;
pub const TURN_AROUND: usize = 9;

impl SkillDef {
    pub fn by_id(id: usize) -> Result<SkillDef> {
        SKILLS
            .get(id)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown skill id {id}")))
    }

    pub fn by_name(name: &str) -> Result<SkillDef> {
        SKILLS
            .iter()
            .find(|s| s.name == name)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown skill {name:?}")))
    }

    /// Per-step reward range `(min, max)`.
    pub fn reward_range(&self) -> (f64, f64) {
        if self.id == BOUNCE_BACK {
            (-1.0, 0.0)
        } else {
            (0.0, 1.0)
        }
    }

    pub fn max_reward(&self) -> f64 {
        self.reward_range().1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkillRewardConfig {
    /// Normalized proximity reading below which bounce_back is penalized.
    pub prox_threshold: f64,
    /// Largest force difference still counted as equal.
    pub force_tolerance: f64,
    pub max_rpm: f64,
}

impl Default for SkillRewardConfig {
    fn default() -> Self {
        Self {
            prox_threshold: 0.15,
            force_tolerance: 0.1,
            max_rpm: crate::env::RobotParams::default().max_rpm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

/// Half of the camera holding more obstacle cells, if either does.
fn dominant_obstacle_side(obs: &Observation) -> Option<Side> {
    let code = crate::env::EntityKind::Obstacle.camera_code();
    let half = CAMERA_SIDE / 2;
    let (mut left, mut right) = (0usize, 0usize);
    for row in obs.camera.chunks_exact(CAMERA_SIDE) {
        left += row[..half].iter().filter(|&&v| v == code).count();
        right += row[half..].iter().filter(|&&v| v == code).count();
    }
    match left.cmp(&right) {
        std::cmp::Ordering::Greater => Some(Side::Left),
        std::cmp::Ordering::Less => Some(Side::Right),
        std::cmp::Ordering::Equal => None,
    }
}

/// Table of skill rewards, evaluated on the step from `prev_obs` to `obs`
/// taken with `action`; `state` is the pose after the step.
pub fn skill_reward(
    skill: &SkillDef,
    action: &Action,
    obs: &Observation,
    state: &RobotState,
    prev_obs: &Observation,
    config: &SkillRewardConfig,
) -> f64 {
    let (fl, fr) = (action.f_left(), action.f_right());
    let (dl, dr) = (action.d_left(), action.d_right());
    let equal = (fr - fl).abs() <= config.force_tolerance;
    let both = |d: Direction| dl == d && dr == d;
    let rpm = ((state.left_rpm.abs() + state.right_rpm.abs()) / (2.0 * config.max_rpm)).clamp(0.0, 1.0);
    let gate = |ok: bool, value: f64| if ok { value } else { 0.0 };
    match skill.id {
        0 => gate(equal && both(Direction::Forward), 1.0),
        1 => gate(equal && both(Direction::Backward), 1.0),
        2 => gate(fr > fl && both(Direction::Forward), 1.0),
        3 => gate(fr < fl && both(Direction::Forward), 1.0),
        4 => gate(equal && both(Direction::Forward), rpm),
        5 => gate(equal && both(Direction::Backward), rpm),
        6 => gate(fr > fl && both(Direction::Forward), rpm),
        7 => gate(fr < fl && both(Direction::Forward), rpm),
        8 => {
            if obs.proximity.iter().any(|&b| b < config.prox_threshold) {
                -1.0
            } else {
                0.0
            }
        }
        _ => match (dominant_obstacle_side(prev_obs), dominant_obstacle_side(obs)) {
            (Some(a), Some(b)) if a != b => 1.0,
            _ => 0.0,
        },
    }
}

/// Fraction of the last `window` episodes whose mean per-step reward is at
/// least half the skill's maximum.
pub fn success_ratio(trace: &[f64], window: usize, max_reward: f64) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::UndefinedInput("success ratio of an empty trace".into()));
    }
    if window == 0 || window > trace.len() {
        return Err(Error::Precondition(format!("window {window} for a trace of {}", trace.len())));
    }
    let bar = 0.5 * max_reward;
    let hits = trace[trace.len() - window..].iter().filter(|&&r| r >= bar).count();
    Ok(hits as f64 / window as f64)
}

/// Actor outputs: two forces through a logistic, two directions by sign.
#[derive(Debug, Clone, Copy, Default)]
pub struct WheelEncoding;

impl ActionEncoding for WheelEncoding {
    fn raw_width(&self) -> usize {
        4
    }

    fn critic_width(&self) -> usize {
        4
    }

    fn smooth(&self, raw: &[f64], out: &mut [f64]) {
        out[0] = logistic(raw[0]);
        out[1] = logistic(raw[1]);
        out[2] = raw[2].tanh();
        out[3] = raw[3].tanh();
    }

    fn smooth_vjp(&self, raw: &[f64], grad: &[f64], out: &mut [f64]) {
        for i in 0..2 {
            let s = logistic(raw[i]);
            out[i] = grad[i] * s * (1.0 - s);
        }
        for i in 2..4 {
            let t = raw[i].tanh();
            out[i] = grad[i] * (1.0 - t * t);
        }
    }

    fn executed(&self, raw: &[f64], out: &mut [f64]) {
        out[0] = logistic(raw[0]);
        out[1] = logistic(raw[1]);
        out[2] = Direction::of_sign(raw[2]).sign();
        out[3] = Direction::of_sign(raw[3]).sign();
    }
}

/// Wheel command for raw actor outputs.
pub fn decode_action(raw: &[f64]) -> Action {
    Action::new(
        logistic(raw[0]),
        logistic(raw[1]),
        Direction::of_sign(raw[2]),
        Direction::of_sign(raw[3]),
    )
    .expect("logistic forces lie in [0, 1]")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub theta: f64,
    pub sigma: f64,
    pub dt: f64,
    /// Multiplier applied to σ after every episode.
    pub anneal: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            theta: 0.15,
            sigma: 0.2,
            dt: 1.0,
            anneal: 0.995,
        }
    }
}

impl NoiseConfig {
    pub fn process(&self, dim: usize) -> Result<OUProcess> {
        if !(self.anneal > 0.0 && self.anneal <= 1.0) {
            return Err(Error::Config(format!("noise anneal factor {} outside (0, 1]", self.anneal)));
        }
        OUProcess::new(dim, self.theta, 0.0, self.sigma, self.dt)
    }
}

/// A skill under training: the DDPG agent with its buffer and noise.
#[derive(Debug, Clone)]
pub struct SkillLearner {
    pub skill: SkillDef,
    pub agent: ActorCritic,
    pub buffer: ReplayBuffer<Experience>,
    pub noise: OUProcess,
    pub noise_config: NoiseConfig,
    pub reward_config: SkillRewardConfig,
    /// Per-episode mean reward over every training episode so far.
    pub trace: Vec<f64>,
    rng: ChaCha8Rng,
}

impl SkillLearner {
    pub fn new(skill: SkillDef, ddpg: DdpgConfig, noise: NoiseConfig, reward: SkillRewardConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agent = ActorCritic::new(FEATURE_WIDTH, &WheelEncoding, ddpg, &mut rng)?;
        Ok(Self {
            skill,
            buffer: ReplayBuffer::new(ddpg.buffer_capacity)?,
            noise: noise.process(4)?,
            noise_config: noise,
            reward_config: reward,
            agent,
            trace: Vec::new(),
            rng,
        })
    }

    pub fn episodes_trained(&self) -> usize {
        self.trace.len()
    }

    pub fn policy(&self) -> Result<SkillPolicy> {
        let window = self.trace.len().min(10);
        Ok(SkillPolicy {
            skill: self.skill.id,
            actor: self.agent.actor.clone(),
            mean_reward: if self.trace.is_empty() { 0.0 } else { crate::metrics::mean(&self.trace[self.trace.len() - window..]) },
            success_ratio: if window == 0 { 0.0 } else { success_ratio(&self.trace, window, self.skill.max_reward())? },
        })
    }
}

/// Runs `episodes` DDPG episodes of `learner`'s skill and returns their
/// per-episode mean rewards.
pub fn train_skill_ddpg(env: &mut Environment, learner: &mut SkillLearner, episodes: usize) -> Result<Vec<f64>> {
    let batch = learner.agent.config.batch_size;
    let horizon = env.config().episode_length;
    let mut out = Vec::with_capacity(episodes);
    let mut enc = [0.0; 4];
    for _ in 0..episodes {
        let mut obs = env.reset(learner.trace.len())?;
        let mut features = obs.features();
        learner.noise.reset();
        let mut total = 0.0;
        let mut steps = 0usize;
        loop {
            let mut raw = learner.agent.act(&features)?;
            for (r, n) in raw.iter_mut().zip(learner.noise.step(&mut learner.rng)) {
                *r += n;
            }
            let action = decode_action(&raw);
            WheelEncoding.executed(&raw, &mut enc);
            let step = env.step(&action)?;
            let reward = skill_reward(&learner.skill, &action, &step.observation, env.state(), &obs, &learner.reward_config);
            let next = step.observation.features();
            // hitting the step limit is a truncation, not a terminal state
            let terminal = step.done && env.steps() < horizon;
            learner.buffer.push(Experience {
                state: features,
                action: enc.to_vec(),
                reward,
                next_state: next.clone(),
                done: terminal,
            });
            if learner.buffer.len() >= batch {
                let sample = learner.buffer.sample(batch, &mut learner.rng)?;
                learner.agent.update(&WheelEncoding, &sample)?;
            }
            total += reward;
            steps += 1;
            features = next;
            obs = step.observation;
            if step.done {
                break;
            }
        }
        learner.noise.anneal(learner.noise_config.anneal);
        let mean = total / steps as f64;
        learner.trace.push(mean);
        out.push(mean);
    }
    Ok(out)
}

/// Frozen skill: the actor network plus its training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillPolicy {
    pub skill: usize,
    pub actor: Network<f64>,
    pub mean_reward: f64,
    pub success_ratio: f64,
}

impl SkillPolicy {
    pub fn act(&self, obs: &Observation) -> Result<Action> {
        Ok(decode_action(&self.actor.forward(&obs.features())?))
    }
}

/// Runs the frozen actor without noise and returns per-episode mean
/// skill rewards.
pub fn evaluate_skill(
    env: &mut Environment,
    skill: &SkillDef,
    actor: &Network<f64>,
    reward: &SkillRewardConfig,
    episodes: usize,
    first_index: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let mut obs = env.reset(first_index + e)?;
        let mut total = 0.0;
        let mut steps = 0usize;
        loop {
            let action = decode_action(&actor.forward(&obs.features())?);
            let step = env.step(&action)?;
            total += skill_reward(skill, &action, &step.observation, env.state(), &obs, reward);
            steps += 1;
            obs = step.observation;
            if step.done {
                break;
            }
        }
        out.push(total / steps as f64);
    }
    Ok(out)
}

pub const SKILL_MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillManifestEntry {
    pub id: usize,
    pub name: String,
    pub file: String,
    pub success_ratio: f64,
    pub mean_reward: f64,
    pub checksum: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillManifest {
    pub format_version: u32,
    pub seed: u64,
    pub skills: Vec<SkillManifestEntry>,
}

/// The skill set U, keyed by skill id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SkillSet {
    pub policies: BTreeMap<usize, SkillPolicy>,
    pub seed: u64,
}

impl SkillSet {
    pub fn is_complete(&self) -> bool {
        (0..SKILL_COUNT).all(|i| self.policies.contains_key(&i))
    }

    pub fn require_complete(&self) -> Result<()> {
        match (0..SKILL_COUNT).find(|i| !self.policies.contains_key(i)) {
            Some(i) => Err(Error::Config(format!("skill set lacks {}", SKILLS[i].name))),
            None => Ok(()),
        }
    }

    pub fn get(&self, id: usize) -> Result<&SkillPolicy> {
        self.policies
            .get(&id)
            .ok_or_else(|| Error::Config(format!("skill {id} missing from the skill set")))
    }

    /// Checksums of every actor, in id order.
    pub fn checksums(&self) -> Vec<(usize, u64)> {
        self.policies.iter().map(|(&k, p)| (k, p.actor.checksum())).collect()
    }

    /// Writes one network checkpoint per skill plus `manifest.json`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut skills = Vec::new();
        for (&id, p) in &self.policies {
            let def = SkillDef::by_id(id)?;
            let file = format!("skill-{id}-{}.json", def.name);
            p.actor.save(dir.join(&file))?;
            skills.push(SkillManifestEntry {
                id,
                name: def.name.to_string(),
                file,
                success_ratio: p.success_ratio,
                mean_reward: p.mean_reward,
                checksum: p.actor.checksum(),
            });
        }
        let manifest = SkillManifest {
            format_version: SKILL_MANIFEST_VERSION,
            seed: self.seed,
            skills,
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: SkillManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.format_version != SKILL_MANIFEST_VERSION {
            return Err(Error::Format(format!("unsupported skill manifest version {}", manifest.format_version)));
        }
        let mut policies = BTreeMap::new();
        for e in manifest.skills {
            let def = SkillDef::by_id(e.id)?;
            if def.name != e.name {
                return Err(Error::Format(format!("skill {} is named {:?}, expected {:?}", e.id, e.name, def.name)));
            }
            let actor = Network::<f64>::load(dir.join(&e.file))?;
            if actor.checksum() != e.checksum {
                return Err(Error::Format(format!("checksum mismatch for {}", e.file)));
            }
            policies.insert(
                e.id,
                SkillPolicy {
                    skill: e.id,
                    actor,
                    mean_reward: e.mean_reward,
                    success_ratio: e.success_ratio,
                },
            );
        }
        Ok(Self {
            policies,
            seed: manifest.seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Gime,
    Random,
}

impl Sampler {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gime" => Ok(Sampler::Gime),
            "random" => Ok(Sampler::Random),
            other => Err(Error::Config(format!("unknown sampler {other:?}"))),
        }
    }
}

pub fn sample_skill_random<R: Rng + ?Sized>(rng: &mut R) -> usize {
    rng.random_range(0..SKILL_COUNT)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GimeConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub bins: usize,
    pub learn_steps: usize,
    pub learning_rate: f64,
    pub dropout: f64,
}

impl Default for GimeConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            alpha: 0.1,
            gamma: 0.9,
            bins: 10,
            learn_steps: 5,
            learning_rate: 0.085,
            dropout: 0.35,
        }
    }
}

impl GimeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str| Err(Error::Config(format!("invalid gime setting {key}")));
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma");
        }
        if self.bins == 0 {
            return bad("bins");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout");
        }
        Ok(())
    }
}

/// Predictive model, Q table and accuracy bookkeeping of the sampler.
#[derive(Debug, Clone)]
pub struct SamplerState {
    pub config: GimeConfig,
    pub model: Network<f64>,
    optimizer: AdamState<f64>,
    pub q_table: Vec<[f64; SKILL_COUNT]>,
    /// Latest prediction accuracy per skill.
    pub rho: [f64; SKILL_COUNT],
    pub history: Vec<usize>,
    rng: ChaCha8Rng,
}

/// Outcome of one sampler update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GimeStep {
    pub rho_before: f64,
    pub rho_after: f64,
    pub progress: f64,
}

pub fn one_hot(id: usize) -> Vec<f64> {
    let mut v = vec![0.0; SKILL_COUNT];
    v[id] = 1.0;
    v
}

impl SamplerState {
    /// Predictive model `Linear(10) → ReLU(32) → ReLU(16) → tanh(8) →
    /// Linear(1)` with dropout on the hidden layers; zero Q table.
    pub fn new(config: GimeConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.dropout;
        let model = Network::new(
            SKILL_COUNT,
            &[
                LayerSpec::relu(32).with_dropout(d),
                LayerSpec::relu(16).with_dropout(d),
                LayerSpec::tanh(8).with_dropout(d),
                LayerSpec::linear(1),
            ],
            &mut rng,
        )?;
        Ok(Self {
            optimizer: AdamState::new(&model, AdamConfig::with_learning_rate(config.learning_rate)),
            model,
            q_table: vec![[0.0; SKILL_COUNT]; config.bins],
            rho: [0.0; SKILL_COUNT],
            history: Vec::new(),
            config,
            rng,
        })
    }

    /// Bin of the mean accuracy across skills.
    pub fn state_bin(&self) -> usize {
        let m = self.rho.iter().sum::<f64>() / SKILL_COUNT as f64;
        ((m * self.config.bins as f64) as usize).min(self.config.bins - 1)
    }

    /// Predicted normalized mean reward of a skill.
    pub fn predict(&self, skill: usize) -> Result<f64> {
        Ok(logistic(self.model.forward(&one_hot(skill))?[0]))
    }

    /// `1 − min(1, |prediction − target|)`.
    pub fn accuracy(&self, skill: usize, target: f64) -> Result<f64> {
        Ok(1.0 - (self.predict(skill)? - target).abs().min(1.0))
    }

    /// Exploration ratio of each skill over the sampling history.
    pub fn exploration_ratios(&self) -> [f64; SKILL_COUNT] {
        exploration_ratios(&self.history)
    }
}

pub fn exploration_ratios(history: &[usize]) -> [f64; SKILL_COUNT] {
    let mut r = [0.0; SKILL_COUNT];
    if history.is_empty() {
        return r;
    }
    for &s in history {
        r[s] += 1.0;
    }
    r.iter_mut().for_each(|v| *v /= history.len() as f64);
    r
}

/// Lowest index holding the maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy choice over the Q row of the current accuracy bin.
pub fn sample_skill_gime<R: Rng + ?Sized>(state: &SamplerState, rng: &mut R) -> usize {
    if rng.random::<f64>() < state.config.epsilon {
        return rng.random_range(0..SKILL_COUNT);
    }
    argmax(&state.q_table[state.state_bin()])
}

/// Trains the predictive model on the observed (normalized) mean reward
/// of `skill` and applies the learning progress as Q-learning reward.
pub fn gime_update(state: &mut SamplerState, skill: usize, target: f64, learn_steps: usize) -> Result<GimeStep> {
    if !target.is_finite() {
        return Err(Error::UndefinedInput("observed mean reward is not finite".into()));
    }
    SkillDef::by_id(skill)?;
    let target = target.clamp(0.0, 1.0);
    let bin_before = state.state_bin();
    let rho_before = state.accuracy(skill, target)?;
    let x = one_hot(skill);
    for _ in 0..learn_steps {
        let (_, grads) = state
            .model
            .loss_gradients_train(&x, &[target], 1, Loss::CrossEntropy, &mut state.rng)?;
        state.optimizer.step(&mut state.model, &grads)?;
    }
    let rho_after = state.accuracy(skill, target)?;
    state.rho[skill] = rho_after;
    let progress = rho_after - rho_before;
    let bin_after = state.state_bin();
    let c = state.config;
    let next_best = state.q_table[bin_after].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let q = &mut state.q_table[bin_before][skill];
    *q += c.alpha * (progress + c.gamma * next_best - *q);
    state.history.push(skill);
    Ok(GimeStep {
        rho_before,
        rho_after,
        progress,
    })
}

/// Maps a mean reward into `[0, 1]` using the skill's reward range.
pub fn normalize_reward(skill: &SkillDef, mean_reward: f64) -> f64 {
    let (lo, hi) = skill.reward_range();
    ((mean_reward - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// Settings of a phase-one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumConfig {
    pub cycles: usize,
    pub episodes_per_cycle: usize,
    pub sampler: Sampler,
    pub gime: GimeConfig,
    pub ddpg: DdpgConfig,
    pub noise: NoiseConfig,
    pub reward: SkillRewardConfig,
    /// Cycles averaged for the reported success ratio.
    pub success_window: usize,
    pub arena: ScenarioConfig,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            cycles: 15,
            episodes_per_cycle: 50,
            sampler: Sampler::Gime,
            gime: GimeConfig::default(),
            ddpg: DdpgConfig::default(),
            noise: NoiseConfig::default(),
            reward: SkillRewardConfig::default(),
            success_window: 10,
            arena: default_config(Scenario::Static),
        }
    }
}

/// One learning cycle of phase one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub skill: usize,
    pub mean_reward: f64,
    pub progress: Option<f64>,
    /// Greedy evaluation success of every skill after this cycle.
    pub eval_success: [bool; SKILL_COUNT],
}

#[derive(Debug, Clone)]
pub struct CurriculumReport {
    pub skill_set: SkillSet,
    pub cycles: Vec<CycleRecord>,
    pub exploration: [f64; SKILL_COUNT],
    /// Share of the last `success_window` cycles in which each skill's
    /// greedy evaluation episode succeeded.
    pub success: [f64; SKILL_COUNT],
}

/// Phase one: the sampler picks a skill each cycle, the skill is trained
/// for a block of episodes and every skill is then evaluated greedily.
pub fn run_skill_curriculum(config: &CurriculumConfig, seed: u64) -> Result<CurriculumReport> {
    if config.cycles == 0 || config.episodes_per_cycle == 0 || config.success_window == 0 {
        return Err(Error::Config("cycles, episodes_per_cycle and success_window must be positive".into()));
    }
    if config.arena.scenario != Scenario::Static {
        return Err(Error::Precondition("skills are trained on the static arena".into()));
    }
    let mut learners = (0..SKILL_COUNT)
        .map(|i| {
            SkillLearner::new(
                SKILLS[i],
                config.ddpg,
                config.noise,
                config.reward,
                seed_tree(seed, i as u64, "skill-agent"),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut env = Environment::new(config.arena.clone(), seed_tree(seed, 0, "skill-env"))?;
    let mut eval_env = Environment::new(config.arena.clone(), seed_tree(seed, 0, "skill-eval"))?;
    let mut sampler_rng = ChaCha8Rng::seed_from_u64(seed_tree(seed, 0, "sampler"));
    let mut sampler = SamplerState::new(config.gime, seed_tree(seed, 0, "gime-model"))?;
    let mut history = Vec::with_capacity(config.cycles);
    let mut cycles = Vec::with_capacity(config.cycles);
    let mut eval_index = 0;

    for cycle in 0..config.cycles {
        let skill = match config.sampler {
            Sampler::Gime => sample_skill_gime(&sampler, &mut sampler_rng),
            Sampler::Random => sample_skill_random(&mut sampler_rng),
        };
        let trace = train_skill_ddpg(&mut env, &mut learners[skill], config.episodes_per_cycle)?;
        let mean_reward = crate::metrics::mean(&trace);
        let progress = match config.sampler {
            Sampler::Gime => {
                let target = normalize_reward(&SKILLS[skill], mean_reward);
                Some(gime_update(&mut sampler, skill, target, config.gime.learn_steps)?.progress)
            }
            Sampler::Random => None,
        };
        history.push(skill);
        let mut eval_success = [false; SKILL_COUNT];
        for (i, l) in learners.iter().enumerate() {
            let r = evaluate_skill(&mut eval_env, &SKILLS[i], &l.agent.actor, &config.reward, 1, eval_index)?;
            eval_index += 1;
            eval_success[i] = r[0] >= 0.5 * SKILLS[i].max_reward();
        }
        cycles.push(CycleRecord {
            cycle,
            skill,
            mean_reward,
            progress,
            eval_success,
        });
    }

    let window = config.success_window.min(cycles.len());
    let mut hits = [0usize; SKILL_COUNT];
    for rec in &cycles[cycles.len() - window..] {
        for (h, &ok) in hits.iter_mut().zip(&rec.eval_success) {
            *h += usize::from(ok);
        }
    }
    let success = hits.map(|h| h as f64 / window as f64);
    let mut policies = BTreeMap::new();
    for (i, l) in learners.iter().enumerate() {
        let mut p = l.policy()?;
        p.success_ratio = success[i];
        policies.insert(i, p);
    }
    Ok(CurriculumReport {
        skill_set: SkillSet { policies, seed },
        exploration: exploration_ratios(&history),
        cycles,
        success,
    })
}

#[cfg(test)]
mod tests;
