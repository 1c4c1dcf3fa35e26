//! Hierarchical deterministic policy gradient: an actor-critic whose
//! actions are frozen skills executed for a fixed number of primitive steps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ddpg::{ActionEncoding, ActorCritic, DdpgConfig, Experience, OUProcess, ReplayBuffer, UpdateStats};
use crate::env::{Environment, Observation, FEATURE_WIDTH};
use crate::error::{Error, Result};
use crate::metrics::mean;
use crate::morl::{fuzzy_membership, Preference, SteppingstonePolicy};
use crate::nn::{LayerSpec, Network};
use crate::skills::{NoiseConfig, SkillSet, SKILL_COUNT};

/// Bounded actor scores feed the critic through a softmax for the policy
/// gradient; executed skills are one-hot.
#[derive(Debug, Clone, Copy, Default)]
pub struct SkillEncoding;

fn softmax(raw: &[f64], out: &mut [f64]) {
    let m = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &r) in out.iter_mut().zip(raw) {
        *o = (r - m).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

impl ActionEncoding for SkillEncoding {
    fn raw_width(&self) -> usize {
        SKILL_COUNT
    }

    fn critic_width(&self) -> usize {
        SKILL_COUNT
    }

    fn smooth(&self, raw: &[f64], out: &mut [f64]) {
        softmax(raw, out);
    }

    fn smooth_vjp(&self, raw: &[f64], grad: &[f64], out: &mut [f64]) {
        let mut s = vec![0.0; raw.len()];
        softmax(raw, &mut s);
        let dot: f64 = s.iter().zip(grad).map(|(a, b)| a * b).sum();
        for i in 0..raw.len() {
            out[i] = s[i] * (grad[i] - dot);
        }
    }

    fn executed(&self, raw: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        out[argmax(raw)] = 1.0;
    }

    /// Scores are bounded to [-1, 1] as in the original DDPG actor.
    fn actor_output(&self) -> LayerSpec {
        LayerSpec::tanh(SKILL_COUNT)
    }
}

/// Lowest index holding the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn one_hot_skill(skill: usize) -> Vec<f64> {
    let mut v = vec![0.0; SKILL_COUNT];
    v[skill] = 1.0;
    v
}

/// Skill with the highest perturbed score.
pub fn select_skill(scores: &[f64], noise: &[f64]) -> Result<usize> {
    if scores.len() != SKILL_COUNT || noise.len() != SKILL_COUNT {
        return Err(Error::dim("skill scores", SKILL_COUNT, scores.len().min(noise.len())));
    }
    let perturbed: Vec<f64> = scores.iter().zip(noise).map(|(s, n)| s + n).collect();
    Ok(argmax(&perturbed))
}

/// Result of running one skill as a macro action.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroStep {
    pub reward: [f64; 2],
    pub observation: Observation,
    pub done: bool,
    pub steps: usize,
}

/// Runs the frozen skill for up to `k_exec` primitive steps.
pub fn execute_skill(skill: usize, skills: &SkillSet, env: &mut Environment, obs: &Observation, k_exec: usize) -> Result<MacroStep> {
    let policy = skills.get(skill)?;
    let mut reward = [0.0; 2];
    let mut observation = obs.clone();
    let mut steps = 0;
    let mut done = env.is_done();
    while steps < k_exec && !done {
        let action = policy.act(&observation)?;
        let out = env.step(&action)?;
        reward[0] += out.reward[0];
        reward[1] += out.reward[1];
        observation = out.observation;
        done = out.done;
        steps += 1;
    }
    Ok(MacroStep {
        reward,
        observation,
        done,
        steps,
    })
}

/// Actor and critic parameters θ of a hierarchical policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub actor: Network<f64>,
    pub critic: Network<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HddpgConfig {
    pub ddpg: DdpgConfig,
    pub noise: NoiseConfig,
    /// Primitive steps per skill decision.
    pub k_exec: usize,
    /// Final episodes averaged into the evaluation history.
    pub eval_window: usize,
}

impl Default for HddpgConfig {
    fn default() -> Self {
        Self {
            ddpg: DdpgConfig::default(),
            noise: NoiseConfig::default(),
            k_exec: 10,
            eval_window: 10,
        }
    }
}

impl HddpgConfig {
    pub fn validate(&self) -> Result<()> {
        self.ddpg.validate()?;
        if self.k_exec == 0 {
            return Err(Error::Config("k_exec must be positive".into()));
        }
        if self.eval_window == 0 {
            return Err(Error::Config("eval_window must be positive".into()));
        }
        Ok(())
    }
}

/// The learning hierarchical agent.
#[derive(Debug, Clone)]
pub struct HierarchicalPolicy {
    pub agent: ActorCritic,
}

impl HierarchicalPolicy {
    pub fn fresh(config: &HddpgConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            agent: ActorCritic::new(FEATURE_WIDTH, &SkillEncoding, config.ddpg, rng)?,
        })
    }

    /// Warm start from θ′; targets start as copies, optimizer state fresh.
    pub fn from_params(params: &PolicyParams, config: &HddpgConfig) -> Result<Self> {
        if params.actor.input_width() != FEATURE_WIDTH || params.actor.output_width() != SKILL_COUNT {
            return Err(Error::dim("hierarchical actor", SKILL_COUNT, params.actor.output_width()));
        }
        if params.critic.input_width() != FEATURE_WIDTH + SKILL_COUNT || params.critic.output_width() != 1 {
            return Err(Error::dim("hierarchical critic", FEATURE_WIDTH + SKILL_COUNT, params.critic.input_width()));
        }
        Ok(Self {
            agent: ActorCritic::from_networks(params.actor.clone(), params.critic.clone(), config.ddpg),
        })
    }

    pub fn params(&self) -> PolicyParams {
        PolicyParams {
            actor: self.agent.actor.clone(),
            critic: self.agent.critic.clone(),
        }
    }

    pub fn scores(&self, obs: &Observation) -> Result<Vec<f64>> {
        self.agent.act(&obs.features())
    }
}

/// One critic and actor step on a batch of stored decisions.
pub fn hddpg_update(policy: &mut HierarchicalPolicy, batch: &[&Experience]) -> Result<UpdateStats> {
    policy.agent.update(&SkillEncoding, batch)
}

/// Returns of one phase-two episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReturn {
    pub scalarized: f64,
    pub components: [f64; 2],
}

/// Trains a hierarchical policy for `episodes` episodes under `preference`
/// starting from θ′ (or fresh when `init` is `None`).
///
/// `first_episode` is the global episode index of the first episode, which
/// drives the environment's relocation schedule. The returned policy's
/// evaluation history holds one entry: the mean return of the final
/// `eval_window` episodes.
#[allow(clippy::too_many_arguments)]
pub fn run_hddpg(
    preference: &Preference<f64>,
    init: Option<&PolicyParams>,
    env: &mut Environment,
    skills: &SkillSet,
    episodes: usize,
    first_episode: usize,
    config: &HddpgConfig,
    seed: u64,
) -> Result<(SteppingstonePolicy<PolicyParams>, Vec<EpisodeReturn>)> {
    config.validate()?;
    skills.require_complete()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = match init {
        Some(p) => HierarchicalPolicy::from_params(p, config)?,
        None => HierarchicalPolicy::fresh(config, &mut rng)?,
    };
    let mut buffer = ReplayBuffer::new(config.ddpg.buffer_capacity)?;
    let mut noise = config.noise.process(SKILL_COUNT)?;
    let horizon = env.config().episode_length;
    let mut trace = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let mut obs = env.reset(first_episode + ep)?;
        noise.reset();
        let mut components = [0.0; 2];
        let mut scalarized = 0.0;
        loop {
            let features = obs.features();
            let scores = policy.agent.act(&features)?;
            let skill = select_skill(&scores, noise.step(&mut rng))?;
            let step = execute_skill(skill, skills, env, &obs, config.k_exec)?;
            let r = preference.scalarize(&step.reward)?;
            let next = step.observation.features();
            buffer.push(Experience {
                state: features,
                action: one_hot_skill(skill),
                reward: r,
                next_state: next,
                done: step.done && env.steps() < horizon,
            });
            if buffer.len() >= config.ddpg.batch_size {
                let batch = buffer.sample(config.ddpg.batch_size, &mut rng)?;
                hddpg_update(&mut policy, &batch)?;
            }
            components[0] += step.reward[0];
            components[1] += step.reward[1];
            scalarized += r;
            obs = step.observation;
            if step.done {
                break;
            }
        }
        noise.anneal(config.noise.anneal);
        trace.push(EpisodeReturn { scalarized, components });
    }
    let mut stored = SteppingstonePolicy::new(policy.params(), fuzzy_membership(preference));
    if !trace.is_empty() {
        let tail: Vec<f64> = trace[trace.len().saturating_sub(config.eval_window)..]
            .iter()
            .map(|e| e.scalarized)
            .collect();
        stored.record(*preference, mean(&tail));
    }
    Ok((stored, trace))
}

/// Plays a frozen hierarchical actor greedily (no noise, no learning).
pub fn evaluate_hierarchical(
    actor: &Network<f64>,
    preference: &Preference<f64>,
    env: &mut Environment,
    skills: &SkillSet,
    episodes: usize,
    first_episode: usize,
    k_exec: usize,
) -> Result<Vec<EpisodeReturn>> {
    let mut out = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let mut obs = env.reset(first_episode + ep)?;
        let mut components = [0.0; 2];
        loop {
            let skill = argmax(&actor.forward(&obs.features())?);
            let step = execute_skill(skill, skills, env, &obs, k_exec)?;
            components[0] += step.reward[0];
            components[1] += step.reward[1];
            obs = step.observation;
            if step.done {
                break;
            }
        }
        out.push(EpisodeReturn {
            scalarized: preference.scalarize(&components)?,
            components,
        });
    }
    Ok(out)
}

/// Default OU process for skill selection.
pub fn skill_noise(config: &HddpgConfig) -> Result<OUProcess> {
    config.noise.process(SKILL_COUNT)
}

#[cfg(test)]
mod tests;
