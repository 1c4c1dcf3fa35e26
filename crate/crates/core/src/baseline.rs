//! Flat comparison agent: plain DDPG on primitive wheel actions with the
//! same scalarized rewards as the hierarchical agent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ddpg::{ActionEncoding, ActorCritic, DdpgConfig, Experience, OUProcess, ReplayBuffer};
use crate::env::{Environment, FEATURE_WIDTH};
use crate::error::Result;
use crate::hddpg::EpisodeReturn;
use crate::morl::Preference;
use crate::nn::Network;
use crate::skills::{decode_action, NoiseConfig, WheelEncoding};

/// One learner kept across the whole preference schedule.
#[derive(Debug, Clone)]
pub struct FlatLearner {
    pub agent: ActorCritic,
    pub buffer: ReplayBuffer<Experience>,
    pub noise: OUProcess,
    pub noise_config: NoiseConfig,
    rng: ChaCha8Rng,
}

impl FlatLearner {
    pub fn new(ddpg: DdpgConfig, noise: NoiseConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            agent: ActorCritic::new(FEATURE_WIDTH, &WheelEncoding, ddpg, &mut rng)?,
            buffer: ReplayBuffer::new(ddpg.buffer_capacity)?,
            noise: noise.process(4)?,
            noise_config: noise,
            rng,
        })
    }
}

/// Trains for `episodes` episodes under `preference`, continuing from the
/// learner's current state.
pub fn train_flat(
    env: &mut Environment,
    learner: &mut FlatLearner,
    preference: &Preference<f64>,
    episodes: usize,
    first_episode: usize,
) -> Result<Vec<EpisodeReturn>> {
    let batch = learner.agent.config.batch_size;
    let horizon = env.config().episode_length;
    let mut out = Vec::with_capacity(episodes);
    let mut enc = [0.0; 4];
    for ep in 0..episodes {
        let mut features = env.reset(first_episode + ep)?.features();
        learner.noise.reset();
        let mut components = [0.0; 2];
        let mut scalarized = 0.0;
        loop {
            let mut raw = learner.agent.act(&features)?;
            for (r, n) in raw.iter_mut().zip(learner.noise.step(&mut learner.rng)) {
                *r += n;
            }
            WheelEncoding.executed(&raw, &mut enc);
            let step = env.step(&decode_action(&raw))?;
            let r = preference.scalarize(&step.reward)?;
            let next = step.observation.features();
            learner.buffer.push(Experience {
                state: features,
                action: enc.to_vec(),
                reward: r,
                next_state: next.clone(),
                done: step.done && env.steps() < horizon,
            });
            if learner.buffer.len() >= batch {
                let sample = learner.buffer.sample(batch, &mut learner.rng)?;
                learner.agent.update(&WheelEncoding, &sample)?;
            }
            components[0] += step.reward[0];
            components[1] += step.reward[1];
            scalarized += r;
            features = next;
            if step.done {
                break;
            }
        }
        learner.noise.anneal(learner.noise_config.anneal);
        out.push(EpisodeReturn { scalarized, components });
    }
    Ok(out)
}

/// Plays a frozen flat actor without noise.
pub fn evaluate_flat(
    actor: &Network<f64>,
    preference: &Preference<f64>,
    env: &mut Environment,
    episodes: usize,
    first_episode: usize,
) -> Result<Vec<EpisodeReturn>> {
    let mut out = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let mut obs = env.reset(first_episode + ep)?;
        let mut components = [0.0; 2];
        loop {
            let step = env.step(&decode_action(&actor.forward(&obs.features())?))?;
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
