//! Deterministic policy gradient building blocks shared by the skill
//! optimizer and the hierarchical agent: Ornstein–Uhlenbeck noise, a FIFO
//! replay buffer and an actor-critic pair with target networks.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{loss_and_grad, AdamConfig, AdamState, LayerSpec, Loss, Mode, Network};

type NoRng = rand::rngs::ThreadRng;

/// Temporally correlated exploration noise,
/// `x ← x + θ(μ − x)dt + σ√dt·z` per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OUProcess {
    pub theta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub dt: f64,
    pub value: Vec<f64>,
}

impl OUProcess {
    pub fn new(dim: usize, theta: f64, mu: f64, sigma: f64, dt: f64) -> Result<Self> {
        if !(theta >= 0.0 && sigma >= 0.0 && dt > 0.0) {
            return Err(Error::Validation {
                constraint: "ou parameters",
                detail: format!("theta {theta}, sigma {sigma}, dt {dt}"),
            });
        }
        Ok(Self {
            theta,
            mu,
            sigma,
            dt,
            value: vec![mu; dim],
        })
    }

    /// θ = 0.15, μ = 0, σ = 0.2, dt = 1.
    pub fn standard(dim: usize) -> Self {
        Self::new(dim, 0.15, 0.0, 0.2, 1.0).expect("valid defaults")
    }

    pub fn reset(&mut self) {
        self.value.iter_mut().for_each(|v| *v = self.mu);
    }

    pub fn anneal(&mut self, factor: f64) {
        self.sigma *= factor;
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[f64] {
        let scale = self.sigma * self.dt.sqrt();
        for v in &mut self.value {
            let z: f64 = rng.sample(StandardNormal);
            *v += self.theta * (self.mu - *v) * self.dt + scale * z;
        }
        &self.value
    }

    /// Stationary variance of the discretised process.
    pub fn stationary_variance(&self) -> f64 {
        let a = 1.0 - self.theta * self.dt;
        self.sigma * self.sigma * self.dt / (1.0 - a * a)
    }
}

/// Advances `process` one step and returns the noise vector.
pub fn ou_step<R: Rng + ?Sized>(process: &mut OUProcess, rng: &mut R) -> Vec<f64> {
    process.step(rng).to_vec()
}

/// Bounded FIFO store of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<T>,
    next: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            items: Vec::new(),
            next: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Appends, evicting the oldest item once full.
    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn get(&self, index: usize) -> Option<&T> {
        self.items.get(index)
    }

    /// Uniform indices with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>> {
        if batch == 0 || self.items.len() < batch {
            return Err(Error::Precondition(format!(
                "replay buffer holds {} transitions, batch needs {batch}",
                self.items.len()
            )));
        }
        Ok((0..batch).map(|_| rng.random_range(0..self.items.len())).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&T>> {
        Ok(self.sample_indices(batch, rng)?.into_iter().map(|i| &self.items[i]).collect())
    }
}

/// One stored step: state features, the critic's action input, reward,
/// next-state features and the terminal flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdpgConfig {
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub hidden: [usize; 2],
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            buffer_capacity: 100_000,
            batch_size: 64,
            gamma: 0.99,
            tau: 0.001,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            hidden: [64, 64],
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str| Err(Error::Config(format!("invalid ddpg setting {key}")));
        if self.buffer_capacity == 0 {
            return bad("buffer_capacity");
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return bad("batch_size");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau");
        }
        if !(self.actor_lr > 0.0) {
            return bad("actor_lr");
        }
        if !(self.critic_lr > 0.0) {
            return bad("critic_lr");
        }
        if self.hidden.contains(&0) {
            return bad("hidden");
        }
        Ok(())
    }
}

/// Maps raw actor outputs to the critic's action input.
pub trait ActionEncoding {
    fn raw_width(&self) -> usize;
    fn critic_width(&self) -> usize;

    /// Differentiable encoding used for the actor's policy gradient.
    fn smooth(&self, raw: &[f64], out: &mut [f64]);

    /// Vector-Jacobian product of [`ActionEncoding::smooth`].
    fn smooth_vjp(&self, raw: &[f64], grad: &[f64], out: &mut [f64]);

    /// Encoding of the action the target actor would execute.
    fn executed(&self, raw: &[f64], out: &mut [f64]);

    /// Output layer of the actor.
    fn actor_output(&self) -> LayerSpec {
        LayerSpec::linear(self.raw_width())
    }
}

/// Result of one gradient update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub td_errors: Vec<f64>,
    pub mean_q: f64,
}

/// Actor, critic, their targets and optimizer state.
#[derive(Debug, Clone)]
pub struct ActorCritic {
    pub actor: Network<f64>,
    pub critic: Network<f64>,
    pub actor_target: Network<f64>,
    pub critic_target: Network<f64>,
    actor_opt: AdamState<f64>,
    critic_opt: AdamState<f64>,
    pub config: DdpgConfig,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(state_width: usize, encoding: &impl ActionEncoding, config: DdpgConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let [h1, h2] = config.hidden;
        let actor = Network::new(
            state_width,
            &[LayerSpec::relu(h1), LayerSpec::relu(h2), encoding.actor_output()],
            rng,
        )?;
        let critic = Network::new(
            state_width + encoding.critic_width(),
            &[LayerSpec::relu(h1), LayerSpec::relu(h2), LayerSpec::linear(1)],
            rng,
        )?;
        Ok(Self::from_networks(actor, critic, config))
    }

    /// Wraps existing networks; targets start as exact copies.
    pub fn from_networks(actor: Network<f64>, critic: Network<f64>, config: DdpgConfig) -> Self {
        Self {
            actor_opt: AdamState::new(&actor, AdamConfig::with_learning_rate(config.actor_lr)),
            critic_opt: AdamState::new(&critic, AdamConfig::with_learning_rate(config.critic_lr)),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            config,
        }
    }

    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.actor.forward(state)
    }

    pub fn q_value(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        let mut x = state.to_vec();
        x.extend_from_slice(action);
        Ok(self.critic.forward(&x)?[0])
    }

    /// Critic regression targets `r + γ(1−done)·Q′(s′, a′(s′))`.
    pub fn targets(&self, encoding: &impl ActionEncoding, batch: &[&Experience]) -> Result<Vec<f64>> {
        let b = batch.len();
        let sw = self.actor.input_width();
        let next: Vec<f64> = batch.iter().flat_map(|e| e.next_state.iter().copied()).collect();
        if next.len() != b * sw {
            return Err(Error::dim("next states", b * sw, next.len()));
        }
        let raw = self.actor_target.forward_batch(&next, b, Mode::<NoRng>::Eval)?;
        let cw = encoding.critic_width();
        let mut input = Vec::with_capacity(b * (sw + cw));
        let mut enc = vec![0.0; cw];
        for (i, r) in raw.output().chunks_exact(encoding.raw_width()).enumerate() {
            encoding.executed(r, &mut enc);
            input.extend_from_slice(&next[i * sw..(i + 1) * sw]);
            input.extend_from_slice(&enc);
        }
        let q = self.critic_target.forward_batch(&input, b, Mode::<NoRng>::Eval)?;
        Ok(batch
            .iter()
            .zip(q.output())
            .map(|(e, &q)| if e.done { e.reward } else { e.reward + self.config.gamma * q })
            .collect())
    }

    /// One critic step, one actor step and a soft update of both targets.
    pub fn update(&mut self, encoding: &impl ActionEncoding, batch: &[&Experience]) -> Result<UpdateStats> {
        let b = batch.len();
        if b == 0 {
            return Err(Error::Precondition("empty batch".into()));
        }
        let sw = self.actor.input_width();
        let cw = encoding.critic_width();
        let rw = encoding.raw_width();
        let y = self.targets(encoding, batch)?;

        let mut input = Vec::with_capacity(b * (sw + cw));
        for e in batch {
            if e.state.len() != sw || e.action.len() != cw {
                return Err(Error::dim("experience", sw + cw, e.state.len() + e.action.len()));
            }
            input.extend_from_slice(&e.state);
            input.extend_from_slice(&e.action);
        }
        let trace = self.critic.forward_batch(&input, b, Mode::<NoRng>::Eval)?;
        let q = trace.output().to_vec();
        let (critic_loss, grad) = loss_and_grad(&q, &y, b, Loss::Mse);
        let (grads, _) = self.critic.backward(&trace, &grad)?;
        self.critic_opt.step(&mut self.critic, &grads)?;

        let states: Vec<f64> = batch.iter().flat_map(|e| e.state.iter().copied()).collect();
        let actor_trace = self.actor.forward_batch(&states, b, Mode::<NoRng>::Eval)?;
        let raw = actor_trace.output();
        let mut input = Vec::with_capacity(b * (sw + cw));
        let mut enc = vec![0.0; cw];
        for i in 0..b {
            encoding.smooth(&raw[i * rw..(i + 1) * rw], &mut enc);
            input.extend_from_slice(&states[i * sw..(i + 1) * sw]);
            input.extend_from_slice(&enc);
        }
        let q_trace = self.critic.forward_batch(&input, b, Mode::<NoRng>::Eval)?;
        let mean_q = q_trace.output().iter().sum::<f64>() / b as f64;
        // ascend mean Q: d(−mean Q)/dQ_i = −1/B
        let (_, dx) = self.critic.backward(&q_trace, &vec![-1.0 / b as f64; b])?;
        let mut grad_raw = vec![0.0; b * rw];
        for i in 0..b {
            let da = &dx[i * (sw + cw) + sw..(i + 1) * (sw + cw)];
            encoding.smooth_vjp(&raw[i * rw..(i + 1) * rw], da, &mut grad_raw[i * rw..(i + 1) * rw]);
        }
        let (actor_grads, _) = self.actor.backward(&actor_trace, &grad_raw)?;
        self.actor_opt.step(&mut self.actor, &actor_grads)?;

        self.actor_target.soft_update(&self.actor, self.config.tau)?;
        self.critic_target.soft_update(&self.critic, self.config.tau)?;
        Ok(UpdateStats {
            critic_loss,
            td_errors: y.iter().zip(&q).map(|(y, q)| y - q).collect(),
            mean_q,
        })
    }
}
