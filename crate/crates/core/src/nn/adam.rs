use serde::{Deserialize, Serialize};

use super::{Gradients, Network};
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moment accumulators for one network.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    step_count: u64,
    first: Gradients<T>,
    second: Gradients<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(net: &Network<T>, config: AdamConfig) -> Self {
        Self {
            config,
            step_count: 0,
            first: Gradients::zeros_like(net),
            second: Gradients::zeros_like(net),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one bias-corrected Adam descent step with `grads`.
    pub fn step(&mut self, net: &mut Network<T>, grads: &Gradients<T>) -> Result<()> {
        grads.check_matches(net)?;
        self.first.check_matches(net)?;
        self.step_count += 1;
        let c = self.config;
        let t = self.step_count as i32;
        let b1 = T::of(c.beta1);
        let b2 = T::of(c.beta2);
        let lr = T::of(c.learning_rate);
        let eps = T::of(c.eps);
        let corr1 = T::one() - b1.powi(t);
        let corr2 = T::one() - b2.powi(t);
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let params = layer.weight.values.iter_mut().chain(layer.bias.iter_mut());
            let g = grads.weights[l].iter().chain(grads.biases[l].iter());
            let m = self.first.weights[l]
                .iter_mut()
                .chain(self.first.biases[l].iter_mut());
            let v = self.second.weights[l]
                .iter_mut()
                .chain(self.second.biases[l].iter_mut());
            for (((p, &g), m), v) in params.zip(g).zip(m).zip(v) {
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                let m_hat = *m / corr1;
                let v_hat = *v / corr2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
