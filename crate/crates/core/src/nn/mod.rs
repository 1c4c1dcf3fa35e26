//! Dense feed-forward networks with reverse-mode gradients.
//!
//! Networks are stored layer by layer as `out × in` weight matrices plus a
//! bias vector. Batches are row-major `batch × width` buffers, so a layer
//! evaluates `Y = X·Wᵀ + b` with a single matrix product.

mod adam;
mod checkpoint;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{NetworkCheckpoint, CHECKPOINT_FORMAT_VERSION};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config(format!("matrix shape {rows}x{cols} is empty")));
        }
        if values.len() != rows * cols {
            return Err(Error::dim("matrix values", rows * cols, values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric { layer: 0 });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Linear => x,
            Activation::Relu => x.max(T::zero()),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Linear => T::one(),
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - y * y,
        }
    }
}

/// Width, activation and dropout of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
    #[serde(default)]
    pub dropout: f64,
}

impl LayerSpec {
    pub fn new(width: usize, activation: Activation) -> Self {
        Self {
            width,
            activation,
            dropout: 0.0,
        }
    }

    pub fn linear(width: usize) -> Self {
        Self::new(width, Activation::Linear)
    }

    pub fn relu(width: usize) -> Self {
        Self::new(width, Activation::Relu)
    }

    pub fn tanh(width: usize) -> Self {
        Self::new(width, Activation::Tanh)
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout = rate;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::Config("layer width must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// One dense layer: `weight` is `width × fan_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Dense<T> {
    pub spec: LayerSpec,
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn fan_in(&self) -> usize {
        self.weight.cols
    }

    pub fn width(&self) -> usize {
        self.weight.rows
    }
}

/// Loss attached to the network output by [`Network::loss_gradients`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// `(1/B) Σ_b Σ_o (y − t)²`
    Mse,
    /// Logistic squashing of the output followed by binary cross entropy
    /// against targets clamped to `[ε, 1−ε]`.
    CrossEntropy,
}

/// Target clamp used by [`Loss::CrossEntropy`].
pub const CROSS_ENTROPY_EPS: f64 = 1e-6;

/// Feed-forward network parameters. Deserialization checks that the layer
/// shapes compose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", try_from = "RawNetwork<T>")]
pub struct Network<T> {
    input_width: usize,
    layers: Vec<Dense<T>>,
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawNetwork<T> {
    input_width: usize,
    layers: Vec<Dense<T>>,
}

impl<T: Scalar> TryFrom<RawNetwork<T>> for Network<T> {
    type Error = Error;

    fn try_from(raw: RawNetwork<T>) -> Result<Self> {
        Self::from_layers(raw.input_width, raw.layers)
    }
}

/// Per-parameter gradients with the same layout as a [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Vec<T>>,
}

/// Intermediate values kept by a batched forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    batch: usize,
    /// `inputs[l]` is the (post-dropout) input fed to layer `l`; the last
    /// entry is the network output.
    inputs: Vec<Vec<T>>,
    /// Activation outputs before dropout.
    activations: Vec<Vec<T>>,
    /// Dropout multipliers (0 or 1/(1−p)) when dropout was applied.
    masks: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Trace<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn output(&self) -> &[T] {
        self.inputs.last().expect("trace has output")
    }
}

fn check_finite<T: Scalar>(values: &[T], layer: usize) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric { layer })
    }
}

impl<T: Scalar> Network<T> {
    /// Network with every weight drawn uniformly from `±1/√fan_in` and
    /// biases from the same range.
    pub fn new<R: Rng + ?Sized>(input_width: usize, specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(input_width, specs)?;
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.fan_in() as f64).sqrt();
            for w in layer.weight.values.iter_mut().chain(layer.bias.iter_mut()) {
                *w = T::of(rng.random_range(-bound..=bound));
            }
        }
        Ok(net)
    }

    pub fn zeros(input_width: usize, specs: &[LayerSpec]) -> Result<Self> {
        if input_width == 0 {
            return Err(Error::Config("input width must be positive".into()));
        }
        if specs.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        let mut fan_in = input_width;
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            spec.validate()?;
            layers.push(Dense {
                spec: *spec,
                weight: Matrix::zeros(spec.width, fan_in),
                bias: vec![T::zero(); spec.width],
            });
            fan_in = spec.width;
        }
        Ok(Self {
            input_width,
            layers,
        })
    }

    /// Builds a network from explicit layers, checking that shapes compose.
    pub fn from_layers(input_width: usize, layers: Vec<Dense<T>>) -> Result<Self> {
        let net = Self {
            input_width,
            layers,
        };
        net.validate()?;
        Ok(net)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        let mut fan_in = self.input_width;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.spec.validate()?;
            if layer.weight.cols != fan_in {
                return Err(Error::dim("layer fan-in", fan_in, layer.weight.cols));
            }
            if layer.weight.rows != layer.spec.width || layer.bias.len() != layer.spec.width {
                return Err(Error::dim("layer width", layer.spec.width, layer.bias.len()));
            }
            if layer.weight.values.len() != layer.weight.rows * layer.weight.cols {
                return Err(Error::dim(
                    "weight values",
                    layer.weight.rows * layer.weight.cols,
                    layer.weight.values.len(),
                ));
            }
            check_finite(&layer.weight.values, l)?;
            check_finite(&layer.bias, l)?;
            fan_in = layer.spec.width;
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map(|l| l.width()).unwrap_or(0)
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.values.len() + l.bias.len())
            .sum()
    }

    /// Every parameter in layer order (weights then bias per layer).
    pub fn params(&self) -> impl Iterator<Item = T> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weight.values.iter().chain(l.bias.iter()).copied())
    }

    /// Order-sensitive FNV-1a hash over the parameter bit patterns.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for p in self.params() {
            let bits = p.to_f64().unwrap_or(f64::NAN).to_bits();
            for byte in bits.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    /// Evaluation-mode forward pass for a single input vector.
    pub fn forward(&self, input: &[T]) -> Result<Vec<T>> {
        Ok(self.forward_batch(input, 1, Mode::<rand::rngs::ThreadRng>::Eval)?.inputs.pop().unwrap())
    }

    /// Training-mode forward pass; dropout masks are drawn from `rng`.
    pub fn forward_train<R: Rng + ?Sized>(&self, input: &[T], rng: &mut R) -> Result<Vec<T>> {
        Ok(self.forward_batch(input, 1, Mode::Train(rng))?.inputs.pop().unwrap())
    }

    /// Batched forward pass over `batch` row-major inputs.
    pub fn forward_batch<R: Rng + ?Sized>(
        &self,
        input: &[T],
        batch: usize,
        mut mode: Mode<'_, R>,
    ) -> Result<Trace<T>> {
        if batch == 0 {
            return Err(Error::dim("batch size", 1, 0));
        }
        if input.len() != batch * self.input_width {
            return Err(Error::dim("network input", batch * self.input_width, input.len()));
        }
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(self.layers.len());
        inputs.push(input.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let x = inputs.last().unwrap();
            let fan_in = layer.fan_in();
            let width = layer.width();
            let mut y = Vec::with_capacity(batch * width);
            for _ in 0..batch {
                y.extend_from_slice(&layer.bias);
            }
            // Y (batch×width) += X (batch×fan_in) · Wᵀ (fan_in×width)
            T::gemm(
                batch,
                fan_in,
                width,
                T::one(),
                x,
                fan_in,
                1,
                &layer.weight.values,
                1,
                fan_in,
                T::one(),
                &mut y,
                width,
                1,
            );
            let act = layer.spec.activation;
            for v in y.iter_mut() {
                *v = act.apply(*v);
            }
            check_finite(&y, l)?;
            let mask = match &mut mode {
                Mode::Train(rng) if layer.spec.dropout > 0.0 => {
                    let p = layer.spec.dropout;
                    let keep = T::of(1.0 / (1.0 - p));
                    let mask: Vec<T> = (0..y.len())
                        .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep })
                        .collect();
                    Some(mask)
                }
                _ => None,
            };
            let out = match &mask {
                Some(m) => y.iter().zip(m).map(|(&a, &k)| a * k).collect(),
                None => y.clone(),
            };
            activations.push(y);
            masks.push(mask);
            inputs.push(out);
        }
        Ok(Trace {
            batch,
            inputs,
            activations,
            masks,
        })
    }

    /// Backpropagates `grad_output` (`batch × output_width`, the derivative
    /// of the loss with respect to the network output) through a trace.
    ///
    /// Returns parameter gradients and the gradient with respect to the input.
    pub fn backward(&self, trace: &Trace<T>, grad_output: &[T]) -> Result<(Gradients<T>, Vec<T>)> {
        let batch = trace.batch;
        if trace.inputs.len() != self.layers.len() + 1 {
            return Err(Error::dim("trace depth", self.layers.len() + 1, trace.inputs.len()));
        }
        if grad_output.len() != batch * self.output_width() {
            return Err(Error::dim("output gradient", batch * self.output_width(), grad_output.len()));
        }
        let n = self.layers.len();
        let mut weights = vec![Vec::new(); n];
        let mut biases = vec![Vec::new(); n];
        let mut grad = grad_output.to_vec();
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let fan_in = layer.fan_in();
            let width = layer.width();
            if let Some(mask) = &trace.masks[l] {
                for (g, &m) in grad.iter_mut().zip(mask) {
                    *g *= m;
                }
            }
            let act = layer.spec.activation;
            for (g, &y) in grad.iter_mut().zip(&trace.activations[l]) {
                *g *= act.derivative_from_output(y);
            }
            check_finite(&grad, l)?;
            // dW (width×fan_in) = Gᵀ (width×batch) · X (batch×fan_in)
            let mut dw = vec![T::zero(); width * fan_in];
            T::gemm(
                width,
                batch,
                fan_in,
                T::one(),
                &grad,
                1,
                width,
                &trace.inputs[l],
                fan_in,
                1,
                T::zero(),
                &mut dw,
                fan_in,
                1,
            );
            let mut db = vec![T::zero(); width];
            for row in grad.chunks_exact(width) {
                for (b, &g) in db.iter_mut().zip(row) {
                    *b += g;
                }
            }
            // dX (batch×fan_in) = G (batch×width) · W (width×fan_in)
            let mut dx = vec![T::zero(); batch * fan_in];
            T::gemm(
                batch,
                width,
                fan_in,
                T::one(),
                &grad,
                width,
                1,
                &layer.weight.values,
                fan_in,
                1,
                T::zero(),
                &mut dx,
                fan_in,
                1,
            );
            weights[l] = dw;
            biases[l] = db;
            grad = dx;
        }
        Ok((Gradients { weights, biases }, grad))
    }

    /// Loss value and parameter gradients for a batch of inputs and targets.
    ///
    /// The pass is run in evaluation mode so the result is a pure function
    /// of the parameters, which is what gradient checks need.
    pub fn loss_gradients(&self, input: &[T], target: &[T], batch: usize, loss: Loss) -> Result<(T, Gradients<T>)> {
        let trace = self.forward_batch(input, batch, Mode::<rand::rngs::ThreadRng>::Eval)?;
        self.loss_from_trace(&trace, target, loss)
    }

    /// Training-mode variant of [`Network::loss_gradients`] (dropout active).
    pub fn loss_gradients_train<R: Rng + ?Sized>(
        &self,
        input: &[T],
        target: &[T],
        batch: usize,
        loss: Loss,
        rng: &mut R,
    ) -> Result<(T, Gradients<T>)> {
        let trace = self.forward_batch(input, batch, Mode::Train(rng))?;
        self.loss_from_trace(&trace, target, loss)
    }

    fn loss_from_trace(&self, trace: &Trace<T>, target: &[T], loss: Loss) -> Result<(T, Gradients<T>)> {
        let out = trace.output();
        if target.len() != out.len() {
            return Err(Error::dim("loss target", out.len(), target.len()));
        }
        let (value, grad) = loss_and_grad(out, target, trace.batch, loss);
        if !value.is_finite() {
            return Err(Error::Numeric {
                layer: self.layers.len(),
            });
        }
        let (grads, _) = self.backward(trace, &grad)?;
        Ok((value, grads))
    }

    /// `self ← τ·source + (1−τ)·self`, parameter by parameter.
    pub fn soft_update(&mut self, source: &Network<T>, tau: T) -> Result<()> {
        self.check_same_shape(source)?;
        let keep = T::one() - tau;
        for (dst, src) in self.layers.iter_mut().zip(&source.layers) {
            for (d, &s) in dst
                .weight
                .values
                .iter_mut()
                .zip(&src.weight.values)
                .chain(dst.bias.iter_mut().zip(&src.bias))
            {
                *d = tau * s + keep * *d;
            }
        }
        Ok(())
    }

    pub(crate) fn check_same_shape(&self, other: &Network<T>) -> Result<()> {
        if self.input_width != other.input_width {
            return Err(Error::dim("network input width", self.input_width, other.input_width));
        }
        if self.layers.len() != other.layers.len() {
            return Err(Error::dim("network depth", self.layers.len(), other.layers.len()));
        }
        for (a, b) in self.layers.iter().zip(&other.layers) {
            if a.weight.rows != b.weight.rows || a.weight.cols != b.weight.cols {
                return Err(Error::dim("layer shape", a.weight.values.len(), b.weight.values.len()));
            }
        }
        Ok(())
    }

    /// Largest absolute parameter difference.
    pub fn max_abs_diff(&self, other: &Network<T>) -> Result<T> {
        self.check_same_shape(other)?;
        Ok(self
            .params()
            .zip(other.params())
            .fold(T::zero(), |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Forward-pass mode. Dropout is only sampled in `Train`.
pub enum Mode<'a, R: ?Sized> {
    Eval,
    Train(&'a mut R),
}

/// Loss value and its gradient with respect to the raw network output.
pub fn loss_and_grad<T: Scalar>(output: &[T], target: &[T], batch: usize, loss: Loss) -> (T, Vec<T>) {
    let inv_b = T::one() / T::of(batch as f64);
    match loss {
        Loss::Mse => {
            let mut value = T::zero();
            let grad = output
                .iter()
                .zip(target)
                .map(|(&y, &t)| {
                    let d = y - t;
                    value += d * d;
                    T::of(2.0) * d * inv_b
                })
                .collect();
            (value * inv_b, grad)
        }
        Loss::CrossEntropy => {
            let eps = T::of(CROSS_ENTROPY_EPS);
            let mut value = T::zero();
            let grad = output
                .iter()
                .zip(target)
                .map(|(&z, &t)| {
                    let t = t.max(eps).min(T::one() - eps);
                    // ln σ(z) = −softplus(−z), ln(1−σ(z)) = −softplus(z)
                    value += t * softplus(-z) + (T::one() - t) * softplus(z);
                    (logistic(z) - t) * inv_b
                })
                .collect();
            (value * inv_b, grad)
        }
    }
}

pub fn logistic<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

fn softplus<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(net: &Network<T>) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![T::zero(); l.weight.values.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![T::zero(); l.bias.len()]).collect(),
        }
    }

    pub fn scale(&mut self, factor: T) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            for g in v.iter_mut() {
                *g *= factor;
            }
        }
    }

    /// Flattened in the same order as [`Network::params`].
    pub fn flat(&self) -> Vec<T> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .all(|v| v.iter().all(|g| g.is_finite()))
    }

    pub(crate) fn check_matches(&self, net: &Network<T>) -> Result<()> {
        if self.weights.len() != net.layers.len() || self.biases.len() != net.layers.len() {
            return Err(Error::dim("gradient depth", net.layers.len(), self.weights.len()));
        }
        for (l, layer) in net.layers.iter().enumerate() {
            if self.weights[l].len() != layer.weight.values.len() {
                return Err(Error::dim("weight gradient", layer.weight.values.len(), self.weights[l].len()));
            }
            if self.biases[l].len() != layer.bias.len() {
                return Err(Error::dim("bias gradient", layer.bias.len(), self.biases[l].len()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table1_specs() -> Vec<LayerSpec> {
        vec![
            LayerSpec::relu(32).with_dropout(0.35),
            LayerSpec::relu(16).with_dropout(0.35),
            LayerSpec::tanh(8).with_dropout(0.35),
            LayerSpec::linear(1),
        ]
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut net = Network::<f64>::zeros(3, &[LayerSpec::linear(2)]).unwrap();
        net.layers_mut()[0].bias = vec![0.5, -1.5];
        assert_eq!(net.forward(&[7.0, -2.0, 3.0]).unwrap(), vec![0.5, -1.5]);
    }

    #[test]
    fn tanh_at_zero_preactivation_is_zero() {
        let net = Network::<f64>::zeros(2, &[LayerSpec::tanh(3)]).unwrap();
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn table1_network_yields_finite_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Network::<f64>::new(10, &table1_specs(), &mut rng).unwrap();
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = net.forward(&x).unwrap();
        assert_eq!(y.len(), 1);
        assert!(y[0].is_finite());
        let y_train = net.forward_train(&x, &mut rng).unwrap();
        assert_eq!(y_train.len(), 1);
    }

    #[test]
    fn input_width_mismatch_is_dimension_error() {
        let net = Network::<f64>::zeros(3, &[LayerSpec::linear(1)]).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn dropout_rate_one_rejected() {
        let r = Network::<f64>::zeros(3, &[LayerSpec::relu(2).with_dropout(1.0)]);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn non_finite_activation_reports_layer() {
        let mut net = Network::<f64>::zeros(1, &[LayerSpec::linear(1), LayerSpec::linear(1)]).unwrap();
        net.layers_mut()[0].weight.values_mut()[0] = 1e300;
        net.layers_mut()[1].weight.values_mut()[0] = 1e300;
        match net.forward(&[1.0]) {
            Err(Error::Numeric { layer }) => assert_eq!(layer, 1),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn single_weight_mse_closed_form() {
        let mut net = Network::<f64>::zeros(1, &[LayerSpec::linear(1)]).unwrap();
        let (w, x, y) = (0.7, 2.0, -0.4);
        net.layers_mut()[0].weight.values_mut()[0] = w;
        let (loss, g) = net.loss_gradients(&[x], &[y], 1, Loss::Mse).unwrap();
        assert!((loss - (w * x - y).powi(2)).abs() < 1e-15);
        assert!((g.weights[0][0] - 2.0 * (w * x - y) * x).abs() < 1e-15);
        assert!((g.biases[0][0] - 2.0 * (w * x - y)).abs() < 1e-15);
    }

    #[test]
    fn exact_target_gives_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::<f64>::new(4, &[LayerSpec::tanh(5), LayerSpec::linear(2)], &mut rng).unwrap();
        let x = [0.1, -0.2, 0.3, 0.9];
        let y = net.forward(&x).unwrap();
        let (loss, g) = net.loss_gradients(&x, &y, 1, Loss::Mse).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eval_forward_is_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Network::<f64>::new(10, &table1_specs(), &mut rng).unwrap();
        let x = [0.3; 10];
        assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
    }

    #[test]
    fn dropout_is_seed_deterministic_and_inverted() {
        let mut net = Network::<f64>::zeros(1, &[LayerSpec::linear(2000).with_dropout(0.5)]).unwrap();
        for b in net.layers_mut()[0].bias.iter_mut() {
            *b = 1.0;
        }
        let a = net.forward_train(&[0.0], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = net.forward_train(&[0.0], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&v| v == 0.0 || v == 2.0));
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        assert!((mean - 1.0).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn soft_update_endpoints_and_midpoint() {
        let mut src = Network::<f64>::zeros(1, &[LayerSpec::linear(1)]).unwrap();
        src.layers_mut()[0].weight.values_mut()[0] = 4.0;
        let mut tgt = src.clone();
        tgt.layers_mut()[0].weight.values_mut()[0] = 2.0;

        let mut half = tgt.clone();
        half.soft_update(&src, 0.5).unwrap();
        assert_eq!(half.layers()[0].weight.get(0, 0), 3.0);

        let mut same = tgt.clone();
        same.soft_update(&src, 0.0).unwrap();
        assert_eq!(same, tgt);

        let mut copy = tgt.clone();
        copy.soft_update(&src, 1.0).unwrap();
        assert_eq!(copy, src);
    }

    #[test]
    fn soft_update_shape_mismatch() {
        let a = Network::<f64>::zeros(1, &[LayerSpec::linear(2)]).unwrap();
        let mut b = Network::<f64>::zeros(1, &[LayerSpec::linear(3)]).unwrap();
        assert!(matches!(b.soft_update(&a, 0.5), Err(Error::Dimension { .. })));
    }

    #[test]
    fn cross_entropy_gradient_is_residual() {
        let (loss, grad) = loss_and_grad(&[0.0f64], &[1.0], 1, Loss::CrossEntropy);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-6);
        assert!((grad[0] + 0.5).abs() < 2e-6);
    }

    #[test]
    fn works_in_single_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Network::<f32>::new(10, &table1_specs(), &mut rng).unwrap();
        let (loss, g) = net
            .loss_gradients(&[0.1f32; 10], &[0.5], 1, Loss::CrossEntropy)
            .unwrap();
        assert!(loss.is_finite() && g.is_finite());
    }
}
