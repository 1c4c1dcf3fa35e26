//! Analytic gradients against central finite differences.

use gim_morl::nn::{LayerSpec, Loss, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;
const ABS_TOL: f64 = 1e-7;

fn table1() -> Vec<LayerSpec> {
    vec![
        LayerSpec::relu(32).with_dropout(0.35),
        LayerSpec::relu(16).with_dropout(0.35),
        LayerSpec::tanh(8).with_dropout(0.35),
        LayerSpec::linear(1),
    ]
}

/// Central difference of the loss with respect to every parameter.
fn numeric_gradient(net: &Network<f64>, x: &[f64], t: &[f64], batch: usize, loss: Loss) -> Vec<f64> {
    let mut probe = net.clone();
    let mut out = Vec::new();
    for l in 0..net.layers().len() {
        let nw = net.layers()[l].weight.values().len();
        let nb = net.layers()[l].bias.len();
        for i in 0..nw + nb {
            let mut eval = |delta: f64| {
                let layer = &mut probe.layers_mut()[l];
                if i < nw {
                    layer.weight.values_mut()[i] += delta;
                } else {
                    layer.bias[i - nw] += delta;
                }
                let v = probe.loss_gradients(x, t, batch, loss).unwrap().0;
                let layer = &mut probe.layers_mut()[l];
                if i < nw {
                    layer.weight.values_mut()[i] -= delta;
                } else {
                    layer.bias[i - nw] -= delta;
                }
                v
            };
            let plus = eval(STEP);
            let minus = eval(-STEP);
            out.push((plus - minus) / (2.0 * STEP));
        }
    }
    out
}

fn assert_close(analytic: &[f64], numeric: &[f64]) {
    assert_eq!(analytic.len(), numeric.len());
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let tol = ABS_TOL.max(REL_TOL * a.abs().max(n.abs()));
        assert!((a - n).abs() <= tol, "param {i}: analytic {a} vs numeric {n}");
    }
}

#[test]
fn table1_network_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let net = Network::<f64>::new(10, &table1(), &mut rng).unwrap();
    let x: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
    for (loss, target) in [(Loss::Mse, 0.3), (Loss::CrossEntropy, 0.7)] {
        let (_, g) = net.loss_gradients(&x, &[target], 1, loss).unwrap();
        assert_close(&g.flat(), &numeric_gradient(&net, &x, &[target], 1, loss));
    }
}

#[test]
fn random_networks_and_batches_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..8 {
        let input = rng.random_range(1..=10);
        let depth = rng.random_range(1..=3);
        let mut specs: Vec<LayerSpec> = (0..depth)
            .map(|_| {
                let w = rng.random_range(1..=12);
                match rng.random_range(0..3) {
                    0 => LayerSpec::linear(w),
                    1 => LayerSpec::relu(w),
                    _ => LayerSpec::tanh(w),
                }
            })
            .collect();
        let out = rng.random_range(1..=3);
        specs.push(LayerSpec::linear(out));
        let net = Network::<f64>::new(input, &specs, &mut rng).unwrap();
        let batch = rng.random_range(1..=4);
        let x: Vec<f64> = (0..batch * input).map(|_| rng.random_range(-2.0..2.0)).collect();
        let t: Vec<f64> = (0..batch * out).map(|_| rng.random_range(0.0..1.0)).collect();
        for loss in [Loss::Mse, Loss::CrossEntropy] {
            let (_, g) = net.loss_gradients(&x, &t, batch, loss).unwrap();
            assert!(g.is_finite());
            assert_close(&g.flat(), &numeric_gradient(&net, &x, &t, batch, loss));
        }
    }
}

#[test]
fn input_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net = Network::<f64>::new(4, &[LayerSpec::tanh(6), LayerSpec::linear(1)], &mut rng).unwrap();
    let x = vec![0.2, -0.4, 0.9, 0.1];
    let trace = net
        .forward_batch(&x, 1, gim_morl::nn::Mode::<ChaCha8Rng>::Eval)
        .unwrap();
    let (_, dx) = net.backward(&trace, &[1.0]).unwrap();
    for i in 0..4 {
        let mut xp = x.clone();
        xp[i] += STEP;
        let mut xm = x.clone();
        xm[i] -= STEP;
        let n = (net.forward(&xp).unwrap()[0] - net.forward(&xm).unwrap()[0]) / (2.0 * STEP);
        assert!((dx[i] - n).abs() <= ABS_TOL.max(REL_TOL * n.abs()));
    }
}
