//! Small fully-connected networks with hand-rolled backprop and Adam.
//!
//! Sized for the agent's 3x16 architectures; everything is dense `Vec<f64>`
//! and deterministic given the init seed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch: expected input {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Logistic,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Logistic => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative in terms of the pre-activation z and the output a.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Logistic => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// One dense layer; weights are row-major `[n_out x n_in]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub hidden: Activation,
    pub output: Activation,
}

/// Per-layer pre-activations and activations from a forward pass.
pub struct ForwardCache {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.act.last().expect("cache has at least one layer")
    }
}

/// Parameter-shaped gradient container.
#[derive(Debug, Clone)]
pub struct Grads {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Grads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
                .collect(),
        }
    }

    pub fn add(&mut self, other: &Grads) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in w.iter_mut().zip(ow) {
                *x += y;
            }
            for (x, y) in b.iter_mut().zip(ob) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, f: f64) {
        for (w, b) in self.layers.iter_mut() {
            for x in w.iter_mut() {
                *x *= f;
            }
            for x in b.iter_mut() {
                *x *= f;
            }
        }
    }
}

impl Mlp {
    /// Weights and biases uniform in ±1/sqrt(fan_in).
    pub fn new(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (n_in, n_out) = (pair[0], pair[1]);
                let bound = 1.0 / (n_in as f64).sqrt();
                let w = (0..n_in * n_out).map(|_| rng.gen_range(-bound..bound)).collect();
                let b = (0..n_out).map(|_| rng.gen_range(-bound..bound)).collect();
                Layer { n_in, n_out, w, b }
            })
            .collect();
        Self { layers, hidden, output }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map(|l| l.n_in).unwrap_or(0)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.n_out).unwrap_or(0)
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        let mut cache = self.forward_cached(input)?;
        Ok(cache.act.pop().expect("at least one layer"))
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache, NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let n_layers = self.layers.len();
        let mut pre = Vec::with_capacity(n_layers);
        let mut act = Vec::with_capacity(n_layers);
        let mut cur = input.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let activation = if li + 1 == n_layers { self.output } else { self.hidden };
            let mut z = vec![0.0; layer.n_out];
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                *zo = layer.b[o] + row.iter().zip(&cur).map(|(w, x)| w * x).sum::<f64>();
            }
            let a: Vec<f64> = z.iter().map(|&v| activation.apply(v)).collect();
            cur = a.clone();
            pre.push(z);
            act.push(a);
        }
        Ok(ForwardCache { input: input.to_vec(), pre, act })
    }

    /// Backpropagates `upstream` (dL/d output) through the cached pass and
    /// returns parameter gradients plus the gradient w.r.t. the input.
    pub fn backprop(&self, cache: &ForwardCache, upstream: &[f64]) -> (Grads, Vec<f64>) {
        let n_layers = self.layers.len();
        assert_eq!(upstream.len(), self.output_dim(), "upstream gradient shape");
        let mut grads = Grads::zeros_like(self);
        let mut delta: Vec<f64> = upstream.to_vec();
        for li in (0..n_layers).rev() {
            let layer = &self.layers[li];
            let activation = if li + 1 == n_layers { self.output } else { self.hidden };
            let z = &cache.pre[li];
            let a = &cache.act[li];
            for o in 0..layer.n_out {
                delta[o] *= activation.derivative(z[o], a[o]);
            }
            let prev: &[f64] = if li == 0 { &cache.input } else { &cache.act[li - 1] };
            let (gw, gb) = &mut grads.layers[li];
            for o in 0..layer.n_out {
                let d = delta[o];
                gb[o] = d;
                if d != 0.0 {
                    let row = &mut gw[o * layer.n_in..(o + 1) * layer.n_in];
                    for (g, x) in row.iter_mut().zip(prev) {
                        *g = d * x;
                    }
                }
            }
            let mut next_delta = vec![0.0; layer.n_in];
            for o in 0..layer.n_out {
                let d = delta[o];
                if d != 0.0 {
                    let row = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                    for (nd, w) in next_delta.iter_mut().zip(row) {
                        *nd += d * w;
                    }
                }
            }
            delta = next_delta;
        }
        (grads, delta)
    }

    pub fn same_architecture(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.n_in == b.n_in && a.n_out == b.n_out)
    }

    pub fn params_finite(&self) -> bool {
        self.layers.iter().all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    }
}

/// θ' ← τ·θ + (1−τ)·θ' elementwise.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<(), NnError> {
    if !target.same_architecture(online) {
        return Err(NnError::ArchitectureMismatch(format!(
            "target {:?} vs online {:?}",
            target.layers.iter().map(|l| (l.n_in, l.n_out)).collect::<Vec<_>>(),
            online.layers.iter().map(|l| (l.n_in, l.n_out)).collect::<Vec<_>>()
        )));
    }
    for (t, o) in target.layers.iter_mut().zip(&online.layers) {
        for (tv, ov) in t.w.iter_mut().zip(&o.w) {
            *tv = tau * ov + (1.0 - tau) * *tv;
        }
        for (tv, ov) in t.b.iter_mut().zip(&o.b) {
            *tv = tau * ov + (1.0 - tau) * *tv;
        }
    }
    Ok(())
}

/// Adam with the usual (0.9, 0.999, 1e-8) moment settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<(Vec<f64>, Vec<f64>)>,
    v: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        let zeros: Vec<(Vec<f64>, Vec<f64>)> =
            net.layers.iter().map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()])).collect();
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: zeros.clone(), v: zeros }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Grads) {
        if self.lr == 0.0 {
            return;
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (li, layer) in net.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads.layers[li];
            let (mw, mb) = &mut self.m[li];
            let (vw, vb) = &mut self.v[li];
            for i in 0..layer.w.len() {
                mw[i] = self.beta1 * mw[i] + (1.0 - self.beta1) * gw[i];
                vw[i] = self.beta2 * vw[i] + (1.0 - self.beta2) * gw[i] * gw[i];
                layer.w[i] -= self.lr * (mw[i] / bc1) / ((vw[i] / bc2).sqrt() + self.eps);
            }
            for i in 0..layer.b.len() {
                mb[i] = self.beta1 * mb[i] + (1.0 - self.beta1) * gb[i];
                vb[i] = self.beta2 * vb[i] + (1.0 - self.beta2) * gb[i] * gb[i];
                layer.b[i] -= self.lr * (mb[i] / bc1) / ((vb[i] / bc2).sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_parameters_logistic_outputs_half() {
        let mut net = Mlp::new(&[4, 3, 2], Activation::Relu, Activation::Logistic, &mut rng(1));
        for layer in net.layers.iter_mut() {
            layer.w.iter_mut().for_each(|w| *w = 0.0);
            layer.b.iter_mut().for_each(|b| *b = 0.0);
        }
        let out = net.forward(&[0.3, -1.0, 2.0, 0.0]).unwrap();
        assert_eq!(out, vec![0.5, 0.5]);
    }

    #[test]
    fn large_output_bias_saturates_logistic() {
        let mut net = Mlp::new(&[2, 2], Activation::Relu, Activation::Logistic, &mut rng(2));
        net.layers[0].w.iter_mut().for_each(|w| *w = 0.0);
        net.layers[0].b = vec![50.0, 50.0];
        let out = net.forward(&[1.0, -1.0]).unwrap();
        for v in out {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_net_matches_hand_computation() {
        let net = Mlp {
            layers: vec![Layer { n_in: 2, n_out: 1, w: vec![2.0, -3.0], b: vec![0.5] }],
            hidden: Activation::Identity,
            output: Activation::Identity,
        };
        let out = net.forward(&[4.0, 1.0]).unwrap();
        assert!((out[0] - (2.0 * 4.0 - 3.0 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn forward_rejects_wrong_input_length() {
        let net = Mlp::new(&[3, 2], Activation::Relu, Activation::Identity, &mut rng(3));
        assert!(matches!(
            net.forward(&[1.0, 2.0]),
            Err(NnError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn forward_is_deterministic() {
        let net = Mlp::new(&[5, 4, 2], Activation::Relu, Activation::Logistic, &mut rng(4));
        let x = [0.1, -0.4, 0.9, 0.0, 1.2];
        assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
    }

    #[test]
    fn single_linear_layer_gradient_closed_form() {
        // d/dw of (w·x + b) with upstream u is u * x; d/db is u; d/dx is u * w.
        let net = Mlp {
            layers: vec![Layer { n_in: 3, n_out: 1, w: vec![1.0, -2.0, 0.5], b: vec![0.0] }],
            hidden: Activation::Identity,
            output: Activation::Identity,
        };
        let x = [2.0, 3.0, -1.0];
        let cache = net.forward_cached(&x).unwrap();
        let (grads, dx) = net.backprop(&cache, &[2.5]);
        assert_eq!(grads.layers[0].0, vec![5.0, 7.5, -2.5]);
        assert_eq!(grads.layers[0].1, vec![2.5]);
        assert_eq!(dx, vec![2.5, -5.0, 1.25]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = Mlp::new(&[4, 6, 3], Activation::Relu, Activation::Logistic, &mut rng(5));
        let cache = net.forward_cached(&[0.2, -0.3, 0.7, 1.0]).unwrap();
        let (grads, dx) = net.backprop(&cache, &[0.0, 0.0, 0.0]);
        for (gw, gb) in grads.layers {
            assert!(gw.iter().all(|g| *g == 0.0));
            assert!(gb.iter().all(|g| *g == 0.0));
        }
        assert!(dx.iter().all(|g| *g == 0.0));
    }

    /// Central finite differences on a scalar projection of the network.
    fn finite_diff_check(net: &Mlp, x: &[f64], upstream: &[f64], h: f64, rel_tol: f64) {
        let loss = |n: &Mlp, input: &[f64]| -> f64 {
            let out = n.forward(input).unwrap();
            out.iter().zip(upstream).map(|(o, u)| o * u).sum()
        };
        let cache = net.forward_cached(x).unwrap();
        let (grads, dx) = net.backprop(&cache, upstream);
        let check = |analytic: f64, plus: f64, minus: f64, what: &str| {
            let numeric = (plus - minus) / (2.0 * h);
            let denom = analytic.abs().max(numeric.abs()).max(1.0);
            assert!(
                (analytic - numeric).abs() / denom <= rel_tol,
                "{what}: analytic {analytic}, numeric {numeric}"
            );
        };
        for li in 0..net.layers.len() {
            for i in 0..net.layers[li].w.len() {
                let mut plus = net.clone();
                plus.layers[li].w[i] += h;
                let mut minus = net.clone();
                minus.layers[li].w[i] -= h;
                check(grads.layers[li].0[i], loss(&plus, x), loss(&minus, x), "weight");
            }
            for i in 0..net.layers[li].b.len() {
                let mut plus = net.clone();
                plus.layers[li].b[i] += h;
                let mut minus = net.clone();
                minus.layers[li].b[i] -= h;
                check(grads.layers[li].1[i], loss(&plus, x), loss(&minus, x), "bias");
            }
        }
        for i in 0..x.len() {
            let mut xp = x.to_vec();
            xp[i] += h;
            let mut xm = x.to_vec();
            xm[i] -= h;
            check(dx[i], loss(net, &xp), loss(net, &xm), "input");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut r = rng(6);
        for case in 0..10 {
            let net = Mlp::new(
                &[3, 5, 4, 2],
                Activation::Relu,
                if case % 2 == 0 { Activation::Logistic } else { Activation::Identity },
                &mut r,
            );
            let x: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
            let upstream: Vec<f64> = (0..2).map(|_| r.gen_range(-1.0..1.0)).collect();
            finite_diff_check(&net, &x, &upstream, 1e-5, 1e-4);
        }
    }

    #[test]
    fn soft_update_endpoints_and_midpoint() {
        let online = Mlp::new(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut rng(7));
        let base = Mlp::new(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut rng(8));

        let mut t = base.clone();
        soft_update(&mut t, &online, 1.0).unwrap();
        assert_eq!(t.layers[0].w, online.layers[0].w);

        let mut t = base.clone();
        soft_update(&mut t, &online, 0.0).unwrap();
        assert_eq!(t.layers[0].w, base.layers[0].w);

        let mut t = base.clone();
        soft_update(&mut t, &online, 0.5).unwrap();
        for ((tv, ov), bv) in t.layers[1].w.iter().zip(&online.layers[1].w).zip(&base.layers[1].w) {
            assert!((tv - 0.5 * (ov + bv)).abs() < 1e-15);
        }
    }

    #[test]
    fn soft_update_rejects_shape_mismatch() {
        let a = Mlp::new(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut rng(9));
        let mut b = Mlp::new(&[3, 5, 2], Activation::Relu, Activation::Identity, &mut rng(10));
        assert!(matches!(soft_update(&mut b, &a, 0.5), Err(NnError::ArchitectureMismatch(_))));
    }

    #[test]
    fn adam_zero_lr_keeps_parameters() {
        let mut net = Mlp::new(&[2, 3, 1], Activation::Relu, Activation::Identity, &mut rng(11));
        let snapshot = net.clone();
        let mut opt = Adam::new(&net, 0.0);
        let cache = net.forward_cached(&[1.0, -1.0]).unwrap();
        let (grads, _) = net.backprop(&cache, &[1.0]);
        opt.step(&mut net, &grads);
        assert_eq!(net.layers[0].w, snapshot.layers[0].w);
    }

    #[test]
    fn adam_descends_a_quadratic() {
        // Minimize (w·x - 3)^2 for a single linear unit.
        let mut net = Mlp {
            layers: vec![Layer { n_in: 1, n_out: 1, w: vec![0.0], b: vec![0.0] }],
            hidden: Activation::Identity,
            output: Activation::Identity,
        };
        let mut opt = Adam::new(&net, 0.05);
        for _ in 0..500 {
            let cache = net.forward_cached(&[1.0]).unwrap();
            let err = cache.output()[0] - 3.0;
            let (grads, _) = net.backprop(&cache, &[2.0 * err]);
            opt.step(&mut net, &grads);
        }
        let out = net.forward(&[1.0]).unwrap()[0];
        assert!((out - 3.0).abs() < 1e-3, "converged to {out}");
    }
}
