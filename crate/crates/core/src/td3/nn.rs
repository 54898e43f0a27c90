//! Dense feed-forward networks with hand-written backpropagation and Adam.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: &mut Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => x.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => x.mapv_inplace(f64::tanh),
        }
    }

    /// Multiplies `grad` in place by the derivative, given the activation output.
    fn backprop(self, grad: &mut Array2<f64>, output: &Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => Zip::from(grad).and(output).for_each(|g, &y| {
                if y <= 0.0 {
                    *g = 0.0;
                }
            }),
            Activation::Tanh => Zip::from(grad).and(output).for_each(|g, &y| *g *= 1.0 - y * y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `inputs × outputs`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

/// A multilayer perceptron operating on row-major batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Per-layer activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[k + 1]` the output of layer `k`.
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("cache holds at least the input")
    }
}

/// Gradients shaped like the network's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.bias.raw_dim())))
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }
}

impl Mlp {
    /// `sizes = [inputs, hidden…, outputs]`. Weights and biases are drawn
    /// from `U(−1/√fan_in, 1/√fan_in)`.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "a network needs input and output sizes");
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                Dense {
                    weights: Array2::from_shape_simple_fn((w[0], w[1]), || dist.sample(rng)),
                    bias: Array1::from_shape_simple_fn(w[1], || dist.sample(rng)),
                    activation: if k + 1 == n { output } else { hidden },
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.ncols())
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.weights.ncols()))
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, input: ArrayView2<f64>) -> Array2<f64> {
        let mut x = input.to_owned();
        for layer in &self.layers {
            x = x.dot(&layer.weights) + &layer.bias;
            layer.activation.apply(&mut x);
        }
        x
    }

    pub fn forward_cached(&self, input: ArrayView2<f64>) -> ForwardCache {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_owned());
        for layer in &self.layers {
            let prev = activations.last().expect("non-empty");
            let mut x = prev.dot(&layer.weights) + &layer.bias;
            layer.activation.apply(&mut x);
            activations.push(x);
        }
        ForwardCache { activations }
    }

    /// Backpropagates `d loss / d output` through the cached pass. Returns
    /// the parameter gradients and `d loss / d input`.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &Array2<f64>) -> (Gradients, Array2<f64>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = grad_output.clone();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            layer.activation.backprop(&mut delta, &cache.activations[k + 1]);
            let input = &cache.activations[k];
            let dw = input.t().dot(&delta);
            let db = delta.sum_axis(Axis(0));
            grads.push((dw, db));
            delta = delta.dot(&layer.weights.t());
        }
        grads.reverse();
        (Gradients { layers: grads }, delta)
    }

    /// `self ← τ · online + (1 − τ) · self`.
    pub fn soft_update_from(&mut self, online: &Mlp, tau: f64) {
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            Zip::from(&mut t.weights)
                .and(&o.weights)
                .for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
            Zip::from(&mut t.bias)
                .and(&o.bias)
                .for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
        }
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }

    /// Mutable access to parameter `index` in [`params`](Self::params) order.
    pub fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            if index < l.weights.len() {
                let cols = l.weights.ncols();
                return &mut l.weights[[index / cols, index % cols]];
            }
            index -= l.weights.len();
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let step = self.lr / c1;
        let (eps, sc2) = (self.eps, c2.sqrt());
        for ((layer, (gw, gb)), ((mw, mb), (vw, vb))) in net
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.m.layers.iter_mut().zip(self.v.layers.iter_mut()))
        {
            let update = |p: &mut f64, &g: &f64, m: &mut f64, v: &mut f64| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= step * *m / (v.sqrt() / sc2 + eps);
            };
            Zip::from(&mut layer.weights).and(gw).and(mw).and(vw).for_each(update);
            Zip::from(&mut layer.bias).and(gb).and(mb).and(vb).for_each(update);
        }
    }
}

/// Inputs and targets of a mean-squared-error loss used to check gradients.
#[derive(Debug, Clone)]
pub struct LossSpec {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
}

impl LossSpec {
    /// `mean over the batch of Σ_j (y_j − t_j)²`.
    pub fn loss(&self, net: &Mlp) -> f64 {
        let out = net.forward(self.inputs.view());
        (&out - &self.targets).mapv(|e| e * e).sum() / self.inputs.nrows() as f64
    }

    pub fn gradients(&self, net: &Mlp) -> Gradients {
        let cache = net.forward_cached(self.inputs.view());
        let scale = 2.0 / self.inputs.nrows() as f64;
        let grad_out = (cache.output() - &self.targets) * scale;
        net.backward(&cache, &grad_out).0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub passed: bool,
}

/// Compares analytic gradients with central finite differences (step `1e−5`)
/// on `samples` randomly chosen parameters. Relative error is
/// `|a − n| / max(|a|, |n|, 1e−7)`.
pub fn grad_check<R: Rng + ?Sized>(
    net: &Mlp,
    loss: &LossSpec,
    samples: usize,
    tolerance: f64,
    rng: &mut R,
) -> GradCheckReport {
    const STEP: f64 = 1e-5;
    let analytic: Vec<f64> = loss.gradients(net).iter().collect();
    let n = analytic.len();
    let mut probe = net.clone();
    let mut worst = (0.0f64, 0usize);
    let count = samples.min(n);
    let indices: Vec<usize> = if count == n {
        (0..n).collect()
    } else {
        rand::seq::index::sample(rng, n, count).into_vec()
    };
    for &i in &indices {
        let original = *probe.param_mut(i);
        *probe.param_mut(i) = original + STEP;
        let up = loss.loss(&probe);
        *probe.param_mut(i) = original - STEP;
        let down = loss.loss(&probe);
        *probe.param_mut(i) = original;
        let numeric = (up - down) / (2.0 * STEP);
        let a = analytic[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-7);
        if err > worst.0 {
            worst = (err, i);
        }
    }
    GradCheckReport {
        checked: indices.len(),
        max_rel_error: worst.0,
        worst_index: worst.1,
        passed: worst.0 <= tolerance,
    }
}

/// Splits the trailing `cols` columns off a batch.
pub(crate) fn tail_columns(x: &Array2<f64>, cols: usize) -> Array2<f64> {
    let start = x.ncols() - cols;
    x.slice(s![.., start..]).to_owned()
}
