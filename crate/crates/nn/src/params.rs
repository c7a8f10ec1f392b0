use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eqsub_core::Real;

use crate::error::NnError;
use crate::model::Model;

/// Weights and biases of one layer; both empty for parameter-free layers.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> LayerParams<T> {
    pub fn len(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> T {
        if i < self.weight.len() {
            self.weight[i]
        } else {
            self.bias[i - self.weight.len()]
        }
    }

    pub fn get_mut(&mut self, i: usize) -> &mut T {
        let w = self.weight.len();
        if i < w {
            &mut self.weight[i]
        } else {
            &mut self.bias[i - w]
        }
    }
}

/// Parameters of a whole model, one entry per layer. Gradients share the type.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<T = f64> {
    pub layers: Vec<LayerParams<T>>,
}

pub type Grads<T = f64> = Params<T>;

impl<T: Real> Params<T> {
    /// Zero-filled parameters shaped for `model`.
    pub fn zeros(model: &Model) -> Self {
        Self {
            layers: model
                .resolved()
                .iter()
                .map(|l| LayerParams {
                    weight: vec![T::zero(); l.weight_len()],
                    bias: vec![T::zero(); l.bias_len()],
                })
                .collect(),
        }
    }

    /// Uniform Glorot initialization `±√(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(model: &Model, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(model);
        for (layer, lp) in model.resolved().iter().zip(&mut p.layers) {
            let (fan_in, fan_out) = layer.fans();
            if fan_in + fan_out == 0 {
                continue;
            }
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut lp.weight {
                *w = T::of(rng.gen_range(-limit..limit));
            }
        }
        p
    }

    pub fn count(&self) -> usize {
        self.layers.iter().map(|l| l.len()).sum()
    }

    pub fn cast<U: Real>(&self) -> Params<U> {
        Params {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    weight: l.weight.iter().map(|v| U::of(v.as_f64())).collect(),
                    bias: l.bias.iter().map(|v| U::of(v.as_f64())).collect(),
                })
                .collect(),
        }
    }

    pub fn check(&self, model: &Model) -> Result<(), NnError> {
        let layers = model.resolved();
        if layers.len() != self.layers.len() {
            return Err(NnError::Params(format!(
                "{} parameter blocks for {} layers",
                self.layers.len(),
                layers.len()
            )));
        }
        for (i, (l, p)) in layers.iter().zip(&self.layers).enumerate() {
            if p.weight.len() != l.weight_len() || p.bias.len() != l.bias_len() {
                return Err(NnError::Params(format!(
                    "layer {i}: expected {}+{} values, got {}+{}",
                    l.weight_len(),
                    l.bias_len(),
                    p.weight.len(),
                    p.bias.len()
                )));
            }
        }
        Ok(())
    }

    /// `self += other`, element by element in a fixed order.
    pub fn accumulate(&mut self, other: &Params<T>) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weight.iter_mut().zip(&b.weight) {
                *x = *x + *y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x = *x + *y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for l in &mut self.layers {
            for x in l.weight.iter_mut().chain(l.bias.iter_mut()) {
                *x = *x * s;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam<T = f64> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Params<T>,
    v: Params<T>,
}

impl<T: Real> Adam<T> {
    pub fn new(model: &Model, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Params::zeros(model),
            v: Params::zeros(model),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, params: &mut Params<T>, grads: &Grads<T>) {
        self.step += 1;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let one = T::one();
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        let step_size = T::of(self.lr * c2.sqrt() / c1);
        let eps = T::of(self.eps * c2.sqrt());
        for ((p, g), (m, v)) in params
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.m.layers.iter_mut().zip(self.v.layers.iter_mut()))
        {
            let pairs = p
                .weight
                .iter_mut()
                .zip(&g.weight)
                .zip(m.weight.iter_mut().zip(v.weight.iter_mut()))
                .chain(p.bias.iter_mut().zip(&g.bias).zip(m.bias.iter_mut().zip(v.bias.iter_mut())));
            for ((x, &gx), (mx, vx)) in pairs {
                *mx = b1 * *mx + (one - b1) * gx;
                *vx = b2 * *vx + (one - b2) * gx * gx;
                *x = *x - step_size * *mx / (vx.sqrt() + eps);
            }
        }
    }
}
