//! Minimal dense MLP with hand-written reverse-mode gradients.
//!
//! Hidden layers use the rectifier, the output layer is linear. The same
//! `Mlp` struct doubles as the gradient container so optimizer state and
//! gradients mirror the parameter layout exactly.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    /// `out x in` weight matrix.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Per-layer inputs and pre-activations saved by the cached forward pass.
pub struct ForwardCache {
    /// Input of each layer (so `inputs[0]` is the network input).
    pub inputs: Vec<Array1<f64>>,
    pub preacts: Vec<Array1<f64>>,
    pub output: Array1<f64>,
}

impl Mlp {
    /// Uniform fan-in initialization (+-1/sqrt(fan_in)) for the layer
    /// sizes in `dims`, e.g. `[in, hidden, out]`. A two-entry `dims`
    /// yields a single linear layer.
    pub fn init<R: Rng>(dims: &[usize], rng: &mut R) -> Mlp {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for pair in dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let mut w = Array2::<f64>::zeros((fan_out, fan_in));
            for v in w.iter_mut() {
                *v = rng.gen_range(-bound..bound);
            }
            let mut b = Array1::<f64>::zeros(fan_out);
            for v in b.iter_mut() {
                *v = rng.gen_range(-bound..bound);
            }
            layers.push(Layer { w, b });
        }
        Mlp { layers }
    }

    pub fn zeros_like(&self) -> Mlp {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    w: Array2::zeros(l.w.dim()),
                    b: Array1::zeros(l.b.len()),
                })
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.nrows()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn forward(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let last = self.layers.len() - 1;
        let mut a = x.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.w.dot(&a) + &layer.b;
            if l != last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            a = z;
        }
        a
    }

    pub fn forward_cache(&self, x: ArrayView1<f64>) -> ForwardCache {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut preacts = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            inputs.push(a.clone());
            let z = layer.w.dot(&a) + &layer.b;
            preacts.push(z.clone());
            a = if l != last { z.mapv(|v| v.max(0.0)) } else { z };
        }
        ForwardCache { inputs, preacts, output: a }
    }

    /// Accumulates the gradients of a scalar loss into `grads`, given the
    /// loss gradient with respect to the network output.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        d_output: ArrayView1<f64>,
        grads: &mut Mlp,
    ) {
        let last = self.layers.len() - 1;
        let mut dz = d_output.to_owned();
        for l in (0..self.layers.len()).rev() {
            if l != last {
                // rectifier gate on the stored pre-activation
                for (d, &z) in dz.iter_mut().zip(cache.preacts[l].iter()) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &cache.inputs[l];
            let g = &mut grads.layers[l];
            for (o, &d) in dz.iter().enumerate() {
                g.b[o] += d;
                for (i, &x) in input.iter().enumerate() {
                    g.w[(o, i)] += d * x;
                }
            }
            if l > 0 {
                dz = self.layers[l].w.t().dot(&dz);
            }
        }
    }

    /// Applies `p -= lr * g` across every parameter.
    pub fn sgd_step(&mut self, grads: &Mlp, lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            layer.w.zip_mut_with(&g.w, |p, &d| *p -= lr * d);
            layer.b.zip_mut_with(&g.b, |p, &d| *p -= lr * d);
        }
    }
}

/// Adam state for one network, shaped like the network itself.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Mlp,
    v: Mlp,
    t: u64,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    pub fn new(net: &Mlp) -> AdamState {
        AdamState { m: net.zeros_like(), v: net.zeros_like(), t: 0 }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Mlp, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        for l in 0..net.layers.len() {
            let (pw, pb) = {
                let layer = &mut net.layers[l];
                (&mut layer.w, &mut layer.b)
            };
            let gl = &grads.layers[l];
            let ml = &mut self.m.layers[l];
            let vl = &mut self.v.layers[l];
            for (((p, &g), m), v) in pw
                .iter_mut()
                .zip(gl.w.iter())
                .zip(ml.w.iter_mut())
                .zip(vl.w.iter_mut())
            {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
            }
            for (((p, &g), m), v) in pb
                .iter_mut()
                .zip(gl.b.iter())
                .zip(ml.b.iter_mut())
                .zip(vl.b.iter_mut())
            {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_layer_forward() {
        let net = Mlp {
            layers: vec![Layer { w: array![[2.0, -1.0]], b: array![0.5] }],
        };
        let out = net.forward(array![3.0, 1.0].view());
        assert_abs_diff_eq!(out[0], 5.5, epsilon = 1e-15);
    }

    #[test]
    fn relu_gates_hidden_layer() {
        let net = Mlp {
            layers: vec![
                Layer { w: array![[1.0], [-1.0]], b: array![0.0, 0.0] },
                Layer { w: array![[1.0, 1.0]], b: array![0.0] },
            ],
        };
        // x=2: hidden (2, 0) -> 2; x=-2: hidden (0, 2) -> 2
        assert_abs_diff_eq!(net.forward(array![2.0].view())[0], 2.0);
        assert_abs_diff_eq!(net.forward(array![-2.0].view())[0], 2.0);
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::init(&[16, 8, 1], &mut rng);
        let bound = 1.0 / 4.0;
        for v in net.layers[0].w.iter() {
            assert!(v.abs() <= bound);
        }
        assert_eq!(net.input_dim(), 16);
        assert_eq!(net.output_dim(), 1);
    }

    #[test]
    fn backward_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut net = Mlp::init(&[3, 5, 1], &mut rng);
        let x = array![0.3, -1.2, 0.7];
        // scalar loss: squared output
        let loss = |n: &Mlp| {
            let o = n.forward(x.view())[0];
            o * o
        };
        let cache = net.forward_cache(x.view());
        let mut grads = net.zeros_like();
        let d_out = array![2.0 * cache.output[0]];
        net.backward_accumulate(&cache, d_out.view(), &mut grads);

        let h = 1e-6;
        for l in 0..net.layers.len() {
            for idx in [(0, 0), (0, net.layers[l].w.ncols() - 1)] {
                let orig = net.layers[l].w[idx];
                net.layers[l].w[idx] = orig + h;
                let up = loss(&net);
                net.layers[l].w[idx] = orig - h;
                let dn = loss(&net);
                net.layers[l].w[idx] = orig;
                let num = (up - dn) / (2.0 * h);
                assert_abs_diff_eq!(grads.layers[l].w[idx], num, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn sgd_step_moves_against_gradient() {
        let mut net = Mlp {
            layers: vec![Layer { w: array![[1.0]], b: array![0.0] }],
        };
        let mut grads = net.zeros_like();
        grads.layers[0].w[(0, 0)] = 2.0;
        net.sgd_step(&grads, 0.1);
        assert_abs_diff_eq!(net.layers[0].w[(0, 0)], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn adam_first_step_is_signed_lr() {
        // with bias correction, the first Adam step is lr * g/|g| (up to eps)
        let mut net = Mlp {
            layers: vec![Layer { w: array![[0.0]], b: array![0.0] }],
        };
        let mut grads = net.zeros_like();
        grads.layers[0].w[(0, 0)] = 0.5;
        let mut state = AdamState::new(&net);
        state.step(&mut net, &grads, 0.01);
        assert_abs_diff_eq!(net.layers[0].w[(0, 0)], -0.01, epsilon = 1e-6);
    }
}
