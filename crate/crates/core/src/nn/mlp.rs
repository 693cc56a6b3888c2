use rand::Rng;

use super::{DenseMatrix, Parameters};

/// Elementwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Identity,
    Relu,
    /// `x` for `x > 0`, `c x` otherwise; `c > 0`.
    LeakyRelu(f64),
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(c) => {
                if x > 0.0 {
                    x
                } else {
                    c * x
                }
            }
        }
    }

    /// Derivative at `x`. The kink at 0 takes the left-hand slope.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(c) => {
                if x > 0.0 {
                    1.0
                } else {
                    c
                }
            }
        }
    }
}

/// Affine map `x W + b` with `W` stored as `d_in x d_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        Self {
            weight: DenseMatrix::zeros(d_in, d_out),
            bias: vec![0.0; d_out],
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (d_in + d_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(d_in: usize, d_out: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (d_in + d_out) as f64).sqrt();
        let data = (0..d_in * d_out).map(|_| rng.gen_range(-bound..=bound)).collect();
        Self {
            weight: DenseMatrix::from_vec(d_in, d_out, data),
            bias: vec![0.0; d_out],
        }
    }

    pub fn d_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn d_out(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut out = x.matmul(&self.weight);
        out.add_row_vector(&self.bias);
        out
    }
}

/// Multi-layer perceptron applied row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
    activation: Activation,
    final_activation: Activation,
}

/// Per-layer inputs and pre-activations retained by [`Mlp::forward`].
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<DenseMatrix>,
    pre_activations: Vec<DenseMatrix>,
}

/// Gradients of an [`Mlp`]: one zero-shaped mirror per layer plus the input gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub layers: Vec<Layer>,
    pub input: DenseMatrix,
}

impl Mlp {
    /// Randomly initialized MLP with layer widths `dims[0] -> dims[1] -> ...`.
    pub fn new<R: Rng + ?Sized>(
        dims: &[usize],
        activation: Activation,
        final_activation: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least one layer");
        let layers = dims.windows(2).map(|w| Layer::glorot(w[0], w[1], rng)).collect();
        Self::from_layers(layers, activation, final_activation)
    }

    pub fn from_layers(layers: Vec<Layer>, activation: Activation, final_activation: Activation) -> Self {
        assert!(!layers.is_empty(), "an MLP needs at least one layer");
        for w in layers.windows(2) {
            assert_eq!(w[0].d_out(), w[1].d_in(), "layer dimensions do not chain");
        }
        for act in [activation, final_activation] {
            if let Activation::LeakyRelu(c) = act {
                assert!(c > 0.0, "leaky ReLU slope must be positive");
            }
        }
        Self {
            layers,
            activation,
            final_activation,
        }
    }

    /// Single layer with identity weights, zero bias and identity activation.
    pub fn identity(dim: usize) -> Self {
        Self::from_layers(
            vec![Layer {
                weight: DenseMatrix::identity(dim),
                bias: vec![0.0; dim],
            }],
            Activation::Identity,
            Activation::Identity,
        )
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn d_in(&self) -> usize {
        self.layers[0].d_in()
    }

    pub fn d_out(&self) -> usize {
        self.layers.last().unwrap().d_out()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn final_activation(&self) -> Activation {
        self.final_activation
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.final_activation
        } else {
            self.activation
        }
    }

    /// Forward pass without retaining intermediates.
    pub fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(x.cols(), self.d_in(), "MLP input width mismatch");
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let act = self.activation_of(i);
            h = layer.forward(&h).map(|v| act.apply(v));
        }
        h
    }

    pub fn forward(&self, x: &DenseMatrix) -> (DenseMatrix, MlpCache) {
        assert_eq!(x.cols(), self.d_in(), "MLP input width mismatch");
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let pre = layer.forward(&h);
            let act = self.activation_of(i);
            let next = pre.map(|v| act.apply(v));
            inputs.push(h);
            pre_activations.push(pre);
            h = next;
        }
        (
            h,
            MlpCache {
                inputs,
                pre_activations,
            },
        )
    }

    /// Reverse-mode gradients given `upstream = dL/d(output)`.
    pub fn backward(&self, cache: &MlpCache, upstream: &DenseMatrix) -> MlpGradients {
        self.backward_with(cache, upstream, true)
    }

    /// Like [`Mlp::backward`]; with `input_gradient` off the returned `input`
    /// is an empty `0 x d_in` matrix and the last transposed product is skipped.
    pub fn backward_with(&self, cache: &MlpCache, upstream: &DenseMatrix, input_gradient: bool) -> MlpGradients {
        assert_eq!(cache.inputs.len(), self.layers.len(), "cache from a different MLP");
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        let mut delta = upstream.clone();
        for i in (0..self.layers.len()).rev() {
            let act = self.activation_of(i);
            let pre = &cache.pre_activations[i];
            assert_eq!(delta.shape(), pre.shape(), "upstream gradient shape mismatch");
            if act != Activation::Identity {
                for (d, &p) in delta.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                    *d *= act.derivative(p);
                }
            }
            let weight = cache.inputs[i].t_matmul(&delta);
            let bias = delta.column_sums();
            grads.push(Layer { weight, bias });
            delta = if i > 0 || input_gradient {
                delta.matmul_t(&self.layers[i].weight)
            } else {
                DenseMatrix::zeros(0, self.d_in())
            };
        }
        grads.reverse();
        MlpGradients {
            layers: grads,
            input: delta,
        }
    }

    /// Smallest `|pre-activation|` feeding a piecewise-linear activation; the
    /// network is differentiable within this distance of the cached point.
    pub fn kink_distance(&self, cache: &MlpCache) -> f64 {
        cache
            .pre_activations
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.activation_of(i) != Activation::Identity)
            .flat_map(|(_, pre)| pre.as_slice().iter().map(|p| p.abs()))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn zero_gradients(&self, rows: usize) -> MlpGradients {
        MlpGradients {
            layers: self.layers.iter().map(|l| Layer::zeros(l.d_in(), l.d_out())).collect(),
            input: DenseMatrix::zeros(rows, self.d_in()),
        }
    }
}

pub(crate) fn layer_tensors(layers: &[Layer]) -> Vec<&[f64]> {
    layers
        .iter()
        .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
        .collect()
}

pub(crate) fn layer_tensors_mut(layers: &mut [Layer]) -> Vec<&mut [f64]> {
    layers
        .iter_mut()
        .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
        .collect()
}

impl Parameters for Mlp {
    fn tensors(&self) -> Vec<&[f64]> {
        layer_tensors(&self.layers)
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        layer_tensors_mut(&mut self.layers)
    }
}

/// Only the parameter gradients are exposed; the input gradient is not a parameter.
impl Parameters for MlpGradients {
    fn tensors(&self) -> Vec<&[f64]> {
        layer_tensors(&self.layers)
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        layer_tensors_mut(&mut self.layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{central_difference, max_relative_error};
    use crate::nn::rng_from_seed;

    fn scalar_layer(w: f64, b: f64) -> Layer {
        Layer {
            weight: DenseMatrix::from_vec(1, 1, vec![w]),
            bias: vec![b],
        }
    }

    #[test]
    fn identity_mlp_is_identity() {
        let x = DenseMatrix::from_rows(&[[1.0, -2.0, 3.0], [0.5, 0.0, -1.0]]);
        assert_eq!(Mlp::identity(3).apply(&x), x);
    }

    #[test]
    fn relu_clamps_scalar_layer() {
        let mlp = Mlp::from_layers(vec![scalar_layer(2.0, 1.0)], Activation::Relu, Activation::Relu);
        assert_eq!(mlp.apply(&DenseMatrix::from_vec(1, 1, vec![-3.0])).as_slice(), &[0.0]);
        assert_eq!(mlp.apply(&DenseMatrix::from_vec(1, 1, vec![3.0])).as_slice(), &[7.0]);
    }

    #[test]
    fn scalar_chain_rule() {
        // y = relu(w x + b), x = 1, w = 2, b = 0
        let mlp = Mlp::from_layers(vec![scalar_layer(2.0, 0.0)], Activation::Relu, Activation::Relu);
        let x = DenseMatrix::from_vec(1, 1, vec![1.0]);
        let (_, cache) = mlp.forward(&x);
        let g = mlp.backward(&cache, &DenseMatrix::from_vec(1, 1, vec![1.0]));
        assert_eq!(g.layers[0].weight.as_slice(), &[1.0]);
        assert_eq!(g.layers[0].bias, vec![1.0]);
        assert_eq!(g.input.as_slice(), &[2.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_tape() {
        let mut rng = rng_from_seed(3);
        let mlp = Mlp::new(&[4, 5, 2], Activation::Relu, Activation::Identity, &mut rng);
        let x = DenseMatrix::from_vec(3, 4, (0..12).map(|i| i as f64 * 0.1 - 0.5).collect());
        let (_, cache) = mlp.forward(&x);
        let g = mlp.backward(&cache, &DenseMatrix::zeros(3, 2));
        assert_eq!(g, mlp.zero_gradients(3));
    }

    #[test]
    fn relu_and_leaky_derivatives_below_zero() {
        assert_eq!(Activation::Relu.derivative(-1e-3), 0.0);
        assert_eq!(Activation::Relu.derivative(0.0), 0.0);
        assert_eq!(Activation::LeakyRelu(0.1).derivative(-5.0), 0.1);
        assert_eq!(Activation::LeakyRelu(0.1).apply(-5.0), -0.5);
    }

    #[test]
    fn two_layer_net_matches_finite_differences() {
        for seed in 0..20u64 {
            let mut rng = rng_from_seed(seed);
            let mut mlp = Mlp::new(&[3, 6, 2], Activation::Relu, Activation::Identity, &mut rng);
            for layer in mlp.layers_mut() {
                for b in &mut layer.bias {
                    *b = rng.gen_range(-0.5..0.5);
                }
            }
            let x = DenseMatrix::from_vec(4, 3, (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let target = DenseMatrix::from_vec(4, 2, (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect());
            // L = sum(out * target), so dL/dout = target
            let loss = |m: &Mlp| {
                m.apply(&x)
                    .as_slice()
                    .iter()
                    .zip(target.as_slice())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            };
            let (_, cache) = mlp.forward(&x);
            let analytic = mlp.backward(&cache, &target);
            let numeric = central_difference(&mut mlp, loss, 1e-5);
            let err = max_relative_error(&analytic, &numeric);
            assert!(err < 1e-6, "seed {seed}: rel err {err}");
        }
    }
}
