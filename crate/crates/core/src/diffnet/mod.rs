//! Fully connected tanh value network with exact value/gradient/Hessian
//! propagation and reverse-mode parameter gradients.
//!
//! A point's *jet* is laid out as `1 + d + d*d` consecutive columns: the
//! value, the input gradient and the row-major input Hessian. A layer with
//! `n` units acting on `P` points is an `n x P*(1+d+d*d)` row-major matrix,
//! so every affine stage is a single GEMM over all jets of a batch.

mod jet;
mod tape;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

pub use tape::{backward, NodeId, Tape};

/// Network parameters. `weights[l]` is the row-major `out x in` matrix of
/// affine layer `l`; hidden layers use tanh, the output layer is affine.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    seed: u64,
}

/// Gradient of a scalar with respect to every network parameter, laid out
/// like [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Value, input gradient and (symmetric, row-major) input Hessian at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalJet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

impl EvalJet {
    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn hessian_at(&self, i: usize, j: usize) -> f64 {
        self.hessian[i * self.dim() + j]
    }

    pub fn laplacian(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|i| self.hessian[i * d + i]).sum()
    }

    /// Averages the Hessian with its transpose.
    pub fn symmetrize(&mut self) {
        let d = self.dim();
        for i in 0..d {
            for j in (i + 1)..d {
                let m = 0.5 * (self.hessian[i * d + j] + self.hessian[j * d + i]);
                self.hessian[i * d + j] = m;
                self.hessian[j * d + i] = m;
            }
        }
    }
}

pub fn validate_layer_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::Config(format!(
            "layer_sizes needs an input and an output size, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.iter().any(|&s| s == 0) {
        return Err(Error::Config(format!("layer sizes must be positive, got {layer_sizes:?}")));
    }
    if *layer_sizes.last().unwrap() != 1 {
        return Err(Error::Config(format!("the output layer must have size 1, got {layer_sizes:?}")));
    }
    Ok(())
}

/// Layer sizes `[d, width, ..., width, 1]` with `depth` hidden layers.
pub fn layer_sizes(dim: usize, width: usize, depth: usize) -> Vec<usize> {
    let mut sizes = vec![dim];
    sizes.extend(core::iter::repeat_n(width, depth));
    sizes.push(1);
    sizes
}

/// Weights i.i.d. uniform on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, zero biases.
pub fn init_network(seed: u64, layer_sizes: &[usize]) -> Result<MlpParams> {
    validate_layer_sizes(layer_sizes)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
    let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
    for pair in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let bound = 1.0 / crate::math::sqrt(fan_in as f64);
        weights.push((0..fan_in * fan_out).map(|_| rng.random_range(-bound..=bound)).collect());
        biases.push(vec![0.0; fan_out]);
    }
    Ok(MlpParams { layer_sizes: layer_sizes.to_vec(), weights, biases, seed })
}

impl MlpParams {
    pub fn from_parts(layer_sizes: Vec<usize>, weights: Vec<Vec<f64>>, biases: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        validate_layer_sizes(&layer_sizes)?;
        let n = layer_sizes.len() - 1;
        if weights.len() != n || biases.len() != n {
            return Err(Error::Config(format!(
                "expected {n} weight and bias arrays, got {} and {}",
                weights.len(),
                biases.len()
            )));
        }
        for (l, pair) in layer_sizes.windows(2).enumerate() {
            if weights[l].len() != pair[0] * pair[1] || biases[l].len() != pair[1] {
                return Err(Error::Config(format!("layer {l} arrays do not match sizes {pair:?}")));
            }
            if !crate::math::all_finite(&weights[l]) || !crate::math::all_finite(&biases[l]) {
                return Err(Error::Config(format!("layer {l} has non-finite entries")));
            }
        }
        Ok(Self { layer_sizes, weights, biases, seed })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    /// Number of affine layers.
    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    /// Plain (jet-free) forward evaluation of `v(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let mut a = x.to_vec();
        let last = self.n_layers() - 1;
        for l in 0..self.n_layers() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let mut y = vec![0.0; n_out];
            jet::gemm(n_out, n_in, 1, &self.weights[l], n_in, 1, &a, 1, 1, 0.0, &mut y, 1, 1);
            for (yo, b) in y.iter_mut().zip(&self.biases[l]) {
                *yo += b;
                if l < last {
                    *yo = crate::math::tanh(*yo);
                }
            }
            a = y;
        }
        Ok(a[0])
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Contract(format!(
                "point has dimension {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        if !crate::math::all_finite(x) {
            return Err(Error::Contract(format!("non-finite point {x:?}")));
        }
        Ok(())
    }
}

impl ParamGrads {
    pub fn zeros(params: &MlpParams) -> Self {
        Self {
            weights: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn same_shape(&self, params: &MlpParams) -> bool {
        self.weights.len() == params.weights.len()
            && self.biases.len() == params.biases.len()
            && self.weights.iter().zip(&params.weights).all(|(a, b)| a.len() == b.len())
            && self.biases.iter().zip(&params.biases).all(|(a, b)| a.len() == b.len())
    }

    pub fn add_assign(&mut self, other: &ParamGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights).chain(self.biases.iter_mut().zip(&other.biases)) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Flat iteration: all weight layers, then all bias layers.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().flatten().chain(self.biases.iter().flatten())
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// Jet of the network at one point. When a tape is supplied the
/// propagation is recorded on it.
pub fn forward_jet(params: &MlpParams, x: &[f64], tape: Option<&mut Tape<'_>>) -> Result<EvalJet> {
    params.check_point(x)?;
    match tape {
        Some(t) => {
            let id = t.record_jets(x)?;
            Ok(t.jets(id)?.remove(0))
        }
        None => Ok(forward_jets(params, x)?.remove(0)),
    }
}

/// Jets at a batch of points stored consecutively (`points.len() = P*d`).
pub fn forward_jets(params: &MlpParams, points: &[f64]) -> Result<Vec<EvalJet>> {
    let d = params.input_dim();
    if points.is_empty() || points.len() % d != 0 {
        return Err(Error::Contract(format!("point buffer length {} is not a multiple of {d}", points.len())));
    }
    if !crate::math::all_finite(points) {
        return Err(Error::Contract("non-finite point in batch".into()));
    }
    let out = jet::propagate(params, points);
    Ok(jet::split_jets(&out, d))
}
