//! Matrix-level reverse-mode tape over jet propagation.
//!
//! One node per affine stage, per tanh stage and per residual head. The
//! tanh node's adjoint carries the third-derivative terms that arise from
//! differentiating Hessian propagation with respect to the weights.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::jet::{affine_forward, gemm, jet_stride, seed_input, split_jets, tanh_backward, tanh_forward};
use super::{EvalJet, MlpParams, ParamGrads};
use crate::error::{Error, Result};
use crate::ops::{self, ControlSet, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
struct ResidualTerms {
    rho: f64,
    lambda: f64,
    control: ControlSet,
    source: Vec<f64>,
    drift: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Op {
    /// Seed jets of `points` (constant).
    Input { points: Vec<f64> },
    Affine { layer: usize, input: usize },
    TanhJet { input: usize },
    /// Per-point network value.
    Value { input: usize },
    /// `-rho v + source - grad v . drift + H_lambda(lap v)` per point.
    PdeResidual { input: usize, terms: ResidualTerms },
    /// `grad v . n` per point.
    NormalFlux { input: usize, normals: Vec<f64> },
    /// `weight * sum x_i^2` (scalar).
    SumSquares { input: usize, weight: f64 },
    Sum { inputs: Vec<usize> },
    Constant { value: f64 },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Vec<f64>,
}

/// Recording of jet propagation and residual heads for one network.
#[derive(Debug, Clone)]
pub struct Tape<'p> {
    params: &'p MlpParams,
    nodes: Vec<Node>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p MlpParams) -> Self {
        Self { params, nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn params(&self) -> &'p MlpParams {
        self.params
    }

    fn dim(&self) -> usize {
        self.params.input_dim()
    }

    /// Stored output of a node.
    pub fn output(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    /// Output of the last recorded node.
    pub fn result(&self) -> Option<&[f64]> {
        self.nodes.last().map(|n| n.value.as_slice())
    }

    fn push(&mut self, op: Op) -> NodeId {
        let value = eval_op(self.params, &op, |i| &self.nodes[i].value);
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    fn is_output_jet(&self, id: NodeId) -> bool {
        matches!(self.nodes[id.0].op, Op::Affine { layer, .. } if layer + 1 == self.params.n_layers())
    }

    fn expect_output_jet(&self, id: NodeId) -> Result<usize> {
        if !self.is_output_jet(id) {
            return Err(Error::Contract("node is not a network output jet".into()));
        }
        Ok(self.nodes[id.0].value.len() / jet_stride(self.dim()))
    }

    /// Records the full network at a batch of points; returns the output jet node.
    pub fn record_jets(&mut self, points: &[f64]) -> Result<NodeId> {
        let d = self.dim();
        if points.is_empty() || points.len() % d != 0 {
            return Err(Error::Contract(format!("point buffer length {} is not a multiple of {d}", points.len())));
        }
        if !crate::math::all_finite(points) {
            return Err(Error::Contract("non-finite point in batch".into()));
        }
        let mut cur = self.push(Op::Input { points: points.to_vec() });
        let last = self.params.n_layers() - 1;
        for layer in 0..self.params.n_layers() {
            cur = self.push(Op::Affine { layer, input: cur.0 });
            if layer < last {
                cur = self.push(Op::TanhJet { input: cur.0 });
            }
        }
        Ok(cur)
    }

    pub fn jets(&self, id: NodeId) -> Result<Vec<EvalJet>> {
        self.expect_output_jet(id)?;
        Ok(split_jets(&self.nodes[id.0].value, self.dim()))
    }

    pub fn value(&mut self, jets: NodeId) -> Result<NodeId> {
        self.expect_output_jet(jets)?;
        Ok(self.push(Op::Value { input: jets.0 }))
    }

    /// eHJB residual at the points the jets were recorded at.
    pub fn pde_residual(&mut self, jets: NodeId, problem: &Problem) -> Result<NodeId> {
        let p = self.expect_output_jet(jets)?;
        let d = self.dim();
        if problem.dim() != d {
            return Err(Error::Contract(format!("problem dimension {} != network dimension {d}", problem.dim())));
        }
        let points = self.points_of(jets);
        let mut source = vec![0.0; p];
        let mut drift = vec![0.0; p * d];
        for q in 0..p {
            source[q] = problem.source_at(&points[q * d..(q + 1) * d], &mut drift[q * d..(q + 1) * d])?;
        }
        let terms = ResidualTerms { rho: problem.rho(), lambda: problem.lambda(), control: problem.control(), source, drift };
        Ok(self.push(Op::PdeResidual { input: jets.0, terms }))
    }

    /// Neumann flux `grad v . n`; `normals` holds one unit vector per point.
    pub fn normal_flux(&mut self, jets: NodeId, normals: &[f64]) -> Result<NodeId> {
        let p = self.expect_output_jet(jets)?;
        if normals.len() != p * self.dim() {
            return Err(Error::Contract(format!("expected {} normal components, got {}", p * self.dim(), normals.len())));
        }
        Ok(self.push(Op::NormalFlux { input: jets.0, normals: normals.to_vec() }))
    }

    pub fn sum_squares(&mut self, x: NodeId, weight: f64) -> NodeId {
        self.push(Op::SumSquares { input: x.0, weight })
    }

    pub fn sum(&mut self, xs: &[NodeId]) -> Result<NodeId> {
        if xs.iter().any(|x| self.nodes[x.0].value.len() != 1) {
            return Err(Error::Contract("sum expects scalar nodes".into()));
        }
        Ok(self.push(Op::Sum { inputs: xs.iter().map(|x| x.0).collect() }))
    }

    pub fn constant(&mut self, value: f64) -> NodeId {
        self.push(Op::Constant { value })
    }

    fn points_of(&self, jets: NodeId) -> &[f64] {
        let mut id = jets.0;
        loop {
            match &self.nodes[id].op {
                Op::Input { points } => return points,
                Op::Affine { input, .. } | Op::TanhJet { input } => id = *input,
                _ => unreachable!("jet chains start at an input node"),
            }
        }
    }

    /// Re-evaluates every node from the recorded ops.
    pub fn replay(&self) -> Vec<Vec<f64>> {
        let mut values: Vec<Vec<f64>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = eval_op(self.params, &node.op, |i| &values[i]);
            values.push(v);
        }
        values
    }

    /// Stored node outputs, in recording order.
    pub fn recorded(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.iter().map(|n| n.value.as_slice())
    }
}

fn eval_op<'a>(params: &MlpParams, op: &Op, get: impl Fn(usize) -> &'a Vec<f64>) -> Vec<f64> {
    let d = params.input_dim();
    let c = jet_stride(d);
    match op {
        Op::Input { points } => seed_input(points, d),
        Op::Affine { layer, input } => {
            let x = get(*input);
            let cols = x.len() / params.layer_sizes[*layer];
            affine_forward(params, *layer, x, cols, c)
        }
        Op::TanhJet { input } => tanh_forward(get(*input), d),
        Op::Value { input } => get(*input).iter().step_by(c).copied().collect(),
        Op::PdeResidual { input, terms } => get(*input)
            .chunks_exact(c)
            .enumerate()
            .map(|(q, jet)| {
                let grad = &jet[1..1 + d];
                let lap: f64 = (0..d).map(|k| jet[1 + d + k * d + k]).sum();
                let transport: f64 = grad.iter().zip(&terms.drift[q * d..(q + 1) * d]).map(|(a, b)| a * b).sum();
                -terms.rho * jet[0] + terms.source[q] - transport + ops::log_partition_unchecked(lap, terms.lambda, &terms.control)
            })
            .collect(),
        Op::NormalFlux { input, normals } => get(*input)
            .chunks_exact(c)
            .zip(normals.chunks_exact(d))
            .map(|(jet, n)| jet[1..1 + d].iter().zip(n).map(|(a, b)| a * b).sum())
            .collect(),
        Op::SumSquares { input, weight } => vec![weight * get(*input).iter().map(|v| v * v).sum::<f64>()],
        Op::Sum { inputs } => vec![inputs.iter().map(|&i| get(i)[0]).sum()],
        Op::Constant { value } => vec![*value],
    }
}

/// Gradient of the tape's final scalar, scaled by `seed`, with respect to
/// every network parameter.
pub fn backward(tape: &Tape<'_>, seed: f64) -> Result<ParamGrads> {
    let params = tape.params;
    let last = match tape.nodes.last() {
        Some(n) if n.value.len() == 1 => tape.nodes.len() - 1,
        _ => return Err(Error::Contract("tape does not terminate in a scalar".into())),
    };
    let d = params.input_dim();
    let c = jet_stride(d);
    let mut grads = ParamGrads::zeros(params);
    let mut adj: Vec<Option<Vec<f64>>> = vec![None; tape.nodes.len()];
    adj[last] = Some(vec![seed]);

    fn acc<'v>(adj: &'v mut [Option<Vec<f64>>], id: usize, len: usize) -> &'v mut Vec<f64> {
        adj[id].get_or_insert_with(|| vec![0.0; len])
    }

    for id in (0..=last).rev() {
        let Some(g) = adj[id].take() else { continue };
        let node = &tape.nodes[id];
        match &node.op {
            Op::Input { .. } | Op::Constant { .. } => {}
            Op::Affine { layer, input } => {
                let l = *layer;
                let (n_in, n_out) = (params.layer_sizes[l], params.layer_sizes[l + 1]);
                let x = &tape.nodes[*input].value;
                let cols = x.len() / n_in;
                // dW += dY X^T
                gemm(n_out, cols, n_in, &g, cols, 1, x, 1, cols, 1.0, &mut grads.weights[l], n_in, 1);
                for (o, db) in grads.biases[l].iter_mut().enumerate() {
                    *db += g[o * cols..(o + 1) * cols].iter().step_by(c).sum::<f64>();
                }
                if !matches!(tape.nodes[*input].op, Op::Input { .. }) {
                    let dx = acc(&mut adj, *input, x.len());
                    // dX += W^T dY
                    gemm(n_in, n_out, cols, &params.weights[l], 1, n_in, &g, cols, 1, 1.0, dx, cols, 1);
                }
            }
            Op::TanhJet { input } => {
                let y = &tape.nodes[*input].value;
                let dy = acc(&mut adj, *input, y.len());
                tanh_backward(y, &node.value, d, &g, dy);
            }
            Op::Value { input } => {
                let len = tape.nodes[*input].value.len();
                let dx = acc(&mut adj, *input, len);
                for (q, gq) in g.iter().enumerate() {
                    dx[q * c] += gq;
                }
            }
            Op::PdeResidual { input, terms } => {
                let x = &tape.nodes[*input].value;
                let dx = acc(&mut adj, *input, x.len());
                for (q, gq) in g.iter().enumerate() {
                    let jet = &x[q * c..(q + 1) * c];
                    let lap: f64 = (0..d).map(|k| jet[1 + d + k * d + k]).sum();
                    let dh = ops::mean_control_unchecked(lap, terms.lambda, &terms.control);
                    let dq = &mut dx[q * c..(q + 1) * c];
                    dq[0] -= terms.rho * gq;
                    for k in 0..d {
                        dq[1 + k] -= terms.drift[q * d + k] * gq;
                        dq[1 + d + k * d + k] += dh * gq;
                    }
                }
            }
            Op::NormalFlux { input, normals } => {
                let len = tape.nodes[*input].value.len();
                let dx = acc(&mut adj, *input, len);
                for (q, gq) in g.iter().enumerate() {
                    for k in 0..d {
                        dx[q * c + 1 + k] += normals[q * d + k] * gq;
                    }
                }
            }
            Op::SumSquares { input, weight } => {
                let x = &tape.nodes[*input].value;
                let dx = acc(&mut adj, *input, x.len());
                for (a, v) in dx.iter_mut().zip(x) {
                    *a += 2.0 * weight * v * g[0];
                }
            }
            Op::Sum { inputs } => {
                for &i in inputs {
                    acc(&mut adj, i, 1)[0] += g[0];
                }
            }
        }
    }
    Ok(grads)
}
