//! Batched jet kernels shared by plain evaluation and the tape.

use alloc::vec;
use alloc::vec::Vec;

use super::{EvalJet, MlpParams};
use crate::math::tanh;

#[inline]
pub(crate) fn jet_stride(d: usize) -> usize {
    1 + d + d * d
}

/// `C = alpha * A B + beta * C` with explicit element strides.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    beta: f64,
    c: &mut [f64],
    rsc: usize,
    csc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    let span = |rows: usize, cols: usize, rs: usize, cs: usize| (rows - 1) * rs + (cols - 1) * cs + 1;
    if k > 0 {
        assert!(a.len() >= span(m, k, rsa, csa), "gemm: A too short");
        assert!(b.len() >= span(k, n, rsb, csb), "gemm: B too short");
    }
    assert!(c.len() >= span(m, n, rsc, csc), "gemm: C too short");
    // SAFETY: the asserts above bound every element the kernel touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

/// Input jets: row `i` carries coordinate `x_i`, gradient `e_i`, zero Hessian.
pub(crate) fn seed_input(points: &[f64], d: usize) -> Vec<f64> {
    let c = jet_stride(d);
    let p = points.len() / d;
    let cols = p * c;
    let mut x = vec![0.0; d * cols];
    for q in 0..p {
        for i in 0..d {
            let row = &mut x[i * cols..(i + 1) * cols];
            row[q * c] = points[q * d + i];
            row[q * c + 1 + i] = 1.0;
        }
    }
    x
}

/// `Y = W X` over all jet columns, bias added to value columns only.
pub(crate) fn affine_forward(params: &MlpParams, layer: usize, x: &[f64], cols: usize, c: usize) -> Vec<f64> {
    let n_in = params.layer_sizes[layer];
    let n_out = params.layer_sizes[layer + 1];
    let mut y = vec![0.0; n_out * cols];
    gemm(n_out, n_in, cols, &params.weights[layer], n_in, 1, x, cols, 1, 0.0, &mut y, cols, 1);
    for (o, b) in params.biases[layer].iter().enumerate() {
        let row = &mut y[o * cols..(o + 1) * cols];
        for v in row.iter_mut().step_by(c) {
            *v += b;
        }
    }
    y
}

/// Elementwise tanh on jets: `(tanh s, t' j, t'' j jᵀ + t' H)`.
pub(crate) fn tanh_forward(y: &[f64], d: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    match d {
        1 => tanh_forward_fixed::<1>(y, &mut out),
        2 => tanh_forward_fixed::<2>(y, &mut out),
        3 => tanh_forward_fixed::<3>(y, &mut out),
        4 => tanh_forward_fixed::<4>(y, &mut out),
        5 => tanh_forward_fixed::<5>(y, &mut out),
        6 => tanh_forward_fixed::<6>(y, &mut out),
        _ => tanh_forward_dyn(y, d, &mut out),
    }
    out
}

#[inline(always)]
fn tanh_forward_point(src: &[f64], d: usize, out: &mut Vec<f64>) {
    let t = tanh(src[0]);
    let t1 = 1.0 - t * t;
    let t2 = -2.0 * t * t1;
    let js = &src[1..1 + d];
    let hs = &src[1 + d..1 + d + d * d];
    out.push(t);
    out.extend(js.iter().map(|j| t1 * j));
    for (j, row) in js.iter().zip(hs.chunks_exact(d)) {
        let a = t2 * j;
        out.extend(js.iter().zip(row).map(|(k, h)| a * k + t1 * h));
    }
}

fn tanh_forward_fixed<const D: usize>(y: &[f64], out: &mut Vec<f64>) {
    for src in y.chunks_exact(jet_stride(D)) {
        tanh_forward_point(src, D, out);
    }
}

fn tanh_forward_dyn(y: &[f64], d: usize, out: &mut Vec<f64>) {
    for src in y.chunks_exact(jet_stride(d)) {
        tanh_forward_point(src, d, out);
    }
}

/// Adjoint of [`tanh_forward`] given its input `y` and output `out`;
/// accumulates into `grad_in`.
pub(crate) fn tanh_backward(y: &[f64], out: &[f64], d: usize, grad_out: &[f64], grad_in: &mut [f64]) {
    match d {
        1 => tanh_backward_fixed::<1>(y, out, grad_out, grad_in),
        2 => tanh_backward_fixed::<2>(y, out, grad_out, grad_in),
        3 => tanh_backward_fixed::<3>(y, out, grad_out, grad_in),
        4 => tanh_backward_fixed::<4>(y, out, grad_out, grad_in),
        5 => tanh_backward_fixed::<5>(y, out, grad_out, grad_in),
        6 => tanh_backward_fixed::<6>(y, out, grad_out, grad_in),
        _ => tanh_backward_dyn(y, out, d, grad_out, grad_in),
    }
}

#[inline(always)]
fn tanh_backward_point(src: &[f64], t: f64, d: usize, g: &[f64], gi: &mut [f64]) {
    let t1 = 1.0 - t * t;
    let t2 = -2.0 * t * t1;
    let t3 = -2.0 * t1 * (1.0 - 3.0 * t * t);
    let js = &src[1..1 + d];
    let hs = &src[1 + d..1 + d + d * d];
    let gj = &g[1..1 + d];
    let gh = &g[1 + d..1 + d + d * d];

    let mut ds = g[0] * t1;
    for k in 0..d {
        ds += t2 * gj[k] * js[k];
    }
    for j in 0..d {
        for k in 0..d {
            ds += gh[j * d + k] * (t3 * js[j] * js[k] + t2 * hs[j * d + k]);
        }
    }
    gi[0] += ds;
    for k in 0..d {
        let mut sym = 0.0;
        for j in 0..d {
            sym += (gh[k * d + j] + gh[j * d + k]) * js[j];
        }
        gi[1 + k] += t1 * gj[k] + t2 * sym;
    }
    for (a, b) in gi[1 + d..1 + d + d * d].iter_mut().zip(gh) {
        *a += t1 * b;
    }
}

fn tanh_backward_fixed<const D: usize>(y: &[f64], out: &[f64], grad_out: &[f64], grad_in: &mut [f64]) {
    let c = jet_stride(D);
    for (((src, o), g), gi) in y.chunks_exact(c).zip(out.chunks_exact(c)).zip(grad_out.chunks_exact(c)).zip(grad_in.chunks_exact_mut(c)) {
        tanh_backward_point(src, o[0], D, g, gi);
    }
}

fn tanh_backward_dyn(y: &[f64], out: &[f64], d: usize, grad_out: &[f64], grad_in: &mut [f64]) {
    let c = jet_stride(d);
    for (((src, o), g), gi) in y.chunks_exact(c).zip(out.chunks_exact(c)).zip(grad_out.chunks_exact(c)).zip(grad_in.chunks_exact_mut(c)) {
        tanh_backward_point(src, o[0], d, g, gi);
    }
}

/// Full forward pass over a batch of points, returning the `1 x P*c` output jets.
pub(crate) fn propagate(params: &MlpParams, points: &[f64]) -> Vec<f64> {
    let d = params.input_dim();
    let c = jet_stride(d);
    let cols = (points.len() / d) * c;
    let mut a = seed_input(points, d);
    let last = params.n_layers() - 1;
    for l in 0..params.n_layers() {
        a = affine_forward(params, l, &a, cols, c);
        if l < last {
            a = tanh_forward(&a, d);
        }
    }
    a
}

/// Splits a `1 x P*c` output row into per-point jets.
pub(crate) fn split_jets(out: &[f64], d: usize) -> Vec<EvalJet> {
    out.chunks_exact(jet_stride(d))
        .map(|ch| {
            let mut jet = EvalJet { value: ch[0], gradient: ch[1..1 + d].to_vec(), hessian: ch[1 + d..].to_vec() };
            jet.symmetrize();
            jet
        })
        .collect()
}
