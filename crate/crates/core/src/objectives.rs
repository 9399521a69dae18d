//! Benchmark objectives with closed-form gradients, and the manufactured
//! cosine instance with a known value function.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::domain::BoxDomain;
use crate::math::{cos, exp, sin, sqrt};
use crate::ops::{classical_hamiltonian, ControlSet, PdeSource, Problem};

/// A smooth (or piecewise smooth) objective with an analytic gradient.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    DoubleWell,
    GaussianMixture { means: Vec<[f64; 2]>, weights: Vec<f64>, variance: f64 },
    Easom,
    Hartmann6,
}

/// A benchmark instance: objective, domain and known global minimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    name: String,
    domain: BoxDomain,
    minimizers: Vec<Vec<f64>>,
    notes: &'static str,
    kind: Kind,
}

impl Benchmark {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn minimizers(&self) -> &[Vec<f64>] {
        &self.minimizers
    }

    pub fn notes(&self) -> &'static str {
        self.notes
    }

    /// eHJB instance with source `f` and drift `grad f`.
    pub fn problem(&self, rho: f64, lambda: f64, control: ControlSet) -> crate::error::Result<Problem> {
        Problem::new(Arc::new(self.clone()), self.domain.clone(), rho, lambda, control)
    }

    /// Distance to the nearest listed minimizer.
    pub fn distance_to_minimizers(&self, x: &[f64]) -> f64 {
        crate::metrics::distance_to_set(x, &self.minimizers)
    }
}

impl Objective for Benchmark {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::DoubleWell => double_well(x[0]),
            Kind::GaussianMixture { means, weights, variance } => -means
                .iter()
                .zip(weights)
                .map(|(m, w)| w * exp(-0.5 * sq_dist2(x, m) / variance))
                .sum::<f64>(),
            Kind::Easom => {
                let (a, b) = (x[0] - PI, x[1] - PI);
                -cos(x[0]) * cos(x[1]) * exp(-a * a - b * b)
            }
            Kind::Hartmann6 => (-hartmann_terms(x).map(|(_, e)| e).sum::<f64>() + HARTMANN_SHIFT) / HARTMANN_SCALE,
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            Kind::DoubleWell => out[0] = double_well_derivative(x[0]),
            Kind::GaussianMixture { means, weights, variance } => {
                out[..2].fill(0.0);
                for (m, w) in means.iter().zip(weights) {
                    let e = w * exp(-0.5 * sq_dist2(x, m) / variance) / variance;
                    out[0] += e * (x[0] - m[0]);
                    out[1] += e * (x[1] - m[1]);
                }
            }
            Kind::Easom => {
                let (a, b) = (x[0] - PI, x[1] - PI);
                let e = exp(-a * a - b * b);
                let (c1, c2, s1, s2) = (cos(x[0]), cos(x[1]), sin(x[0]), sin(x[1]));
                out[0] = e * c2 * (s1 + 2.0 * a * c1);
                out[1] = e * c1 * (s2 + 2.0 * b * c2);
            }
            Kind::Hartmann6 => {
                out[..6].fill(0.0);
                for (i, e) in hartmann_terms(x) {
                    for j in 0..6 {
                        out[j] += 2.0 * e * HARTMANN_A[i][j] * (x[j] - HARTMANN_P[i][j]) / HARTMANN_SCALE;
                    }
                }
            }
        }
    }
}

impl PdeSource for Benchmark {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn eval(&self, x: &[f64], drift: &mut [f64]) -> f64 {
        self.gradient(x, drift);
        self.value(x)
    }
}

fn sq_dist2(x: &[f64], m: &[f64; 2]) -> f64 {
    let (a, b) = (x[0] - m[0], x[1] - m[1]);
    a * a + b * b
}

fn double_well(x: f64) -> f64 {
    if x > 6.0 {
        4.0 * x - 20.0
    } else if x > 2.0 {
        (x - 4.0) * (x - 4.0)
    } else if x > -2.0 {
        8.0 - x * x
    } else if x > -6.0 {
        2.0 * (x + 3.0) * (x + 3.0) + 2.0
    } else {
        -(12.0 * x + 52.0)
    }
}

// Right-continuous at the breakpoints {-6, -2, 2, 6}.
fn double_well_derivative(x: f64) -> f64 {
    if x >= 6.0 {
        4.0
    } else if x >= 2.0 {
        2.0 * (x - 4.0)
    } else if x >= -2.0 {
        -2.0 * x
    } else if x >= -6.0 {
        4.0 * (x + 3.0)
    } else {
        -12.0
    }
}

/// Double well on `[-6, 6]`: global minimum `f(4) = 0`, local minimum `f(-3) = 2`.
pub fn double_well_1d() -> Benchmark {
    Benchmark {
        name: "double_well_1d".into(),
        domain: BoxDomain::cube(1, -6.0, 6.0).expect("static domain"),
        minimizers: vec![vec![4.0]],
        notes: "five-piece C1 double well; sup |f'| = 12 at x = -6",
        kind: Kind::DoubleWell,
    }
}

/// Mixture weights in row-major order over the means `{0..4}^2`.
pub const GAUSS_MIX_WEIGHTS: [f64; 25] = [
    0.4559, 0.2559, 0.3089, 0.2974, 0.2947, //
    0.4972, 0.5326, 0.3268, 0.4997, 0.5220, //
    0.4020, 0.3167, 0.5011, 0.3068, 0.4747, //
    0.4392, 0.5339, 1.6552, 0.4931, 0.4037, //
    0.3124, 0.2915, 0.3972, 0.4242, 0.2974,
];

/// Negative 25-component Gaussian mixture on `[-1, 5]^2`, covariance `0.1 I`.
/// The deepest well is the component at `(3, 2)`.
pub fn gaussian_mixture_2d() -> Benchmark {
    let means = (0..25).map(|i| [(i / 5) as f64, (i % 5) as f64]).collect();
    Benchmark {
        name: "gauss_mix_2d".into(),
        domain: BoxDomain::cube(2, -1.0, 5.0).expect("static domain"),
        minimizers: vec![vec![3.0, 2.0]],
        notes: "target is the well center (3,2); the exact minimizer is displaced by < 1e-3",
        kind: Kind::GaussianMixture { means, weights: GAUSS_MIX_WEIGHTS.to_vec(), variance: 0.1 },
    }
}

/// Easom function on `[-10, 10]^2`, minimum `-1` at `(pi, pi)`.
pub fn easom_2d() -> Benchmark {
    Benchmark {
        name: "easom_2d".into(),
        domain: BoxDomain::cube(2, -10.0, 10.0).expect("static domain"),
        minimizers: vec![vec![PI, PI]],
        notes: "flat plateau around the unique global minimizer",
        kind: Kind::Easom,
    }
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.50, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];
const HARTMANN_SHIFT: f64 = 2.58;
const HARTMANN_SCALE: f64 = 1.94;

/// Known minimizer of the Hartmann-6 function.
pub const HARTMANN_MINIMIZER: [f64; 6] = [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573];

/// `(i, alpha_i exp(-Σ_j A_ij (x_j - P_ij)^2))` for the four Hartmann terms.
fn hartmann_terms(x: &[f64]) -> impl Iterator<Item = (usize, f64)> + '_ {
    (0..4).map(move |i| {
        let s: f64 = (0..6).map(|j| HARTMANN_A[i][j] * (x[j] - HARTMANN_P[i][j]) * (x[j] - HARTMANN_P[i][j])).sum();
        (i, HARTMANN_ALPHA[i] * exp(-s))
    })
}

/// Unscaled Hartmann sum `-Σ alpha_i exp(...)`; `-3.32237` at the minimizer.
pub fn hartmann_unscaled(x: &[f64]) -> f64 {
    -hartmann_terms(x).map(|(_, e)| e).sum::<f64>()
}

/// Rescaled Hartmann-6 `(unscaled + 2.58) / 1.94` on `[0, 1]^6`.
///
/// The commonly quoted minimum `-3.32237` is the value of the unscaled sum;
/// the rescaled function is about `-0.38266` there.
pub fn hartmann_6d() -> Benchmark {
    Benchmark {
        name: "hartmann_6d".into(),
        domain: BoxDomain::cube(6, 0.0, 1.0).expect("static domain"),
        minimizers: vec![HARTMANN_MINIMIZER.to_vec()],
        notes: "rescaled form; -3.32237 refers to the unscaled sum",
        kind: Kind::Hartmann6,
    }
}

/// Names accepted by [`benchmark_by_name`].
pub const BENCHMARK_NAMES: [&str; 4] = ["double_well_1d", "gauss_mix_2d", "easom_2d", "hartmann_6d"];

pub fn benchmark_by_name(name: &str) -> Option<Benchmark> {
    match name {
        "double_well_1d" => Some(double_well_1d()),
        "gauss_mix_2d" => Some(gaussian_mixture_2d()),
        "easom_2d" => Some(easom_2d()),
        "hartmann_6d" => Some(hartmann_6d()),
        _ => None,
    }
}

/// Parses `cosine_d<d>` into the dimension.
pub fn manufactured_dim(name: &str) -> Option<usize> {
    name.strip_prefix("cosine_d")?.parse().ok().filter(|&d: &usize| d >= 1)
}

/// Manufactured instance on `[-3, 3]^d` with `v(x) = Π cos(pi x_i / 3)`:
/// `-rho v + g + H(lap v) = 0` with source `g = rho v - min_u(u lap v)`
/// (no drift), so `v` solves the classical equation exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCosine {
    dim: usize,
    rho: f64,
    control: ControlSet,
    domain: BoxDomain,
}

impl ManufacturedCosine {
    pub fn new(dim: usize, rho: f64, control: ControlSet) -> crate::error::Result<Self> {
        if dim == 0 {
            return Err(crate::error::Error::Config("manufactured instance needs d >= 1".into()));
        }
        Ok(Self { dim, rho, control, domain: BoxDomain::cube(dim, -3.0, 3.0)? })
    }

    pub fn name(&self) -> String {
        format!("cosine_d{}", self.dim)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn control(&self) -> ControlSet {
        self.control
    }

    pub fn exact_value(&self, x: &[f64]) -> f64 {
        x.iter().map(|&xi| cos(PI * xi / 3.0)).product()
    }

    pub fn exact_gradient(&self, x: &[f64], out: &mut [f64]) {
        let k = PI / 3.0;
        for i in 0..self.dim {
            out[i] = -k * sin(k * x[i]) * x.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &xj)| cos(k * xj)).product::<f64>();
        }
    }

    /// Exact Hessian, row-major.
    pub fn exact_hessian(&self, x: &[f64]) -> Vec<f64> {
        let k = PI / 3.0;
        let d = self.dim;
        let c: Vec<f64> = x.iter().map(|&xi| cos(k * xi)).collect();
        let s: Vec<f64> = x.iter().map(|&xi| sin(k * xi)).collect();
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let rest: f64 = (0..d).filter(|&m| m != i && m != j).map(|m| c[m]).product();
                h[i * d + j] = if i == j { -k * k * c[i] * rest } else { k * k * s[i] * s[j] * rest };
            }
        }
        h
    }

    /// `lap v = -d (pi/3)^2 v`.
    pub fn exact_laplacian(&self, x: &[f64]) -> f64 {
        -(self.dim as f64) * (PI / 3.0) * (PI / 3.0) * self.exact_value(x)
    }

    pub fn source(&self, x: &[f64]) -> f64 {
        self.rho * self.exact_value(x) - classical_hamiltonian(self.exact_laplacian(x), &self.control)
    }

    /// eHJB instance at exploration level `lambda`.
    pub fn problem(&self, lambda: f64) -> crate::error::Result<Problem> {
        Problem::new(Arc::new(self.clone()), self.domain.clone(), self.rho, lambda, self.control)
    }

    /// Exact jet of the solution.
    pub fn exact_jet(&self, x: &[f64]) -> crate::diffnet::EvalJet {
        let mut gradient = vec![0.0; self.dim];
        self.exact_gradient(x, &mut gradient);
        crate::diffnet::EvalJet { value: self.exact_value(x), gradient, hessian: self.exact_hessian(x) }
    }
}

impl PdeSource for ManufacturedCosine {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], drift: &mut [f64]) -> f64 {
        drift.fill(0.0);
        self.source(x)
    }
}

/// Max-norm of a gradient.
pub fn grad_inf_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}
