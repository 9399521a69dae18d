//! One-dimensional reference solver for the classical HJB equation:
//! central differences for `v''`, one-sided differences for the drift,
//! homogeneous Neumann rows, and Howard policy iteration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::objectives::Objective;
use crate::ops::ControlSet;

/// Uniform grid `x_i = x_left + i dx`, `i = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdGrid {
    x_left: f64,
    x_right: f64,
    n_points: usize,
}

impl FdGrid {
    pub fn new(x_left: f64, x_right: f64, n_points: usize) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::Config(format!("grid needs at least 3 points (one interior node), got {n_points}")));
        }
        if !(x_left.is_finite() && x_right.is_finite() && x_left < x_right) {
            return Err(Error::Config(format!("grid interval [{x_left}, {x_right}] is degenerate")));
        }
        Ok(Self { x_left, x_right, n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        (self.x_right - self.x_left) / (self.n_points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x_left + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }
}

/// Grid data of `-rho v + f + u v'' + b v' = 0` with `b = -f'`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdProblem {
    pub rho: f64,
    pub f: Vec<f64>,
    pub b: Vec<f64>,
}

impl FdProblem {
    pub fn from_objective<O: Objective + ?Sized>(objective: &O, grid: &FdGrid, rho: f64) -> Result<Self> {
        if objective.dim() != 1 {
            return Err(Error::Config("the finite-difference reference is one-dimensional".into()));
        }
        let mut g = [0.0];
        let mut f = Vec::with_capacity(grid.n_points);
        let mut b = Vec::with_capacity(grid.n_points);
        for x in grid.nodes() {
            objective.gradient(&[x], &mut g);
            f.push(objective.value(&[x]));
            b.push(-g[0]);
        }
        Self::new(rho, f, b)
    }

    pub fn new(rho: f64, f: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::Config(format!("rho must be positive, got {rho}")));
        }
        if f.len() != b.len() || !crate::math::all_finite(&f) || !crate::math::all_finite(&b) {
            return Err(Error::Config("grid data must be finite and of equal length".into()));
        }
        Ok(Self { rho, f, b })
    }
}

/// Tridiagonal rows `(lower, diag, upper, rhs)` for a fixed policy.
fn assemble(policy: &[f64], problem: &FdProblem, grid: &FdGrid) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = grid.n_points;
    let dx = grid.spacing();
    let dx2 = dx * dx;
    let (mut lo, mut di, mut up, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    // (v_1 - v_0)/dx = 0 and (v_{N-1} - v_{N-2})/dx = 0
    di[0] = -1.0 / dx;
    up[0] = 1.0 / dx;
    lo[n - 1] = -1.0 / dx;
    di[n - 1] = 1.0 / dx;
    for i in 1..n - 1 {
        let u = policy[i];
        let bp = problem.b[i].max(0.0);
        let bm = problem.b[i].min(0.0);
        lo[i] = u / dx2 - bp / dx;
        di[i] = -problem.rho - 2.0 * u / dx2 + bp / dx - bm / dx;
        up[i] = u / dx2 + bm / dx;
        rhs[i] = -problem.f[i];
    }
    (lo, di, up, rhs)
}

/// Solves the linear system of a fixed policy by tridiagonal elimination.
pub fn policy_evaluation(policy: &[f64], problem: &FdProblem, grid: &FdGrid) -> Result<Vec<f64>> {
    let n = grid.n_points;
    if policy.len() != n || problem.f.len() != n {
        return Err(Error::Contract(format!("policy and grid data must have {n} entries")));
    }
    if policy.iter().any(|u| !(u.is_finite() && *u > 0.0)) {
        return Err(Error::Contract("policy entries must be positive and finite".into()));
    }
    let (lo, di, up, rhs) = assemble(policy, problem, grid);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = di[0];
    if denom == 0.0 {
        return Err(Error::Solver("zero pivot in row 0".into()));
    }
    c[0] = up[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = di[i] - lo[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Solver(format!("singular tridiagonal system at row {i}")));
        }
        c[i] = up[i] / denom;
        d[i] = (rhs[i] - lo[i] * d[i - 1]) / denom;
    }
    let mut v = vec![0.0; n];
    v[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        v[i] = d[i] - c[i] * v[i + 1];
    }
    Ok(v)
}

/// Per-row residuals of the fixed-policy system, `A v - rhs`.
pub fn row_residuals(values: &[f64], policy: &[f64], problem: &FdProblem, grid: &FdGrid) -> Vec<f64> {
    let n = grid.n_points;
    let (lo, di, up, rhs) = assemble(policy, problem, grid);
    (0..n)
        .map(|i| {
            let mut r = di[i] * values[i] - rhs[i];
            if i > 0 {
                r += lo[i] * values[i - 1];
            }
            if i + 1 < n {
                r += up[i] * values[i + 1];
            }
            r
        })
        .collect()
}

/// Central second difference; endpoints copy the nearest interior node.
pub fn curvature(values: &[f64], grid: &FdGrid) -> Vec<f64> {
    let n = values.len();
    let dx2 = grid.spacing() * grid.spacing();
    let mut k = vec![0.0; n];
    for i in 1..n - 1 {
        k[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / dx2;
    }
    k[0] = k[1];
    k[n - 1] = k[n - 2];
    k
}

/// Pointwise minimizer of `u * v''`: `u_min` where the curvature is `>= 0`.
pub fn policy_improvement(values: &[f64], grid: &FdGrid, control: &ControlSet) -> Vec<f64> {
    curvature(values, grid).into_iter().map(|k| crate::ops::classical_control(k, control)).collect()
}

/// Residual of the discrete HJB with the min over `{u_min, u_max}` at each
/// interior node (Neumann rows included).
pub fn hjb_residuals(values: &[f64], problem: &FdProblem, grid: &FdGrid, control: &ControlSet) -> Vec<f64> {
    let best = policy_improvement(values, grid, control);
    row_residuals(values, &best, problem, grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HowardSolution {
    pub values: Vec<f64>,
    pub curvature: Vec<f64>,
    pub policy: Vec<f64>,
    /// `sqrt(2 u*)` of the converged policy.
    pub noise_classical: Vec<f64>,
    /// Number of policy evaluations performed.
    pub iterations: usize,
    pub converged: bool,
}

/// Howard iteration from `u = u_max` until the policy moves by less than
/// `eps_u` in max norm or `k_max` evaluations have been spent.
pub fn howard_solve(problem: &FdProblem, grid: &FdGrid, control: &ControlSet, eps_u: f64, k_max: usize) -> Result<HowardSolution> {
    howard_solve_with(problem, grid, control, eps_u, k_max, &mut |_| {})
}

/// [`howard_solve`] reporting every evaluated value iterate.
pub fn howard_solve_with(
    problem: &FdProblem,
    grid: &FdGrid,
    control: &ControlSet,
    eps_u: f64,
    k_max: usize,
    on_iterate: &mut dyn FnMut(&[f64]),
) -> Result<HowardSolution> {
    if k_max == 0 {
        return Err(Error::Config("k_max must be positive".into()));
    }
    let mut policy = vec![control.u_max(); grid.n_points];
    let mut values = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < k_max {
        values = policy_evaluation(&policy, problem, grid)?;
        iterations += 1;
        on_iterate(&values);
        let next = policy_improvement(&values, grid, control);
        let change = next.iter().zip(&policy).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        policy = next;
        if change < eps_u {
            converged = true;
            break;
        }
    }
    let noise_classical = policy.iter().map(|u| sqrt(2.0 * u)).collect();
    Ok(HowardSolution { curvature: curvature(&values, grid), values, policy, noise_classical, iterations, converged })
}

/// Linear interpolation of grid data at `x` (clamped to the grid).
pub fn interpolate(grid: &FdGrid, data: &[f64], x: f64) -> f64 {
    let dx = grid.spacing();
    let s = ((x - grid.x_left) / dx).clamp(0.0, (grid.n_points - 1) as f64);
    let i = (crate::math::floor(s) as usize).min(grid.n_points - 2);
    let t = s - i as f64;
    (1.0 - t) * data[i] + t * data[i + 1]
}
