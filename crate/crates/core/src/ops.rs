//! Exploratory HJB operators.
//!
//! With `delta = u_max - u_min` and `z = -delta * lap / lambda`:
//!
//! * `H_lambda = -lambda ((u_min/delta) z + ln delta + ln((e^z - 1)/z))`
//! * mean control `u_min + delta psi(z)`, `psi(z) = ((z-1)e^z + 1)/(z(e^z - 1))`
//! * noise `h_lambda = sqrt(2 (u_min + delta psi(z)))`
//!
//! Each closed form has three branches (Taylor for `|z| < BRANCH_EPS`, and
//! rewritten forms using only `exp(-|z|)` otherwise) so that no exponent
//! overflows.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;

use crate::diffnet::EvalJet;
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::math::{exp, expm1, log, sqrt};
use crate::quadrature::gauss_legendre;

/// Switch point between the Taylor and the closed-form branches.
pub const BRANCH_EPS: f64 = 1e-2;

/// Control interval `[u_min, u_max]` with `0 < u_min < u_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSet {
    u_min: f64,
    u_max: f64,
}

impl ControlSet {
    pub fn new(u_min: f64, u_max: f64) -> Result<Self> {
        if !(u_min.is_finite() && u_max.is_finite() && u_min > 0.0 && u_min < u_max) {
            return Err(Error::Config(format!("control set needs 0 < u_min < u_max, got [{u_min}, {u_max}]")));
        }
        Ok(Self { u_min, u_max })
    }

    pub fn u_min(&self) -> f64 {
        self.u_min
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn delta(&self) -> f64 {
        self.u_max - self.u_min
    }
}

/// Source and drift of an eHJB instance:
/// `-rho v + source(x) - grad v . drift(x) + H_lambda(lap v) = 0`.
///
/// For an objective `f` the source is `f` and the drift is `grad f`.
pub trait PdeSource: Send + Sync {
    fn dim(&self) -> usize;
    /// Writes the drift vector into `drift` and returns the source value.
    fn eval(&self, x: &[f64], drift: &mut [f64]) -> f64;
}

/// An eHJB instance on a box with Neumann boundary conditions.
#[derive(Clone)]
pub struct Problem {
    source: Arc<dyn PdeSource>,
    domain: BoxDomain,
    rho: f64,
    lambda: f64,
    control: ControlSet,
}

impl core::fmt::Debug for Problem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Problem")
            .field("domain", &self.domain)
            .field("rho", &self.rho)
            .field("lambda", &self.lambda)
            .field("control", &self.control)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(source: Arc<dyn PdeSource>, domain: BoxDomain, rho: f64, lambda: f64, control: ControlSet) -> Result<Self> {
        if source.dim() != domain.dim() {
            return Err(Error::Config(format!(
                "source dimension {} does not match domain dimension {}",
                source.dim(),
                domain.dim()
            )));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::Config(format!("rho must be positive, got {rho}")));
        }
        check_lambda(lambda)?;
        Ok(Self { source, domain, rho, lambda, control })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn control(&self) -> ControlSet {
        self.control
    }

    pub fn source(&self) -> &Arc<dyn PdeSource> {
        &self.source
    }

    /// Same instance with another exploration level.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self { lambda, ..self.clone() })
    }

    /// Source value at `x`, with the drift written into `drift`.
    pub fn source_at(&self, x: &[f64], drift: &mut [f64]) -> Result<f64> {
        let s = self.source.eval(x, drift);
        if !s.is_finite() || !crate::math::all_finite(drift) {
            return Err(Error::Evaluation { point: x.to_vec(), msg: "source or drift is not finite".into() });
        }
        Ok(s)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

#[inline]
pub fn z_of(laplacian: f64, lambda: f64, control: &ControlSet) -> f64 {
    -control.delta() * laplacian / lambda
}

/// `ln((e^z - 1)/z)`, finite for all finite `z`.
pub fn log_expm1_ratio(z: f64) -> f64 {
    if z.abs() < BRANCH_EPS {
        let z2 = z * z;
        z / 2.0 + z2 / 24.0 - z2 * z2 / 2880.0 + z2 * z2 * z2 / 181_440.0
    } else if z > 0.0 {
        z + log(-expm1(-z)) - log(z)
    } else {
        log(-expm1(z)) - log(-z)
    }
}

/// `((z-1)e^z + 1)/(z(e^z - 1))`, the mean of the Gibbs control on `[0, 1]`.
pub fn psi(z: f64) -> f64 {
    if z.abs() < BRANCH_EPS {
        let z2 = z * z;
        0.5 + z / 12.0 - z * z2 / 720.0 + z * z2 * z2 / 30_240.0
    } else if z > 0.0 {
        let em = expm1(-z);
        (z + em) / (z * -em)
    } else {
        let em = expm1(z);
        (z + (z - 1.0) * em) / (z * em)
    }
}

pub(crate) fn log_partition_unchecked(laplacian: f64, lambda: f64, control: &ControlSet) -> f64 {
    let delta = control.delta();
    let z = z_of(laplacian, lambda, control);
    -lambda * ((control.u_min / delta) * z + log(delta) + log_expm1_ratio(z))
}

pub(crate) fn mean_control_unchecked(laplacian: f64, lambda: f64, control: &ControlSet) -> f64 {
    let z = z_of(laplacian, lambda, control);
    (control.u_min + control.delta() * psi(z)).clamp(control.u_min, control.u_max)
}

/// `H_lambda(lap) = -lambda ln ∫_U exp(-u lap / lambda) du`.
pub fn log_partition(laplacian: f64, lambda: f64, control: &ControlSet) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(log_partition_unchecked(laplacian, lambda, control))
}

/// Mean of the Gibbs control distribution; also `dH_lambda/d lap`.
pub fn mean_control(laplacian: f64, lambda: f64, control: &ControlSet) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(mean_control_unchecked(laplacian, lambda, control))
}

/// Noise coefficient `h_lambda`, always in `[sqrt(2 u_min), sqrt(2 u_max)]`.
pub fn noise_coeff(laplacian: f64, lambda: f64, control: &ControlSet) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(noise_unchecked(laplacian, lambda, control))
}

pub(crate) fn noise_unchecked(laplacian: f64, lambda: f64, control: &ControlSet) -> f64 {
    let h = sqrt(2.0 * mean_control_unchecked(laplacian, lambda, control));
    h.clamp(sqrt(2.0 * control.u_min), sqrt(2.0 * control.u_max))
}

/// Bang-bang control: `u_min` where `lap >= 0`, `u_max` otherwise.
pub fn classical_control(laplacian: f64, control: &ControlSet) -> f64 {
    if laplacian >= 0.0 {
        control.u_min
    } else {
        control.u_max
    }
}

/// `min_{u in U} u * lap`.
pub fn classical_hamiltonian(laplacian: f64, control: &ControlSet) -> f64 {
    classical_control(laplacian, control) * laplacian
}

fn transport_terms(jet: &EvalJet, x: &[f64], problem: &Problem) -> Result<f64> {
    let d = problem.dim();
    if jet.dim() != d || x.len() != d {
        return Err(Error::Contract(format!("jet/point dimension does not match problem dimension {d}")));
    }
    let mut drift = vec![0.0; d];
    let source = problem.source_at(x, &mut drift)?;
    let transport: f64 = jet.gradient.iter().zip(&drift).map(|(a, b)| a * b).sum();
    Ok(-problem.rho * jet.value + source - transport)
}

/// eHJB residual `-rho v + f - grad v . grad f + H_lambda(lap v)` at `x`.
pub fn pde_residual(jet: &EvalJet, x: &[f64], problem: &Problem) -> Result<f64> {
    Ok(transport_terms(jet, x, problem)? + log_partition_unchecked(jet.laplacian(), problem.lambda, &problem.control))
}

/// Residual of the classical HJB (min over controls in place of `H_lambda`).
pub fn classical_pde_residual(jet: &EvalJet, x: &[f64], problem: &Problem) -> Result<f64> {
    Ok(transport_terms(jet, x, problem)? + classical_hamiltonian(jet.laplacian(), &problem.control))
}

/// Neumann residual `grad v . n`.
pub fn boundary_residual(jet: &EvalJet, outward_normal: &[f64]) -> f64 {
    jet.gradient.iter().zip(outward_normal).map(|(a, b)| a * b).sum()
}

/// Partition function values computed by direct quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValues {
    /// `Z_lambda = ∫_U exp(-u lap / lambda) du`.
    pub partition: f64,
    pub log_partition: f64,
    pub noise: f64,
}

/// Exponent range covered by one quadrature panel.
const PANEL_RANGE: f64 = 25.0;

/// Reference values by composite Gauss–Legendre quadrature, panels of
/// bounded exponent range, with the integrand scaled by its maximum.
pub fn oracle_partition(laplacian: f64, lambda: f64, control: &ControlSet, nodes: usize) -> Result<OracleValues> {
    check_lambda(lambda)?;
    if nodes < 2 {
        return Err(Error::Config(format!("quadrature needs at least 2 nodes, got {nodes}")));
    }
    if !laplacian.is_finite() {
        return Err(Error::Contract("non-finite laplacian".into()));
    }
    let slope = -laplacian / lambda;
    let exponent = |u: f64| slope * u;
    let peak = exponent(control.u_min).max(exponent(control.u_max));
    let range = (slope * control.delta()).abs();
    let panels = (libm::ceil(range / PANEL_RANGE) as usize).max(1);
    let (xs, ws) = gauss_legendre(nodes);
    let width = control.delta() / panels as f64;
    let (mut s0, mut s1) = (0.0, 0.0);
    for p in 0..panels {
        let lo = control.u_min + p as f64 * width;
        let mid = lo + 0.5 * width;
        let mut q0 = 0.0;
        let mut q1 = 0.0;
        for (x, w) in xs.iter().zip(&ws) {
            let u = mid + 0.5 * width * x;
            let e = w * exp(exponent(u) - peak);
            q0 += e;
            q1 += e * u;
        }
        s0 += 0.5 * width * q0;
        s1 += 0.5 * width * q1;
    }
    let log_z = peak + log(s0);
    let partition = exp(log_z);
    if !partition.is_finite() || partition == 0.0 {
        return Err(Error::OracleRange(format!("Z = exp({log_z}) is not representable")));
    }
    Ok(OracleValues { partition, log_partition: -lambda * log_z, noise: sqrt(2.0 * s1 / s0) })
}
