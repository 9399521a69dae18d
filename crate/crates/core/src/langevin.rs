//! State-dependent Langevin minimization on a box with mirror reflection.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::diffnet::{forward_jets, MlpParams};
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::math::{floor, sqrt};
use crate::objectives::{grad_inf_norm, Objective};
use crate::ops::{noise_unchecked, ControlSet};

#[derive(Debug, Clone, PartialEq)]
pub struct LangevinConfig {
    /// Euler–Maruyama step `eta`.
    pub step_size: f64,
    pub horizon: usize,
    /// Noise below this level is switched off.
    pub truncation: f64,
    pub n_traj: usize,
    pub seed: u64,
}

impl LangevinConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {}", self.step_size)));
        }
        if self.horizon == 0 || self.n_traj == 0 {
            return Err(Error::Config("horizon and trajectory count must be positive".into()));
        }
        if !(self.truncation.is_finite() && self.truncation >= 0.0) {
            return Err(Error::Config(format!("truncation must be non-negative, got {}", self.truncation)));
        }
        Ok(())
    }
}

/// A state-dependent noise coefficient `h(x) >= 0`.
pub trait NoiseField: Sync {
    fn noise(&self, x: &[f64]) -> Result<f64>;
}

/// Spatially constant noise.
#[derive(Debug, Clone, Copy)]
pub struct ConstantNoise(pub f64);

impl NoiseField for ConstantNoise {
    fn noise(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.0)
    }
}

/// Noise induced by a trained value network: `h_lambda` of its Laplacian.
#[derive(Debug, Clone)]
pub struct NetworkNoise<'a> {
    params: &'a MlpParams,
    lambda: f64,
    control: ControlSet,
}

impl<'a> NetworkNoise<'a> {
    pub fn new(params: &'a MlpParams, lambda: f64, control: ControlSet) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { params, lambda, control })
    }
}

impl NoiseField for NetworkNoise<'_> {
    fn noise(&self, x: &[f64]) -> Result<f64> {
        let jet = forward_jets(self.params, x)?.remove(0);
        Ok(noise_unchecked(jet.laplacian(), self.lambda, &self.control))
    }
}

/// `kappa = (max_l |grad f(x_l)|_inf)^2 / 2` over `samples` uniform points.
pub fn estimate_kappa<O, R>(objective: &O, domain: &BoxDomain, samples: usize, rng: &mut R) -> Result<f64>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    if samples == 0 {
        return Err(Error::Config("kappa estimation needs at least one sample".into()));
    }
    let d = domain.dim();
    let mut x = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut max_norm = 0.0_f64;
    for _ in 0..samples {
        for i in 0..d {
            x[i] = domain.lower()[i] + domain.width(i) * rng.random::<f64>();
        }
        objective.gradient(&x, &mut g);
        if !crate::math::all_finite(&g) {
            return Err(Error::Estimation { point: x });
        }
        max_norm = max_norm.max(grad_inf_norm(&g));
    }
    Ok(0.5 * max_norm * max_norm)
}

/// `h * 1{h >= tau}`.
#[inline]
pub fn truncated_noise(h: f64, tau: f64) -> f64 {
    if h >= tau {
        h
    } else {
        0.0
    }
}

/// Coordinate-wise mirror map into `[a, b]`; the identity on the box.
pub fn mirror_coord(x: f64, a: f64, b: f64) -> f64 {
    if a <= x && x <= b {
        return x;
    }
    let w = b - a;
    let z = (x - a) / w;
    let k = floor(z);
    let r = z - k;
    let odd = floor(k / 2.0) * 2.0 != k;
    let y = if odd { b - w * r } else { a + w * r };
    y.clamp(a, b)
}

pub fn mirror(x: &[f64], domain: &BoxDomain) -> Vec<f64> {
    x.iter().enumerate().map(|(i, &v)| mirror_coord(v, domain.lower()[i], domain.upper()[i])).collect()
}

/// One step `x - eta grad f(x) + sqrt(eta) h^tau(x) xi`, mirrored into the box.
pub fn em_step<O>(x: &[f64], objective: &O, noise: &dyn NoiseField, domain: &BoxDomain, config: &LangevinConfig, xi: &[f64]) -> Result<Vec<f64>>
where
    O: Objective + ?Sized,
{
    let d = x.len();
    let mut g = vec![0.0; d];
    objective.gradient(x, &mut g);
    if !crate::math::all_finite(&g) {
        return Err(Error::Dynamics { point: x.to_vec(), msg: "non-finite gradient".into() });
    }
    let h = truncated_noise(noise.noise(x)?, config.truncation);
    let scale = sqrt(config.step_size) * h;
    let next: Vec<f64> = (0..d).map(|i| x[i] - config.step_size * g[i] + scale * xi[i]).collect();
    if !crate::math::all_finite(&next) {
        return Err(Error::Dynamics { point: x.to_vec(), msg: "non-finite update".into() });
    }
    Ok(mirror(&next, domain))
}

/// States and objective values of every trajectory, `k = 0..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub n_traj: usize,
    pub horizon: usize,
    pub dim: usize,
    /// `[traj][k][i]`, flattened.
    pub states: Vec<f64>,
    /// `[traj][k]`, flattened.
    pub values: Vec<f64>,
    pub best_points: Vec<Vec<f64>>,
    pub best_values: Vec<f64>,
    pub best_steps: Vec<usize>,
}

impl TrajectoryLog {
    pub fn state(&self, traj: usize, k: usize) -> &[f64] {
        let off = (traj * (self.horizon + 1) + k) * self.dim;
        &self.states[off..off + self.dim]
    }

    pub fn value(&self, traj: usize, k: usize) -> f64 {
        self.values[traj * (self.horizon + 1) + k]
    }

    /// Terminal state of a trajectory (the max-iteration stopping rule).
    pub fn final_state(&self, traj: usize) -> &[f64] {
        self.state(traj, self.horizon)
    }
}

/// Best visited point over all trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub point: Vec<f64>,
    pub value: f64,
    pub trajectory: usize,
    pub step: usize,
}

struct Trajectory {
    states: Vec<f64>,
    values: Vec<f64>,
    best_step: usize,
}

fn run_one<O>(objective: &O, domain: &BoxDomain, noise: &dyn NoiseField, config: &LangevinConfig, j: usize) -> Result<Trajectory>
where
    O: Objective + ?Sized,
{
    let d = domain.dim();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(j as u64);
    let mut x: Vec<f64> = (0..d).map(|i| domain.lower()[i] + domain.width(i) * rng.random::<f64>()).collect();
    let mut states = Vec::with_capacity((config.horizon + 1) * d);
    let mut values = Vec::with_capacity(config.horizon + 1);
    let mut xi = vec![0.0; d];
    states.extend_from_slice(&x);
    values.push(objective.value(&x));
    for _ in 0..config.horizon {
        for v in xi.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        x = em_step(&x, objective, noise, domain, config, &xi)?;
        states.extend_from_slice(&x);
        values.push(objective.value(&x));
    }
    let best_step = values
        .iter()
        .enumerate()
        .fold(0, |best, (k, v)| if *v < values[best] { k } else { best });
    Ok(Trajectory { states, values, best_step })
}

/// Independent trajectories from uniform initial states. Trajectory `j`
/// uses stream `j` of a counter-based generator keyed by `config.seed`,
/// so results do not depend on execution order.
pub fn run_trajectories<O>(objective: &O, domain: &BoxDomain, noise: &dyn NoiseField, config: &LangevinConfig) -> Result<(TrajectoryLog, Candidate)>
where
    O: Objective + ?Sized,
{
    config.validate()?;
    if objective.dim() != domain.dim() {
        return Err(Error::Config("objective and domain dimensions differ".into()));
    }
    #[cfg(feature = "parallel")]
    let runs: Vec<Result<Trajectory>> = {
        use rayon::prelude::*;
        (0..config.n_traj).into_par_iter().map(|j| run_one(objective, domain, noise, config, j)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Result<Trajectory>> = (0..config.n_traj).map(|j| run_one(objective, domain, noise, config, j)).collect();

    let d = domain.dim();
    let mut log = TrajectoryLog {
        n_traj: config.n_traj,
        horizon: config.horizon,
        dim: d,
        states: Vec::with_capacity(config.n_traj * (config.horizon + 1) * d),
        values: Vec::with_capacity(config.n_traj * (config.horizon + 1)),
        best_points: Vec::with_capacity(config.n_traj),
        best_values: Vec::with_capacity(config.n_traj),
        best_steps: Vec::with_capacity(config.n_traj),
    };
    let mut best: Option<Candidate> = None;
    for (j, run) in runs.into_iter().enumerate() {
        let t = run?;
        let k = t.best_step;
        let point = t.states[k * d..(k + 1) * d].to_vec();
        let value = t.values[k];
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(Candidate { point: point.clone(), value, trajectory: j, step: k });
        }
        log.best_points.push(point);
        log.best_values.push(value);
        log.best_steps.push(k);
        log.states.extend_from_slice(&t.states);
        log.values.extend_from_slice(&t.values);
    }
    Ok((log, best.expect("n_traj >= 1")))
}
