//! PINN training of the exploratory HJB value network.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::diffnet::{backward, layer_sizes, MlpParams, ParamGrads, Tape};
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::math::cos;
use crate::ops::Problem;

/// Jet columns per tape when assembling the batch loss. The block layout
/// depends only on the dimension, so the reduction order does not depend on
/// the number of workers.
pub const BLOCK_COLUMNS: usize = 384;

/// Points per block for dimension `d`.
pub fn block_points(d: usize) -> usize {
    (BLOCK_COLUMNS / (1 + d + d * d)).max(1)
}

/// Learning-rate schedule `psi_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Constant(f64),
    /// Cosine decay from `initial` at `t = 0` to `last` at `t = T`.
    Cosine { initial: f64, last: f64 },
}

impl LearningRate {
    pub fn at(&self, t: usize, total: usize) -> f64 {
        match *self {
            LearningRate::Constant(lr) => lr,
            LearningRate::Cosine { initial, last } => {
                let frac = if total == 0 { 0.0 } else { t as f64 / total as f64 };
                last + 0.5 * (initial - last) * (1.0 + cos(core::f64::consts::PI * frac))
            }
        }
    }

    fn is_valid(&self) -> bool {
        match *self {
            LearningRate::Constant(lr) => lr.is_finite() && lr > 0.0,
            LearningRate::Cosine { initial, last } => initial.is_finite() && last.is_finite() && initial > 0.0 && last > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub alpha_res: f64,
    pub alpha_bnd: f64,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub iterations: usize,
    pub learning_rate: LearningRate,
    pub lion_beta1: f64,
    pub lion_beta2: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub log_every: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::Config(format!("train config: {m}")));
        if !(self.alpha_res >= 0.0 && self.alpha_bnd >= 0.0 && self.alpha_res.is_finite() && self.alpha_bnd.is_finite()) {
            return err("loss weights must be finite and non-negative");
        }
        if self.n_interior == 0 || self.n_boundary == 0 || self.log_every == 0 {
            return err("batch sizes and log interval must be positive");
        }
        if !(self.lion_beta1 > 0.0 && self.lion_beta1 < 1.0 && self.lion_beta2 > 0.0 && self.lion_beta2 < 1.0) {
            return err("LION betas must lie in (0, 1)");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return err("weight decay must be non-negative");
        }
        if !self.learning_rate.is_valid() {
            return err("learning rate must be positive");
        }
        Ok(())
    }
}

/// Named training scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 20000 iterations, 16384 interior points, 5 x 64 network.
    Paper,
    /// 5000 iterations, 2048 interior points, 5 x 32 network.
    Ci,
}

impl Preset {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper" => Some(Preset::Paper),
            "ci" => Some(Preset::Ci),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Paper => "paper",
            Preset::Ci => "ci",
        }
    }

    pub fn width(self) -> usize {
        match self {
            Preset::Paper => 64,
            Preset::Ci => 32,
        }
    }

    pub fn depth(self) -> usize {
        5
    }

    pub fn layer_sizes(self, dim: usize) -> Vec<usize> {
        layer_sizes(dim, self.width(), self.depth())
    }

    /// Training settings; `paper_boundary` is the benchmark's paper-scale
    /// boundary batch, reduced 16x (at least 64) for CI.
    pub fn train_config(self, rho: f64, paper_boundary: usize, seed: u64) -> TrainConfig {
        let (iterations, n_interior, n_boundary) = match self {
            Preset::Paper => (20_000, 16_384, paper_boundary),
            Preset::Ci => (5_000, 2_048, (paper_boundary / 16).max(64)),
        };
        TrainConfig {
            alpha_res: 1.0 / rho,
            alpha_bnd: 50.0,
            n_interior,
            n_boundary,
            iterations,
            learning_rate: LearningRate::Cosine { initial: 1e-3, last: 1e-5 },
            lion_beta1: 0.9,
            lion_beta2: 0.99,
            weight_decay: 0.0,
            seed,
            log_every: 50,
        }
    }
}

fn open_uniform<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    loop {
        let u: f64 = rng.random();
        let x = a + (b - a) * u;
        if a < x && x < b {
            return x;
        }
    }
}

/// `n` i.i.d. uniform points strictly inside the box, stored consecutively.
pub fn sample_interior<R: Rng + ?Sized>(domain: &BoxDomain, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Config("sample_interior needs n >= 1".into()));
    }
    let d = domain.dim();
    let mut pts = Vec::with_capacity(n * d);
    for _ in 0..n {
        for i in 0..d {
            pts.push(open_uniform(rng, domain.lower()[i], domain.upper()[i]));
        }
    }
    Ok(pts)
}

/// Boundary collocation points with outward unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    pub points: Vec<f64>,
    pub normals: Vec<f64>,
}

impl BoundarySample {
    pub fn len(&self, dim: usize) -> usize {
        self.points.len() / dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Uniform points on the box surface: a face is chosen with probability
/// proportional to its measure, then a uniform point on it.
pub fn sample_boundary<R: Rng + ?Sized>(domain: &BoxDomain, n: usize, rng: &mut R) -> Result<BoundarySample> {
    if n == 0 {
        return Err(Error::Config("sample_boundary needs n >= 1".into()));
    }
    let d = domain.dim();
    // faces 2i (lower) and 2i+1 (upper) share the measure of axis i
    let cumulative: Vec<f64> = (0..d)
        .scan(0.0, |acc, i| {
            *acc += 2.0 * domain.face_measure(i);
            Some(*acc)
        })
        .collect();
    let total = cumulative[d - 1];
    let mut points = Vec::with_capacity(n * d);
    let mut normals = vec![0.0; n * d];
    for q in 0..n {
        let r = rng.random::<f64>() * total;
        let axis = cumulative.iter().position(|&c| r < c).unwrap_or(d - 1);
        let upper = rng.random::<bool>();
        for i in 0..d {
            points.push(if i == axis {
                if upper {
                    domain.upper()[i]
                } else {
                    domain.lower()[i]
                }
            } else {
                open_uniform(rng, domain.lower()[i], domain.upper()[i])
            });
        }
        normals[q * d + axis] = if upper { 1.0 } else { -1.0 };
    }
    Ok(BoundarySample { points, normals })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    /// `alpha_res * mean(R^2)`.
    pub pde: f64,
    /// `alpha_bnd * mean(B^2)`.
    pub boundary: f64,
    pub total: f64,
}

fn check_batches(problem: &Problem, interior: &[f64], boundary: &BoundarySample) -> Result<(usize, usize)> {
    let d = problem.dim();
    if interior.is_empty() || boundary.is_empty() || interior.len() % d != 0 || boundary.points.len() % d != 0 {
        return Err(Error::Contract("collocation batches must be non-empty and match the problem dimension".into()));
    }
    if boundary.normals.len() != boundary.points.len() {
        return Err(Error::Contract("one normal per boundary point required".into()));
    }
    Ok((interior.len() / d, boundary.points.len() / d))
}

fn first_non_finite(values: &[f64], points: &[f64], d: usize) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(q) => Err(Error::Evaluation { point: points[q * d..(q + 1) * d].to_vec(), msg: "non-finite residual".into() }),
        None => Ok(()),
    }
}

/// Composite loss recorded on a single tape, which terminates in the total.
pub fn loss(
    params: &MlpParams,
    problem: &Problem,
    interior: &[f64],
    boundary: &BoundarySample,
    config: &TrainConfig,
    tape: &mut Tape<'_>,
) -> Result<LossTerms> {
    let (n_in, n_bd) = check_batches(problem, interior, boundary)?;
    if params.input_dim() != problem.dim() {
        return Err(Error::Contract("network and problem dimensions differ".into()));
    }
    let d = problem.dim();
    let jets = tape.record_jets(interior)?;
    let r = tape.pde_residual(jets, problem)?;
    first_non_finite(tape.output(r), interior, d)?;
    let pde = tape.sum_squares(r, config.alpha_res / n_in as f64);
    let jets_b = tape.record_jets(&boundary.points)?;
    let b = tape.normal_flux(jets_b, &boundary.normals)?;
    first_non_finite(tape.output(b), &boundary.points, d)?;
    let bnd = tape.sum_squares(b, config.alpha_bnd / n_bd as f64);
    let total = tape.sum(&[pde, bnd])?;
    Ok(LossTerms { pde: tape.output(pde)[0], boundary: tape.output(bnd)[0], total: tape.output(total)[0] })
}

enum Block<'a> {
    Interior(&'a [f64]),
    Boundary(&'a [f64], &'a [f64]),
}

fn block_loss_grad(params: &MlpParams, problem: &Problem, block: &Block<'_>, weight: f64) -> Result<(f64, ParamGrads)> {
    let d = problem.dim();
    let mut tape = Tape::new(params);
    let (pts, node) = match block {
        Block::Interior(pts) => {
            let jets = tape.record_jets(pts)?;
            (*pts, tape.pde_residual(jets, problem)?)
        }
        Block::Boundary(pts, normals) => {
            let jets = tape.record_jets(pts)?;
            (*pts, tape.normal_flux(jets, normals)?)
        }
    };
    first_non_finite(tape.output(node), pts, d)?;
    let s = tape.sum_squares(node, weight);
    let value = tape.output(s)[0];
    Ok((value, backward(&tape, 1.0)?))
}

/// Loss and its parameter gradient, assembled over fixed-size blocks.
pub fn loss_and_grad(
    params: &MlpParams,
    problem: &Problem,
    interior: &[f64],
    boundary: &BoundarySample,
    config: &TrainConfig,
) -> Result<(LossTerms, ParamGrads)> {
    let (n_in, n_bd) = check_batches(problem, interior, boundary)?;
    let d = problem.dim();
    let step = block_points(d) * d;
    let mut blocks: Vec<(Block<'_>, f64)> = interior
        .chunks(step)
        .map(|c| (Block::Interior(c), config.alpha_res / n_in as f64))
        .collect();
    let n_interior_blocks = blocks.len();
    blocks.extend(
        boundary
            .points
            .chunks(step)
            .zip(boundary.normals.chunks(step))
            .map(|(p, n)| (Block::Boundary(p, n), config.alpha_bnd / n_bd as f64)),
    );

    #[cfg(feature = "parallel")]
    let parts: Vec<Result<(f64, ParamGrads)>> = {
        use rayon::prelude::*;
        blocks.par_iter().map(|(b, w)| block_loss_grad(params, problem, b, *w)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<(f64, ParamGrads)>> = blocks.iter().map(|(b, w)| block_loss_grad(params, problem, b, *w)).collect();

    let mut grads = ParamGrads::zeros(params);
    let (mut pde, mut bnd) = (0.0, 0.0);
    for (i, part) in parts.into_iter().enumerate() {
        let (v, g) = part?;
        if i < n_interior_blocks {
            pde += v;
        } else {
            bnd += v;
        }
        grads.add_assign(&g);
    }
    Ok((LossTerms { pde, boundary: bnd, total: pde + bnd }, grads))
}

/// LION momentum state.
#[derive(Debug, Clone, PartialEq)]
pub struct LionState {
    pub momentum: ParamGrads,
}

impl LionState {
    pub fn new(params: &MlpParams) -> Self {
        Self { momentum: ParamGrads::zeros(params) }
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One LION update, in place:
/// `c = b1 m + (1-b1) g; p -= lr (sign(c) + wd p); m = b2 m + (1-b2) g`.
pub fn lion_step(params: &mut MlpParams, grads: &ParamGrads, state: &mut LionState, lr: f64, config: &TrainConfig) -> Result<()> {
    if !grads.same_shape(params) || !state.momentum.same_shape(params) {
        return Err(Error::Contract("gradient/momentum shapes do not match the parameters".into()));
    }
    let (b1, b2, wd) = (config.lion_beta1, config.lion_beta2, config.weight_decay);
    let n = params.n_layers();
    for l in 0..n {
        for (p, (g, m)) in params.weights_mut()[l].iter_mut().zip(grads.weights[l].iter().zip(state.momentum.weights[l].iter_mut())) {
            let c = b1 * *m + (1.0 - b1) * g;
            *p -= lr * (sign(c) + wd * *p);
            *m = b2 * *m + (1.0 - b2) * g;
        }
        for (p, (g, m)) in params.biases_mut()[l].iter_mut().zip(grads.biases[l].iter().zip(state.momentum.biases[l].iter_mut())) {
            let c = b1 * *m + (1.0 - b1) * g;
            *p -= lr * (sign(c) + wd * *p);
            *m = b2 * *m + (1.0 - b2) * g;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainLogEntry {
    pub iteration: usize,
    pub loss_total: f64,
    pub loss_pde: f64,
    pub loss_bnd: f64,
    pub learning_rate: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub entries: Vec<TrainLogEntry>,
}

/// Runs the training loop with a clock that always reads zero.
pub fn train(problem: &Problem, net: MlpParams, config: &TrainConfig) -> Result<(MlpParams, TrainLog)> {
    train_with_clock(problem, net, config, &|| 0.0)
}

/// Training loop: every iteration resamples both collocation sets, computes
/// the loss gradient and applies a LION step. `clock` supplies wall-clock
/// seconds for the log.
pub fn train_with_clock(
    problem: &Problem,
    mut net: MlpParams,
    config: &TrainConfig,
    clock: &dyn Fn() -> f64,
) -> Result<(MlpParams, TrainLog)> {
    config.validate()?;
    if net.input_dim() != problem.dim() {
        return Err(Error::Config(format!(
            "network input dimension {} does not match problem dimension {}",
            net.input_dim(),
            problem.dim()
        )));
    }
    let start = clock();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut state = LionState::new(&net);
    let mut log = TrainLog::default();
    let total = config.iterations;
    for t in 0..total {
        let interior = sample_interior(problem.domain(), config.n_interior, &mut rng)?;
        let boundary = sample_boundary(problem.domain(), config.n_boundary, &mut rng)?;
        let (terms, grads) = loss_and_grad(&net, problem, &interior, &boundary, config)
            .map_err(|e| Error::Training { iteration: t, msg: format!("{e}") })?;
        if !terms.total.is_finite() || !grads.is_finite() {
            return Err(Error::Training {
                iteration: t,
                msg: format!("non-finite loss (pde {}, boundary {})", terms.pde, terms.boundary),
            });
        }
        let lr = config.learning_rate.at(t, total);
        if t % config.log_every == 0 || t + 1 == total {
            log.entries.push(TrainLogEntry {
                iteration: t,
                loss_total: terms.total,
                loss_pde: terms.pde,
                loss_bnd: terms.boundary,
                learning_rate: lr,
                seconds: clock() - start,
            });
        }
        lion_step(&mut net, &grads, &mut state, lr, config)?;
    }
    Ok((net, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffnet::init_network;
    use crate::objectives::ManufacturedCosine;
    use crate::ops::ControlSet;

    fn small_config(iterations: usize) -> TrainConfig {
        TrainConfig {
            alpha_res: 1.0,
            alpha_bnd: 50.0,
            n_interior: 300,
            n_boundary: 20,
            iterations,
            learning_rate: LearningRate::Constant(3e-4),
            lion_beta1: 0.9,
            lion_beta2: 0.99,
            weight_decay: 0.0,
            seed: 9,
            log_every: 2,
        }
    }

    fn cosine(d: usize) -> ManufacturedCosine {
        ManufacturedCosine::new(d, 1.0, ControlSet::new(0.2, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn interior_samples() {
        let dom = BoxDomain::cube(2, 0.0, 1.0).unwrap();
        let a = sample_interior(&dom, 1000, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let b = sample_interior(&dom, 1000, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| 0.0 < x && x < 1.0));
        for i in 0..2 {
            let mean = a.iter().skip(i).step_by(2).sum::<f64>() / 1000.0;
            assert!((mean - 0.5).abs() <= 4.0 / 1000f64.sqrt());
        }
        assert!(sample_interior(&dom, 0, &mut ChaCha20Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn boundary_samples() {
        let dom = BoxDomain::cube(2, 0.0, 1.0).unwrap();
        let n = 10_000;
        let s = sample_boundary(&dom, n, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
        let mut hits = [0usize; 4];
        for (x, nrm) in s.points.chunks_exact(2).zip(s.normals.chunks_exact(2)) {
            let nonzero: Vec<usize> = (0..2).filter(|&i| nrm[i] != 0.0).collect();
            assert_eq!(nonzero.len(), 1);
            let i = nonzero[0];
            assert_eq!(nrm[i].abs(), 1.0);
            let pinned = (0..2).filter(|&k| x[k] == 0.0 || x[k] == 1.0).count();
            assert_eq!(pinned, 1);
            assert_eq!(x[i], if nrm[i] > 0.0 { 1.0 } else { 0.0 });
            hits[2 * i + usize::from(nrm[i] > 0.0)] += 1;
        }
        for h in hits {
            assert!((h as f64 / n as f64 - 0.25).abs() <= 0.05);
        }
    }

    #[test]
    fn boundary_faces_follow_measure() {
        let dom = BoxDomain::new(vec![0.0, 0.0], vec![3.0, 1.0]).unwrap();
        let s = sample_boundary(&dom, 20_000, &mut ChaCha20Rng::seed_from_u64(4)).unwrap();
        let on_x_faces = s.normals.chunks_exact(2).filter(|n| n[0] != 0.0).count() as f64 / 20_000.0;
        assert!((on_x_faces - 0.25).abs() < 0.02);
    }

    #[test]
    fn loss_weights_and_sign() {
        let m = cosine(1);
        let problem = m.problem(0.1).unwrap();
        let net = init_network(0, &[1, 8, 8, 1]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let interior = sample_interior(problem.domain(), 50, &mut rng).unwrap();
        let boundary = sample_boundary(problem.domain(), 8, &mut rng).unwrap();
        let mut cfg = small_config(1);
        let mut tape = Tape::new(&net);
        let full = loss(&net, &problem, &interior, &boundary, &cfg, &mut tape).unwrap();
        assert!(full.total >= 0.0 && full.pde >= 0.0 && full.boundary >= 0.0);
        assert!((full.total - full.pde - full.boundary).abs() < 1e-15);
        cfg.alpha_res = 0.0;
        let mut tape = Tape::new(&net);
        let bnd_only = loss(&net, &problem, &interior, &boundary, &cfg, &mut tape).unwrap();
        assert_eq!(bnd_only.total, bnd_only.boundary);
        assert_eq!(bnd_only.boundary, full.boundary);
    }

    #[test]
    fn blocked_gradient_matches_single_tape() {
        let m = cosine(2);
        let problem = m.problem(0.05).unwrap();
        let net = init_network(1, &[2, 6, 6, 1]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let interior = sample_interior(problem.domain(), 3 * block_points(2) + 5, &mut rng).unwrap();
        let boundary = sample_boundary(problem.domain(), 40, &mut rng).unwrap();
        let cfg = small_config(1);
        let mut tape = Tape::new(&net);
        let single = loss(&net, &problem, &interior, &boundary, &cfg, &mut tape).unwrap();
        let g_single = backward(&tape, 1.0).unwrap();
        let (blocked, g_blocked) = loss_and_grad(&net, &problem, &interior, &boundary, &cfg).unwrap();
        assert!((single.total - blocked.total).abs() <= 1e-13 * single.total);
        let scale = g_single.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (a, b) in g_single.iter().zip(g_blocked.iter()) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn empty_batches_rejected() {
        let m = cosine(1);
        let problem = m.problem(0.1).unwrap();
        let net = init_network(0, &[1, 4, 1]).unwrap();
        let empty = BoundarySample { points: vec![], normals: vec![] };
        assert!(loss_and_grad(&net, &problem, &[0.1], &empty, &small_config(1)).is_err());
    }

    #[test]
    fn lion_sign_update() {
        let mut net = init_network(0, &[1, 3, 1]).unwrap();
        let before = net.clone();
        let mut grads = ParamGrads::zeros(&net);
        let cfg = small_config(1);
        let mut state = LionState::new(&net);
        lion_step(&mut net, &grads, &mut state, 0.01, &cfg).unwrap();
        assert_eq!(net, before);

        for w in grads.weights.iter_mut().chain(grads.biases.iter_mut()) {
            w.iter_mut().for_each(|g| *g = 0.5);
        }
        lion_step(&mut net, &grads, &mut state, 0.01, &cfg).unwrap();
        for (a, b) in net.weights().iter().flatten().zip(before.weights().iter().flatten()) {
            assert_eq!(*a, b - 0.01);
        }
        for (a, b) in net.biases().iter().flatten().zip(before.biases().iter().flatten()) {
            assert_eq!(*a, b - 0.01);
        }
        lion_step(&mut net, &grads, &mut state, 0.01, &cfg).unwrap();
        let expected = (1.0 - 0.99 * 0.99) * 0.5;
        assert!(state.momentum.iter().all(|m| (m - expected).abs() < 1e-16));
    }

    #[test]
    fn lion_shape_mismatch() {
        let mut net = init_network(0, &[1, 3, 1]).unwrap();
        let other = init_network(0, &[1, 4, 1]).unwrap();
        let mut state = LionState::new(&net);
        assert!(matches!(
            lion_step(&mut net, &ParamGrads::zeros(&other), &mut state, 0.1, &small_config(1)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn zero_iterations_is_identity() {
        let problem = cosine(1).problem(0.32).unwrap();
        let net = init_network(0, &[1, 4, 1]).unwrap();
        let (out, log) = train(&problem, net.clone(), &small_config(0)).unwrap();
        assert_eq!(out, net);
        assert!(log.entries.is_empty());
    }

    #[test]
    fn training_is_deterministic_and_logged() {
        let problem = cosine(1).problem(0.32).unwrap();
        let net = init_network(0, &[1, 8, 8, 1]).unwrap();
        let cfg = small_config(7);
        let (a, log_a) = train(&problem, net.clone(), &cfg).unwrap();
        let (b, log_b) = train(&problem, net, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(log_a, log_b);
        let its: Vec<usize> = log_a.entries.iter().map(|e| e.iteration).collect();
        assert_eq!(its, vec![0, 2, 4, 6]);
        assert!(log_a.entries.iter().all(|e| e.loss_total.is_finite()));
    }

    #[test]
    fn schedules() {
        assert_eq!(LearningRate::Constant(0.1).at(5, 10), 0.1);
        let c = LearningRate::Cosine { initial: 1.0, last: 0.1 };
        assert_eq!(c.at(0, 10), 1.0);
        assert!((c.at(10, 10) - 0.1).abs() < 1e-15);
        assert!((c.at(5, 10) - 0.55).abs() < 1e-15);
    }

    #[test]
    fn presets() {
        assert_eq!(Preset::parse("ci"), Some(Preset::Ci));
        assert_eq!(Preset::parse("paper"), Some(Preset::Paper));
        assert_eq!(Preset::parse("large"), None);
        let ci = Preset::Ci.train_config(0.4, 1024, 0);
        assert_eq!((ci.iterations, ci.n_interior, ci.n_boundary), (5000, 2048, 64));
        assert_eq!(ci.alpha_res, 2.5);
        let paper = Preset::Paper.train_config(1.0, 4096, 0);
        assert_eq!((paper.iterations, paper.n_interior, paper.n_boundary), (20_000, 16_384, 4096));
        assert_eq!(Preset::Paper.layer_sizes(2), vec![2, 64, 64, 64, 64, 64, 1]);
        assert_eq!(Preset::Ci.layer_sizes(1), vec![1, 32, 32, 32, 32, 32, 1]);
    }
}
