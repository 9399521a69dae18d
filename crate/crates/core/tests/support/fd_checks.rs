//! Finite-difference checks of jets and parameter gradients, shared by the
//! derivative tests and the acceptance suite. Each check returns the
//! largest error it saw.

use ehjb_core::diffnet::layer_sizes;
use ehjb_core::objectives::{double_well_1d, gaussian_mixture_2d, ManufacturedCosine};
use ehjb_core::pinn::{loss, sample_boundary, sample_interior, LearningRate, TrainConfig};
use ehjb_core::{backward, forward_jet, init_network, ControlSet, MlpParams, Problem, Tape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Largest entrywise error relative to the magnitude of the reference vector.
pub fn max_rel_err(analytic: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    analytic.iter().zip(reference).map(|(a, b)| (a - b).abs() / b.abs().max(scale)).fold(0.0, f64::max)
}

pub fn random_net(rng: &mut ChaCha20Rng) -> MlpParams {
    let d = rng.random_range(1..=3);
    let width = rng.random_range(2..=8);
    let depth = rng.random_range(1..=3);
    init_network(rng.random(), &layer_sizes(d, width, depth)).unwrap()
}

pub fn random_point(rng: &mut ChaCha20Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
}

pub fn problem_for(d: usize, lambda: f64) -> Problem {
    let control = ControlSet::new(0.2, 1.5).unwrap();
    match d {
        1 => double_well_1d().problem(0.4, lambda, control).unwrap(),
        2 => gaussian_mixture_2d().problem(1.6, lambda, control).unwrap(),
        _ => ManufacturedCosine::new(d, 1.0, control).unwrap().problem(lambda).unwrap(),
    }
}

pub fn config() -> TrainConfig {
    TrainConfig {
        alpha_res: 1.3,
        alpha_bnd: 50.0,
        n_interior: 12,
        n_boundary: 4,
        iterations: 1,
        learning_rate: LearningRate::Constant(1e-3),
        lion_beta1: 0.9,
        lion_beta2: 0.99,
        weight_decay: 0.0,
        seed: 0,
        log_every: 1,
    }
}

/// Input gradients of `n` random networks against central differences.
pub fn jet_gradient_error(seed: u64, n: usize) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for _ in 0..n {
        let net = random_net(&mut rng);
        let d = net.input_dim();
        let x = random_point(&mut rng, d);
        let jet = forward_jet(&net, &x, None).unwrap();
        let fd: Vec<f64> = (0..d)
            .map(|i| {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += h;
                xm[i] -= h;
                (net.value(&xp).unwrap() - net.value(&xm).unwrap()) / (2.0 * h)
            })
            .collect();
        worst = worst.max(max_rel_err(&jet.gradient, &fd));
    }
    worst
}

/// Input Hessians of `n` random networks against differences of gradients.
pub fn jet_hessian_error(seed: u64, n: usize) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for _ in 0..n {
        let net = random_net(&mut rng);
        let d = net.input_dim();
        let x = random_point(&mut rng, d);
        let jet = forward_jet(&net, &x, None).unwrap();
        let mut fd = vec![0.0; d * d];
        for j in 0..d {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[j] += h;
            xm[j] -= h;
            let gp = forward_jet(&net, &xp, None).unwrap().gradient;
            let gm = forward_jet(&net, &xm, None).unwrap().gradient;
            for i in 0..d {
                fd[i * d + j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        worst = worst.max(max_rel_err(&jet.hessian, &fd));
    }
    worst
}

fn perturbed(net: &MlpParams, layer: usize, index: usize, is_bias: bool, delta: f64) -> MlpParams {
    let mut p = net.clone();
    if is_bias {
        p.biases_mut()[layer][index] += delta;
    } else {
        p.weights_mut()[layer][index] += delta;
    }
    p
}

/// Reverse-mode parameter gradient of a taped scalar against central
/// differences over every parameter.
pub fn parameter_gradient_error(net: &MlpParams, scalar: &dyn Fn(&MlpParams, &mut Tape<'_>) -> f64) -> f64 {
    let mut tape = Tape::new(net);
    scalar(net, &mut tape);
    let grads = backward(&tape, 1.0).unwrap();
    let h = 1e-6;
    let eval = |p: &MlpParams| {
        let mut t = Tape::new(p);
        scalar(p, &mut t)
    };
    let mut analytic = Vec::new();
    let mut fd = Vec::new();
    for l in 0..net.n_layers() {
        for (is_bias, len) in [(false, net.weights()[l].len()), (true, net.biases()[l].len())] {
            for i in 0..len {
                let up = eval(&perturbed(net, l, i, is_bias, h));
                let down = eval(&perturbed(net, l, i, is_bias, -h));
                fd.push((up - down) / (2.0 * h));
                analytic.push(if is_bias { grads.biases[l][i] } else { grads.weights[l][i] });
            }
        }
    }
    max_rel_err(&analytic, &fd)
}

/// Gradient of the summed squared residual for `n` random networks.
pub fn residual_gradient_error(seed: u64, n: usize) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..n {
        let net = random_net(&mut rng);
        let d = net.input_dim();
        let problem = problem_for(d, rng.random_range(0.02..0.5));
        let points = sample_interior(problem.domain(), 6, &mut rng).unwrap();
        worst = worst.max(parameter_gradient_error(&net, &|_p, tape| {
            let jets = tape.record_jets(&points).unwrap();
            let r = tape.pde_residual(jets, &problem).unwrap();
            let s = tape.sum_squares(r, 1.0);
            tape.output(s)[0]
        }));
    }
    worst
}

/// Gradient of the full collocation loss for `n` random networks.
pub fn loss_gradient_error(seed: u64, n: usize) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let cfg = config();
    let mut worst = 0.0_f64;
    for _ in 0..n {
        let net = random_net(&mut rng);
        let d = net.input_dim();
        let problem = problem_for(d, rng.random_range(0.02..0.5));
        let interior = sample_interior(problem.domain(), cfg.n_interior, &mut rng).unwrap();
        let boundary = sample_boundary(problem.domain(), cfg.n_boundary, &mut rng).unwrap();
        worst = worst.max(parameter_gradient_error(&net, &|p, tape| {
            loss(p, &problem, &interior, &boundary, &cfg, tape).unwrap().total
        }));
    }
    worst
}
