//! End-to-end runs of the `ehjb` binary on small configs.

use std::path::{Path, PathBuf};
use std::process::Command;

use ehjb_core::langevin::mirror_coord;
use ehjb_core::objectives::{double_well_1d, Objective};

const TINY_COSINE: &str = r#"
[problem]
benchmark = "cosine_d1"
rho = 1.0
lambda = 0.32
u_min = 0.2
u_max = 1.0

[train]
preset = "ci"
iterations = 30
n_interior = 64
width = 8
depth = 2
log_every = 10

[metrics]
n_test = 256
"#;

const TINY_DOUBLE_WELL: &str = r#"
[problem]
benchmark = "double_well_1d"
rho = 0.4
lambda = 0.04
u_min = 0.2
c_kappa = 2.0

[train]
iterations = 20
n_interior = 64
width = 8
depth = 2

[langevin]
horizon = 40
n_traj = 6
s = 0.5
dump_states = true
"#;

fn ehjb(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ehjb")).args(args).output().expect("binary runs");
    let text = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    (out.status.code().expect("exit code"), text)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read(path: PathBuf) -> Vec<u8> {
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn column(csv: &[u8], index: usize) -> Vec<f64> {
    String::from_utf8_lossy(csv).lines().skip(1).map(|l| l.split(',').nth(index).unwrap().parse().unwrap()).collect()
}

/// `(n_traj, horizon, d, states)` of a `states.bin` dump.
fn states(bytes: &[u8]) -> (usize, usize, usize, Vec<f64>) {
    let word = |i: usize| u64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap()) as usize;
    let data = bytes[24..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    (word(0), word(1), word(2), data)
}

#[test]
fn solve_ehjb_writes_artifacts_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cos.toml", TINY_COSINE);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let (code, text) = ehjb(&["solve-ehjb", "--config", s(&cfg), "--out", s(out)]);
        assert_eq!(code, 0, "{text}");
    }
    for name in ["config.resolved", "checkpoint", "train_log.csv", "errors.csv"] {
        assert_eq!(read(a.join(name)), read(b.join(name)), "{name} differs between runs");
    }
    let errors = String::from_utf8(read(a.join("errors.csv"))).unwrap();
    let lines: Vec<&str> = errors.lines().collect();
    assert_eq!(lines[0], "lambda,e_l2_rel,e_linf,residual_eps,n_test,seed");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0.32,"));
    let log = String::from_utf8(read(a.join("train_log.csv"))).unwrap();
    assert!(log.starts_with("iter,loss_total,loss_pde,loss_bnd,lr,seconds\n0,"));
    assert_eq!(column(log.as_bytes(), 0), vec![0.0, 10.0, 20.0, 29.0]);
    assert!(column(log.as_bytes(), 5).iter().all(|t| *t == 0.0));
}

#[test]
fn seed_and_preset_flags_reach_the_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cos.toml", TINY_COSINE);
    let out = tmp.path().join("o");
    let (code, text) = ehjb(&["solve-ehjb", "--config", s(&cfg), "--out", s(&out), "--seed", "7", "--preset", "paper"]);
    assert_eq!(code, 0, "{text}");
    let resolved = String::from_utf8(read(out.join("config.resolved"))).unwrap();
    assert!(resolved.contains("preset = \"paper\""));
    assert!(resolved.contains("seed = 7"));
    assert!(resolved.contains("n_interior = 64"));
    assert!(resolved.contains("n_boundary = 1024"));
}

#[test]
fn invalid_benchmark_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &TINY_COSINE.replace("cosine_d1", "rosenbrock"));
    let (code, text) = ehjb(&["solve-ehjb", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(code, 2, "{text}");
    assert!(text.contains("rosenbrock"));
}

#[test]
fn output_directory_is_required() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cos.toml", TINY_COSINE);
    assert_eq!(ehjb(&["solve-ehjb", "--config", s(&cfg)]).0, 2);
}

#[test]
fn fd_reference_defaults_and_small_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[problem]\nbenchmark = \"double_well_1d\"\nrho = 0.4\nlambda = 0.04\nu_min = 0.2\nu_max = 142.0\n";
    let cfg = write_config(tmp.path(), "fd.toml", text);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let (code, msg) = ehjb(&["fd-reference", "--config", s(&cfg), "--out", s(out)]);
        assert_eq!(code, 0, "{msg}");
    }
    let csv = read(a.join("fd_reference.csv"));
    assert_eq!(csv, read(b.join("fd_reference.csv")));
    assert!(csv.starts_with(b"x,v,v_xx,policy,noise_classical\n"));
    assert_eq!(column(&csv, 0).len(), 1001);

    let three = write_config(tmp.path(), "fd3.toml", &format!("{text}\n[fd]\nn_points = 3\n"));
    assert_eq!(ehjb(&["fd-reference", "--config", s(&three), "--out", s(&a)]).0, 2);

    let stalled = write_config(tmp.path(), "fd1.toml", &format!("{text}\n[fd]\nk_max = 1\n"));
    assert_eq!(ehjb(&["fd-reference", "--config", s(&stalled), "--out", s(&a)]).0, 3);

    let mixture = write_config(tmp.path(), "fd2.toml", &text.replace("double_well_1d", "gauss_mix_2d"));
    assert_eq!(ehjb(&["fd-reference", "--config", s(&mixture), "--out", s(&a)]).0, 2);
}

#[test]
fn langevin_rejects_mismatched_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let dw = write_config(tmp.path(), "dw.toml", TINY_DOUBLE_WELL);
    let train = tmp.path().join("train");
    assert_eq!(ehjb(&["solve-ehjb", "--config", s(&dw), "--out", s(&train)]).0, 0);
    let ckpt = train.join("checkpoint");

    let mixture = write_config(tmp.path(), "gm.toml", &TINY_DOUBLE_WELL.replace("double_well_1d", "gauss_mix_2d"));
    let (code, text) = ehjb(&["run-langevin", "--config", s(&mixture), "--out", s(tmp.path()), "--checkpoint", s(&ckpt)]);
    assert_eq!(code, 2, "{text}");

    let other_lambda = write_config(tmp.path(), "dw2.toml", &TINY_DOUBLE_WELL.replace("lambda = 0.04", "lambda = 0.08"));
    assert_eq!(ehjb(&["run-langevin", "--config", s(&other_lambda), "--out", s(tmp.path()), "--checkpoint", s(&ckpt)]).0, 2);

    let missing = tmp.path().join("nowhere");
    assert_eq!(ehjb(&["run-langevin", "--config", s(&dw), "--out", s(&missing)]).0, 2);
}

#[test]
fn single_trajectory_average_is_the_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "dw.toml", &TINY_DOUBLE_WELL.replace("n_traj = 6", "n_traj = 1"));
    let out = tmp.path().join("o");
    assert_eq!(ehjb(&["solve-ehjb", "--config", s(&cfg), "--out", s(&out)]).0, 0);
    let (code, text) = ehjb(&["run-langevin", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code, 0, "{text}");
    let f_hat = column(&read(out.join("trajectories.csv")), 1);
    let (n, horizon, d, xs) = states(&read(out.join("states.bin")));
    assert_eq!((n, horizon, d), (1, 40, 1));
    let f = double_well_1d();
    let values: Vec<f64> = xs.iter().map(|x| f.value(&[*x])).collect();
    assert_eq!(f_hat, values);
}

#[test]
fn full_truncation_runs_mirrored_gradient_descent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "dw.toml", &TINY_DOUBLE_WELL.replace("s = 0.5", "s = 1.0"));
    let out = tmp.path().join("o");
    assert_eq!(ehjb(&["solve-ehjb", "--config", s(&cfg), "--out", s(&out)]).0, 0);
    assert_eq!(ehjb(&["run-langevin", "--config", s(&cfg), "--out", s(&out)]).0, 0);
    let (n, horizon, _, xs) = states(&read(out.join("states.bin")));
    let f = double_well_1d();
    let (a, b) = (f.domain().lower()[0], f.domain().upper()[0]);
    for j in 0..n {
        let traj = &xs[j * (horizon + 1)..(j + 1) * (horizon + 1)];
        for k in 0..horizon {
            let mut g = [0.0];
            f.gradient(&[traj[k]], &mut g);
            assert_eq!(traj[k + 1], mirror_coord(traj[k] - 0.016 * g[0], a, b));
        }
    }
}

#[test]
fn truncation_sweep_emits_one_run_per_fraction() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "dw.toml", TINY_DOUBLE_WELL);
    let out = tmp.path().join("sweep");
    let (code, text) =
        ehjb(&["sweep", "--config", s(&cfg), "--out", s(&out), "--param", "langevin.s", "--values", "0,0.0625,0.125,0.25,0.5"]);
    assert_eq!(code, 0, "{text}");
    let names = ["s=0", "s=0.0625", "s=0.125", "s=0.25", "s=0.5"];
    let first = read(out.join(names[0]).join("checkpoint"));
    for name in names {
        let dir = out.join(name);
        assert_eq!(column(&read(dir.join("trajectories.csv")), 0).len(), 41);
        assert_eq!(read(dir.join("checkpoint")), first, "{name} retrained");
    }
    let summary = String::from_utf8(read(out.join("summary.csv"))).unwrap();
    assert_eq!(summary.lines().count(), 6);
    assert!(summary.lines().nth(2).unwrap().starts_with("langevin.s,0.0625,"));
}

#[test]
fn sweep_needs_values() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "dw.toml", TINY_DOUBLE_WELL);
    let out = tmp.path().join("sweep");
    assert_eq!(ehjb(&["sweep", "--config", s(&cfg), "--out", s(&out), "--param", "problem.lambda", "--values"]).0, 2);
    assert_eq!(ehjb(&["sweep", "--config", s(&cfg), "--out", s(&out), "--param", "problem.lambda"]).0, 2);
    assert_eq!(ehjb(&["sweep", "--config", s(&cfg), "--out", s(&out), "--param", "lambda", "--values", "0.1"]).0, 2);
    assert_eq!(ehjb(&["sweep", "--config", s(&cfg), "--out", s(&out), "--param", "langevin.s", "--values", "3"]).0, 2);
}

#[test]
fn shipped_configs_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let config = ehjb_runner::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        ehjb_runner::resolve(&config).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if let Some(sweep) = &config.sweep {
            for v in &sweep.values {
                let c = config.with_override(&sweep.param, v.clone()).unwrap();
                ehjb_runner::resolve(&c).unwrap_or_else(|e| panic!("{} at {v}: {e}", path.display()));
            }
        }
        n += 1;
    }
    assert!(n >= 10);
}
