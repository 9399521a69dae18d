//! The four subcommands, as library functions writing into an output
//! directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ehjb_core::fd::{howard_solve, FdGrid, FdProblem, HowardSolution};
use ehjb_core::langevin::{run_trajectories, Candidate, NetworkNoise, TrajectoryLog};
use ehjb_core::metrics::{laplacian_report, trajectory_stats, ErrorReport, TrajectoryStats};
use ehjb_core::objectives::Objective;
use ehjb_core::pinn::{train, train_with_clock, TrainLog};
use ehjb_core::{init_network, MlpParams};

use crate::checkpoint::{self, ProblemMeta};
use crate::config::{resolve, ExperimentConfig, Instance, ResolvedRun};
use crate::error::{Result, RunError};
use crate::output::{self, fmt_f64, Csv};

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    /// Replaces the training and Langevin seeds.
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, config: &ExperimentConfig) -> Result<ExperimentConfig> {
        let mut c = config.clone();
        if let Some(p) = &self.preset {
            c.train.preset = p.clone();
        }
        if let Some(s) = self.seed {
            c.train.seed = s;
            c.langevin.seed = s;
        }
        c.check().map_err(|e| match e {
            RunError::Config(m) => RunError::Usage(m),
            other => other,
        })?;
        Ok(c)
    }
}

pub const CONFIG_RESOLVED: &str = "config.resolved";
pub const CHECKPOINT: &str = "checkpoint";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const ERRORS: &str = "errors.csv";
pub const TRAJECTORIES: &str = "trajectories.csv";
pub const CANDIDATE: &str = "candidate.csv";
pub const STATES: &str = "states.bin";
pub const FD_REFERENCE: &str = "fd_reference.csv";
pub const SUMMARY: &str = "summary.csv";

fn prepare_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(RunError::io(out))
}

fn write_resolved(run: &ResolvedRun, out: &Path) -> Result<()> {
    output::write_file(&out.join(CONFIG_RESOLVED), run.to_toml().as_bytes())
}

fn problem_meta(run: &ResolvedRun) -> ProblemMeta {
    let r = &run.resolved;
    ProblemMeta {
        benchmark: r.benchmark.clone(),
        dim: r.dim,
        rho: r.rho,
        lambda: r.lambda,
        u_min: r.u_min,
        u_max: r.u_max,
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub params: MlpParams,
    pub log: TrainLog,
    /// Present for manufactured instances, whose exact Laplacian is known.
    pub report: Option<ErrorReport>,
}

/// Trains the value network and writes `checkpoint`, `train_log.csv` and,
/// for manufactured instances, `errors.csv`.
pub fn solve_ehjb(run: &ResolvedRun, out: &Path, wall_clock: bool) -> Result<SolveOutcome> {
    prepare_dir(out)?;
    write_resolved(run, out)?;
    let problem = run.problem()?;
    let t = &run.resolved.train;
    let net = init_network(t.init_seed, &t.layer_sizes)?;
    let config = run.train_config();
    let (params, log) = if wall_clock {
        let start = Instant::now();
        train_with_clock(&problem, net, &config, &|| start.elapsed().as_secs_f64())?
    } else {
        train(&problem, net, &config)?
    };
    checkpoint::save(&out.join(CHECKPOINT), &params, &problem_meta(run))?;
    output::train_log_csv(&log).write(&out.join(TRAIN_LOG))?;
    let report = match &run.instance {
        Instance::Manufactured(m) => {
            let mt = &run.resolved.metrics;
            let r = laplacian_report(&params, m, run.resolved.lambda, mt.n_test, mt.seed)?;
            output::errors_csv(&r).write(&out.join(ERRORS))?;
            Some(r)
        }
        Instance::Benchmark(_) => None,
    };
    Ok(SolveOutcome { params, log, report })
}

#[derive(Debug, Clone)]
pub struct LangevinOutcome {
    pub log: TrajectoryLog,
    pub candidate: Candidate,
    pub stats: TrajectoryStats,
}

/// Loads a checkpoint and refuses it unless it was trained for exactly the
/// configured problem.
pub fn load_checkpoint(run: &ResolvedRun, path: &Path) -> Result<MlpParams> {
    let (params, meta) = checkpoint::load(path)?;
    let want = problem_meta(run);
    if meta != want {
        return Err(RunError::Config(format!(
            "checkpoint {} was trained for {meta:?}, but the config describes {want:?}",
            path.display()
        )));
    }
    if params.input_dim() != want.dim {
        return Err(RunError::Config(format!(
            "checkpoint input dimension {} does not match {} ({})",
            params.input_dim(),
            want.benchmark,
            want.dim
        )));
    }
    Ok(params)
}

/// Runs the Langevin ensemble with the noise of `params` and writes
/// `trajectories.csv`, `candidate.csv` and optionally `states.bin`.
pub fn run_langevin(run: &ResolvedRun, params: &MlpParams, out: &Path) -> Result<LangevinOutcome> {
    let Instance::Benchmark(bench) = &run.instance else {
        return Err(RunError::Config(format!("{} has no objective to minimize", run.resolved.benchmark)));
    };
    if params.input_dim() != bench.dim() {
        return Err(RunError::Config(format!(
            "network input dimension {} does not match {} ({})",
            params.input_dim(),
            bench.name(),
            bench.dim()
        )));
    }
    prepare_dir(out)?;
    write_resolved(run, out)?;
    let noise = NetworkNoise::new(params, run.resolved.lambda, run.control())?;
    let (log, candidate) = run_trajectories(bench, bench.domain(), &noise, &run.langevin_config())?;
    let stats = trajectory_stats(&log, bench.minimizers())?;
    output::trajectories_csv(&stats).write(&out.join(TRAJECTORIES))?;
    output::candidate_csv(&candidate).write(&out.join(CANDIDATE))?;
    if run.resolved.langevin.dump_states {
        output::write_file(&out.join(STATES), &output::states_bin(&log))?;
    }
    Ok(LangevinOutcome { log, candidate, stats })
}

/// Smallest grid accepted by `fd-reference`: two interior nodes.
pub const FD_MIN_POINTS: usize = 4;

#[derive(Debug, Clone)]
pub struct FdOutcome {
    pub grid: FdGrid,
    pub solution: HowardSolution,
}

/// Howard reference solution of the classical HJB equation on a
/// one-dimensional benchmark; writes `fd_reference.csv`.
pub fn fd_reference(run: &ResolvedRun, out: &Path) -> Result<FdOutcome> {
    let fd = &run.resolved.fd;
    if fd.n_points < FD_MIN_POINTS {
        return Err(RunError::Usage(format!(
            "fd.n_points must be at least {FD_MIN_POINTS} so the grid has interior nodes, got {}",
            fd.n_points
        )));
    }
    let bench = match &run.instance {
        Instance::Benchmark(b) if b.dim() == 1 => b,
        _ => {
            return Err(RunError::Config(format!(
                "the finite-difference reference needs a one-dimensional benchmark, got {}",
                run.resolved.benchmark
            )))
        }
    };
    prepare_dir(out)?;
    write_resolved(run, out)?;
    let domain = bench.domain();
    let grid = FdGrid::new(domain.lower()[0], domain.upper()[0], fd.n_points)?;
    let problem = FdProblem::from_objective(bench, &grid, run.resolved.rho)?;
    let solution = howard_solve(&problem, &grid, &run.control(), fd.eps_u, fd.k_max)?;
    output::fd_csv(&grid, &solution).write(&out.join(FD_REFERENCE))?;
    if !solution.converged {
        return Err(RunError::Core(ehjb_core::Error::Solver(format!(
            "Howard iteration did not converge within {} iterations",
            fd.k_max
        ))));
    }
    Ok(FdOutcome { grid, solution })
}

/// Trains and, for benchmarks, runs the Langevin ensemble. A checkpoint
/// from `reuse` is copied instead of retraining when the problem and
/// training settings coincide.
fn solve_and_run(run: &ResolvedRun, out: &Path, wall_clock: bool, reuse: &mut Vec<(String, PathBuf)>) -> Result<SweepRow> {
    let key = format!("{:?}{:?}", problem_meta(run), run.resolved.train);
    let mut row = SweepRow::default();
    let params = match reuse.iter().find(|(k, _)| *k == key) {
        Some((_, from)) => {
            prepare_dir(out)?;
            write_resolved(run, out)?;
            for name in [CHECKPOINT, TRAIN_LOG, ERRORS] {
                let src = from.join(name);
                if src.exists() {
                    std::fs::copy(&src, out.join(name)).map_err(RunError::io(&src))?;
                }
            }
            let params = load_checkpoint(run, &out.join(CHECKPOINT))?;
            row.final_loss = last_loss(&from.join(TRAIN_LOG))?;
            if let Instance::Manufactured(m) = &run.instance {
                let mt = &run.resolved.metrics;
                row.report = Some(laplacian_report(&params, m, run.resolved.lambda, mt.n_test, mt.seed)?);
            }
            params
        }
        None => {
            let s = solve_ehjb(run, out, wall_clock)?;
            reuse.push((key, out.to_path_buf()));
            row.final_loss = s.log.entries.last().map(|e| e.loss_total);
            row.report = s.report;
            s.params
        }
    };
    if let Instance::Benchmark(_) = run.instance {
        let l = run_langevin(run, &params, out)?;
        row.f_hat_final = l.stats.f_hat.last().copied();
        row.err_final = l.stats.err_mean.last().copied();
        row.best_value = Some(l.candidate.value);
    }
    Ok(row)
}

fn last_loss(path: &Path) -> Result<Option<f64>> {
    let text = std::fs::read_to_string(path).map_err(RunError::io(path))?;
    Ok(text.lines().last().and_then(|l| l.split(',').nth(1)).and_then(|v| v.parse().ok()))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepRow {
    pub final_loss: Option<f64>,
    pub report: Option<ErrorReport>,
    pub f_hat_final: Option<f64>,
    pub err_final: Option<f64>,
    pub best_value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub dirs: Vec<PathBuf>,
    pub rows: Vec<SweepRow>,
    pub summary: Csv,
}

/// Directory name of one sweep point, e.g. `lambda=0.02`.
pub fn sweep_dir_name(param: &str, value: &toml::Value) -> String {
    let leaf = param.rsplit('.').next().unwrap_or(param);
    let v = match value {
        toml::Value::Float(f) => fmt_f64(*f),
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    format!("{leaf}={v}")
}

/// Runs the pipeline once per value of `param` and writes `summary.csv`.
pub fn sweep(config: &ExperimentConfig, param: &str, values: &[toml::Value], out: &Path, wall_clock: bool) -> Result<SweepOutcome> {
    if values.is_empty() {
        return Err(RunError::Usage("sweep needs at least one value".into()));
    }
    let runs = values
        .iter()
        .map(|v| resolve(&config.with_override(param, v.clone())?))
        .collect::<Result<Vec<_>>>()?;
    prepare_dir(out)?;
    let mut summary = Csv::new(&[
        "param",
        "value",
        "loss_total",
        "e_l2_rel",
        "e_linf",
        "residual_eps",
        "f_hat_final",
        "err_mean_final",
        "best_value",
    ]);
    let mut reuse = Vec::new();
    let mut dirs = Vec::new();
    let mut rows = Vec::new();
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for (run, value) in runs.iter().zip(values) {
        let dir = out.join(sweep_dir_name(param, value));
        let row = solve_and_run(run, &dir, wall_clock, &mut reuse)?;
        summary.row(&[
            param.to_string(),
            sweep_dir_name(param, value).split_once('=').unwrap().1.to_string(),
            opt(row.final_loss),
            opt(row.report.map(|r| r.e_l2_rel)),
            opt(row.report.map(|r| r.e_linf)),
            opt(row.report.map(|r| r.residual_eps)),
            opt(row.f_hat_final),
            opt(row.err_final),
            opt(row.best_value),
        ]);
        dirs.push(dir);
        rows.push(row);
    }
    summary.write(&out.join(SUMMARY))?;
    Ok(SweepOutcome { dirs, rows, summary })
}
