//! CSV tables and binary dumps written by the subcommands.

use std::path::Path;

use ehjb_core::fd::{FdGrid, HowardSolution};
use ehjb_core::langevin::{Candidate, TrajectoryLog};
use ehjb_core::metrics::{ErrorReport, TrajectoryStats};
use ehjb_core::pinn::TrainLog;

use crate::error::{Result, RunError};

/// Shortest round-trip representation, in scientific notation outside
/// `[1e-4, 1e15)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Rows of already formatted cells under a fixed header.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text, columns: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width differs from header");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, self.text.as_bytes())
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(RunError::io(path))
}

pub fn train_log_csv(log: &TrainLog) -> Csv {
    let mut csv = Csv::new(&["iter", "loss_total", "loss_pde", "loss_bnd", "lr", "seconds"]);
    for e in &log.entries {
        csv.row(&[
            e.iteration.to_string(),
            fmt_f64(e.loss_total),
            fmt_f64(e.loss_pde),
            fmt_f64(e.loss_bnd),
            fmt_f64(e.learning_rate),
            fmt_f64(e.seconds),
        ]);
    }
    csv
}

pub const ERRORS_HEADER: [&str; 6] = ["lambda", "e_l2_rel", "e_linf", "residual_eps", "n_test", "seed"];

pub fn error_row(r: &ErrorReport) -> Vec<String> {
    vec![
        fmt_f64(r.lambda),
        fmt_f64(r.e_l2_rel),
        fmt_f64(r.e_linf),
        fmt_f64(r.residual_eps),
        r.n_test.to_string(),
        r.seed.to_string(),
    ]
}

pub fn errors_csv(r: &ErrorReport) -> Csv {
    let mut csv = Csv::new(&ERRORS_HEADER);
    csv.row(&error_row(r));
    csv
}

pub fn trajectories_csv(stats: &TrajectoryStats) -> Csv {
    let mut csv = Csv::new(&["k", "f_hat", "err_mean"]);
    for (k, (f, e)) in stats.f_hat.iter().zip(&stats.err_mean).enumerate() {
        csv.row(&[k.to_string(), fmt_f64(*f), fmt_f64(*e)]);
    }
    csv
}

pub fn candidate_csv(c: &Candidate) -> Csv {
    let mut header = vec!["trajectory".to_string(), "step".to_string(), "value".to_string()];
    header.extend((0..c.point.len()).map(|i| format!("x{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header);
    let mut row = vec![c.trajectory.to_string(), c.step.to_string(), fmt_f64(c.value)];
    row.extend(c.point.iter().map(|v| fmt_f64(*v)));
    csv.row(&row);
    csv
}

pub fn fd_csv(grid: &FdGrid, sol: &HowardSolution) -> Csv {
    let mut csv = Csv::new(&["x", "v", "v_xx", "policy", "noise_classical"]);
    for i in 0..grid.n_points() {
        csv.row(&[
            fmt_f64(grid.node(i)),
            fmt_f64(sol.values[i]),
            fmt_f64(sol.curvature[i]),
            fmt_f64(sol.policy[i]),
            fmt_f64(sol.noise_classical[i]),
        ]);
    }
    csv
}

/// Full state dump: `n_traj`, `horizon`, `d` as little-endian `u64`, then
/// states ordered by trajectory, step and coordinate as little-endian `f64`.
pub fn states_bin(log: &TrajectoryLog) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * log.states.len());
    for n in [log.n_traj, log.horizon, log.dim] {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for v in &log.states {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}
