//! Command-line interface of the `ehjb` binary.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Overrides, CHECKPOINT};
use crate::config::{resolve, ExperimentConfig};
use crate::error::{Result, RunError, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "ehjb", version, about = "Exploratory-HJB noise for Langevin minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the value network and write a checkpoint and training log.
    SolveEhjb {
        #[command(flatten)]
        common: Common,
        /// Record elapsed seconds in the training log.
        #[arg(long)]
        wall_clock: bool,
    },
    /// Run the Langevin ensemble driven by a trained checkpoint.
    RunLangevin {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to load; defaults to `<out>/checkpoint`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Solve the classical one-dimensional HJB equation by Howard iteration.
    FdReference {
        #[command(flatten)]
        common: Common,
    },
    /// Repeat training (and Langevin runs for benchmarks) over one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted config key, e.g. `problem.lambda`; defaults to `[sweep].param`.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values; defaults to `[sweep].values`.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Option<Vec<String>>,
        #[arg(long)]
        wall_clock: bool,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `[output].dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["paper", "ci"])]
    preset: Option<String>,
    /// Seed for training and Langevin sampling.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let raw = ExperimentConfig::load(&self.config)?;
        let config = Overrides { preset: self.preset.clone(), seed: self.seed }.apply(&raw)?;
        let out = match (&self.out, &config.output.dir) {
            (Some(o), _) => o.clone(),
            (None, Some(d)) => PathBuf::from(d),
            (None, None) => return Err(RunError::Usage("no output directory: pass --out or set output.dir".into())),
        };
        Ok((config, out))
    }
}

/// Parses a command-line sweep value as a TOML scalar, falling back to a
/// plain string.
pub fn parse_value(s: &str) -> toml::Value {
    let s = s.trim();
    toml::from_str::<toml::Table>(&format!("v = {s}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(s.to_string()))
}

fn execute(command: Command) -> Result<String> {
    match command {
        Command::SolveEhjb { common, wall_clock } => {
            let (config, out) = common.load()?;
            let run = resolve(&config)?;
            let s = commands::solve_ehjb(&run, &out, wall_clock)?;
            let mut msg = format!("trained {} iterations into {}", run.resolved.train.iterations, out.display());
            if let Some(r) = s.report {
                msg.push_str(&format!("; e_l2_rel = {:.4e}, e_linf = {:.4e}", r.e_l2_rel, r.e_linf));
            }
            Ok(msg)
        }
        Command::RunLangevin { common, checkpoint } => {
            let (config, out) = common.load()?;
            let run = resolve(&config)?;
            let path = checkpoint.unwrap_or_else(|| out.join(CHECKPOINT));
            let params = commands::load_checkpoint(&run, &path)?;
            let l = commands::run_langevin(&run, &params, &out)?;
            Ok(format!(
                "best value {:.6e} at {:?}; final mean distance {:.4e}",
                l.candidate.value,
                l.candidate.point,
                l.stats.err_mean.last().copied().unwrap_or(f64::NAN)
            ))
        }
        Command::FdReference { common } => {
            let (config, out) = common.load()?;
            let run = resolve(&config)?;
            let fd = commands::fd_reference(&run, &out)?;
            Ok(format!("Howard iteration converged after {} evaluations", fd.solution.iterations))
        }
        Command::Sweep { common, param, values, wall_clock } => {
            let (config, out) = common.load()?;
            let (param, values) = sweep_spec(&config, param, values)?;
            let s = commands::sweep(&config, &param, &values, &out, wall_clock)?;
            Ok(format!("{} runs; summary in {}", s.rows.len(), out.join(commands::SUMMARY).display()))
        }
    }
}

fn sweep_spec(config: &ExperimentConfig, param: Option<String>, values: Option<Vec<String>>) -> Result<(String, Vec<toml::Value>)> {
    let param = param
        .or_else(|| config.sweep.as_ref().map(|s| s.param.clone()))
        .ok_or_else(|| RunError::Usage("no sweep parameter: pass --param or set sweep.param".into()))?;
    let values = match values {
        Some(v) => v.iter().filter(|s| !s.trim().is_empty()).map(|s| parse_value(s)).collect(),
        None => config.sweep.as_ref().map(|s| s.values.clone()).unwrap_or_default(),
    };
    if values.is_empty() {
        return Err(RunError::Usage("sweep needs at least one value".into()));
    }
    Ok((param, values))
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(msg) => {
            println!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Convenience for tests and scripts: `ehjb <args>` with paths as strings.
pub fn run_args(args: &[&str]) -> i32 {
    run(std::iter::once("ehjb").chain(args.iter().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_parsing() {
        assert_eq!(parse_value("0.5"), toml::Value::Float(0.5));
        assert_eq!(parse_value("3"), toml::Value::Integer(3));
        assert_eq!(parse_value("paper"), toml::Value::String("paper".into()));
        assert_eq!(parse_value("\"ci\""), toml::Value::String("ci".into()));
    }

    #[test]
    fn parse_errors_are_usage() {
        assert_eq!(run_args(&["solve-ehjb"]), EXIT_USAGE);
        assert_eq!(run_args(&["frobnicate"]), EXIT_USAGE);
        assert_eq!(run_args(&["solve-ehjb", "--config", "x.toml", "--preset", "huge"]), EXIT_USAGE);
    }

    #[test]
    fn missing_config_file_is_usage() {
        assert_eq!(run_args(&["fd-reference", "--config", "/nonexistent/cfg.toml", "--out", "/tmp"]), EXIT_USAGE);
    }
}
