//! Experiment configuration files and their resolution into concrete settings.

use std::path::Path;

use ehjb_core::langevin::{estimate_kappa, LangevinConfig};
use ehjb_core::objectives::{benchmark_by_name, manufactured_dim, Benchmark, ManufacturedCosine, BENCHMARK_NAMES};
use ehjb_core::pinn::{LearningRate, Preset, TrainConfig};
use ehjb_core::{ControlSet, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RunError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub langevin: LangevinSection,
    #[serde(default)]
    pub fd: FdSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub benchmark: String,
    pub rho: f64,
    pub lambda: f64,
    pub u_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_kappa: Option<f64>,
    #[serde(default = "default_kappa_samples")]
    pub kappa_samples: usize,
    #[serde(default)]
    pub kappa_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default)]
    pub seed: u64,
    /// Boundary batch of the paper-scale run; the CI preset derives its own.
    #[serde(default = "default_paper_boundary")]
    pub paper_boundary: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_interior: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_boundary: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Initial learning rate; constant unless `lr_final` is also given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    /// Final learning rate of a cosine decay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_res: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_bnd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lion_beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lion_beta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_every: Option<usize>,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            preset: default_preset(),
            seed: 0,
            paper_boundary: default_paper_boundary(),
            iterations: None,
            n_interior: None,
            n_boundary: None,
            width: None,
            depth: None,
            lr: None,
            lr_final: None,
            alpha_res: None,
            alpha_bnd: None,
            lion_beta1: None,
            lion_beta2: None,
            weight_decay: None,
            log_every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LangevinSection {
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Truncation level as a fraction of `sqrt(2 u_max)`.
    #[serde(default)]
    pub s: f64,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dump_states: bool,
}

impl Default for LangevinSection {
    fn default() -> Self {
        Self {
            step_size: default_step_size(),
            horizon: default_horizon(),
            s: 0.0,
            n_traj: default_n_traj(),
            seed: 0,
            dump_states: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdSection {
    #[serde(default = "default_fd_points")]
    pub n_points: usize,
    #[serde(default = "default_eps_u")]
    pub eps_u: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

impl Default for FdSection {
    fn default() -> Self {
        Self { n_points: default_fd_points(), eps_u: default_eps_u(), k_max: default_k_max() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_test_seed")]
    pub seed: u64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self { n_test: default_n_test(), seed: default_test_seed() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Dotted key such as `problem.lambda` or `langevin.s`.
    pub param: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

fn default_kappa_samples() -> usize {
    2000
}
fn default_preset() -> String {
    "ci".into()
}
fn default_paper_boundary() -> usize {
    1024
}
fn default_step_size() -> f64 {
    0.016
}
fn default_horizon() -> usize {
    1000
}
fn default_n_traj() -> usize {
    100
}
fn default_fd_points() -> usize {
    1001
}
fn default_eps_u() -> f64 {
    1e-4
}
fn default_k_max() -> usize {
    2000
}
fn default_n_test() -> usize {
    ehjb_core::metrics::N_TEST
}
fn default_test_seed() -> u64 {
    4096
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(RunError::io(path))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            RunError::Config(m) => RunError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn from_value(value: toml::Value) -> Result<Self> {
        let cfg: Self = value.try_into().map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Structural checks that do not need any computation.
    pub fn check(&self) -> Result<()> {
        let p = &self.problem;
        if p.u_max.is_some() == p.c_kappa.is_some() {
            return Err(RunError::Config("exactly one of problem.u_max and problem.c_kappa must be set".into()));
        }
        if !(0.0..=1.0).contains(&self.langevin.s) {
            return Err(RunError::Config(format!("langevin.s must lie in [0, 1], got {}", self.langevin.s)));
        }
        if Preset::parse(&self.train.preset).is_none() {
            return Err(RunError::Config(format!("train.preset must be `paper` or `ci`, got `{}`", self.train.preset)));
        }
        instance_for(&p.benchmark)?;
        Ok(())
    }

    /// Copy with the dotted `key` set to `value`. Setting one of `u_max` /
    /// `c_kappa` clears the other.
    pub fn with_override(&self, key: &str, value: toml::Value) -> Result<Self> {
        let mut root = toml::Value::try_from(self).map_err(|e| RunError::Config(e.to_string()))?;
        let (section, field) = key
            .split_once('.')
            .ok_or_else(|| RunError::Usage(format!("sweep parameter `{key}` must look like section.field")))?;
        let table = root
            .as_table_mut()
            .expect("config serializes to a table")
            .entry(section)
            .or_insert_with(|| toml::Value::Table(Default::default()));
        let table = table
            .as_table_mut()
            .ok_or_else(|| RunError::Usage(format!("`{section}` is not a config section")))?;
        if section == "problem" {
            match field {
                "u_max" => {
                    table.remove("c_kappa");
                }
                "c_kappa" => {
                    table.remove("u_max");
                }
                _ => {}
            }
        }
        let retry = match &value {
            toml::Value::Integer(i) => Some(toml::Value::Float(*i as f64)),
            _ => None,
        };
        table.insert(field.to_string(), value);
        let first = Self::from_value(root.clone());
        let result = match (first, retry) {
            (Err(_), Some(float)) => {
                root[section][field] = float;
                Self::from_value(root)
            }
            (r, _) => r,
        };
        result.map_err(|e| match e {
            RunError::Config(m) => RunError::Usage(format!("cannot set {key}: {m}")),
            other => other,
        })
    }

    pub fn preset(&self) -> Preset {
        Preset::parse(&self.train.preset).expect("checked on load")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }
}

/// The object a config refers to.
#[derive(Debug, Clone)]
pub enum Instance {
    Manufactured(ManufacturedCosine),
    Benchmark(Benchmark),
}

fn instance_for(name: &str) -> Result<Option<usize>> {
    if let Some(d) = manufactured_dim(name) {
        return Ok(Some(d));
    }
    if benchmark_by_name(name).is_some() {
        return Ok(None);
    }
    Err(RunError::Usage(format!(
        "unknown benchmark `{name}`; expected one of {} or cosine_d<N>",
        BENCHMARK_NAMES.join(", ")
    )))
}

/// Every derived quantity of a run, written out as `config.resolved`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub benchmark: String,
    pub dim: usize,
    pub rho: f64,
    pub lambda: f64,
    pub u_min: f64,
    pub u_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_kappa: Option<f64>,
    pub train: ResolvedTrain,
    pub langevin: ResolvedLangevin,
    pub fd: FdSection,
    pub metrics: MetricsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedTrain {
    pub preset: String,
    pub layer_sizes: Vec<usize>,
    pub init_seed: u64,
    pub seed: u64,
    pub iterations: usize,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub alpha_res: f64,
    pub alpha_bnd: f64,
    pub lr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_final: Option<f64>,
    pub lion_beta1: f64,
    pub lion_beta2: f64,
    pub weight_decay: f64,
    pub log_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedLangevin {
    pub step_size: f64,
    pub horizon: usize,
    pub s: f64,
    pub tau: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub dump_states: bool,
}

/// A config with `u_max`, `tau` and the training schedule made concrete.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub config: ExperimentConfig,
    pub instance: Instance,
    pub resolved: Resolved,
}

impl ResolvedRun {
    pub fn control(&self) -> ControlSet {
        ControlSet::new(self.resolved.u_min, self.resolved.u_max).expect("validated during resolution")
    }

    pub fn problem(&self) -> Result<Problem> {
        let r = &self.resolved;
        Ok(match &self.instance {
            Instance::Manufactured(m) => m.problem(r.lambda)?,
            Instance::Benchmark(b) => b.problem(r.rho, r.lambda, self.control())?,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.resolved.train;
        TrainConfig {
            alpha_res: t.alpha_res,
            alpha_bnd: t.alpha_bnd,
            n_interior: t.n_interior,
            n_boundary: t.n_boundary,
            iterations: t.iterations,
            learning_rate: match t.lr_final {
                Some(last) => LearningRate::Cosine { initial: t.lr, last },
                None => LearningRate::Constant(t.lr),
            },
            lion_beta1: t.lion_beta1,
            lion_beta2: t.lion_beta2,
            weight_decay: t.weight_decay,
            seed: t.seed,
            log_every: t.log_every,
        }
    }

    pub fn langevin_config(&self) -> LangevinConfig {
        let l = &self.resolved.langevin;
        LangevinConfig { step_size: l.step_size, horizon: l.horizon, truncation: l.tau, n_traj: l.n_traj, seed: l.seed }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.resolved).expect("resolved config is serializable")
    }
}

/// Resolves a checked config: picks the instance, estimates `kappa` when
/// `u_max` is given through `c_kappa`, and expands the training preset.
pub fn resolve(config: &ExperimentConfig) -> Result<ResolvedRun> {
    config.check()?;
    let p = &config.problem;
    let (instance, dim) = match instance_for(&p.benchmark)? {
        Some(d) => {
            let u_max = p.u_max.ok_or_else(|| {
                RunError::Config(format!("{} has no objective gradient for the kappa rule; set problem.u_max", p.benchmark))
            })?;
            let control = ControlSet::new(p.u_min, u_max)?;
            (Instance::Manufactured(ManufacturedCosine::new(d, p.rho, control)?), d)
        }
        None => {
            let b = benchmark_by_name(&p.benchmark).expect("name checked");
            let d = b.domain().dim();
            (Instance::Benchmark(b), d)
        }
    };
    let (u_max, kappa) = match (p.u_max, p.c_kappa, &instance) {
        (Some(u), None, _) => (u, None),
        (None, Some(c), Instance::Benchmark(b)) => {
            if !(c.is_finite() && c > 0.0) {
                return Err(RunError::Config(format!("problem.c_kappa must be positive, got {c}")));
            }
            let mut rng = ChaCha20Rng::seed_from_u64(p.kappa_seed);
            let kappa = estimate_kappa(b, b.domain(), p.kappa_samples, &mut rng)?;
            (c * kappa, Some(kappa))
        }
        _ => unreachable!("checked above"),
    };
    ControlSet::new(p.u_min, u_max)?;
    if !(p.lambda.is_finite() && p.lambda > 0.0 && p.rho.is_finite() && p.rho > 0.0) {
        return Err(RunError::Config("problem.lambda and problem.rho must be positive".into()));
    }

    let preset = config.preset();
    let t = &config.train;
    let base = preset.train_config(p.rho, t.paper_boundary, t.seed);
    let (lr, lr_final) = match (t.lr, t.lr_final, base.learning_rate) {
        (Some(lr), last, _) => (lr, last),
        (None, Some(_), _) => return Err(RunError::Config("train.lr_final requires train.lr".into())),
        (None, None, LearningRate::Cosine { initial, last }) => (initial, Some(last)),
        (None, None, LearningRate::Constant(lr)) => (lr, None),
    };
    let width = t.width.unwrap_or(preset.width());
    let depth = t.depth.unwrap_or(preset.depth());
    let train = ResolvedTrain {
        preset: preset.name().into(),
        layer_sizes: ehjb_core::diffnet::layer_sizes(dim, width, depth),
        init_seed: t.seed,
        seed: t.seed,
        iterations: t.iterations.unwrap_or(base.iterations),
        n_interior: t.n_interior.unwrap_or(base.n_interior),
        n_boundary: t.n_boundary.unwrap_or(base.n_boundary),
        alpha_res: t.alpha_res.unwrap_or(base.alpha_res),
        alpha_bnd: t.alpha_bnd.unwrap_or(base.alpha_bnd),
        lr,
        lr_final,
        lion_beta1: t.lion_beta1.unwrap_or(base.lion_beta1),
        lion_beta2: t.lion_beta2.unwrap_or(base.lion_beta2),
        weight_decay: t.weight_decay.unwrap_or(base.weight_decay),
        log_every: t.log_every.unwrap_or(base.log_every),
    };
    ehjb_core::diffnet::validate_layer_sizes(&train.layer_sizes)?;

    let l = &config.langevin;
    let langevin = ResolvedLangevin {
        step_size: l.step_size,
        horizon: l.horizon,
        s: l.s,
        tau: l.s * (2.0 * u_max).sqrt(),
        n_traj: l.n_traj,
        seed: l.seed,
        dump_states: l.dump_states,
    };
    let resolved = Resolved {
        benchmark: p.benchmark.clone(),
        dim,
        rho: p.rho,
        lambda: p.lambda,
        u_min: p.u_min,
        u_max,
        kappa,
        c_kappa: p.c_kappa,
        train,
        langevin,
        fd: config.fd.clone(),
        metrics: config.metrics.clone(),
    };
    let run = ResolvedRun { config: config.clone(), instance, resolved };
    run.train_config().validate()?;
    run.langevin_config().validate()?;
    Ok(run)
}
