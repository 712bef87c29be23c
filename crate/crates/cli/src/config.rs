//! Run configuration: a flat JSON document with optional keys, merged with
//! command-line overrides and filled with the standard parameter defaults.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use tb_optctl_core::measures::CostWeights;
use tb_optctl_core::optctl::{
    StrategyMask, DEFAULT_MAX_ITERS, DEFAULT_RELAXATION, DEFAULT_TOLERANCE,
};
use tb_optctl_core::scenarios::SigmaRRule;
use tb_optctl_core::{CostWeights64, Parameters64, TimeGrid64};

/// What one invocation computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One scenario cell at the configured parameter point.
    Single,
    /// One cell per transmission intensity in `betas`.
    SweepBeta,
    /// One cell per horizon in `tfs`.
    SweepTf,
    /// One cell per `(w0, w1, w2)` triple in `weight_sets`.
    SweepWeights,
    /// Strategies a, b, c at one parameter point, plus their incremental
    /// ranking.
    StrategyCompare,
}

/// Which controls a run may use: `a` enables both, `b` only the
/// early-latent control, `c` only the persistent-latent control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    A,
    B,
    C,
}

impl Strategy {
    pub fn mask(self) -> StrategyMask {
        match self {
            Strategy::A => StrategyMask::both(),
            Strategy::B => StrategyMask::only_u1(),
            Strategy::C => StrategyMask::only_u2(),
        }
    }
}

/// The configuration document as written by the user. Every key is
/// optional; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,

    // Model parameters. All but beta default to the standard table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_r: Option<f64>,
    /// Derive `sigma_r` from `sigma` instead of giving it directly.
    /// Conflicts with `sigma_r`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_r_rule: Option<SigmaRRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_pop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w2: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,

    // Sweep axes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tfs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_sets: Option<Vec<[f64; 3]>>,

    // Solver settings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub beta: Option<f64>,
    pub out: Option<PathBuf>,
    /// `--workers`; beats the environment and the file.
    pub workers: Option<usize>,
    /// `TB_OPTCTL_WORKERS`; beats the file only.
    pub env_workers: Option<usize>,
}

/// A fully resolved run: every knob concrete, every value validated.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub label: String,
    pub out_dir: PathBuf,
    pub params: Parameters64,
    /// Present when `sigma_r` was derived from `sigma`; sweeps over beta
    /// reuse it per cell.
    pub sigma_r_rule: Option<SigmaRRule>,
    pub strategy: Strategy,
    pub cost_weights: CostWeights64,
    pub betas: Vec<f64>,
    pub tfs: Vec<f64>,
    pub weight_sets: Vec<[f64; 3]>,
    pub relaxation: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub n_steps: usize,
    pub workers: Option<usize>,
}

/// Default horizon scan, in years.
pub const DEFAULT_TFS: [f64; 6] = [5.0, 7.0, 10.0, 15.0, 20.0, 25.0];

/// Default objective-weight scan: prevalence weight fixed, control weights
/// rising.
pub const DEFAULT_WEIGHT_SETS: [[f64; 3]; 6] = [
    [50.0, 5.0, 5.0],
    [50.0, 25.0, 25.0],
    [50.0, 50.0, 50.0],
    [50.0, 100.0, 100.0],
    [50.0, 200.0, 200.0],
    [50.0, 500.0, 500.0],
];

pub fn parse_file(text: &str) -> Result<FileConfig> {
    serde_json::from_str(text).map_err(|e| anyhow!("config: {e}"))
}

/// Merges the file document with the command-line overrides and fills the
/// remaining keys with defaults.
pub fn resolve(file: &FileConfig, over: &Overrides) -> Result<RunConfig> {
    let mode = over.mode.or(file.mode).unwrap_or(Mode::Single);

    let beta = over
        .beta
        .or(file.beta)
        .ok_or_else(|| anyhow!("missing required key: beta (set it in the config or with --beta)"))?;

    let (sigma_r_rule, sigma_r) = match (file.sigma_r, file.sigma_r_rule) {
        (Some(_), Some(_)) => bail!("sigma_r and sigma_r_rule are both set; give only one"),
        (Some(v), None) => (None, Some(v)),
        (None, rule) => (Some(rule.unwrap_or(SigmaRRule::Equal)), None),
    };
    if mode == Mode::SweepBeta && sigma_r.is_some() {
        bail!("sweep-beta derives sigma_r from sigma via sigma_r_rule; remove the sigma_r key");
    }

    let mut params = Parameters64::baseline(beta, 0.0).map_err(|e| anyhow!("config: {e}"))?;
    if let Some(v) = file.mu {
        params.mu = v;
    }
    if let Some(v) = file.delta {
        params.delta = v;
    }
    if let Some(v) = file.phi {
        params.phi = v;
    }
    if let Some(v) = file.omega {
        params.omega = v;
    }
    if let Some(v) = file.omega_r {
        params.omega_r = v;
    }
    if let Some(v) = file.sigma {
        params.sigma = v;
    }
    if let Some(v) = file.tau0 {
        params.tau0 = v;
    }
    if let Some(v) = file.tau1 {
        params.tau1 = v;
    }
    if let Some(v) = file.tau2 {
        params.tau2 = v;
    }
    if let Some(v) = file.n_pop {
        params.n_pop = v;
    }
    if let Some(v) = file.t_f {
        params.t_f = v;
    }
    if let Some(v) = file.w0 {
        params.w0 = v;
    }
    if let Some(v) = file.w1 {
        params.w1 = v;
    }
    if let Some(v) = file.w2 {
        params.w2 = v;
    }
    params.sigma_r = match (sigma_r, sigma_r_rule) {
        (Some(v), _) => v,
        (None, Some(rule)) => rule.apply(params.sigma),
        (None, None) => unreachable!(),
    };
    params.validate().map_err(|e| anyhow!("config: {e}"))?;

    let cost_weights = CostWeights {
        c1: file.c1.unwrap_or(1.0),
        c2: file.c2.unwrap_or(1.0),
    };
    cost_weights.validate().map_err(|e| anyhow!("config: {e}"))?;

    let n_steps = match file.n_steps {
        Some(n) => n,
        None => TimeGrid64::with_default_resolution(params.t_f)
            .map_err(|e| anyhow!("config: {e}"))?
            .n_steps(),
    };
    TimeGrid64::new(0.0, params.t_f, n_steps)
        .map_err(|e| anyhow!("config: n_steps: {e}"))?;

    let workers = over.workers.or(over.env_workers).or(file.workers);
    if workers == Some(0) {
        bail!("workers must be at least 1");
    }

    let config = RunConfig {
        mode,
        label: file.label.clone().unwrap_or_else(|| "single".to_owned()),
        out_dir: over
            .out
            .clone()
            .or_else(|| file.out_dir.clone().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out")),
        params,
        sigma_r_rule,
        strategy: file.strategy.unwrap_or(Strategy::A),
        cost_weights,
        betas: file
            .betas
            .clone()
            .unwrap_or_else(tb_optctl_core::scenarios::default_beta_scan),
        tfs: file.tfs.clone().unwrap_or_else(|| DEFAULT_TFS.to_vec()),
        weight_sets: file
            .weight_sets
            .clone()
            .unwrap_or_else(|| DEFAULT_WEIGHT_SETS.to_vec()),
        relaxation: file.relaxation.unwrap_or(DEFAULT_RELAXATION),
        tol: file.tol.unwrap_or(DEFAULT_TOLERANCE),
        max_iters: file.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
        n_steps,
        workers,
    };
    if config.betas.is_empty() {
        bail!("betas must not be empty");
    }
    if config.tfs.is_empty() {
        bail!("tfs must not be empty");
    }
    if config.weight_sets.is_empty() {
        bail!("weight_sets must not be empty");
    }
    Ok(config)
}

pub fn load(path: &std::path::Path, over: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    resolve(&parse_file(&text)?, over)
}

impl RunConfig {
    /// The document that reproduces this configuration when parsed with no
    /// overrides. `sigma_r` is echoed either as the rule or as the value,
    /// matching how it was given.
    pub fn echo(&self) -> FileConfig {
        FileConfig {
            mode: Some(self.mode),
            label: Some(self.label.clone()),
            out_dir: Some(self.out_dir.to_string_lossy().into_owned()),
            beta: Some(self.params.beta),
            mu: Some(self.params.mu),
            delta: Some(self.params.delta),
            phi: Some(self.params.phi),
            omega: Some(self.params.omega),
            omega_r: Some(self.params.omega_r),
            sigma: Some(self.params.sigma),
            sigma_r: match self.sigma_r_rule {
                Some(_) => None,
                None => Some(self.params.sigma_r),
            },
            sigma_r_rule: self.sigma_r_rule,
            tau0: Some(self.params.tau0),
            tau1: Some(self.params.tau1),
            tau2: Some(self.params.tau2),
            n_pop: Some(self.params.n_pop),
            t_f: Some(self.params.t_f),
            w0: Some(self.params.w0),
            w1: Some(self.params.w1),
            w2: Some(self.params.w2),
            strategy: Some(self.strategy),
            c1: Some(self.cost_weights.c1),
            c2: Some(self.cost_weights.c2),
            betas: Some(self.betas.clone()),
            tfs: Some(self.tfs.clone()),
            weight_sets: Some(self.weight_sets.clone()),
            relaxation: Some(self.relaxation),
            tol: Some(self.tol),
            max_iters: Some(self.max_iters),
            n_steps: Some(self.n_steps),
            workers: self.workers,
        }
    }
}
