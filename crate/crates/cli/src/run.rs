//! Turns a resolved configuration into scenario cells and runs them.

use anyhow::{anyhow, Result};
use tb_optctl_core::scenarios::{
    beta_sweep_specs, run_scenarios, strategy_comparison, tf_sweep_specs, weight_sweep_specs,
    SigmaRRule,
};
use tb_optctl_core::{FbsSettings64, IcerTable64, ScenarioResult64, ScenarioSpec64, TimeGrid64};

use crate::config::{Mode, RunConfig};

/// The cells one invocation will solve.
pub enum Plan {
    Cells(Vec<ScenarioSpec64>),
    /// Strategies a, b, c at one point, ranked afterwards.
    Compare {
        beta: f64,
        sigma_r: f64,
        base: ScenarioSpec64,
    },
}

impl Plan {
    pub fn n_cells(&self) -> usize {
        match self {
            Plan::Cells(specs) => specs.len(),
            Plan::Compare { .. } => 3,
        }
    }
}

pub struct RunOutcome {
    pub results: Vec<ScenarioResult64>,
    /// Cells that failed outright, as `(label, message)`.
    pub cell_errors: Vec<(String, String)>,
    /// Cells whose equilibrium or sweep missed its tolerance.
    pub non_converged: usize,
    /// Incremental ranking; present in strategy-compare mode only.
    pub table: Option<IcerTable64>,
}

impl RunOutcome {
    pub fn clean(&self) -> bool {
        self.cell_errors.is_empty() && self.non_converged == 0
    }
}

fn base_spec(config: &RunConfig) -> Result<ScenarioSpec64> {
    let grid = TimeGrid64::new(0.0, config.params.t_f, config.n_steps)
        .map_err(|e| anyhow!("config: {e}"))?;
    let spec = ScenarioSpec64 {
        params: config.params,
        mask: config.strategy.mask(),
        cost_weights: config.cost_weights,
        settings: FbsSettings64 {
            relaxation: config.relaxation,
            tol: config.tol,
            max_iters: config.max_iters,
            grid,
        },
        label: config.label.clone(),
    };
    spec.validate().map_err(|e| anyhow!("config: {e}"))?;
    Ok(spec)
}

/// Expands the configured mode into concrete cells. Failures here are
/// configuration problems, not numerical ones.
pub fn plan(config: &RunConfig) -> Result<Plan> {
    let base = base_spec(config)?;
    let mode_err = |e| anyhow!("config: {e}");
    match config.mode {
        Mode::Single => Ok(Plan::Cells(vec![base])),
        Mode::SweepBeta => {
            // resolve() guarantees a rule whenever this mode is reachable.
            let rule = config.sigma_r_rule.unwrap_or(SigmaRRule::Equal);
            let specs = beta_sweep_specs(&config.betas, rule, config.strategy.mask(), &base)
                .map_err(mode_err)?;
            Ok(Plan::Cells(specs))
        }
        Mode::SweepTf => Ok(Plan::Cells(tf_sweep_specs(&config.tfs, &base).map_err(mode_err)?)),
        Mode::SweepWeights => Ok(Plan::Cells(
            weight_sweep_specs(&config.weight_sets, &base).map_err(mode_err)?,
        )),
        Mode::StrategyCompare => Ok(Plan::Compare {
            beta: config.params.beta,
            sigma_r: config.params.sigma_r,
            base,
        }),
    }
}

/// Solves every cell. Per-cell failures and missed tolerances are
/// collected, not fatal; an error here means the whole batch is unusable.
pub fn execute(plan: &Plan, workers: Option<usize>) -> Result<RunOutcome> {
    match plan {
        Plan::Cells(specs) => {
            let raw = run_scenarios(specs, workers).map_err(|e| anyhow!("{e}"))?;
            let mut results = Vec::with_capacity(specs.len());
            let mut cell_errors = Vec::new();
            for (spec, item) in specs.iter().zip(raw) {
                match item {
                    Ok(result) => results.push(result),
                    Err(e) => cell_errors.push((spec.label.clone(), e.to_string())),
                }
            }
            let non_converged = results.iter().filter(|r| !r.converged()).count();
            Ok(RunOutcome {
                results,
                cell_errors,
                non_converged,
                table: None,
            })
        }
        Plan::Compare {
            beta,
            sigma_r,
            base,
        } => {
            let comparison =
                strategy_comparison(*beta, *sigma_r, base, workers).map_err(|e| anyhow!("{e}"))?;
            let non_converged = comparison.results.iter().filter(|r| !r.converged()).count();
            Ok(RunOutcome {
                results: comparison.results,
                cell_errors: Vec::new(),
                non_converged,
                table: Some(comparison.table),
            })
        }
    }
}
