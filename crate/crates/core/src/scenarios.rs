//! Scenario cells and sweeps. One cell pins parameters, a strategy mask,
//! and solver settings; running it finds the uncontrolled endemic state,
//! solves the schedule from there, and summarizes the outcome. Sweeps map
//! a parameter axis over cells and run them on a worker pool, keeping the
//! input order.
//!
//! Non-convergence of the equilibrium search or of the sweep iteration is
//! recorded in the cell diagnostics rather than escalated; hard failures
//! (invalid inputs, integration blow-up) surface as per-cell errors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::equilibrium::{
    default_tolerance, endemic_equilibrium, EquilibriumResult, DEFAULT_MAX_HORIZON_YEARS,
};
use crate::error::Error;
use crate::measures::{
    icer_table, CostWeights, IcerTable, StrategyOutcome, SummaryMeasures, SummaryRow,
    DEFAULT_RELAXATION_EPS,
};
use crate::model::{basic_reproduction_number, Parameters};
use crate::optctl::{solve_fbs, FbsSettings, OptimalSolution, StrategyMask};
use crate::ode::TimeGrid;
use crate::scalar::Scalar;

/// Tolerated rise between adjacent cells when checking that a quantity
/// decreases along a scan; absorbs solver and grid noise.
pub const DEFAULT_SCAN_NOISE: f64 = 1.0e-3;

/// Transmission intensities of the standard reproduction scan: 40 to 300
/// in steps of 5.
pub fn default_beta_scan<F: Scalar>() -> Vec<F> {
    (0..=52).map(|k| F::real(40.0 + 5.0 * k as f64)).collect()
}

/// Everything needed to run one scenario cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec<F: Scalar> {
    pub params: Parameters<F>,
    pub mask: StrategyMask,
    pub cost_weights: CostWeights<F>,
    pub settings: FbsSettings<F>,
    /// Cell name; used in file names and reports, so restricted to
    /// alphanumerics plus `._-`.
    pub label: String,
}

impl<F: Scalar> ScenarioSpec<F> {
    /// Cell with unit costs and default solver settings on the default
    /// grid over the parameter horizon.
    pub fn new(params: Parameters<F>, mask: StrategyMask, label: &str) -> Result<Self, Error<F>> {
        let spec = ScenarioSpec {
            params,
            mask,
            cost_weights: CostWeights::unit(),
            settings: FbsSettings::with_default_grid(params.t_f)?,
            label: label.to_owned(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), Error<F>> {
        self.params.validate()?;
        self.cost_weights.validate()?;
        self.settings.validate()?;
        if self.label.is_empty()
            || !self
                .label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
        {
            return Err(Error::invalid(format!(
                "label must be non-empty and use only alphanumerics, '.', '_', '-': {:?}",
                self.label
            )));
        }
        Ok(())
    }
}

/// Numerical health of one solved cell. Contains no timings, so identical
/// inputs reproduce it bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics<F> {
    pub equilibrium_residual: F,
    pub equilibrium_converged: bool,
    pub sweep_residual: F,
    pub sweep_iterations: usize,
    pub sweep_converged: bool,
}

/// Solved cell: the starting equilibrium, the schedule, and its summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult<F: Scalar> {
    pub spec: ScenarioSpec<F>,
    pub equilibrium: EquilibriumResult<F>,
    pub solution: OptimalSolution<F>,
    pub measures: SummaryMeasures<F>,
    pub diagnostics: Diagnostics<F>,
}

impl<F: Scalar> ScenarioResult<F> {
    /// True when both the equilibrium search and the schedule iteration
    /// converged.
    pub fn converged(&self) -> bool {
        self.diagnostics.equilibrium_converged && self.diagnostics.sweep_converged
    }

    pub fn summary_row(&self) -> SummaryRow<F> {
        SummaryRow {
            beta: self.spec.params.beta,
            sigma_r: self.spec.params.sigma_r,
            strategy: self.spec.label.clone(),
            cases_averted: self.measures.cases_averted,
            total_cost: self.measures.total_cost,
            acer: self.measures.acer,
            effectiveness: self.measures.effectiveness,
            tr1: self.measures.tr1,
            tr2: self.measures.tr2,
            objective: self.solution.objective,
            iterations: self.solution.iterations,
            converged: self.converged(),
        }
    }
}

/// Runs one cell: equilibrium, schedule, summaries.
///
/// The uncontrolled endemic state is recomputed per cell rather than shared,
/// since every parameter change moves it.
pub fn run_scenario<F: Scalar>(spec: &ScenarioSpec<F>) -> Result<ScenarioResult<F>, Error<F>> {
    spec.validate().map_err(|e| e.in_cell(&spec.label))?;

    let equilibrium = match endemic_equilibrium(
        &spec.params,
        default_tolerance(&spec.params),
        F::real(DEFAULT_MAX_HORIZON_YEARS),
    ) {
        Ok(result) => result,
        Err(Error::EquilibriumNotConverged { best, .. }) => *best,
        Err(e) => return Err(e.in_cell(&spec.label)),
    };

    let solution = match solve_fbs(&spec.params, equilibrium.state, spec.mask, &spec.settings) {
        Ok(solution) => solution,
        Err(Error::SweepNotConverged { last, .. }) => *last,
        Err(e) => return Err(e.in_cell(&spec.label)),
    };

    let measures = SummaryMeasures::compute(
        &solution,
        &spec.cost_weights,
        F::real(DEFAULT_RELAXATION_EPS),
    )
    .map_err(|e| e.in_cell(&spec.label))?;

    let diagnostics = Diagnostics {
        equilibrium_residual: equilibrium.residual_norm,
        equilibrium_converged: equilibrium.converged,
        sweep_residual: solution.residual,
        sweep_iterations: solution.iterations,
        sweep_converged: solution.converged,
    };

    Ok(ScenarioResult {
        spec: spec.clone(),
        equilibrium,
        solution,
        measures,
        diagnostics,
    })
}

/// Runs cells on a worker pool, preserving input order. `None` uses the
/// global pool; an explicit count builds a dedicated pool of that size.
pub fn run_scenarios<F: Scalar>(
    specs: &[ScenarioSpec<F>],
    workers: Option<usize>,
) -> Result<Vec<Result<ScenarioResult<F>, Error<F>>>, Error<F>> {
    let run_all = || specs.par_iter().map(run_scenario).collect::<Vec<_>>();
    match workers {
        None => Ok(run_all()),
        Some(0) => Err(Error::invalid("worker count must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
            Ok(pool.install(run_all))
        }
    }
}

/// How a sweep derives the reinfection susceptibility after treatment from
/// the latent one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaRRule {
    /// `sigma_r = sigma`.
    #[serde(rename = "sigma")]
    Equal,
    /// `sigma_r = 2 * sigma`.
    #[serde(rename = "2sigma")]
    Double,
    /// `sigma_r = sigma / 2`.
    #[serde(rename = "sigma/2")]
    Half,
}

impl SigmaRRule {
    pub fn apply<F: Scalar>(self, sigma: F) -> F {
        match self {
            SigmaRRule::Equal => sigma,
            SigmaRRule::Double => F::real(2.0) * sigma,
            SigmaRRule::Half => sigma / F::real(2.0),
        }
    }
}

impl fmt::Display for SigmaRRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SigmaRRule::Equal => "sigma",
            SigmaRRule::Double => "2sigma",
            SigmaRRule::Half => "sigma/2",
        };
        f.write_str(name)
    }
}

fn unique_axis_labels<F: Scalar>(
    values: &[F],
    axis: &str,
    prefix: &str,
) -> Result<Vec<String>, Error<F>> {
    if values.is_empty() {
        return Err(Error::invalid(format!("{axis} sweep needs at least one value")));
    }
    let labels: Vec<String> = values.iter().map(|v| format!("{prefix}{v}")).collect();
    for (i, a) in labels.iter().enumerate() {
        if a[prefix.len()..].contains(|c: char| !(c.is_ascii_alphanumeric() || c == '.')) {
            return Err(Error::invalid(format!(
                "{axis} value {} does not make a usable label",
                values[i]
            )));
        }
        if labels[i + 1..].contains(a) {
            return Err(Error::invalid(format!("duplicate {axis} value {}", values[i])));
        }
    }
    Ok(labels)
}

/// Cells for a transmission-intensity scan; each cell re-derives `sigma_r`
/// from the rule.
pub fn beta_sweep_specs<F: Scalar>(
    betas: &[F],
    sigma_r_rule: SigmaRRule,
    mask: StrategyMask,
    base: &ScenarioSpec<F>,
) -> Result<Vec<ScenarioSpec<F>>, Error<F>> {
    let labels = unique_axis_labels(betas, "beta", "beta_")?;
    betas
        .iter()
        .zip(labels)
        .map(|(&beta, label)| {
            let mut spec = base.clone();
            spec.params.beta = beta;
            spec.params.sigma_r = sigma_r_rule.apply(spec.params.sigma);
            spec.mask = mask;
            spec.label = label;
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}

/// Runs a transmission-intensity scan; one result per value, input order.
pub fn sweep_beta<F: Scalar>(
    betas: &[F],
    sigma_r_rule: SigmaRRule,
    mask: StrategyMask,
    base: &ScenarioSpec<F>,
    workers: Option<usize>,
) -> Result<Vec<Result<ScenarioResult<F>, Error<F>>>, Error<F>> {
    run_scenarios(&beta_sweep_specs(betas, sigma_r_rule, mask, base)?, workers)
}

/// Cells for a horizon scan. The grid spacing of the base cell is kept, so
/// longer horizons get proportionally more steps.
pub fn tf_sweep_specs<F: Scalar>(
    horizons: &[F],
    base: &ScenarioSpec<F>,
) -> Result<Vec<ScenarioSpec<F>>, Error<F>> {
    let labels = unique_axis_labels(horizons, "t_f", "tf_")?;
    let step = base.settings.grid.step();
    horizons
        .iter()
        .zip(labels)
        .map(|(&t_f, label)| {
            if !t_f.is_finite() || t_f <= F::zero() {
                return Err(Error::invalid(format!(
                    "horizon must be positive and finite, got {t_f}"
                )));
            }
            let n_steps = (t_f / step)
                .round()
                .to_usize()
                .ok_or_else(|| Error::invalid("horizon too long for the base grid spacing"))?
                .max(1);
            let mut spec = base.clone();
            spec.params.t_f = t_f;
            spec.settings.grid = TimeGrid::new(F::zero(), t_f, n_steps)?;
            spec.label = label;
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}

/// Runs a horizon scan; one result per horizon, input order.
pub fn sweep_tf<F: Scalar>(
    horizons: &[F],
    base: &ScenarioSpec<F>,
    workers: Option<usize>,
) -> Result<Vec<Result<ScenarioResult<F>, Error<F>>>, Error<F>> {
    run_scenarios(&tf_sweep_specs(horizons, base)?, workers)
}

/// Cells for an objective-weight scan; each triple is `(w0, w1, w2)`.
pub fn weight_sweep_specs<F: Scalar>(
    weight_sets: &[[F; 3]],
    base: &ScenarioSpec<F>,
) -> Result<Vec<ScenarioSpec<F>>, Error<F>> {
    if weight_sets.is_empty() {
        return Err(Error::invalid("weight sweep needs at least one triple"));
    }
    let mut specs = Vec::with_capacity(weight_sets.len());
    for (k, &[w0, w1, w2]) in weight_sets.iter().enumerate() {
        let mut spec = base.clone();
        spec.params.w0 = w0;
        spec.params.w1 = w1;
        spec.params.w2 = w2;
        spec.label = format!("w{k}_{w0}_{w1}_{w2}");
        spec.validate()?;
        specs.push(spec);
    }
    Ok(specs)
}

/// Runs an objective-weight scan; one result per triple, input order.
pub fn sweep_weights<F: Scalar>(
    weight_sets: &[[F; 3]],
    base: &ScenarioSpec<F>,
    workers: Option<usize>,
) -> Result<Vec<Result<ScenarioResult<F>, Error<F>>>, Error<F>> {
    run_scenarios(&weight_sweep_specs(weight_sets, base)?, workers)
}

/// The three standard strategies compared at one parameter point, plus
/// their incremental ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyComparison<F: Scalar> {
    /// Results for labels `a` (both controls), `b` (`u1` only), and `c`
    /// (`u2` only), in that order.
    pub results: Vec<ScenarioResult<F>>,
    pub table: IcerTable<F>,
}

/// Solves strategies `a`, `b`, and `c` at one parameter point and ranks
/// them. A parameter point where strategies tie on cases averted (for
/// instance, below the endemic threshold) surfaces the tie as an error.
pub fn strategy_comparison<F: Scalar>(
    beta: F,
    sigma_r: F,
    base: &ScenarioSpec<F>,
    workers: Option<usize>,
) -> Result<StrategyComparison<F>, Error<F>> {
    let strategies = [
        ("a", StrategyMask::both()),
        ("b", StrategyMask::only_u1()),
        ("c", StrategyMask::only_u2()),
    ];
    let specs: Vec<ScenarioSpec<F>> = strategies
        .iter()
        .map(|&(label, mask)| {
            let mut spec = base.clone();
            spec.params.beta = beta;
            spec.params.sigma_r = sigma_r;
            spec.mask = mask;
            spec.label = label.to_owned();
            spec.validate()?;
            Ok(spec)
        })
        .collect::<Result<_, Error<F>>>()?;

    let results: Vec<ScenarioResult<F>> = run_scenarios(&specs, workers)?
        .into_iter()
        .collect::<Result<_, _>>()?;

    let outcomes: Vec<StrategyOutcome<F>> = results
        .iter()
        .map(|r| StrategyOutcome {
            label: r.spec.label.clone(),
            cases_averted: r.measures.cases_averted,
            total_cost: r.measures.total_cost,
        })
        .collect();
    let table = icer_table(&outcomes)?;

    Ok(StrategyComparison { results, table })
}

/// Checks that a scanned quantity decreases along the scan: each step may
/// rise by at most `noise`, and the last value must sit strictly below the
/// first.
pub fn check_decreasing_along_scan<F: Scalar>(
    values: &[F],
    noise: F,
    what: &str,
) -> Result<(), Error<F>> {
    if values.len() < 2 {
        return Err(Error::invalid(format!(
            "checking {what} needs at least two scan cells"
        )));
    }
    for (k, pair) in values.windows(2).enumerate() {
        if pair[1] > pair[0] + noise {
            return Err(Error::ScanAnomaly(format!(
                "{what} rises from {} to {} between cells {k} and {}",
                pair[0],
                pair[1],
                k + 1
            )));
        }
    }
    if values[values.len() - 1] >= values[0] {
        return Err(Error::ScanAnomaly(format!(
            "{what} does not decrease overall: first {}, last {}",
            values[0],
            values[values.len() - 1]
        )));
    }
    Ok(())
}

/// Checks that the early-latency control stays saturated at least as long
/// as the persistent-latency one on every endemic cell where both controls
/// are enabled.
pub fn check_relaxation_ordering<F: Scalar>(results: &[ScenarioResult<F>]) -> Result<(), Error<F>> {
    for result in results {
        if !(result.spec.mask.enable_u1 && result.spec.mask.enable_u2) {
            continue;
        }
        if basic_reproduction_number(&result.spec.params)? <= F::one() {
            continue;
        }
        if result.measures.tr1 < result.measures.tr2 {
            return Err(Error::ScanAnomaly(format!(
                "cell {:?}: tr1 {} < tr2 {}",
                result.spec.label, result.measures.tr1, result.measures.tr2
            )));
        }
    }
    Ok(())
}
