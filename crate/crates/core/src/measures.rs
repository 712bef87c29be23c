//! Cost-effectiveness summaries of a treatment schedule: efficacy, cases
//! averted, effectiveness, intervention cost, average and incremental
//! cost-effectiveness ratios, and control relaxation times.
//!
//! All integrals use the trapezoid rule on the solution grid. The reference
//! point is the uncontrolled endemic level `I(0)`: a schedule that held
//! prevalence at its initial value would avert nothing.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{ControlPoint, State};
use crate::ode::{trapezoid, Trajectory};
use crate::optctl::OptimalSolution;
use crate::scalar::Scalar;

/// Band below full intensity that still counts as "at the bound" when
/// locating relaxation times; the convex update leaves converged bang
/// segments about one tolerance short of 1.
pub const DEFAULT_RELAXATION_EPS: f64 = 1.0e-3;

/// Per-treatment unit costs applied to the two interventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights<F> {
    pub c1: F,
    pub c2: F,
}

impl<F: Scalar> CostWeights<F> {
    /// Unit costs of one per treated person-year for both interventions.
    pub fn unit() -> Self {
        CostWeights {
            c1: F::one(),
            c2: F::one(),
        }
    }

    pub fn validate(&self) -> Result<(), Error<F>> {
        for (name, value) in [("c1", self.c1), ("c2", self.c2)] {
            if !value.is_finite() || value < F::zero() {
                return Err(Error::invalid(format!(
                    "{name} must be finite and nonnegative, got {value}"
                )));
            }
        }
        Ok(())
    }
}

impl<F: Scalar> Default for CostWeights<F> {
    fn default() -> Self {
        CostWeights::unit()
    }
}

/// Proportion of the initial infectious level removed at each time,
/// `E(t) = 1 - I(t) / i0`.
pub fn efficacy<F: Scalar>(
    i_traj: &Trajectory<F, F>,
    i0: F,
) -> Result<Trajectory<F, F>, Error<F>> {
    if !i0.is_finite() || i0 <= F::zero() {
        return Err(Error::invalid(format!(
            "efficacy needs a positive initial infectious level, got {i0}"
        )));
    }
    Ok(i_traj.map(|_, i| F::one() - i / i0))
}

/// Infectious person-years averted relative to holding prevalence at `i0`:
/// `t_f * i0` minus the integral of the infectious curve.
pub fn cases_averted<F: Scalar>(i_traj: &Trajectory<F, F>, i0: F) -> Result<F, Error<F>> {
    if !i0.is_finite() || i0 < F::zero() {
        return Err(Error::invalid(format!(
            "cases averted needs a nonnegative initial infectious level, got {i0}"
        )));
    }
    let grid = i_traj.grid();
    let span = grid.t1() - grid.t0();
    let integral = trapezoid(grid, i_traj.values())?;
    Ok(span * i0 - integral)
}

/// Cases averted as a fraction of the maximum conceivable, `A / (t_f * i0)`.
pub fn effectiveness<F: Scalar>(averted: F, i0: F, t_f: F) -> Result<F, Error<F>> {
    let denom = t_f * i0;
    if !denom.is_finite() || denom <= F::zero() {
        return Err(Error::invalid(format!(
            "effectiveness needs t_f * i0 > 0, got {denom}"
        )));
    }
    Ok(averted / denom)
}

/// Integral of `c1 * u1 * L1 + c2 * u2 * L2`: total cost of the treatments
/// actually dispensed along the schedule.
pub fn total_cost<F: Scalar>(
    control_traj: &Trajectory<F, ControlPoint<F>>,
    state_traj: &Trajectory<F, State<F>>,
    weights: &CostWeights<F>,
) -> Result<F, Error<F>> {
    weights.validate()?;
    if control_traj.grid() != state_traj.grid() {
        return Err(Error::invalid(
            "control and state trajectories must share a grid",
        ));
    }
    let samples: Vec<F> = control_traj
        .values()
        .iter()
        .zip(state_traj.values())
        .map(|(&u, &x)| weights.c1 * u.u1 * x.l1 + weights.c2 * u.u2 * x.l2)
        .collect();
    trapezoid(control_traj.grid(), &samples)
}

/// Average cost-effectiveness ratio, total cost per case averted.
pub fn acer<F: Scalar>(total_cost: F, averted: F) -> Result<F, Error<F>> {
    if !averted.is_finite() || averted <= F::zero() {
        return Err(Error::UndefinedRatio(format!(
            "cost per case averted needs cases averted > 0, got {averted}"
        )));
    }
    Ok(total_cost / averted)
}

/// Last grid time at which the control still sits at its upper bound,
/// within `eps`; zero if it never reaches the bound.
pub fn relaxation_time<F: Scalar>(u_traj: &Trajectory<F, F>, eps: F) -> Result<F, Error<F>> {
    if !eps.is_finite() || eps <= F::zero() || eps >= F::real(0.1) {
        return Err(Error::invalid(format!(
            "relaxation band must lie in (0, 0.1), got {eps}"
        )));
    }
    let threshold = F::one() - eps;
    let grid = u_traj.grid();
    for k in (0..grid.n_nodes()).rev() {
        if u_traj.value(k) >= threshold {
            return Ok(grid.node(k));
        }
    }
    Ok(F::zero())
}

/// Cases averted and total cost of one strategy, input to the incremental
/// ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome<F> {
    pub label: String,
    pub cases_averted: F,
    pub total_cost: F,
}

/// One strategy's placement in the incremental cost-effectiveness ranking.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IcerEntry<F> {
    pub label: String,
    pub cases_averted: F,
    pub total_cost: F,
    /// Average ratio; absent when the strategy averts nothing.
    pub acer: Option<F>,
    /// True when some other strategy averts more for less.
    pub dominated: bool,
    /// Cost per additional case averted over the previous retained
    /// strategy; the least effective retained strategy reports its average
    /// ratio. Absent for dominated strategies.
    pub icer: Option<F>,
}

/// Strategies ordered by cases averted, with dominated ones flagged and
/// excluded from the increments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IcerTable<F: Scalar> {
    pub entries: Vec<IcerEntry<F>>,
}

impl<F: Scalar> IcerTable<F> {
    pub fn entry(&self, label: &str) -> Option<&IcerEntry<F>> {
        self.entries.iter().find(|e| e.label == label)
    }
}

/// Ranks strategies by incremental cost-effectiveness.
///
/// Entries are sorted by cases averted. A strategy is dominated when another
/// averts strictly more at strictly lower cost; dominated strategies keep
/// their averages but get no increment. Ties in cases averted are ambiguous
/// and error out, as do duplicate or empty labels.
pub fn icer_table<F: Scalar>(outcomes: &[StrategyOutcome<F>]) -> Result<IcerTable<F>, Error<F>> {
    if outcomes.is_empty() {
        return Err(Error::invalid("ranking needs at least one strategy"));
    }
    for outcome in outcomes {
        if outcome.label.is_empty() {
            return Err(Error::invalid("strategy labels must be non-empty"));
        }
        if !outcome.cases_averted.is_finite() || !outcome.total_cost.is_finite() {
            return Err(Error::invalid(format!(
                "strategy {:?} has non-finite outcomes",
                outcome.label
            )));
        }
    }
    for (i, a) in outcomes.iter().enumerate() {
        for b in &outcomes[i + 1..] {
            if a.label == b.label {
                return Err(Error::invalid(format!(
                    "duplicate strategy label {:?}",
                    a.label
                )));
            }
            if a.cases_averted == b.cases_averted {
                return Err(Error::EffectivenessTie(a.label.clone(), b.label.clone()));
            }
        }
    }

    let mut ordered: Vec<&StrategyOutcome<F>> = outcomes.iter().collect();
    ordered.sort_by(|a, b| {
        a.cases_averted
            .partial_cmp(&b.cases_averted)
            .expect("outcomes are finite")
    });

    let mut entries: Vec<IcerEntry<F>> = ordered
        .iter()
        .map(|o| {
            let dominated = ordered.iter().any(|other| {
                other.cases_averted > o.cases_averted && other.total_cost < o.total_cost
            });
            IcerEntry {
                label: o.label.clone(),
                cases_averted: o.cases_averted,
                total_cost: o.total_cost,
                acer: acer(o.total_cost, o.cases_averted).ok(),
                dominated,
                icer: None,
            }
        })
        .collect();

    let mut previous: Option<(F, F)> = None;
    for entry in &mut entries {
        if entry.dominated {
            continue;
        }
        entry.icer = match previous {
            None => entry.acer,
            Some((prev_averted, prev_cost)) => {
                Some((entry.total_cost - prev_cost) / (entry.cases_averted - prev_averted))
            }
        };
        previous = Some((entry.cases_averted, entry.total_cost));
    }

    Ok(IcerTable { entries })
}

/// All per-scenario summaries of one solved schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryMeasures<F: Scalar> {
    pub cases_averted: F,
    pub effectiveness: F,
    pub total_cost: F,
    /// Absent when nothing is averted.
    pub acer: Option<F>,
    pub tr1: F,
    pub tr2: F,
    pub efficacy_traj: Trajectory<F, F>,
}

impl<F: Scalar> SummaryMeasures<F> {
    /// Summarizes a solved schedule. A disease-free starting point (no
    /// infectious individuals) yields zero efficacy, zero cases averted,
    /// zero effectiveness, and no average ratio.
    pub fn compute(
        solution: &OptimalSolution<F>,
        weights: &CostWeights<F>,
        relaxation_eps: F,
    ) -> Result<Self, Error<F>> {
        let i_traj = solution.state_traj.map(|_, x| x.i);
        let i0 = i_traj.first();
        let grid = *solution.state_traj.grid();
        let t_f = grid.t1() - grid.t0();

        let averted = cases_averted(&i_traj, i0)?;
        let (efficacy_traj, eff) = if i0 > F::zero() {
            (efficacy(&i_traj, i0)?, effectiveness(averted, i0, t_f)?)
        } else {
            (Trajectory::constant(grid, F::zero()), F::zero())
        };
        let cost = total_cost(&solution.control_traj, &solution.state_traj, weights)?;
        let average_ratio = if averted > F::zero() {
            Some(acer(cost, averted)?)
        } else {
            None
        };
        let u1_traj = solution.control_traj.map(|_, u| u.u1);
        let u2_traj = solution.control_traj.map(|_, u| u.u2);
        Ok(SummaryMeasures {
            cases_averted: averted,
            effectiveness: eff,
            total_cost: cost,
            acer: average_ratio,
            tr1: relaxation_time(&u1_traj, relaxation_eps)?,
            tr2: relaxation_time(&u2_traj, relaxation_eps)?,
            efficacy_traj,
        })
    }
}

/// Formats with 17 significant digits, enough to reproduce the double
/// exactly.
pub fn format_float<F: Scalar>(value: F) -> String {
    format!("{value:.16e}")
}

/// One summary line of a scenario run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow<F: Scalar> {
    pub beta: F,
    pub sigma_r: F,
    pub strategy: String,
    #[serde(rename = "A")]
    pub cases_averted: F,
    #[serde(rename = "TC")]
    pub total_cost: F,
    #[serde(rename = "ACER")]
    pub acer: Option<F>,
    #[serde(rename = "Ebar")]
    pub effectiveness: F,
    pub tr1: F,
    pub tr2: F,
    #[serde(rename = "J")]
    pub objective: F,
    pub iterations: usize,
    pub converged: bool,
}

/// Column order of `summary.csv`.
pub const SUMMARY_CSV_HEADER: &str =
    "beta,sigma_r,strategy,A,TC,ACER,Ebar,tr1,tr2,J,iterations,converged";

impl<F: Scalar> SummaryRow<F> {
    /// CSV record matching [`SUMMARY_CSV_HEADER`]; an undefined average
    /// ratio leaves its field empty.
    pub fn csv_record(&self) -> String {
        let acer_field = self.acer.map(format_float).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            format_float(self.beta),
            format_float(self.sigma_r),
            self.strategy,
            format_float(self.cases_averted),
            format_float(self.total_cost),
            acer_field,
            format_float(self.effectiveness),
            format_float(self.tr1),
            format_float(self.tr2),
            format_float(self.objective),
            self.iterations,
            self.converged,
        )
    }
}
