//! Optimal treatment scheduling via Pontryagin's principle: objective,
//! Hamiltonian, costate system, pointwise control projection, and the
//! forward-backward sweep solver.
//!
//! A control schedule is optimal when it is a fixed point of the projection:
//! integrating the state forward and the costates backward and minimizing
//! the Hamiltonian pointwise reproduces the same schedule. The sweep
//! iterates that map with a convex-combination update until the controls,
//! states, costates, and the projection residual all settle.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{dynamics_rhs_raw, ControlPoint, Parameters, State};
use crate::ode::{
    relative_change, rk4_backward, rk4_forward, trapezoid, OdeVector, TimeGrid, Trajectory,
};
use crate::scalar::Scalar;

/// Weight of the new projection in each control update.
pub const DEFAULT_RELAXATION: f64 = 0.5;

/// Relative-change tolerance that stops the sweep.
pub const DEFAULT_TOLERANCE: f64 = 1.0e-4;

/// Iteration cap for the sweep.
pub const DEFAULT_MAX_ITERS: usize = 500;

/// Starting intensity for every enabled control.
pub const DEFAULT_INITIAL_GUESS: f64 = 0.5;

/// Costates paired with the five compartments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointState<F> {
    pub lam1: F,
    pub lam2: F,
    pub lam3: F,
    pub lam4: F,
    pub lam5: F,
}

impl<F: Scalar> AdjointState<F> {
    pub fn new(lam1: F, lam2: F, lam3: F, lam4: F, lam5: F) -> Self {
        AdjointState {
            lam1,
            lam2,
            lam3,
            lam4,
            lam5,
        }
    }
}

impl<F: Scalar> OdeVector<F> for AdjointState<F> {
    fn zero() -> Self {
        let z = F::zero();
        AdjointState::new(z, z, z, z, z)
    }

    fn scale(self, c: F) -> Self {
        AdjointState::new(
            self.lam1 * c,
            self.lam2 * c,
            self.lam3 * c,
            self.lam4 * c,
            self.lam5 * c,
        )
    }

    fn add(self, other: Self) -> Self {
        AdjointState::new(
            self.lam1 + other.lam1,
            self.lam2 + other.lam2,
            self.lam3 + other.lam3,
            self.lam4 + other.lam4,
            self.lam5 + other.lam5,
        )
    }

    fn max_abs(self) -> F {
        self.lam1
            .abs()
            .max(self.lam2.abs())
            .max(self.lam3.abs())
            .max(self.lam4.abs())
            .max(self.lam5.abs())
    }

    fn is_finite(self) -> bool {
        self.lam1.is_finite()
            && self.lam2.is_finite()
            && self.lam3.is_finite()
            && self.lam4.is_finite()
            && self.lam5.is_finite()
    }
}

/// Which interventions a strategy may use. Disabled controls are pinned to
/// zero everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyMask {
    pub enable_u1: bool,
    pub enable_u2: bool,
}

impl StrategyMask {
    pub fn both() -> Self {
        StrategyMask {
            enable_u1: true,
            enable_u2: true,
        }
    }

    pub fn only_u1() -> Self {
        StrategyMask {
            enable_u1: true,
            enable_u2: false,
        }
    }

    pub fn only_u2() -> Self {
        StrategyMask {
            enable_u1: false,
            enable_u2: true,
        }
    }

    pub fn none() -> Self {
        StrategyMask {
            enable_u1: false,
            enable_u2: false,
        }
    }

    /// Zeroes the disabled components of `control`.
    pub fn apply<F: Scalar>(&self, control: ControlPoint<F>) -> ControlPoint<F> {
        ControlPoint::new(
            if self.enable_u1 { control.u1 } else { F::zero() },
            if self.enable_u2 { control.u2 } else { F::zero() },
        )
    }
}

/// Sweep configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbsSettings<F> {
    /// Weight of the fresh projection in each update, in `(0, 1]`.
    pub relaxation: F,
    /// Relative-change tolerance on controls, states, and costates.
    pub tol: F,
    pub max_iters: usize,
    pub grid: TimeGrid<F>,
}

impl<F: Scalar> FbsSettings<F> {
    /// Default sweep configuration on the given grid.
    pub fn new(grid: TimeGrid<F>) -> Self {
        FbsSettings {
            relaxation: F::real(DEFAULT_RELAXATION),
            tol: F::real(DEFAULT_TOLERANCE),
            max_iters: DEFAULT_MAX_ITERS,
            grid,
        }
    }

    /// Default configuration on the default grid over `[0, t_f]`.
    pub fn with_default_grid(t_f: F) -> Result<Self, Error<F>> {
        Ok(FbsSettings::new(TimeGrid::with_default_resolution(t_f)?))
    }

    pub fn validate(&self) -> Result<(), Error<F>> {
        if !self.relaxation.is_finite()
            || self.relaxation <= F::zero()
            || self.relaxation > F::one()
        {
            return Err(Error::invalid(format!(
                "relaxation must lie in (0, 1], got {}",
                self.relaxation
            )));
        }
        if !self.tol.is_finite() || self.tol <= F::zero() {
            return Err(Error::invalid(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Converged (or best-effort) output of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution<F: Scalar> {
    pub state_traj: Trajectory<F, State<F>>,
    pub adjoint_traj: Trajectory<F, AdjointState<F>>,
    pub control_traj: Trajectory<F, ControlPoint<F>>,
    /// Objective value of the returned schedule.
    pub objective: F,
    pub iterations: usize,
    pub converged: bool,
    /// Final max-norm relative change across controls, states, costates,
    /// and the projection fixed-point gap.
    pub residual: F,
}

fn running_cost<F: Scalar>(state: State<F>, control: ControlPoint<F>, params: &Parameters<F>) -> F {
    let half = F::real(0.5);
    params.w0 * state.i
        + half * params.w1 * control.u1 * control.u1
        + half * params.w2 * control.u2 * control.u2
}

/// Integral of prevalence plus quadratic control effort along a trajectory
/// pair, by the trapezoid rule on the shared grid.
pub fn objective<F: Scalar>(
    state_traj: &Trajectory<F, State<F>>,
    control_traj: &Trajectory<F, ControlPoint<F>>,
    params: &Parameters<F>,
) -> Result<F, Error<F>> {
    if state_traj.grid() != control_traj.grid() {
        return Err(Error::invalid(
            "state and control trajectories must share a grid",
        ));
    }
    let samples: Vec<F> = state_traj
        .values()
        .iter()
        .zip(control_traj.values())
        .map(|(&x, &u)| running_cost(x, u, params))
        .collect();
    trapezoid(state_traj.grid(), &samples)
}

/// Running cost plus the costate-weighted drift.
pub fn hamiltonian<F: Scalar>(
    state: State<F>,
    adjoint: AdjointState<F>,
    control: ControlPoint<F>,
    params: &Parameters<F>,
) -> Result<F, Error<F>> {
    if !state.is_finite() || !adjoint.is_finite() || !control.is_finite() {
        return Err(Error::invalid(
            "hamiltonian arguments must be finite",
        ));
    }
    let f = dynamics_rhs_raw(state, control, params);
    Ok(running_cost(state, control, params)
        + adjoint.lam1 * f.s
        + adjoint.lam2 * f.l1
        + adjoint.lam3 * f.i
        + adjoint.lam4 * f.l2
        + adjoint.lam5 * f.r)
}

/// Time derivative of the costates: the negative state-gradient of the
/// Hamiltonian, so prevalence pressure enters through `-w0` on the
/// infectious costate.
pub fn adjoint_rhs<F: Scalar>(
    adjoint: AdjointState<F>,
    state: State<F>,
    control: ControlPoint<F>,
    params: &Parameters<F>,
) -> Result<AdjointState<F>, Error<F>> {
    if !state.is_finite() || !adjoint.is_finite() || !control.is_finite() {
        return Err(Error::invalid("costate arguments must be finite"));
    }
    Ok(adjoint_rhs_raw(adjoint, state, control, params))
}

pub(crate) fn adjoint_rhs_raw<F: Scalar>(
    adjoint: AdjointState<F>,
    state: State<F>,
    control: ControlPoint<F>,
    params: &Parameters<F>,
) -> AdjointState<F> {
    let p = params;
    let l = adjoint;
    let contact = p.beta / p.n_pop;
    let foi = contact * state.i;
    let one = F::one();

    let d1 = l.lam1 * (foi + p.mu) - l.lam2 * foi;
    let d2 = l.lam2 * (p.delta + p.tau1 * control.u1 + p.mu)
        - l.lam3 * p.phi * p.delta
        - l.lam4 * (one - p.phi) * p.delta
        - l.lam5 * p.tau1 * control.u1;
    let d3 = -p.w0 + l.lam1 * contact * state.s
        - l.lam2 * contact * (state.s + p.sigma * state.l2 + p.sigma_r * state.r)
        + l.lam3 * (p.tau0 + p.mu)
        + l.lam4 * p.sigma * contact * state.l2
        - l.lam5 * (p.tau0 - p.sigma_r * contact * state.r);
    let d4 = -l.lam2 * p.sigma * foi - l.lam3 * p.omega
        + l.lam4 * (p.sigma * foi + p.omega + p.tau2 * control.u2 + p.mu)
        - l.lam5 * p.tau2 * control.u2;
    let d5 = -l.lam2 * p.sigma_r * foi - l.lam3 * p.omega_r
        + l.lam5 * (p.sigma_r * foi + p.omega_r + p.mu);

    AdjointState::new(d1, d2, d3, d4, d5)
}

fn clamp01<F: Scalar>(x: F) -> F {
    x.max(F::zero()).min(F::one())
}

/// Pointwise Hamiltonian minimizer over `[0, 1]^2`, with disabled controls
/// pinned to zero. Enabled controls need a positive effort weight.
pub fn project_controls<F: Scalar>(
    state: State<F>,
    adjoint: AdjointState<F>,
    params: &Parameters<F>,
    mask: StrategyMask,
) -> ControlPoint<F> {
    let u1 = if mask.enable_u1 {
        clamp01(params.tau1 * state.l1 * (adjoint.lam2 - adjoint.lam5) / params.w1)
    } else {
        F::zero()
    };
    let u2 = if mask.enable_u2 {
        clamp01(params.tau2 * state.l2 * (adjoint.lam4 - adjoint.lam5) / params.w2)
    } else {
        F::zero()
    };
    ControlPoint::new(u1, u2)
}

fn project_trajectory<F: Scalar>(
    state_traj: &Trajectory<F, State<F>>,
    adjoint_traj: &Trajectory<F, AdjointState<F>>,
    params: &Parameters<F>,
    mask: StrategyMask,
) -> Trajectory<F, ControlPoint<F>> {
    let values = state_traj
        .values()
        .iter()
        .zip(adjoint_traj.values())
        .map(|(&x, &l)| project_controls(x, l, params, mask))
        .collect();
    Trajectory::new(*state_traj.grid(), values).expect("projection preserves the grid")
}

fn integrate_state<F: Scalar>(
    params: &Parameters<F>,
    initial_state: State<F>,
    control_traj: &Trajectory<F, ControlPoint<F>>,
) -> Result<Trajectory<F, State<F>>, Error<F>> {
    rk4_forward(control_traj.grid(), initial_state, |t, x| {
        dynamics_rhs_raw(x, control_traj.sample(t), params)
    })
}

fn integrate_adjoint<F: Scalar>(
    params: &Parameters<F>,
    state_traj: &Trajectory<F, State<F>>,
    control_traj: &Trajectory<F, ControlPoint<F>>,
) -> Result<Trajectory<F, AdjointState<F>>, Error<F>> {
    // Free terminal state, so the costates vanish at t_f.
    rk4_backward(state_traj.grid(), AdjointState::zero(), |t, l| {
        adjoint_rhs_raw(l, state_traj.sample(t), control_traj.sample(t), params)
    })
}

fn convex_combination<F: Scalar>(
    fresh: &Trajectory<F, ControlPoint<F>>,
    previous: &Trajectory<F, ControlPoint<F>>,
    weight: F,
) -> Trajectory<F, ControlPoint<F>> {
    let values = fresh
        .values()
        .iter()
        .zip(previous.values())
        .map(|(&a, &b)| a.scale(weight).add(b.scale(F::one() - weight)))
        .collect();
    Trajectory::new(*fresh.grid(), values).expect("combination preserves the grid")
}

/// Runs the forward-backward sweep from the standard initial guess
/// (intensity [`DEFAULT_INITIAL_GUESS`] on every enabled control).
pub fn solve_fbs<F: Scalar>(
    params: &Parameters<F>,
    initial_state: State<F>,
    mask: StrategyMask,
    settings: &FbsSettings<F>,
) -> Result<OptimalSolution<F>, Error<F>> {
    let g = F::real(DEFAULT_INITIAL_GUESS);
    solve_fbs_with_guess(params, initial_state, mask, settings, ControlPoint::new(g, g))
}

/// Runs the forward-backward sweep starting every node at `guess` (disabled
/// components pinned to zero).
///
/// Convergence requires the max-norm relative changes of the control, state,
/// and costate trajectories and the projection fixed-point gap to all fall
/// under `settings.tol` within `settings.max_iters` iterations; otherwise
/// the error carries the last iterate.
pub fn solve_fbs_with_guess<F: Scalar>(
    params: &Parameters<F>,
    initial_state: State<F>,
    mask: StrategyMask,
    settings: &FbsSettings<F>,
    guess: ControlPoint<F>,
) -> Result<OptimalSolution<F>, Error<F>> {
    params.validate()?;
    settings.validate()?;
    if !initial_state.is_finite() || initial_state.min_component() < F::zero() {
        return Err(Error::invalid(
            "initial state must be finite and nonnegative",
        ));
    }
    let total_gap = (initial_state.total() - params.n_pop).abs();
    if total_gap > F::real(1.0e-6) * params.n_pop {
        return Err(Error::invalid(format!(
            "initial state total {} must match n_pop {}",
            initial_state.total(),
            params.n_pop
        )));
    }
    let grid = settings.grid;
    if grid.t0() != F::zero() || (grid.t1() - params.t_f).abs() > F::real(1.0e-12) * params.t_f {
        return Err(Error::invalid(format!(
            "grid must span [0, t_f] = [0, {}], got [{}, {}]",
            params.t_f,
            grid.t0(),
            grid.t1()
        )));
    }
    if mask.enable_u1 && params.w1 <= F::zero() {
        return Err(Error::invalid("w1 must be positive when u1 is enabled"));
    }
    if mask.enable_u2 && params.w2 <= F::zero() {
        return Err(Error::invalid("w2 must be positive when u2 is enabled"));
    }
    if !guess.is_finite() || !mask.apply(guess).is_admissible() {
        return Err(Error::invalid("initial control guess must lie in [0, 1]"));
    }

    let mut control = Trajectory::constant(grid, mask.apply(guess));
    let mut state = integrate_state(params, initial_state, &control)?;
    let mut adjoint = integrate_adjoint(params, &state, &control)?;
    let mut projected = project_trajectory(&state, &adjoint, params, mask);

    let mut residual = relative_change(&projected, &control);
    let mut converged = residual <= settings.tol;
    let mut iterations = 0;

    while !converged && iterations < settings.max_iters {
        iterations += 1;
        let next_control = convex_combination(&projected, &control, settings.relaxation);
        let next_state = integrate_state(params, initial_state, &next_control)?;
        let next_adjoint = integrate_adjoint(params, &next_state, &next_control)?;
        let next_projected = project_trajectory(&next_state, &next_adjoint, params, mask);

        residual = relative_change(&next_control, &control)
            .max(relative_change(&next_state, &state))
            .max(relative_change(&next_adjoint, &adjoint))
            .max(relative_change(&next_projected, &next_control));

        control = next_control;
        state = next_state;
        adjoint = next_adjoint;
        projected = next_projected;
        converged = residual <= settings.tol;
    }

    let objective_value = objective(&state, &control, params)?;
    let solution = OptimalSolution {
        state_traj: state,
        adjoint_traj: adjoint,
        control_traj: control,
        objective: objective_value,
        iterations,
        converged,
        residual,
    };
    if converged {
        Ok(solution)
    } else {
        Err(Error::SweepNotConverged {
            iterations,
            residual,
            tolerance: settings.tol,
            last: Box::new(solution),
        })
    }
}
