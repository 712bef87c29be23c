//! Endemic equilibrium of the uncontrolled model, found by relaxing the
//! dynamics over a long horizon until the drift is negligible.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{basic_reproduction_number, dynamics_rhs_raw, ControlPoint, Parameters, State};
use crate::ode::OdeVector;
use crate::scalar::Scalar;

/// Integration step used by the relaxation, in years.
pub const DEFAULT_STEP_YEARS: f64 = 0.01;

/// Horizon after which the relaxation gives up, in years.
pub const DEFAULT_MAX_HORIZON_YEARS: f64 = 5000.0;

/// Default residual tolerance as a fraction of `n_pop` per year.
pub const DEFAULT_RESIDUAL_FRACTION: f64 = 1.0e-8;

/// Outcome of an equilibrium search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult<F> {
    /// Best state found; a genuine equilibrium only if `converged`.
    pub state: State<F>,
    /// Max-norm of the uncontrolled drift at `state`, per year.
    pub residual_norm: F,
    pub converged: bool,
}

/// Default drift tolerance for the given population size.
pub fn default_tolerance<F: Scalar>(params: &Parameters<F>) -> F {
    F::real(DEFAULT_RESIDUAL_FRACTION) * params.n_pop
}

/// Finds the uncontrolled long-run state for `params`.
///
/// Below the endemic threshold the disease-free state is returned directly.
/// Above it, the dynamics are integrated from a lightly seeded population
/// (1% infectious, 1% early latent) until the drift max-norm falls under
/// `tol`, or `max_horizon` years elapse, whichever comes first. On timeout
/// the error carries the best iterate seen.
pub fn endemic_equilibrium<F: Scalar>(
    params: &Parameters<F>,
    tol: F,
    max_horizon: F,
) -> Result<EquilibriumResult<F>, Error<F>> {
    params.validate()?;
    if basic_reproduction_number(params)? <= F::one() {
        return Ok(EquilibriumResult {
            state: State::disease_free(params.n_pop),
            residual_norm: F::zero(),
            converged: true,
        });
    }
    let n = params.n_pop;
    let seed = State::new(
        F::real(0.98) * n,
        F::real(0.01) * n,
        F::real(0.01) * n,
        F::zero(),
        F::zero(),
    );
    relax_to_equilibrium(params, seed, tol, max_horizon, F::real(DEFAULT_STEP_YEARS))
}

/// Relaxes the uncontrolled dynamics from `seed` until the drift max-norm
/// falls under `tol`. Exposed so callers can pick their own seed or step.
pub fn relax_to_equilibrium<F: Scalar>(
    params: &Parameters<F>,
    seed: State<F>,
    tol: F,
    max_horizon: F,
    step: F,
) -> Result<EquilibriumResult<F>, Error<F>> {
    params.validate()?;
    if !seed.is_finite() || seed.min_component() < F::zero() {
        return Err(Error::invalid("seed state must be finite and nonnegative"));
    }
    if !(tol > F::zero()) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    if !(step > F::zero()) || !(max_horizon >= step) {
        return Err(Error::invalid(format!(
            "need max_horizon >= step > 0, got step {step}, horizon {max_horizon}"
        )));
    }

    let no_control = ControlPoint::zero();
    let rhs = |x: State<F>| dynamics_rhs_raw(x, no_control, params);
    let n_steps = (max_horizon / step)
        .ceil()
        .to_usize()
        .ok_or_else(|| Error::invalid("horizon too long for the relaxation"))?;

    let half = step * F::real(0.5);
    let two = F::real(2.0);
    let sixth = step / F::real(6.0);

    let mut y = seed;
    let mut best_state = seed;
    let mut best_residual = F::infinity();
    for k in 0..=n_steps {
        // The drift at the current iterate doubles as the first RK4 stage.
        let k1 = rhs(y);
        let residual = k1.max_abs();
        if residual < best_residual {
            best_residual = residual;
            best_state = y;
        }
        if residual <= tol {
            return Ok(EquilibriumResult {
                state: y,
                residual_norm: residual,
                converged: true,
            });
        }
        if k == n_steps {
            break;
        }
        let k2 = rhs(y.add(k1.scale(half)));
        let k3 = rhs(y.add(k2.scale(half)));
        let k4 = rhs(y.add(k3.scale(step)));
        y = y.add(k1.add(k2.scale(two)).add(k3.scale(two)).add(k4).scale(sixth));
        if !y.is_finite() {
            return Err(Error::BlowUp { step: k });
        }
    }

    Err(Error::EquilibriumNotConverged {
        residual: best_residual,
        tolerance: tol,
        horizon: max_horizon,
        best: Box::new(EquilibriumResult {
            state: best_state,
            residual_norm: best_residual,
            converged: false,
        }),
    })
}
