//! Compartmental tuberculosis transmission model with reinfection and two
//! latent-treatment interventions.
//!
//! The population of constant size `n_pop` is split into five compartments:
//! susceptible `S`, early latent `L1`, infectious `I`, persistent latent
//! `L2`, and recovered-under-treatment `R`. Both `L2` and `R` can be
//! reinfected, at susceptibilities reduced by `sigma` and `sigma_r`.
//! Control `u1` treats early latent individuals (rate `tau1 * u1`), control
//! `u2` treats persistent latent individuals (rate `tau2 * u2`); both move
//! people into `R`. Births balance deaths, so every trajectory conserves the
//! total population.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ode::OdeVector;
use crate::scalar::Scalar;

/// Model, horizon, and objective-weight parameters. Rates are per year.
///
/// Deserialization validates; direct construction should go through
/// [`Parameters::baseline`] or be followed by [`Parameters::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawParameters<F>",
    bound(
        serialize = "F: Serialize",
        deserialize = "F: serde::de::DeserializeOwned"
    )
)]
pub struct Parameters<F: Scalar> {
    /// Transmission coefficient (effective contact rate).
    pub beta: F,
    /// Natural death rate; births enter `S` at the same total rate.
    pub mu: F,
    /// Rate of leaving early latency.
    pub delta: F,
    /// Fraction of early-latency exits that progress straight to disease.
    pub phi: F,
    /// Endogenous reactivation rate from persistent latency.
    pub omega: F,
    /// Endogenous reactivation rate after treatment.
    pub omega_r: F,
    /// Relative susceptibility to reinfection from persistent latency.
    pub sigma: F,
    /// Relative susceptibility to reinfection after treatment.
    pub sigma_r: F,
    /// Treatment rate of active disease.
    pub tau0: F,
    /// Maximal treatment rate of early latents under `u1`.
    pub tau1: F,
    /// Maximal treatment rate of persistent latents under `u2`.
    pub tau2: F,
    /// Constant total population.
    pub n_pop: F,
    /// Control horizon in years.
    pub t_f: F,
    /// Objective weight on infectious prevalence.
    pub w0: F,
    /// Objective weight on the squared intensity of `u1`.
    pub w1: F,
    /// Objective weight on the squared intensity of `u2`.
    pub w2: F,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameters<F> {
    beta: F,
    mu: F,
    delta: F,
    phi: F,
    omega: F,
    omega_r: F,
    sigma: F,
    sigma_r: F,
    tau0: F,
    tau1: F,
    tau2: F,
    n_pop: F,
    t_f: F,
    w0: F,
    w1: F,
    w2: F,
}

impl<F: Scalar> TryFrom<RawParameters<F>> for Parameters<F> {
    type Error = Error<F>;

    fn try_from(raw: RawParameters<F>) -> Result<Self, Error<F>> {
        let params = Parameters {
            beta: raw.beta,
            mu: raw.mu,
            delta: raw.delta,
            phi: raw.phi,
            omega: raw.omega,
            omega_r: raw.omega_r,
            sigma: raw.sigma,
            sigma_r: raw.sigma_r,
            tau0: raw.tau0,
            tau1: raw.tau1,
            tau2: raw.tau2,
            n_pop: raw.n_pop,
            t_f: raw.t_f,
            w0: raw.w0,
            w1: raw.w1,
            w2: raw.w2,
        };
        params.validate()?;
        Ok(params)
    }
}

impl<F: Scalar> Parameters<F> {
    /// Reference parameter set for a high-burden setting: 70-year life
    /// expectancy, fast progression out of early latency (about a month),
    /// 5% primary progression, and a population of 30 000. The horizon is
    /// 5 years and all objective weights are 50.
    pub fn baseline(beta: F, sigma_r: F) -> Result<Self, Error<F>> {
        let params = Parameters {
            beta,
            mu: F::real(1.0 / 70.0),
            delta: F::real(12.0),
            phi: F::real(0.05),
            omega: F::real(0.0002),
            omega_r: F::real(0.00002),
            sigma: F::real(0.25),
            sigma_r,
            tau0: F::real(2.0),
            tau1: F::real(2.0),
            tau2: F::real(1.0),
            n_pop: F::real(30_000.0),
            t_f: F::real(5.0),
            w0: F::real(50.0),
            w1: F::real(50.0),
            w2: F::real(50.0),
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks finiteness, nonnegativity of rates and weights, `phi` in
    /// `[0, 1]`, and positivity of `n_pop` and `t_f`.
    pub fn validate(&self) -> Result<(), Error<F>> {
        for (name, value) in self.fields() {
            if !value.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {value}")));
            }
        }
        let nonnegative = [
            ("beta", self.beta),
            ("mu", self.mu),
            ("delta", self.delta),
            ("omega", self.omega),
            ("omega_r", self.omega_r),
            ("sigma", self.sigma),
            ("sigma_r", self.sigma_r),
            ("tau0", self.tau0),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("w0", self.w0),
            ("w1", self.w1),
            ("w2", self.w2),
        ];
        for (name, value) in nonnegative {
            if value < F::zero() {
                return Err(Error::invalid(format!(
                    "{name} must be nonnegative, got {value}"
                )));
            }
        }
        if self.phi < F::zero() || self.phi > F::one() {
            return Err(Error::invalid(format!(
                "phi must lie in [0, 1], got {}",
                self.phi
            )));
        }
        if self.n_pop <= F::zero() {
            return Err(Error::invalid(format!(
                "n_pop must be positive, got {}",
                self.n_pop
            )));
        }
        if self.t_f <= F::zero() {
            return Err(Error::invalid(format!(
                "t_f must be positive, got {}",
                self.t_f
            )));
        }
        Ok(())
    }

    fn fields(&self) -> [(&'static str, F); 16] {
        [
            ("beta", self.beta),
            ("mu", self.mu),
            ("delta", self.delta),
            ("phi", self.phi),
            ("omega", self.omega),
            ("omega_r", self.omega_r),
            ("sigma", self.sigma),
            ("sigma_r", self.sigma_r),
            ("tau0", self.tau0),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("n_pop", self.n_pop),
            ("t_f", self.t_f),
            ("w0", self.w0),
            ("w1", self.w1),
            ("w2", self.w2),
        ]
    }
}

/// Compartment occupancies at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State<F> {
    pub s: F,
    pub l1: F,
    pub i: F,
    pub l2: F,
    pub r: F,
}

impl<F: Scalar> State<F> {
    pub fn new(s: F, l1: F, i: F, l2: F, r: F) -> Self {
        State { s, l1, i, l2, r }
    }

    /// Whole population susceptible; a fixed point of the dynamics.
    pub fn disease_free(n_pop: F) -> Self {
        State::new(n_pop, F::zero(), F::zero(), F::zero(), F::zero())
    }

    pub fn total(&self) -> F {
        self.s + self.l1 + self.i + self.l2 + self.r
    }

    pub fn min_component(&self) -> F {
        self.s.min(self.l1).min(self.i).min(self.l2).min(self.r)
    }
}

impl<F: Scalar> OdeVector<F> for State<F> {
    fn zero() -> Self {
        State::new(F::zero(), F::zero(), F::zero(), F::zero(), F::zero())
    }

    fn scale(self, c: F) -> Self {
        State::new(self.s * c, self.l1 * c, self.i * c, self.l2 * c, self.r * c)
    }

    fn add(self, other: Self) -> Self {
        State::new(
            self.s + other.s,
            self.l1 + other.l1,
            self.i + other.i,
            self.l2 + other.l2,
            self.r + other.r,
        )
    }

    fn max_abs(self) -> F {
        self.s
            .abs()
            .max(self.l1.abs())
            .max(self.i.abs())
            .max(self.l2.abs())
            .max(self.r.abs())
    }

    fn is_finite(self) -> bool {
        self.s.is_finite()
            && self.l1.is_finite()
            && self.i.is_finite()
            && self.l2.is_finite()
            && self.r.is_finite()
    }
}

/// Intensities of the two interventions at one instant, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint<F> {
    pub u1: F,
    pub u2: F,
}

impl<F: Scalar> ControlPoint<F> {
    pub fn new(u1: F, u2: F) -> Self {
        ControlPoint { u1, u2 }
    }

    pub fn is_admissible(&self) -> bool {
        self.u1 >= F::zero() && self.u1 <= F::one() && self.u2 >= F::zero() && self.u2 <= F::one()
    }
}

impl<F: Scalar> OdeVector<F> for ControlPoint<F> {
    fn zero() -> Self {
        ControlPoint::new(F::zero(), F::zero())
    }

    fn scale(self, c: F) -> Self {
        ControlPoint::new(self.u1 * c, self.u2 * c)
    }

    fn add(self, other: Self) -> Self {
        ControlPoint::new(self.u1 + other.u1, self.u2 + other.u2)
    }

    fn max_abs(self) -> F {
        self.u1.abs().max(self.u2.abs())
    }

    fn is_finite(self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }
}

/// Time derivative of the compartments under the given control.
///
/// The derivative components sum to zero: births `mu * n_pop` exactly offset
/// deaths `mu * (S + L1 + I + L2 + R)` whenever the state totals `n_pop`.
pub fn dynamics_rhs<F: Scalar>(
    state: State<F>,
    control: ControlPoint<F>,
    params: &Parameters<F>,
) -> Result<State<F>, Error<F>> {
    if !state.is_finite() {
        return Err(Error::invalid("state must be finite"));
    }
    if !control.is_finite() {
        return Err(Error::invalid("control must be finite"));
    }
    Ok(dynamics_rhs_raw(state, control, params))
}

pub(crate) fn dynamics_rhs_raw<F: Scalar>(
    state: State<F>,
    control: ControlPoint<F>,
    params: &Parameters<F>,
) -> State<F> {
    let p = params;
    // Per-capita infection rate experienced by a fully susceptible person.
    let foi = p.beta / p.n_pop * state.i;
    let ds = p.mu * p.n_pop - foi * state.s - p.mu * state.s;
    let dl1 = foi * (state.s + p.sigma * state.l2 + p.sigma_r * state.r)
        - (p.delta + p.tau1 * control.u1 + p.mu) * state.l1;
    let di = p.phi * p.delta * state.l1 + p.omega * state.l2 + p.omega_r * state.r
        - (p.tau0 + p.mu) * state.i;
    let dl2 = (F::one() - p.phi) * p.delta * state.l1
        - p.sigma * foi * state.l2
        - (p.omega + p.tau2 * control.u2 + p.mu) * state.l2;
    let dr = p.tau0 * state.i + p.tau1 * control.u1 * state.l1 + p.tau2 * control.u2 * state.l2
        - p.sigma_r * foi * state.r
        - (p.omega_r + p.mu) * state.r;
    State::new(ds, dl1, di, dl2, dr)
}

/// Expected number of secondary infections caused by one infectious case in
/// a fully susceptible population. Linear in `beta`; the endemic threshold
/// is at the value 1.
pub fn basic_reproduction_number<F: Scalar>(params: &Parameters<F>) -> Result<F, Error<F>> {
    params.validate()?;
    let p = params;
    let numerator = p.beta * p.delta * (p.omega + p.phi * p.mu) * (p.omega_r + p.mu);
    let denominator =
        p.mu * (p.omega_r + p.tau0 + p.mu) * (p.delta + p.mu) * (p.omega + p.mu);
    if denominator <= F::zero() {
        return Err(Error::invalid(
            "reproduction number undefined: denominator must be positive \
             (requires mu > 0)",
        ));
    }
    Ok(numerator / denominator)
}
