//! Error type shared by the model, the solvers, and the measures.

use std::fmt;

use crate::equilibrium::EquilibriumResult;
use crate::optctl::OptimalSolution;
use crate::scalar::Scalar;

/// Errors produced by the numerical core.
///
/// Non-convergence variants carry the last iterate so callers can inspect or
/// report partial results instead of losing them.
#[derive(Debug)]
pub enum Error<F: Scalar> {
    /// An argument violated a documented precondition.
    InvalidInput(String),

    /// A state or adjoint component stopped being finite during integration.
    BlowUp { step: usize },

    /// Equilibrium relaxation reached the horizon with the residual still
    /// above tolerance.
    EquilibriumNotConverged {
        residual: F,
        tolerance: F,
        horizon: F,
        /// Best iterate seen, with `converged == false`.
        best: Box<EquilibriumResult<F>>,
    },

    /// The forward-backward sweep hit its iteration cap.
    SweepNotConverged {
        iterations: usize,
        residual: F,
        tolerance: F,
        /// Last iterate, with `converged == false`.
        last: Box<OptimalSolution<F>>,
    },

    /// A ratio such as cost per case averted has a non-positive denominator.
    UndefinedRatio(String),

    /// Two strategies averted exactly the same number of cases, so the
    /// incremental ranking is ambiguous.
    EffectivenessTie(String, String),

    /// A post-sweep consistency check failed.
    ScanAnomaly(String),

    /// A scenario cell failed; wraps the underlying error with the label.
    Cell { label: String, source: Box<Error<F>> },
}

impl<F: Scalar> fmt::Display for Error<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(message) => write!(f, "invalid input: {message}"),
            Error::BlowUp { step } => {
                write!(f, "integration produced a non-finite value at step {step}")
            }
            Error::EquilibriumNotConverged {
                residual,
                tolerance,
                horizon,
                ..
            } => write!(
                f,
                "equilibrium relaxation did not converge within {horizon} yr: \
                 residual {residual:e} > tolerance {tolerance:e}"
            ),
            Error::SweepNotConverged {
                iterations,
                residual,
                tolerance,
                ..
            } => write!(
                f,
                "forward-backward sweep did not converge in {iterations} iterations: \
                 residual {residual:e} > tolerance {tolerance:e}"
            ),
            Error::UndefinedRatio(message) => write!(f, "undefined ratio: {message}"),
            Error::EffectivenessTie(a, b) => {
                write!(f, "strategies {a:?} and {b:?} tie on cases averted")
            }
            Error::ScanAnomaly(message) => write!(f, "scan anomaly: {message}"),
            Error::Cell { label, source } => write!(f, "cell {label:?}: {source}"),
        }
    }
}

impl<F: Scalar> std::error::Error for Error<F> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Cell { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}

impl<F: Scalar> Error<F> {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    /// Wraps `self` with the scenario label it occurred in.
    pub fn in_cell(self, label: &str) -> Self {
        Error::Cell {
            label: label.to_owned(),
            source: Box::new(self),
        }
    }
}
