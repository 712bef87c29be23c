//! Optimal scheduling of post-exposure tuberculosis interventions.
//!
//! A five-compartment transmission model with reinfection is driven by two
//! latent-treatment controls. Starting from the uncontrolled endemic state,
//! a forward-backward sweep finds the schedule minimizing infectious
//! prevalence plus quadratic treatment effort, and the measures layer turns
//! the schedule into cost-effectiveness summaries: cases averted, total
//! cost, average and incremental ratios, and control relaxation times.
//! The scenarios layer maps parameter axes (transmission intensity,
//! reinfection susceptibility, horizon, objective weights) over cells and
//! runs them deterministically on a worker pool.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the common choice.

pub mod equilibrium;
pub mod error;
pub mod measures;
pub mod model;
pub mod ode;
pub mod optctl;
pub mod scalar;
pub mod scenarios;

pub use error::Error;
pub use scalar::Scalar;

pub type Parameters64 = model::Parameters<f64>;
pub type State64 = model::State<f64>;
pub type ControlPoint64 = model::ControlPoint<f64>;
pub type TimeGrid64 = ode::TimeGrid<f64>;
pub type EquilibriumResult64 = equilibrium::EquilibriumResult<f64>;
pub type AdjointState64 = optctl::AdjointState<f64>;
pub type FbsSettings64 = optctl::FbsSettings<f64>;
pub type OptimalSolution64 = optctl::OptimalSolution<f64>;
pub type CostWeights64 = measures::CostWeights<f64>;
pub type SummaryMeasures64 = measures::SummaryMeasures<f64>;
pub type SummaryRow64 = measures::SummaryRow<f64>;
pub type IcerTable64 = measures::IcerTable<f64>;
pub type ScenarioSpec64 = scenarios::ScenarioSpec<f64>;
pub type ScenarioResult64 = scenarios::ScenarioResult<f64>;
pub type Diagnostics64 = scenarios::Diagnostics<f64>;
pub type Error64 = error::Error<f64>;
