//! Radially decreasing ground states of the Minkowski mean-curvature equation
//! `div(∇u / sqrt(1 - |∇u|²)) + f(u) = 0` in `ℝᴺ`, by shooting on `u(0)` with a
//! variational seed.
//!
//! The solvers are generic over [`scalar::Real`] (`f32` or `f64`); the aliases
//! below fix the scalar type.

pub mod error;
pub mod integrator;
pub mod nonlinearity;
pub mod pipeline;
pub mod quadrature;
pub mod scalar;
pub mod shooting;
pub mod variational;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Nonlinearity = nonlinearity::Nonlinearity<f64>;
pub type Thresholds = nonlinearity::Thresholds<f64>;
pub type AssumptionReport = nonlinearity::AssumptionReport<f64>;
pub type IntegratorConfig = integrator::IntegratorConfig<f64>;
pub type RadialState = integrator::RadialState<f64>;
pub type ProfileRow = integrator::ProfileRow<f64>;
pub type Problem = shooting::Problem<f64>;
pub type ShootConfig = shooting::ShootConfig<f64>;
pub type ShotRecord = shooting::ShotRecord<f64>;
pub type Outcome = shooting::Outcome<f64>;
pub type GroundStateSolution = shooting::GroundStateSolution<f64>;
pub type VerifyConfig = shooting::VerifyConfig<f64>;
pub type GridFunction = variational::GridFunction<f64>;
pub type MinimizeConfig = variational::MinimizeConfig<f64>;
pub type SolveConfig = pipeline::SolveConfig<f64>;
pub type SolveReport = pipeline::SolveReport<f64>;

pub type Nonlinearity32 = nonlinearity::Nonlinearity<f32>;
pub type Problem32 = shooting::Problem<f32>;
pub type ShootConfig32 = shooting::ShootConfig<f32>;
pub type IntegratorConfig32 = integrator::IntegratorConfig<f32>;
