//! End-to-end ground-state solve: thresholds, assumption gate, variational
//! seed, bracket, bisection and verification.

use serde::Serialize;

use crate::nonlinearity::{AssumptionReport, Nonlinearity, Thresholds};
use crate::scalar::Real;
use crate::shooting::{
    bisect_ground_state, find_bracket, verify_ground_state, Bracket, GroundStateSolution, Problem, ShootConfig, VerificationReport,
    VerifyConfig,
};
use crate::variational::{variational_seed, GridFunction, MinimizeConfig, VariationalSeed};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolveConfig<T> {
    pub shoot: ShootConfig<T>,
    pub verify: VerifyConfig<T>,
    pub minimize: MinimizeConfig<T>,
    /// Try the variational seed before scanning for a crossing height.
    pub use_variational: bool,
    /// `J(w_ρ)` must fall below `-tol_neg` when choosing `ρ`.
    pub tol_neg: T,
}

impl<T: Real> Default for SolveConfig<T> {
    fn default() -> Self {
        Self {
            shoot: ShootConfig::default(),
            verify: VerifyConfig::default(),
            minimize: MinimizeConfig::default(),
            use_variational: true,
            tol_neg: T::lit(1e-3),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Thresholds,
    Assumptions,
    Bracket,
    Bisection,
    Verification,
}

#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub stage: Stage,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport<T: Real> {
    pub thresholds: Option<Thresholds<T>>,
    pub assumption_report: Option<AssumptionReport<T>>,
    pub variational: Option<VariationalSeed<T>>,
    pub variational_error: Option<String>,
    pub bracket: Option<Bracket<T>>,
    pub solution: Option<GroundStateSolution<T>>,
    pub verification: Option<VerificationReport<T>>,
    pub failure: Option<Failure>,
    #[serde(skip)]
    pub minimizer: Option<GridFunction<T>>,
}

impl<T: Real> SolveReport<T> {
    fn empty() -> Self {
        Self {
            thresholds: None,
            assumption_report: None,
            variational: None,
            variational_error: None,
            bracket: None,
            solution: None,
            verification: None,
            failure: None,
            minimizer: None,
        }
    }

    fn fail(mut self, stage: Stage, message: impl ToString) -> Self {
        self.failure = Some(Failure { stage, message: message.to_string() });
        self
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Runs the full solve; every stage that completed is kept in the report.
pub fn solve<T: Real>(nl: Nonlinearity<T>, dimension: u32, cfg: &SolveConfig<T>) -> SolveReport<T> {
    let mut report = SolveReport::empty();
    let problem = match Problem::new(nl, dimension) {
        Ok(p) => p,
        Err(e) => return report.fail(Stage::Thresholds, e),
    };
    report.thresholds = Some(*problem.thresholds());
    let assumptions = problem.assumptions();
    let failures = assumptions.failures();
    report.assumption_report = Some(assumptions);
    if !failures.is_empty() {
        return report.fail(Stage::Assumptions, format!("assumptions {failures:?} fail"));
    }

    let mut seed = None;
    if cfg.use_variational {
        match variational_seed(dimension, problem.nonlinearity(), problem.thresholds(), &cfg.minimize, cfg.tol_neg) {
            Ok((summary, grid)) => {
                seed = summary.seed.filter(|&s| problem.check_height(s).is_ok());
                report.variational = Some(summary);
                report.minimizer = Some(grid);
            }
            Err(e) => report.variational_error = Some(e.to_string()),
        }
    }

    let bracket = match find_bracket(&problem, &cfg.shoot, seed) {
        Ok(b) => b,
        Err(e) => return report.fail(Stage::Bracket, e),
    };
    let endpoints = (bracket.xi_plus, bracket.xi_minus);
    report.bracket = Some(bracket);

    let solution = match bisect_ground_state(&problem, endpoints, &cfg.shoot) {
        Ok(s) => s,
        Err(e) => return report.fail(Stage::Bisection, e),
    };
    let verification = verify_ground_state(&solution, &problem, cfg.shoot.integrator.sample_stride, &cfg.verify);
    let passed = verification.all_passed;
    report.solution = Some(solution);
    report.verification = Some(verification);
    if !passed {
        return report.fail(Stage::Verification, "verification checks failed");
    }
    report
}
