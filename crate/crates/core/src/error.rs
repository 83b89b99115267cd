use thiserror::Error;

/// Errors raised by the solvers. Numeric payloads are widened to `f64` so the
/// type stays independent of the scalar parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite argument {0}")]
    NonFinite(f64),

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {estimate:e}")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("assumption (f3) violated: f has no nonnegative value in (0, {scan_max}]")]
    NoAlpha { scan_max: f64 },

    #[error("assumption (f5) violated: F has no positive value in (0, {scan_max}]")]
    NoGamma { scan_max: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("initial height {xi} outside the admissible interval ({lower}, {upper})")]
    HeightOutOfRange { xi: f64, lower: f64, upper: f64 },

    #[error("r = 0 is singular for the radial vector field; use the Taylor startup")]
    SingularRadius,

    #[error("step size underflow ({step:e}) at r = {r}: stiffness or misuse")]
    Stiffness { r: f64, u: f64, q: f64, dissipation: f64, step: f64 },

    #[error("assumption check failed: {0}")]
    AssumptionFailure(String),

    #[error("I- not detected within budget (searched up to {upper})")]
    BracketNotFound { upper: f64 },

    #[error("invalid bracket: endpoints classify as {left} and {right}")]
    InvalidBracket { left: String, right: String },

    #[error("classification flip-flop: bisection exceeded {iterations} iterations")]
    FlipFlop { iterations: usize },

    #[error("line search failed to find a descent step at iteration {iteration}")]
    NoDescent { iteration: usize },

    #[error("trial function needs rho > 2 gamma (rho = {rho}, gamma = {gamma})")]
    TrialRadius { rho: f64, gamma: f64 },

    #[error("no negative J(w_rho) after {doublings} doublings of rho (last rho = {rho}, J = {j})")]
    RhoSearch { doublings: usize, rho: f64, j: f64 },

    #[error("variational seed {seed} outside ({alpha}, {beta}); discretization too coarse or rho too small")]
    SeedOutOfRange { seed: f64, alpha: f64, beta: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
