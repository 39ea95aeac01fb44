use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("linkage singularity: |rho*sin(theta)| >= 1 at theta = {theta}")]
    LinkageDomain { theta: f64 },

    #[error("singular mass matrix (det = {det:e})")]
    SingularMassMatrix { det: f64 },

    #[error("family is singular at s = {s}, theta = {theta}: {reason}")]
    Singular { s: f64, theta: f64, reason: &'static str },

    #[error("target metric is not invertible (det = {det:e})")]
    NonInvertibleMetric { det: f64 },

    #[error("invalid plant parameters: {0}")]
    InvalidParams(String),

    #[error("generator invariant violated: {0}")]
    GeneratorInvariant(String),

    #[error("quadrature on [{a}, {b}] did not reach tolerance (estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("state is not an equilibrium of the closed loop (|f(x_eq)| = {residual:e})")]
    NonEquilibrium { residual: f64 },

    #[error("gain fit did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("gain-fit Jacobian is singular")]
    SingularJacobian,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
