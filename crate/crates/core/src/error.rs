use thiserror::Error;

/// Errors produced by the numerical routines.
///
/// Precondition violations (arguments outside documented domains) panic
/// instead; every variant here describes a state the solver can reach at
/// run time on valid input.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A configuration or argument value is outside its allowed range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Newton iteration stalled or exceeded its iteration budget.
    #[error("Newton iteration did not converge after {iters} steps (residual {residual:.3e})")]
    NewtonDiverged { iters: usize, residual: f64 },

    /// A dense linear system (collocation Jacobian or constraint system)
    /// could not be factorized.
    #[error("singular linear system: {0}")]
    SingularSystem(String),

    /// An operator passed to `solve` has an eigenvalue too close to zero.
    #[error("operator is near-singular: eigenvalue {eigenvalue:.3e} within {tol:.3e} of zero")]
    NearSingular { eigenvalue: f64, tol: f64 },

    /// The tridiagonal eigenvalue solver failed to bracket or refine.
    #[error("eigenvalue solver failed: {0}")]
    Eigensolver(String),

    /// A fixed-point or Volterra iteration stopped contracting.
    #[error("iteration did not contract: {0}")]
    NonContraction(String),

    /// A quadrature convergence probe failed to plateau.
    #[error("quadrature did not converge: {0}")]
    QuadratureDiverged(String),

    /// Shooting bisection could not find a sign-change bracket.
    #[error("bisection bracket not found: {0}")]
    BracketNotFound(String),

    /// An integrand or operator sample evaluated to NaN or infinity.
    #[error("non-finite sample encountered: {0}")]
    NonFiniteSample(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
