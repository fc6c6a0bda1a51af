use thiserror::Error;

/// Errors split into two families: `Domain` errors signal parameter misuse
/// and map to exit code 2 at the CLI; the rest are numeric/convergence
/// failures and map to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value while evaluating F at u={u}, alpha={alpha}")]
    NonFinite { u: f64, alpha: f64 },

    #[error("no overshoot bracket found up to a = {a_cap} (inadmissible growth or a_cap too small)")]
    NoBracket { a_cap: f64 },

    #[error("integrator step size underflow at t = {t} (V = {v}, V' = {dv})")]
    StepUnderflow { t: f64, v: f64, dv: f64 },

    #[error("profile tail too short for decay fit: {0}")]
    TailTooShort(String),

    #[error("eigenvalue at even alpha = {0}: evaluate one-sided instead")]
    BoundaryAlpha(f64),

    #[error("combinatorial size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("integer overflow in exact count: {0}")]
    CountOverflow(String),

    #[error("eigenpair iteration did not converge: {0}")]
    EigenNoConverge(String),

    #[error("degeneracy band unresolved: {0}")]
    Unresolved(String),

    #[error("precision loss: {0}")]
    PrecisionLoss(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// True for errors caused by bad inputs rather than numerical breakdown.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::NonFinite { .. }
                | Error::NoBracket { .. }
                | Error::BoundaryAlpha(_)
                | Error::SizeGuard(_)
                | Error::TailTooShort(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
