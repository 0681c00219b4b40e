//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("moment system for q = {q} is numerically singular (quadrature order {order})")]
    SingularMomentSystem { q: usize, order: usize },

    #[error("singular support at x = {location} overflows the domain at this epsilon (needs margin {margin})")]
    SupportOverflow { location: f64, margin: f64 },

    #[error("speed of component {component} violates the sign pattern at (x, t) = ({x}, {t}): {value}")]
    SignPattern {
        component: usize,
        x: f64,
        t: f64,
        value: f64,
    },

    #[error("characteristic step underflow for component {component} near (xi, tau) = ({xi}, {tau})")]
    StepUnderflow { component: usize, xi: f64, tau: f64 },

    #[error("non-finite value of {what} at {at}")]
    NonFinite { what: String, at: String },

    #[error("Picard iteration did not converge after {iterations} iterations (last difference {last_diff:e}, last ratio {last_ratio})")]
    NoConvergence {
        iterations: usize,
        last_diff: f64,
        last_ratio: f64,
    },

    #[error("geometric slab bound collapsed to {0:e}; characteristics are near tangent")]
    SlabCollapse(f64),

    #[error("plan violation: q * t_slab = {0} is not below 1")]
    PlanViolation(f64),

    #[error("compatibility check failed: {0}")]
    Incompatible(String),

    #[error("slab {slab} failed: {source}")]
    Slab {
        slab: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("expression: {0}")]
    Expr(String),
}

impl Error {
    /// Stable machine-readable code used by the CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SingularMomentSystem { .. } => "moment_system_singular",
            Error::SupportOverflow { .. } => "support_overflow",
            Error::SignPattern { .. } => "sign_pattern",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::NonFinite { .. } => "non_finite",
            Error::NoConvergence { .. } => "no_convergence",
            Error::SlabCollapse(_) => "slab_collapse",
            Error::PlanViolation(_) => "plan_violation",
            Error::Incompatible(_) => "incompatible_data",
            Error::Slab { source, .. } => source.code(),
            Error::Config(_) => "config",
            Error::Expr(_) => "expression",
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Expr(_))
    }
}
