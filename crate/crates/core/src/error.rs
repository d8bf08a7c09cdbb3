use thiserror::Error;

/// Errors shared across the crate. Operations that can only fail on invalid
/// inputs use these; order predicates report failures through verdicts instead.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("non-finite value encountered: {0}")]
    NonFinite(f64),
    #[error("negative mass {0} below tolerance")]
    Negative(f64),
    #[error("operation requires a nonempty measure")]
    EmptyMeasure,
    #[error("argument {0} out of range")]
    OutOfRange(f64),
    #[error("total masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("measures are not in convex order")]
    NotInConvexOrder,
    #[error("simplex pivot fell below tolerance; numerical breakdown")]
    NumericalBreakdown,
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("measure is not atomic biased at the requested level")]
    NotAtomicBiased,
    #[error("barycenter {0} does not match required center {1}")]
    BarycenterMismatch(f64, f64),
    #[error("measure is not biased at the requested level: {0}")]
    NotBiased(String),
    #[error("coupling marginals do not match")]
    MarginalMismatch,
    #[error("put curve is not convex: {0}")]
    NotConvex(String),
    #[error("put curve has invalid asymptotics: {0}")]
    BadAsymptotics(String),
    #[error("invalid simple component: {0}")]
    InvalidComponent(String),
    #[error("marginals are not in biased order at the requested level")]
    NotInBiasedOrder,
    #[error("marginals are not in strong biased order at margin {0}")]
    NotInStrongOrder(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
