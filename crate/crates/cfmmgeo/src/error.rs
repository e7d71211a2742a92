use crate::routing::RoutingSolution;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A vector argument has the wrong length for the set or instance.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Both bracket endpoints evaluate to the same predicate value.
    #[error("bracket endpoints do not straddle the threshold")]
    NonBracketing,

    /// Doubling/halving from the seed never produced a sign change.
    #[error("no sign change found while expanding from seed {seed}")]
    NoBracketFound { seed: f64 },

    /// The iteration budget ran out before the tolerance was met.
    #[error("iteration limit {max_iter} reached before convergence")]
    MaxIterExceeded { max_iter: usize },

    /// A scalar or vector argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Set scaling requires a strictly positive factor.
    #[error("scale factor must be strictly positive, got {0}")]
    InvalidScale(f64),

    /// An asset index does not fit the global dimension.
    #[error("asset index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    /// The supplied reserves are not a member of the set.
    #[error("reserves lie outside the set")]
    NotInSet,

    /// No positive scaling of the reserves reaches the set.
    #[error("no positive scaling of the reserves reaches the set")]
    ZeroLiquidity,

    /// One-sided difference quotients disagree: the function has a kink here.
    #[error("the function is not differentiable at the evaluation point")]
    NonSmoothPoint,

    /// The numeraire component of the gradient vanishes, so prices cannot be
    /// normalized to it.
    #[error("numeraire gradient component is zero; prices cannot be normalized")]
    DegenerateNumeraire,

    /// The operation has no implementation for this set or dimension.
    #[error("operation not supported: {0}")]
    Unsupported(String),

    /// The first trade of a path-independence probe is not feasible.
    #[error("first trade is not feasible for the trading set")]
    InfeasibleFirstTrade,

    /// A withdrawal asks for more than the provider's redeemable share.
    #[error("withdrawal exceeds the provider's redeemable share")]
    RemoveExceedsShare,

    /// Liquidity events require a strictly positive fraction.
    #[error("liquidity fraction must be strictly positive")]
    NonPositiveFraction,

    /// The routing dual descent stopped with a gap above tolerance. The best
    /// iterate is attached for diagnostics.
    #[error("routing did not converge: duality gap {gap}")]
    RoutingNotConverged {
        gap: f64,
        solution: Box<RoutingSolution>,
    },

    /// A JSON pool or instance description failed to parse.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
