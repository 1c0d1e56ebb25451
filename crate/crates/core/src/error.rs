use thiserror::Error;

/// Errors produced by graph construction, partitioning and verification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("generator list is empty")]
    EmptyGenerators,

    #[error("group order {0} is too small (need n >= 3)")]
    InvalidOrder(u64),

    #[error("generator {generator} is congruent to 0 mod {n}")]
    ZeroGenerator { n: u64, generator: i64 },

    #[error("generator {generator} is self-inverse in Z_{n} (equals n/2)")]
    SelfInverseGenerator { n: u64, generator: u64 },

    #[error("generators do not generate Z_{n}: gcd with n is {gcd}")]
    DisconnectedGraph { n: u64, gcd: u64 },

    #[error("generator {0} is not in the graph")]
    GeneratorNotInGraph(u64),

    #[error("signing has length {got}, expected {expected}")]
    SigningLength { expected: usize, got: usize },

    #[error("quadrature did not converge after {nodes} nodes (last change {last_change:e})")]
    QuadratureNonConvergence { nodes: u64, last_change: f64 },

    #[error("partial coloring failed after {restarts} restarts")]
    RestartCapExceeded { restarts: usize },

    #[error("thresholds violate sum exp(-c^2/16) <= n/16: sum {sum:.6} > limit {limit:.6}")]
    InvalidThresholds { sum: f64, limit: f64 },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("angle is not in the near-zero class (reduced residue {theta_hat})")]
    ThetaNotInTheta2 { theta_hat: f64 },

    #[error("infeasible at this scale: {0}")]
    Infeasible(String),

    #[error("integer overflow while building {0}")]
    Overflow(&'static str),

    #[error("enumeration of {size} points exceeds cap {cap}")]
    EnumerationCapExceeded { size: u128, cap: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
