use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("not an automorphism: the 2x2 block is singular (det = {det:e})")]
    SingularBlock { det: f64 },

    #[error("matrix is not partially hyperbolic: {reason}")]
    NotPartiallyHyperbolic { reason: String },

    #[error("center eigenvalue is -1: square the map first")]
    NegativeCenterEigenvalue,

    #[error("perturbation too large: invertibility margin {margin:.6} must stay below 0.5")]
    PerturbationTooLarge { margin: f64 },

    #[error("fixed-point inversion did not converge within {iterations} iterations (perturbation too large)")]
    FixedPointDiverged { iterations: usize },

    #[error("splitting degenerate: angle between cs- and cu-planes is {angle:e}")]
    SplittingDegenerate { angle: f64 },

    #[error("not lattice-equivariant or rounding ambiguous: {detail}")]
    NotEquivariant { detail: String },

    #[error("generators violate the commutator relation (residual {residual:e})")]
    CommutatorMismatch { residual: f64 },

    #[error("automorphism does not preserve the lattice")]
    LatticeNotPreserved,

    #[error("curve integration failed: {detail}")]
    CurveIntegration { detail: String },

    #[error("GPS check failed: {detail}")]
    GpsCheckFailed { detail: String },

    #[error("root not bracketed: {detail}")]
    RootNotBracketed { detail: String },

    #[error("center-leaf event not detected within arclength {searched:.3}")]
    EventNotDetected { searched: f64 },

    #[error("boundary gluing failed: corner consistency residual {residual:e}")]
    BoundaryGluing { residual: f64 },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
