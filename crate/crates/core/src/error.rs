use num_complex::Complex64;
use thiserror::Error;

/// Failure modes shared by every solver in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FprError {
    #[error("argument outside the supported domain: {0}")]
    Domain(String),
    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),
    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("iterate left the admissible region around the seed (|z - seed| = {distance:.3e} > {radius:.3e})")]
    EscapedRegion { distance: f64, radius: f64 },
    #[error("contour passes too close to a zero or pole (winding sum {value:.6})")]
    ContourTooClose { value: f64 },
    #[error("probe rank {probe_rank} cannot resolve the eigenvalues inside the contour ({detail})")]
    RankDeficientProbe { probe_rank: usize, detail: String },
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("z = {z} is within {distance:.3e} of an interior Dirichlet eigenvalue {eigenvalue:.6}")]
    SpuriousFrequency { z: Complex64, eigenvalue: f64, distance: f64 },
    #[error("kappa = {kappa} is too close to the resonance {resonance} (|kappa - z| = {distance:.3e})")]
    NearSingular { kappa: Complex64, resonance: Complex64, distance: f64 },
    #[error("evaluation point lies on the inclusion boundary")]
    OnBoundary,
    #[error("{0} lies outside the validity window")]
    OutOfWindow(String),
    #[error("frequency truncation too coarse: tail estimate {tail:.3e} exceeds {tolerance:.3e}")]
    TruncationTooCoarse { tail: f64, tolerance: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, FprError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(FprError::Domain(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(FprError::Precondition(msg.into()))
}
