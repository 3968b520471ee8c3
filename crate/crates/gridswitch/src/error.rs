//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Variants are
//! grouped by the stage that raises them: file loading and validation,
//! power-flow solving, model assembly, metric evaluation, switching, and
//! simulation. Each variant carries enough context to name the offending
//! element (bus, branch, or constraint) in its display message.

use thiserror::Error;

/// Errors raised by grid loading, analysis, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// Reading a file from disk failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// The input was not valid JSON or did not match the grid schema.
    #[error("schema violation: {0}")]
    Schema(String),

    /// A structural rule of the grid model is violated.
    #[error("invariant violation [{constraint}]: {element}")]
    Invariant {
        /// Short name of the violated rule.
        constraint: String,
        /// The offending bus, branch, or value.
        element: String,
    },

    /// The graph induced by the requested edge set does not connect all buses.
    #[error("disconnected graph: {0}")]
    Disconnected(String),

    /// The load-bus subgraph is disconnected, so the reduced network matrix
    /// is singular.
    #[error("disconnected load graph: {0}")]
    DisconnectedLoadGraph(String),

    /// Newton iteration failed to reach the residual tolerance.
    #[error("power flow did not converge: {0}")]
    NonConvergence(String),

    /// The solved operating point has an angle difference of at least pi/2
    /// across some active line, so its linearization weight is not positive.
    #[error("insecure equilibrium: {0}")]
    InsecureEquilibrium(String),

    /// A bus that must provide positive damping has none.
    #[error("non-positive damping: {0}")]
    NonPositiveDamping(String),

    /// The state matrix has an eigenvalue with real part at or above the
    /// stability threshold.
    #[error("state matrix is not Hurwitz (spectral abscissa {0:.6e})")]
    NotHurwitz(f64),

    /// The Lyapunov solve produced a residual above tolerance.
    #[error("Lyapunov residual {residual:.3e} exceeds {tolerance:.3e}")]
    LyapunovResidual {
        /// Frobenius norm of the defect.
        residual: f64,
        /// Allowed bound (relative to the constant term).
        tolerance: f64,
    },

    /// A generator or inverter bus has no active incident branch, so the
    /// generator block of the partitioned network matrix is singular.
    #[error("singular generator block: {0}")]
    SingularGeneratorBlock(String),

    /// Disturbance-to-damping ratios are not uniform, so the closed-form
    /// metric does not apply.
    #[error("disturbance/damping ratios are not uniform (relative spread {0:.3e})")]
    NonUniformRatios(f64),

    /// A switching request referenced no usable candidate lines.
    #[error("no candidate lines: {0}")]
    EmptyCandidates(String),

    /// A referenced edge does not exist or is not a load-load line.
    #[error("unknown or unusable edge: {0}")]
    UnknownEdge(String),

    /// Matrix dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An invalid numeric parameter was supplied.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// One or more built-in consistency checks failed.
    #[error("self-check failed: {0}")]
    SelfCheck(String),
}

impl Error {
    /// Stable machine-readable kind tag, used by the command-line frontend.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Schema(_) => "schema",
            Error::Invariant { .. } => "invariant",
            Error::Disconnected(_) => "disconnected",
            Error::DisconnectedLoadGraph(_) => "disconnected-load-graph",
            Error::NonConvergence(_) => "non-convergence",
            Error::InsecureEquilibrium(_) => "insecure-equilibrium",
            Error::NonPositiveDamping(_) => "non-positive-damping",
            Error::NotHurwitz(_) => "not-hurwitz",
            Error::LyapunovResidual { .. } => "lyapunov-residual",
            Error::SingularGeneratorBlock(_) => "singular-generator-block",
            Error::NonUniformRatios(_) => "non-uniform-ratios",
            Error::EmptyCandidates(_) => "empty-candidates",
            Error::UnknownEdge(_) => "unknown-edge",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::SelfCheck(_) => "self-check",
        }
    }

    pub(crate) fn invariant(constraint: &str, element: impl Into<String>) -> Self {
        Error::Invariant {
            constraint: constraint.to_string(),
            element: element.into(),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
