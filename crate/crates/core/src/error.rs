use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid utility weights: {0}")]
    InvalidWeights(String),

    /// The capped simplex degenerates when the capacity reaches the library size.
    #[error("projection degenerate: capacity {capacity} must be < library size {library}")]
    DegenerateProjection { capacity: usize, library: usize },

    #[error("unserviceable location: user node {0} has no path to the MBS node")]
    UnserviceableLocation(usize),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("fixed step size needs a known horizon T; use the diminishing or doubling schedule")]
    UnknownHorizon,

    #[error("bound inapplicable: {0}")]
    BoundInapplicable(String),

    #[error("invalid workload: {0}")]
    InvalidWorkload(String),

    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the filesystem or trace contents rather than
    /// the experiment description.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Trace { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
