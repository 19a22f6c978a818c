use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("x-antiderivative undefined: largest x-mean coefficient {0:.3e} exceeds tolerance")]
    NonzeroXMean(f64),

    #[error("amplitude collapse: c1 = {value:.6} at y-index {index}")]
    AmplitudeCollapse { index: usize, value: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("weighted tail not decayed: {0:.3e} at the window edge")]
    TailNotDecayed(f64),

    #[error("P_* is singular for |eta| = {0:.3e}")]
    SingularP(f64),

    #[error("kernel resolution exceeded: {0}")]
    ResolutionExceeded(String),

    #[error("no dominant crest: peak {peak:.4} below threshold {threshold:.4}")]
    NoCrest { peak: f64, threshold: f64 },

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("phase cone is empty on the sampled grid")]
    ConeEmpty,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
