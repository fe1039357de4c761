use thiserror::Error;

/// Errors raised by state construction, channel evaluation and estimation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TpaError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("truncation error: tail mass {tail_mass:.3e} exceeds tolerance {tol:.3e} at dimension {dim}; raise the dimension")]
    Truncation {
        tail_mass: f64,
        tol: f64,
        dim: usize,
    },

    #[error("infeasible mean photon number: {0}")]
    InfeasibleMean(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, TpaError>;
