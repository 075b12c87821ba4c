use thiserror::Error;

/// Errors raised by the numerical pipeline and the configuration layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Two partial-fraction poles are too close to separate in double
    /// precision. `indices` are the 1-based positions of the offending pair.
    #[error("near-degenerate average SNRs at indices {indices:?} (relative gap {gap:.3e}); apply distinctness jitter")]
    Singularity { indices: Vec<usize>, gap: f64 },

    #[error("enumeration needs {terms} terms, above the limit of {limit}")]
    Capacity { terms: u128, limit: u128 },

    #[error("quadrature did not converge: estimate {estimate:.6e}, achieved error {error:.3e}")]
    NonConvergence { estimate: f64, error: f64 },

    /// `line` is 1-based; 0 refers to the file as a whole.
    #[error("{}", config_message(*line, message))]
    Config { line: usize, message: String },

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

fn config_message(line: usize, message: &str) -> String {
    if line == 0 {
        format!("config: {message}")
    } else {
        format!("config line {line}: {message}")
    }
}
