use thiserror::Error;

/// Errors raised anywhere in the laboratory.
///
/// The variants map onto the CLI exit codes: parameter/configuration/input
/// problems exit with 1, convergence failures with 2 and measurement
/// failures with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("region is empty: {0}")]
    EmptyRegion(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("step h = {h} is not admissible for the cutoff at x0 = {center} with radius {radius}")]
    Inadmissible { h: f64, center: f64, radius: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("numeric error at index {index}: {message}")]
    Numeric { index: usize, message: String },

    #[error("singular gradient: {0}")]
    Singular(String),

    #[error(
        "did not converge after {iterations} iterations (relative gradient {last_gradient:.3e})"
    )]
    Convergence {
        iterations: usize,
        last_gradient: f64,
        history: Vec<f64>,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Convergence { .. } => 2,
            Error::Fit(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
