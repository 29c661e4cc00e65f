use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error("sample count {got} does not match grid size {expected}")]
    SampleCount { expected: usize, got: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation is undefined for the zero field")]
    ZeroField,

    #[error("rotation term has imaginary residue {imag:e} (value {real:e})")]
    InconsistentRotation { real: f64, imag: f64 },

    #[error("quadratic functional Q(u) = {0:e} is not positive; omega is not admissible")]
    NonPositiveQuadratic(f64),

    #[error("iteration diverged at step {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },

    #[error("no convergence after {iterations} iterations (last error {last:e})")]
    NoConvergence { iterations: usize, last: f64 },

    #[error("field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),
}
