use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid construction failed: {0}")]
    Grid(String),
    #[error("degenerate direction: |v - v'| = {0:.3e} is below the threshold")]
    DegenerateDirection(f64),
    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),
    #[error("blow-up guard fired: {0}")]
    BlowUp(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("inconsistent grids: {0}")]
    GridMismatch(String),
    #[error("schedule parity mismatch: {0}")]
    ParityMismatch(String),
    #[error("envelope violated at node {node}: weighted value {value:.6e} >= {bound:.6e}")]
    EnvelopeViolation {
        node: usize,
        value: f64,
        bound: f64,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("singular Gram matrix in moment projection (grid too coarse)")]
    SingularGram,
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("snapshot format error: {0}")]
    Snapshot(String),
    #[error("too few samples: need at least {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
