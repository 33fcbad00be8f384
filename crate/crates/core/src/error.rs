use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The iterative factorization did not converge, or its output failed the
    /// reconstruction check. `residual` is the relative Frobenius residual of
    /// the returned factors (NaN when the backend produced none).
    #[error("{what} factorization failed (relative residual {residual:.3e})")]
    Factorization { what: &'static str, residual: f64 },

    #[error("requested {q} components but the numerical rank is {rank}")]
    RankExceeded { q: usize, rank: usize },

    #[error("numerical rank {rank} is too small: {reason}")]
    RankTooSmall { rank: usize, reason: &'static str },

    #[error("Gram matrix of the {design} design is singular (condition number {condition:.3e})")]
    SingularGram { design: &'static str, condition: f64 },

    #[error("coordinate descent did not converge after {sweeps} sweeps (last max change {max_change:.3e})")]
    NonConvergence {
        sweeps: usize,
        max_change: f64,
        last_beta: Vec<f64>,
    },

    #[error("degenerate regularization path: {0}")]
    DegeneratePath(String),

    #[error("irrepresentable condition violated; signal-strength bound undefined ({design} value {value:.4})")]
    IrrepresentableViolated { design: &'static str, value: f64 },

    #[error("fold {fold}: {reason}")]
    Fold { fold: usize, reason: String },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}, column `{column}`: cannot parse `{value}` as a number")]
    Cell {
        line: u64,
        column: String,
        value: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
