use thiserror::Error;

/// Crate-wide error taxonomy.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix handed to `unhat` is not skew-symmetric within tolerance.
    #[error("matrix is not skew-symmetric: |M + M^T| = {asymmetry:.3e}")]
    NotSkew { asymmetry: f64 },

    /// Polar projection is undefined for matrices with non-positive determinant.
    #[error("cannot project to SO(3): det = {det:.3e} <= 0")]
    Degenerate { det: f64 },

    /// Non-positive integration step.
    #[error("invalid integration step dt = {dt}")]
    InvalidStep { dt: f64 },

    /// Elliptic parameter outside the supported range m < 1.
    #[error("elliptic parameter m = {m} is outside the domain m < 1")]
    DomainError { m: f64 },

    /// Exact OCP solution requested in the rotational-pendulum regime A >= E.
    #[error("exact solution is only implemented for the branch A < E (got A = {a_big:.6e}, E = {e_big:.6e})")]
    BranchError { a_big: f64, e_big: f64 },

    /// Exact OCP solution requested where a - 2(sqrt(H) - sigma1) <= 0.
    #[error("branch condition a - 2(sqrt(H) - sigma1) > 0 violated (got {value:.6e})")]
    ConditionError { value: f64 },

    /// Shooting failed on every restart.
    #[error("shooting did not converge after {restarts} restarts; best residual {best_residual:.6e}")]
    NoConvergence { restarts: usize, best_residual: f64 },

    /// Parameter c = rho / (2w (1 + J/I_s)) vanished.
    #[error("degenerate parameters: c = 0")]
    DegenerateParams,

    /// Configuration file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    /// Configuration value missing or out of range.
    #[error("invalid parameter `{key}`: {message}")]
    ValidationError { key: String, message: String },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    IoError(#[from] std::io::Error),

    /// Trajectory file does not match the expected CSV schema.
    #[error("schema error at row {row}: {message}")]
    SchemaError { row: usize, message: String },
}

impl From<csv::Error> for Error {
    /// CSV failures are either I/O or malformed records; the latter map to
    /// [`Error::SchemaError`] carrying the record index.
    fn from(e: csv::Error) -> Self {
        let row = e.position().map(|p| p.record() as usize).unwrap_or(0);
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::IoError(io),
            other => Error::SchemaError { row, message: format!("{other:?}") },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
