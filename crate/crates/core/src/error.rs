use thiserror::Error;

/// Errors raised by the library. The CLI maps [`Error::exit_code`] onto the
/// process exit status.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("operator does not commute with the sector symmetry (residual {norm:.3e})")]
    SymmetryViolation { norm: f64 },

    #[error("matrix is not magnetization conserving: {0}")]
    Structure(String),

    #[error("gate lies on the critical manifold (|cos phi - cos gamma| = {defect:.3e})")]
    CriticalManifold { defect: f64 },

    #[error("degenerate parametrization: {0}")]
    Degenerate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("periodic time reversal refused: angle defect {defect:.6e}")]
    AngleDefect { defect: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity(_) => 3,
            Error::Io(_) | Error::Numerical(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
