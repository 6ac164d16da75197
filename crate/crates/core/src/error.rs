use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature grid too coarse: need n_t >= {need_t} and n_phi >= {need_phi}, got ({n_t}, {n_phi})")]
    GridTooCoarse {
        need_t: usize,
        need_phi: usize,
        n_t: usize,
        n_phi: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("quadrature fault: {0}")]
    QuadratureFault(String),

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("symbol `{0}` is declared C0 and carries no derivative data")]
    MissingDerivative(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("need at least {need} usable points, got {got}")]
    InsufficientData { need: usize, got: usize },

    #[error(
        "gradient of `{0}` is not square-integrable (energy does not stabilize under refinement)"
    )]
    NotIntegrable(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numeric_fault(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::QuadratureFault(_)
                | Error::GridTooCoarse { .. }
                | Error::NotIntegrable(_)
        )
    }
}
