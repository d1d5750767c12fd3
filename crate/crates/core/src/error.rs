use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A request exceeds one of the hard size caps (enumeration, dense storage, quadrature).
    #[error("size limit exceeded: {what} is {value}, cap is {cap}")]
    SizeLimit { what: &'static str, value: usize, cap: usize },

    /// Malformed or inconsistent arguments.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Well-formed input the selected routine cannot handle.
    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("matrix is not unitary: max deviation {deviation:e} exceeds {tolerance:e}")]
    NotUnitary { deviation: f64, tolerance: f64 },

    /// A diagonal J entry (a detection probability) vanished.
    #[error("degenerate detection: zero detection probability for permutation {permutation:?}")]
    DegenerateDetection { permutation: Vec<usize> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("probability {value:e} is negative beyond tolerance")]
    NegativeProbability { value: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn size(what: &'static str, value: usize, cap: usize) -> Self {
        Error::SizeLimit { what, value, cap }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
