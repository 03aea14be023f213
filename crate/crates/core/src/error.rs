use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rejected input: {0}")]
    RejectedInput(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("profile evaluation failed: {0}")]
    Evaluation(String),
    #[error("accuracy target missed: {0}")]
    Accuracy(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("operator lacks capability: {0}")]
    Capability(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("profile outside the admissible decay class: {0}")]
    Class(String),
    #[error("singular weight: {0}")]
    SingularWeight(String),
    #[error("series did not converge: {0}")]
    Convergence(String),
    #[error("undefined at grid point {0}")]
    UndefinedPoint(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("level too small: {0}")]
    Level(String),
    #[error("family not band-limited to the safe band: {0}")]
    Band(String),
    #[error("not enough samples: {0}")]
    StatisticalPower(String),
    #[error("degenerate weight family: {0}")]
    Span(String),
    #[error("inconclusive points: {0}")]
    InconclusivePoints(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
