use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("kernel ({kr}x{kc}) larger than grid ({h}x{w})")]
    KernelTooLarge { kr: usize, kc: usize, h: usize, w: usize },

    #[error("constant image: {0}")]
    ConstantImage(String),

    #[error("residual is identically zero; noise-variance draw is degenerate")]
    DegenerateResidual,

    #[error("region {0} is empty")]
    EmptyRegion(u32),

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
