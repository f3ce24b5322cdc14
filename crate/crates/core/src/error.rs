use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("prior activity probability {0} must lie strictly inside (0, 1)")]
    BoundaryPrior(f64),

    #[error("AMP diverged at iteration {iter}: {what} is not finite")]
    Divergence { iter: usize, what: &'static str },

    #[error("ADT {adt}: {source}")]
    Adt {
        adt: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("reference signal has zero energy")]
    ZeroEnergy,

    #[error("exact filter supports at most {max} ADTs, got {got}")]
    HorizonTooLong { max: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_adt(self, adt: usize) -> Self {
        Error::Adt {
            adt,
            source: Box::new(self),
        }
    }
}
