use crate::imagecore::DepthConvention;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the on-disk format readers and writers.
///
/// Every variant that concerns a byte stream carries the offset at which the
/// problem was detected.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic at byte {offset}: {found}")]
    BadMagic { offset: usize, found: String },
    #[error("malformed header at byte {offset}: {reason}")]
    BadHeader { offset: usize, reason: String },
    #[error("unsupported maxval {maxval} at byte {offset} (only 255 is supported)")]
    UnsupportedMaxval { offset: usize, maxval: u64 },
    #[error("unsupported channel layout at byte {offset}: {found}")]
    UnsupportedChannel { offset: usize, found: String },
    #[error("payload size mismatch at byte {offset}: expected {expected} bytes, found {actual}")]
    TruncatedPayload {
        offset: usize,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value in payload at byte {offset}")]
    NonFinite { offset: usize },
    #[error("manifest schema error at `{key}`: {reason}")]
    Schema { key: String, reason: String },
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {context}: {left:?} vs {right:?}")]
    Shape {
        context: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("data length {actual} does not match {expected} for the declared shape")]
    Length { expected: usize, actual: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("empty selection: {0}")]
    EmptySelection(&'static str),
    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),
    #[error("invalid range: upper bound {hi} must exceed lower bound {lo}")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("expected {expected:?} map, got {actual:?}")]
    Convention {
        expected: DepthConvention,
        actual: DepthConvention,
    },
    #[error("unknown loss `{0}`")]
    UnknownLoss(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
