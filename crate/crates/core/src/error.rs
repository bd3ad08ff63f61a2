use thiserror::Error;

/// Errors raised by the library.
///
/// `Domain` covers malformed inputs (atom mismatches, non-finite values,
/// out-of-range parameters); `Contract` covers violated operation
/// preconditions that the caller was expected to establish.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    /// The embedding changed the norm of a probe function.
    #[error("embedding is not isometric: probe {probe} has source norm {source_norm} but image norm {image_norm}")]
    NotIsometric {
        probe: String,
        source_norm: f64,
        image_norm: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
