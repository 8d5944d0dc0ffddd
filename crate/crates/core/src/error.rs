//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failures surfaced by pricing, calibration and simulation routines.
///
/// Variants are split by how a caller should react: `InvalidInput` means the
/// request itself is malformed (bad interval, negative weight, grid without a
/// required event), `Domain` means the inputs are well-formed but the
/// requested quantity does not exist there (e.g. an atom hazard consuming the
/// whole atom weight), `NonFinite` reports numerical blow-up at a specific
/// time, and `Unsupported` marks operations a model deliberately does not
/// provide.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value encountered at t = {time}")]
    NonFinite { time: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

impl Error {
    /// Convenience constructor for [`Error::InvalidInput`].
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Convenience constructor for [`Error::Domain`].
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
