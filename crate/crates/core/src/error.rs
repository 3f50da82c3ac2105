//! Error type shared across the crate.
//!
//! Variants are grouped by how a front-end should react to them:
//! configuration and domain errors are caller mistakes, degenerate /
//! non-finite / diverged errors are numeric conditions detected at runtime,
//! and the I/O and format errors wrap the underlying file problem.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside its documented domain (e.g. a field of view
    /// of zero, an aspect ratio that is not positive, a shift larger than
    /// the latent width).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration struct was internally inconsistent (e.g. a candidate
    /// grid with zero entries, mismatched image dimensions).
    #[error("config error: {0}")]
    Config(String),

    /// A computation reached a state with no usable answer: every candidate
    /// pose lost image overlap, a softmax collapsed to an empty support, or
    /// a mask came back empty.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A NaN or infinity was produced or encountered where the algorithm
    /// requires finite values.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// An iterative procedure exceeded its loss/step bounds.
    #[error("diverged: {0}")]
    Diverged(String),

    /// Underlying file-system failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// PNG encode/decode failure.
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    /// A binary payload did not match its documented layout (bad magic,
    /// truncated body, invalid validity byte, ...).
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Process exit code a CLI front-end should use for this error.
    ///
    /// `1` = file/format problems, `2` = caller configuration problems,
    /// `3` = numeric/degenerate conditions.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) => 2,
            Error::Degenerate(_) | Error::NonFinite(_) | Error::Diverged(_) => 3,
            Error::Io(_) | Error::Image(_) | Error::Format(_) => 1,
        }
    }
}
