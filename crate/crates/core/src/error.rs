// SPDX-License-Identifier: MIT OR Apache-2.0

//! Crate-wide error type.
//!
//! Every variant carries a stable name (see [`Error::name`]) so the command
//! line front end can print machine-readable failure lines.

use std::path::PathBuf;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry in {what} at ({row}, {col})")]
    NonFiniteInput {
        what: String,
        row: usize,
        col: usize,
    },

    #[error("empty spectrum: {0}")]
    EmptySpectrum(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("role error: expected {expected}, found {found}")]
    RoleError { expected: String, found: String },

    #[error("no editable entries in weight bundle")]
    EmptyManifest,

    #[error("unknown composition mode `{0}` (expected `stacked` or `sequential`)")]
    ModeError(String),

    #[error("dimension error: {0}")]
    DimensionError(String),

    #[error("invalid weight bundle: {0}")]
    InvalidBundle(String),

    #[error("SVD did not converge for {0}")]
    SvdFailed(String),

    #[error("bad magic bytes in {}", .0.display())]
    BadMagic(PathBuf),

    #[error("unsupported NPY version {major}.{minor} in {}", .path.display())]
    UnsupportedVersion {
        path: PathBuf,
        major: u8,
        minor: u8,
    },

    #[error("malformed NPY header in {}: {reason}", .path.display())]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("unsupported dtype `{descr}` in {} (only '<f4' and '<f8')", .path.display())]
    UnsupportedDtype { path: PathBuf, descr: String },

    #[error("unsupported layout in {}: {reason}", .path.display())]
    UnsupportedLayout { path: PathBuf, reason: String },

    #[error("truncated payload in {}: expected {expected} bytes, found {found}", .path.display())]
    TruncatedPayload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("schema error at `{path}`: {message}")]
    SchemaError { path: String, message: String },

    #[error("io error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable identifier of the error kind.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonFiniteInput { .. } => "NonFiniteInput",
            Error::EmptySpectrum(_) => "EmptySpectrum",
            Error::DomainError(_) => "DomainError",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::RoleError { .. } => "RoleError",
            Error::EmptyManifest => "EmptyManifest",
            Error::ModeError(_) => "ModeError",
            Error::DimensionError(_) => "DimensionError",
            Error::InvalidBundle(_) => "InvalidBundle",
            Error::SvdFailed(_) => "SvdFailed",
            Error::BadMagic(_) => "BadMagic",
            Error::UnsupportedVersion { .. } => "UnsupportedVersion",
            Error::MalformedHeader { .. } => "MalformedHeader",
            Error::UnsupportedDtype { .. } => "UnsupportedDtype",
            Error::UnsupportedLayout { .. } => "UnsupportedLayout",
            Error::TruncatedPayload { .. } => "TruncatedPayload",
            Error::SchemaError { .. } => "SchemaError",
            Error::Io { .. } => "IoError",
        }
    }

    /// Process exit code: 1 for usage, configuration and file errors,
    /// 2 for numerical or contract violations.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::BadMagic(_)
            | Error::UnsupportedVersion { .. }
            | Error::MalformedHeader { .. }
            | Error::UnsupportedDtype { .. }
            | Error::UnsupportedLayout { .. }
            | Error::TruncatedPayload { .. }
            | Error::SchemaError { .. }
            | Error::ModeError(_)
            | Error::Io { .. } => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn mismatch(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }
}
