// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A truncation or parameter combination that cannot describe a valid space.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// An index outside the simulated ladder.
    #[error("index out of range: {0}")]
    OutOfRange(String),
    /// An input that violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Reading or writing a file failed.
    #[error("i/o error: {0}")]
    Io(String),
    /// An optimisation that never reached its threshold.
    #[error("threshold not met for {what}: best error {best:.3e} > {threshold:.3e}")]
    ThresholdNotMet {
        what: String,
        best: f64,
        threshold: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
