// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Library(#[from] jcpulse::Error),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        let path = path.into();
        CliError::Config {
            path: if path.is_empty() || path == "." { "<root>".into() } else { path },
            message: message.into(),
        }
    }

    /// 2 for anything traceable to the configuration, 3 for output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Output(_) | CliError::Library(jcpulse::Error::Io(_)) => 3,
            CliError::Library(jcpulse::Error::ThresholdNotMet { .. }) => 1,
            CliError::Library(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
