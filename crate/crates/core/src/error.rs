use std::io;

use thiserror::Error;

use crate::datafn::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("data error at r = {radius}: {message}")]
    Data { radius: f64, message: String },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },

    #[error("incomplete grid, {} point(s) missing: {}", .0.len(), fmt_points(.0))]
    IncompleteGrid(Vec<(f64, f64)>),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn fmt_points(points: &[(f64, f64)]) -> String {
    let mut s = points
        .iter()
        .take(8)
        .map(|(a, b)| format!("({a}, {b})"))
        .collect::<Vec<_>>()
        .join(", ");
    if points.len() > 8 {
        s.push_str(", ...");
    }
    s
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors that stem from user-supplied configuration rather than
    /// from the runtime environment.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Input(_) | Error::Parse(_) | Error::Data { .. } | Error::Eval(_)
        )
    }
}
