use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum FlowError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("mesh topology error: {0}")]
    Topology(String),

    #[error("mesh geometry error: {0}")]
    Geometry(String),

    #[error("shape generation error: {0}")]
    Generation(String),

    /// Two independent evaluations of the same quantity disagree.
    #[error("consistency error: {what} differs by {discrepancy:e} (limit {limit:e})")]
    Consistency {
        what: &'static str,
        discrepancy: f64,
        limit: f64,
    },

    /// The surface is no longer a radial graph over the unit sphere.
    #[error("left radial-graph chart at t = {time}: {detail}")]
    ChartExit { time: f64, detail: String },

    #[error("blow-up at t = {time}: {detail}")]
    BlowUp { time: f64, detail: String },

    #[error("decay fit window error: {0}")]
    FitWindow(String),

    #[error("parse error in {source_name} line {line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FlowError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FlowError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that terminate a run as a singularity rather than a
    /// validation failure.
    pub fn is_singular(&self) -> bool {
        matches!(self, FlowError::BlowUp { .. } | FlowError::ChartExit { .. })
    }
}

pub type Result<T> = std::result::Result<T, FlowError>;
