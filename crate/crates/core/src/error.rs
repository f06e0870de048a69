use std::path::PathBuf;

use thiserror::Error;

/// Which end of a synaptic partner pair an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Pre,
    Post,
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Pre => f.write_str("presynaptic"),
            Endpoint::Post => f.write_str("postsynaptic"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate {value} nm is outside the volume on axis {axis} (voxel {index}, extent {extent})")]
    OutOfBounds {
        axis: char,
        value: f64,
        index: i64,
        extent: usize,
    },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("invalid offset configuration: {0}")]
    OffsetConfig(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid annotation: {0}")]
    Annotation(String),

    #[error("annotation {id}: {endpoint} location lies on the background label")]
    BackgroundEndpoint { id: u64, endpoint: Endpoint },

    #[error("synthetic generation placed only {placed} of {requested} synapses")]
    Generation { placed: usize, requested: usize },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("{path}: {msg}")]
    Container { path: PathBuf, msg: String },

    #[error(transparent)]
    Hdf5(#[from] hdf5::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the filesystem or a malformed input file
    /// rather than by invalid parameters.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::Hdf5(_) | Error::Container { .. } | Error::Format { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
