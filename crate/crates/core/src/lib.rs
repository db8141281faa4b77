//! Simulation and analysis of a hand-held free-space BB84 link.
//!
//! The pipeline runs from prepared polarization states through a jittery
//! free-space channel and a four-detector receiver to sifting and
//! secret-key rate estimation. [`scenario`] ties the stages together and
//! backs the `hhqkd` command line tool.

pub mod channel;
pub mod distill;
pub mod polarization;
pub mod receiver;
pub mod scenario;
pub mod source;

use thiserror::Error;

/// Any failure of a pipeline run.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration; the message starts with the offending key path.
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Polarization(#[from] polarization::PolarizationError),
    #[error(transparent)]
    Source(#[from] source::SourceError),
    #[error(transparent)]
    Channel(#[from] channel::ChannelError),
    #[error(transparent)]
    Receiver(#[from] receiver::ReceiverError),
    #[error(transparent)]
    Distill(#[from] distill::DistillError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status: 2 for configuration problems, 3 for bad or
    /// unusable data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
