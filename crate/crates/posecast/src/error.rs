//! Process-level error classification.

use std::path::PathBuf;

use posecast_core::metrics::{ForecastError, MetricError};
use posecast_core::motion_conformer::TrainError;
use posecast_core::motion_data::DataError;
use posecast_core::noise_lab::NoiseError;

use crate::checkpoint::CheckpointError;
use crate::paired::PairedError;
use crate::render::RenderError;
use crate::report::ReportError;
use crate::smf::SmfError;

/// Error surfaced by a command, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub const EXIT_CONFIG: i32 = 2;
    pub const EXIT_DATA: i32 = 3;
    pub const EXIT_NUMERICAL: i32 = 4;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => Self::EXIT_CONFIG,
            CliError::Data(_) | CliError::Io { .. } => Self::EXIT_DATA,
            CliError::Numerical(_) => Self::EXIT_NUMERICAL,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

// ---------------------------------------------------------------------------
// Classification of library errors
// ---------------------------------------------------------------------------

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::NonFinite | MetricError::Forecast(ForecastError::NonFinite) => {
                CliError::Numerical(e.to_string())
            }
            MetricError::Horizon { .. } | MetricError::NonPositive(..) | MetricError::TooFewIterations(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) => CliError::Config(e.to_string()),
            TrainError::Diverged { .. } => CliError::Numerical(e.to_string()),
            TrainError::Metric(m) => m.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<NoiseError> for CliError {
    fn from(e: NoiseError) -> Self {
        match e {
            NoiseError::Spec(_) => CliError::Config(e.to_string()),
            NoiseError::Train(t) => t.into(),
            NoiseError::Metric(m) => m.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Window(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<RenderError> for CliError {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::Settings(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_error!(SmfError, CheckpointError, PairedError, ReportError);
