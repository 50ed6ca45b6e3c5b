//! File formats, reports, rendering and the command-line front end for the
//! `posecast-core` forecasting toolkit.

pub mod checkpoint;
pub mod cli;
pub mod clock;
pub mod config;
pub mod error;
pub mod paired;
pub mod render;
pub mod report;
pub mod smf;

pub use error::CliError;
