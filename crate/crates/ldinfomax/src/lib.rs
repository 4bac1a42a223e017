//! File formats, experiment orchestration and the command-line front end
//! for the `ldinfomax-core` separation kernels.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod experiment;

pub use config::{Algo, ExperimentConfig};
pub use error::{Error, Result};
