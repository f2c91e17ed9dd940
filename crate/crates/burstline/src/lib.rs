//! File formats, presets and the command-line front end for
//! [`burstline_core`].

pub mod calib;
pub mod checkpoint;
pub mod cli;
pub mod error;
pub mod modelfile;
pub mod presets;
pub mod report;
pub mod scenario;
pub mod trace;

pub use error::{exit, CliError};
