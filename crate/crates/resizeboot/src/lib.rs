//! Files, command line and thread-pool execution for `resizeboot-core`.

pub mod cli;
pub mod error;
pub mod io;
pub mod parallel;
pub mod report;
pub mod separation;

pub use error::{CliError, Result};
pub use parallel::RayonExecutor;
