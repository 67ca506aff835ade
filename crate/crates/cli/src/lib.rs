//! Library surface of the `logvol` command-line tool.
//!
//! Every subcommand is a function that takes resolved arguments and returns
//! the JSON payload bytes it would print, so the integration tests exercise
//! exactly the code the binary runs. Payloads embed their full resolved
//! configuration and are byte-identical across reruns with the same inputs
//! and seed.

pub mod commands;
pub mod denoise;
pub mod error;
pub mod io;
pub mod jsonfmt;
pub mod verify;

pub use error::CliError;

/// Exit code conventions: 0 success, 1 usage or IO error, 2 numerical
/// non-convergence.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NONCONVERGED: i32 = 2;
