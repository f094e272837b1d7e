//! Command-line surface of coordsim: the JSON run spec, the `simulate`,
//! `region` and `verify` subcommands, and the acceptance suites behind
//! `verify`.
//!
//! Exit codes: 0 success, 1 runtime/I-O/verification failure, 2 spec
//! error, 3 decoder-limit or search-budget abort.

pub mod commands;
pub mod error;
pub mod spec;
pub mod verify;

pub use commands::{cmd_region, cmd_simulate, cmd_verify, SimulateOptions};
pub use error::{CliError, EXIT_ABORT, EXIT_FAILURE, EXIT_OK, EXIT_SCHEMA};
pub use spec::RunSpec;
