//! Scenario files, trace files and the commands behind the `rcta` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod scenario_file;
pub mod trace_io;

pub use error::CliError;
