//! File formats, configuration and subcommands behind the `wavespoof` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod archive;
pub mod commands;
pub mod config;
pub mod error;
pub mod features;
pub mod manifest;
pub mod wav;

pub use error::{CliError, CliResult};
