//! Library half of the `efx` command: file formats, reports, and the
//! pipelines behind each subcommand.

pub mod commands;
pub mod error;
pub mod formats;
pub mod report;
