//! Command-line front end for momentflow: bracket file format, run reports
//! and the subcommands.

pub mod args;
pub mod commands;
pub mod document;
pub mod report;
