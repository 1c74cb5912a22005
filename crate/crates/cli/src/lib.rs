//! Configuration, output formats and commands of the `beamforge` tool.

pub mod commands;
pub mod config;
pub mod output;
