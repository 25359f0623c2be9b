//! Library side of the `dpview` command-line tool.

pub mod commands;
pub mod config;
pub mod scene;
