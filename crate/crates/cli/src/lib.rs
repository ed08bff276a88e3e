//! Command implementations behind the `bleach` binary.

pub mod commands;
pub mod config;
pub mod records;
pub mod svg;

pub use config::RunConfig;
