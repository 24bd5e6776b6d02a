//! Frontend for the `sls` command: file schemas, synthesis pipelines and
//! the grid-world generator.

pub mod commands;
pub mod config;
pub mod pipeline;

pub use commands::{run, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION};
