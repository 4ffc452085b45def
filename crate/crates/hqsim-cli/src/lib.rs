//! Library half of the `hqsim` command-line tool: configuration
//! schema, command runners, and SVG rendering. The binary adds
//! argument parsing, the thread-pool cap, and exit-code mapping.

pub mod config;
pub mod runners;
pub mod svg;

pub use config::{diagnostics, load, AppConfig};
pub use runners::RunOpts;
