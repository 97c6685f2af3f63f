//! Configuration files, result serialization and the command-line surface
//! for the massive MU-MIMO link-level simulator.

pub mod cli;
pub mod config;
pub mod output;
