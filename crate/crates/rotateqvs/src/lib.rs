//! File formats, parallel execution and the command line around
//! `rotateqvs-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod loader;
pub mod manifest;
pub mod parallel;
pub mod report;

pub use error::{Error, Result};
pub use rotateqvs_core as core;
