//! Experiment plumbing for the relay laboratory: configuration files, named
//! scenarios, figure datasets and the acceptance suites.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod experiments;
pub mod scenarios;

pub use error::{HarnessError, Result};
