//! Simulation and analysis of a massive-MIMO two-hop relay link with MRC/MRT
//! processing at the relay and MMSE channel estimates.
//!
//! * [`model`]: network parameters, CSI quality and the exponent scaling law.
//! * [`channel`]: Rayleigh channels, pilot training and MMSE estimation.
//! * [`linksim`]: per-realization SINR components and the Monte Carlo engine.
//! * [`analytics`]: closed-form moments, densities, outage, error rate and rate bound.

pub mod analytics;
pub mod channel;
pub mod error;
pub mod linksim;
pub mod model;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
pub use model::NetworkParams;
