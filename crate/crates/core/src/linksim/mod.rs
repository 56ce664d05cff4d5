//! Link-level Monte Carlo simulation.

pub mod components;
pub mod engine;
pub mod stats;

pub use components::{
    amplification_factor_sq, instantaneous_sinr, relay_noise_term, sinr_components, sinr_denominator,
    SinrComponents, COMPONENT_NAMES,
};
pub use engine::{simulate, Engine, SampleSet, SimOptions, TrialRecord, UserSelection};
