//! Analytic liquidation-risk quantities for a surplus process that switches
//! between two spectrally negative Lévy models across a three-barrier system,
//! with a regime-switching Monte Carlo simulator for validation.

pub mod cli;
pub mod config;
pub mod error;
pub mod fluctuation;
pub mod levy_model;
pub mod liquidation;
pub mod numerics;
pub mod parisian;
pub mod scale_functions;
pub mod simulator;

pub use error::{Error, Result};
