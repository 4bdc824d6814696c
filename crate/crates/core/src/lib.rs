//! Two-level emitter coupled to two quantized, Gaussian-pulsed field modes.

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod observables;
pub mod config;
pub mod oracle;
pub mod output;
pub mod scenarios;

pub use error::{Error, Result};
