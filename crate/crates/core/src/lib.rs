//! Mean-field model of a phase-sensitive optical parametric amplifier inside
//! a two-port standing-wave cavity: stationary transmission spectra,
//! time-domain scan dynamics and calibration helpers.

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod model;
pub mod spectra;
pub mod steady;

pub use error::{ModelError, Result};
pub use exec::Execution;
pub use model::{CavityParams, DecayRates, DetuningSweep, Drive};
