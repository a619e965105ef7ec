//! Distances between delay systems over the algebra `A+` of causal
//! almost-periodic transfer functions: the `d_{A+}` and `d_{H∞}` extensions
//! of the ν-gap metric, gap-metric bounds and stability margins.

pub mod algebra;
pub mod cli;
mod error;
pub mod metrics;
pub mod plant_spec;
pub mod plants;
pub mod report;
pub mod stability;

pub use error::{Error, Result};
