//! Vibration-based damage identification for planar pin-jointed trusses.
//!
//! The pipeline: build a truss model ([`truss`]), extract its modal signature
//! by finite elements ([`modal`]), tabulate signatures for every on-grid
//! damage scenario ([`database`]), then recover an unknown scenario from a
//! measured (possibly noisy) signature by minimizing a frequency/mode-shape
//! discrepancy over the database with a firefly swarm ([`detection`],
//! [`firefly`]). [`experiments`] reproduces the accuracy studies (mode count,
//! noise robustness, 2³ factorial screening of the search parameters).
//!
//! Everything stochastic draws from seeded portable streams ([`rng`]), so any
//! result can be reproduced from the seed embedded in its report.

pub mod database;
pub mod detection;
pub mod eigen;
mod error;
pub mod experiments;
pub mod firefly;
pub mod modal;
pub mod rng;
pub mod stats;
pub mod truss;

pub use error::{Error, Result};
