//! Distributed collaborative beamforming for multi-source uplinks.
//!
//! Nodes hear a collision of `K` source packets, then jointly beamform the
//! received mixture toward a destination, which detects one target source.
//! The crate models the link, evaluates its symbol error probability
//! analytically and by simulation, and computes far-field beampatterns under
//! channel-estimation and phase-synchronization errors.

pub mod acceptance;
pub mod beampattern;
pub mod cli;
pub mod error;
pub mod model;
pub mod protocol;
pub mod quadrature;
pub mod sep;
pub mod stats;
pub mod stochastic;
pub mod sweep;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use model::{Geometry, SystemParams};
pub use stochastic::ErrorModel;
