//! Movable-antenna aided near-field multiuser downlink simulation.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: coordinate frames, moving regions, spacing constraints and
//!   box projection.
//! - [`channel`]: spherical-wave Rician channels evaluated at arbitrary
//!   antenna positions against a frozen random drop.
//! - [`beamforming`]: SINR bookkeeping and the SINR-constrained transmit power
//!   minimization, solved by uplink-downlink duality with a conic cross-check.
//! - [`optimizer`]: the two-loop particle swarm with dynamic neighborhood
//!   pruning that searches antenna positions.
//! - [`harness`]: scenarios, random drops, benchmark schemes, sweeps and
//!   CSV persistence.
//! - [`validation`]: oracle suites that can be run from the command line.

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod optimizer;
pub mod units;
pub mod validation;

pub use error::{Error, Result};
