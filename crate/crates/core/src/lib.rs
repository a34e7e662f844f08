//! Simulation of cell-free and user-centric mmWave massive MIMO networks:
//! clustered channels, uplink training, zero-forcing and hybrid precoding,
//! achievable rates, and energy-efficient power control.

pub mod beamforming;
pub mod channel;
pub mod config;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod optimizer;
pub mod rates;
pub mod rng;
pub mod training;

pub use config::SystemConfig;
pub use error::{Error, Result};
