//! Monte Carlo simulator for millimeter-wave device-to-device links on a
//! multi-lane highway with truck blockage, sectored antennas and a slotted
//! cluster MAC.

pub mod antenna;
pub mod blockage;
pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod mac;
pub mod metrics;
pub mod mobility;
pub mod rng;
pub mod road;
pub mod sweep;

pub use config::{validate_config, ScenarioConfig};
pub use error::{Result, SimError};
pub use sweep::{run_sweep, simulate, RunManifest};
