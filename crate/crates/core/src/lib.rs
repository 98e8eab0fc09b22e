//! Sector beamwidth optimization for a millimeter-wave UAV base station.
//!
//! A UAV hovering at height `h` serves a disk of radius `R` whose users form a
//! Poisson point process. The cell is split into `360/θ` angular sectors, each
//! served by its own beam with a power budget proportional to `θ`. Inside a
//! sector the OFDMA subcarriers and transmit power are allocated to maximize
//! the sector sum rate subject to a per-user minimum rate. A Monte Carlo sweep
//! over `θ` then locates the beamwidth that maximizes the mean cell sum rate.
//!
//! Module map:
//!
//! - [`geometry`]: user drops and sector partitioning
//! - [`channel`]: air-to-ground LoS probability, path loss, fading, SNR coefficients
//! - [`solver`]: per-sector subcarrier assignment and power allocation
//! - [`simulation`]: Monte Carlo trials and the beamwidth sweep
//! - [`presets`]: named scenarios and derived sector-count reports
//! - [`io`]: configuration parsing, overrides and result export

pub mod channel;
pub mod error;
pub mod geometry;
pub mod io;
pub mod presets;
pub mod simulation;
pub mod solver;
pub mod units;

pub use error::{Error, Result};
