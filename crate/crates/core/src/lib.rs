//! Link-level simulator for localization-based OFDM scheduling in a
//! RIS-aided uplink.
//!
//! The library models a single-antenna base station served by a planar
//! reconfigurable intelligent surface (RIS). User positions drive a
//! deterministic reflected channel, while the direct link is Rician
//! distributed. From the positions alone the scheduler computes
//! outage-robust spectral efficiencies on a user x resource-block x
//! configuration grid and allocates time-frequency resources under
//! max-rate or max-min objectives. A perfect-CSI benchmark with pilot
//! overhead is included for comparison.
//!
//! Modules follow the processing chain:
//!
//! * [`geometry`] — node placement, RIS element grid, ring deployment
//! * [`channel`] — path loss, LOS phasors, array factor, Rician sampling
//! * [`codebook`] — half-power-overlapping beam codebook synthesis
//! * [`robust_rate`] — noncentral chi-squared quantiles and the rate tensor
//! * [`allocation`] — max-rate, max-min and sequential resource assignment
//! * [`metrics`] — throughput, Jain fairness, efficiency factors, CSI baseline
//! * [`config`] / [`sim`] — scenario configuration, Monte-Carlo driver, presets

pub mod allocation;
pub mod channel;
pub mod codebook;
pub mod config;
pub mod geometry;
pub mod metrics;
pub mod robust_rate;
pub mod sim;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A function argument violated a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// An allocation problem has no feasible solution.
    #[error("infeasible allocation: {0}")]
    Infeasible(String),
    /// Configuration file could not be read or validated.
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Free-space propagation velocity in m/s.
pub const PROPAGATION_VELOCITY: f64 = 2.998e8;

/// Converts a dB value to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}
