//! Minimum transmission power control for wireless sensors that feed
//! remote Kalman estimators over a shared interference channel.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: average propagation, SINR and the PSR/SINR mapping of
//!   802.15.4 O-QPSK links.
//! - [`power_control`]: Foschini–Miljanic minimum-power allocation and the
//!   discretised PSR feasibility region (the MDP action set).
//! - [`estimation`]: LTI plants and the Kalman filter under Bernoulli packet
//!   erasures.
//! - [`mdp`]: the discounted MDP over per-system error covariances, solved
//!   by approximate value iteration on an interpolated grid.
//! - [`sim`]: topologies, closed-loop episodes, Monte Carlo metrics and
//!   parameter sweeps.
//!
//! All powers are watts internally; dBm only appears at the boundaries
//! through [`dbm_to_watts`] and [`watts_to_dbm`].

pub mod channel;
pub mod error;
pub mod estimation;
pub mod mdp;
pub mod power_control;
pub mod sim;

pub use error::{Error, Infeasibility, Result};

/// `W = 10^((dBm - 30) / 10)`
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// `dBm = 10 log10(W) + 30`; zero watts maps to `-inf`.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-10.0) - 1e-4).abs() < 1e-18);
        assert!((watts_to_dbm(dbm_to_watts(7.0)) - 7.0).abs() < 1e-12);
        assert_eq!(watts_to_dbm(0.0), f64::NEG_INFINITY);
    }
}
