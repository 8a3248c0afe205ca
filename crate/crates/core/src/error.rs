use std::fmt;

use thiserror::Error;

/// Why a set of SINR requirements cannot be served.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Infeasibility {
    /// Spectral radius of `D(γ)T` is at or above one.
    SpectralRadius(f64),
    /// `I - D(γ)T` is numerically singular.
    Singular,
    /// The linear solve produced a negative power on this link.
    NegativePower(usize),
    /// The minimum power on this link exceeds the budget.
    ExceedsMax { link: usize, power: f64, p_max: f64 },
    /// No candidate PSR vector fits the budget.
    EmptyActionSet { p_max: f64 },
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SpectralRadius(rho) => write!(f, "spectral radius {rho:.6} >= 1"),
            Self::Singular => f.write_str("singular power-control system"),
            Self::NegativePower(link) => write!(f, "negative power on link {link}"),
            Self::ExceedsMax { link, power, p_max } => {
                write!(f, "link {link} needs {power:.3e} W > p_max {p_max:.3e} W")
            }
            Self::EmptyActionSet { p_max } => write!(
                f,
                "no PSR combination is feasible with p_max = {p_max:.3e} W; lower the PSR levels or raise the budget"
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infeasible requirements: {0}")]
    Infeasible(Infeasibility),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
