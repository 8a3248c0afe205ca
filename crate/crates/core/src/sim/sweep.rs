use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::monte_carlo::{monte_carlo, MonteCarloSummary};
use super::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Trade-off weight, applied to every system.
    Lambda,
    /// Discount factor.
    Alpha,
    /// Distance ratio `d2 / d1` of a parametric topology.
    D2OverD1,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lambda => "lambda",
            Self::Alpha => "alpha",
            Self::D2OverD1 => "d2_over_d1",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(Self::Lambda),
            "alpha" => Ok(Self::Alpha),
            "d2_over_d1" => Ok(Self::D2OverD1),
            other => Err(Error::Usage(format!(
                "unknown sweep axis {other:?}; expected lambda, alpha or d2_over_d1"
            ))),
        }
    }
}

impl Scenario {
    /// Copy of the scenario with one parameter replaced.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Scenario> {
        let mut s = self.clone();
        match axis {
            SweepAxis::Lambda => {
                s.systems = s
                    .systems
                    .into_iter()
                    .map(|m| m.with_lambda(value))
                    .collect::<Result<_>>()?;
            }
            SweepAxis::Alpha => {
                s.solver.alpha = value;
                s.solver.validate()?;
            }
            SweepAxis::D2OverD1 => s.topology = s.topology.with_distance_ratio(value)?,
        }
        Ok(s)
    }
}

/// Solver metadata and Monte Carlo summary of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub summary: MonteCarloSummary,
    pub actions: usize,
    pub sweeps: usize,
    pub final_delta: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    /// The error message when this point could not be solved or simulated.
    pub outcome: std::result::Result<SweepOutcome, String>,
}

fn evaluate(base: &Scenario, axis: SweepAxis, value: f64) -> Result<SweepOutcome> {
    let sc = base.with_axis(axis, value)?;
    let solved = sc.solve()?;
    let (summary, _) = monte_carlo(&solved.policy, &sc.systems, &sc.run, false)?;
    Ok(SweepOutcome {
        summary,
        actions: solved.mdp.actions().len(),
        sweeps: solved.solution.sweeps,
        final_delta: solved.solution.final_delta,
        converged: solved.solution.converged,
    })
}

/// Re-solves and simulates `base` at every value of `axis`. Every point
/// reuses the base seed. A failing point is recorded and the sweep moves
/// on.
pub fn sweep(base: &Scenario, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Usage("a sweep needs at least one value".into()));
    }
    Ok(values
        .iter()
        .map(|&value| SweepPoint {
            value,
            outcome: evaluate(base, axis, value).map_err(|e| e.to_string()),
        })
        .collect())
}
