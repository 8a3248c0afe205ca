use serde::{Deserialize, Serialize};

use super::{Mdp, Policy, Solution, StateGrid, UpdateMode};
use crate::error::{Error, Result};
use crate::power_control::{Action, FeasibleActionSet, PowerAllocation};
use crate::watts_to_dbm;

pub const POLICY_FORMAT: &str = "wsn-tpc-policy/1";

/// Serialised policy: grid, action list, per-point action index and solver
/// metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    pub format: String,
    /// Hash of the full configuration the policy was produced from.
    pub config_hash: Option<String>,
    /// Hash of the solve-relevant part of that configuration.
    pub solve_hash: Option<String>,
    pub grid: GridRecord,
    pub per_sensor_levels: Vec<Vec<f64>>,
    pub p_max_watt: f64,
    pub actions: Vec<ActionRecord>,
    pub action_index: Vec<usize>,
    pub solver: SolverRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRecord {
    /// Covariance levels per system; points are row-major, last system
    /// fastest.
    pub levels: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionRecord {
    pub kappa: Vec<f64>,
    pub power_watt: Vec<f64>,
    /// `null` for links that transmit at zero power.
    pub power_dbm: Vec<Option<f64>>,
    pub total_power_watt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverRecord {
    pub alpha: f64,
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub update_mode: UpdateMode,
    pub lambda: Vec<f64>,
    pub sweeps: usize,
    pub final_delta: f64,
    pub converged: bool,
    pub saturated_successors: usize,
}

impl PolicyDocument {
    pub fn new(mdp: &Mdp, solution: &Solution, policy: &Policy) -> Self {
        let actions = policy
            .actions
            .actions
            .iter()
            .map(|a| ActionRecord {
                kappa: a.kappa.clone(),
                power_watt: a.power.as_slice().to_vec(),
                power_dbm: a
                    .power
                    .as_slice()
                    .iter()
                    .map(|&p| (p > 0.0).then(|| watts_to_dbm(p)))
                    .collect(),
                total_power_watt: a.total_power,
            })
            .collect();
        Self {
            format: POLICY_FORMAT.to_string(),
            config_hash: None,
            solve_hash: None,
            grid: GridRecord { levels: policy.grid.levels().to_vec() },
            per_sensor_levels: policy.actions.per_sensor_levels.clone(),
            p_max_watt: policy.actions.p_max,
            actions,
            action_index: policy.action_index.clone(),
            solver: SolverRecord {
                alpha: solution.config.alpha,
                epsilon: solution.config.epsilon,
                max_sweeps: solution.config.max_sweeps,
                update_mode: solution.config.update_mode,
                lambda: mdp.models().iter().map(|m| m.lambda()).collect(),
                sweeps: solution.sweeps,
                final_delta: solution.final_delta,
                converged: solution.converged,
                saturated_successors: mdp.saturated_successors(),
            },
        }
    }

    /// Rebuilds the in-memory policy.
    pub fn to_policy(&self) -> Result<Policy> {
        if self.format != POLICY_FORMAT {
            return Err(Error::Config(format!("unsupported policy format {:?}", self.format)));
        }
        let grid = StateGrid::new(self.grid.levels.clone())?;
        let actions = self
            .actions
            .iter()
            .map(|r| {
                let power = PowerAllocation::new(r.power_watt.clone())
                    .map_err(|e| Error::Config(e.to_string()))?;
                Ok(Action { kappa: r.kappa.clone(), total_power: r.total_power_watt, power })
            })
            .collect::<Result<Vec<_>>>()?;
        let set = FeasibleActionSet::from_actions(actions, self.per_sensor_levels.clone(), self.p_max_watt)?;
        Policy::new(grid, set, self.action_index.clone())
    }
}
