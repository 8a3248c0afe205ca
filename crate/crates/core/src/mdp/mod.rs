//! Discounted MDP over per-system error covariances.
//!
//! The state is the vector of scalar covariances `S = [P_1, …, P_L]`, the
//! action a feasible PSR vector `κ` with its minimum powers, and the stage
//! cost `ρ(S, κ) = Σ_ℓ p_ℓ(κ) + λ_ℓ tr(Θ_ℓ P_ℓ)`. From `S`, each of the
//! `2^L` erasure outcomes `b` leads to a deterministic successor `Φ(S, b)`
//! with probability `Π_ℓ κ_ℓ^{b_ℓ} (1 - κ_ℓ)^{1 - b_ℓ}`.
//!
//! Values off the grid are read by multilinear interpolation, so the
//! successors and their stencils are independent of the action and are
//! precomputed once per [`Mdp`].

mod export;
mod grid;

pub use export::{ActionRecord, GridRecord, PolicyDocument, SolverRecord, POLICY_FORMAT};
pub use grid::{interpolate_value, StateGrid, Stencil, ValueFunction};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{covariance_update, SystemModel};
use crate::power_control::{Action, FeasibleActionSet};

/// Relative gap under which two Bellman values count as tied.
pub const VALUE_TIE_REL: f64 = 1e-10;
/// Relative gap under which two total powers count as tied.
pub const POWER_TIE_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// Gauss–Seidel: each update sees values already refreshed this sweep.
    #[default]
    InPlace,
    /// Jacobi: every sweep reads the previous sweep's table.
    Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub update_mode: UpdateMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { alpha: 0.9, epsilon: 0.05, max_sweeps: 10_000, update_mode: UpdateMode::InPlace }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("discount factor {} outside [0, 1]", self.alpha)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config("convergence threshold must be positive".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// `Σ_ℓ p_ℓ + λ_ℓ tr(Θ_ℓ P_ℓ)` for scalar per-system covariances `s`.
pub fn stage_cost(s: &[f64], action: &Action, models: &[SystemModel]) -> f64 {
    action.total_power + covariance_cost(s, models)
}

fn covariance_cost(s: &[f64], models: &[SystemModel]) -> f64 {
    s.iter()
        .zip(models)
        .map(|(&p, m)| m.lambda() * m.weighted_trace(&DMatrix::from_element(1, 1, p)))
        .sum()
}

/// Outcome vector of outcome index `b`: bit `ℓ` is system `ℓ`'s β.
pub fn outcome_bits(b: usize, systems: usize) -> Vec<bool> {
    (0..systems).map(|l| b >> l & 1 == 1).collect()
}

/// All `2^L` erasure outcomes and the covariance vector each leads to.
pub fn reachable_states(s: &[f64], models: &[SystemModel]) -> Result<Vec<(Vec<bool>, Vec<f64>)>> {
    if s.len() != models.len() {
        return Err(Error::domain("state and model counts differ"));
    }
    let mut out = Vec::with_capacity(1 << s.len());
    for b in 0..(1usize << s.len()) {
        let bits = outcome_bits(b, s.len());
        let next = s
            .iter()
            .zip(models)
            .zip(&bits)
            .map(|((&p, m), &beta)| {
                covariance_update(&DMatrix::from_element(1, 1, p), beta, m).map(|n| n[(0, 0)])
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((bits, next));
    }
    Ok(out)
}

/// Probability of outcome `b` when link `ℓ` delivers with probability `κ_ℓ`,
/// independently across links.
pub fn transition_probability(kappa: &[f64], b: &[bool]) -> f64 {
    kappa
        .iter()
        .zip(b)
        .map(|(&k, &delivered)| if delivered { k } else { 1.0 - k })
        .product()
}

fn ensure_scalar(models: &[SystemModel]) -> Result<()> {
    if models.iter().any(|m| m.state_dim() != 1) {
        return Err(Error::Config("the MDP solver handles scalar plants only".into()));
    }
    Ok(())
}

/// A fully specified MDP instance with its action-independent pieces
/// precomputed.
#[derive(Debug, Clone)]
pub struct Mdp {
    grid: StateGrid,
    actions: FeasibleActionSet,
    models: Vec<SystemModel>,
    outcomes: usize,
    // [s * outcomes + b]
    successors: Vec<Stencil>,
    // [a * outcomes + b]
    outcome_prob: Vec<f64>,
    // λ-weighted covariance cost per grid point
    state_cost: Vec<f64>,
    total_power: Vec<f64>,
    saturated: usize,
}

impl Mdp {
    pub fn new(grid: StateGrid, actions: FeasibleActionSet, models: Vec<SystemModel>) -> Result<Self> {
        let l = grid.systems();
        if models.len() != l || actions.links() != l {
            return Err(Error::Config(format!(
                "grid has {l} systems, models {}, actions {}",
                models.len(),
                actions.links()
            )));
        }
        if actions.is_empty() {
            return Err(Error::Config("action set is empty".into()));
        }
        ensure_scalar(&models)?;
        let outcomes = 1usize << l;

        // successor covariance of every level, per system and outcome
        let mut next_level: Vec<[Vec<f64>; 2]> = Vec::with_capacity(l);
        for (lv, m) in grid.levels().iter().zip(&models) {
            let step = |beta| {
                lv.iter()
                    .map(|&p| covariance_update(&DMatrix::from_element(1, 1, p), beta, m).map(|n| n[(0, 0)]))
                    .collect::<Result<Vec<_>>>()
            };
            next_level.push([step(false)?, step(true)?]);
        }

        let mut successors = Vec::with_capacity(grid.len() * outcomes);
        let mut saturated = 0;
        let mut state_cost = Vec::with_capacity(grid.len());
        let mut next = vec![0.0; l];
        for s in 0..grid.len() {
            let coords = grid.coords(s);
            state_cost.push(covariance_cost(&grid.point(s), &models));
            for b in 0..outcomes {
                for d in 0..l {
                    next[d] = next_level[d][b >> d & 1][coords[d]];
                }
                let st = grid.stencil(&next);
                saturated += usize::from(st.saturated);
                successors.push(st);
            }
        }

        let mut outcome_prob = Vec::with_capacity(actions.len() * outcomes);
        for a in &actions.actions {
            for b in 0..outcomes {
                outcome_prob.push(transition_probability(&a.kappa, &outcome_bits(b, l)));
            }
        }
        let total_power = actions.actions.iter().map(|a| a.total_power).collect();

        Ok(Self {
            grid,
            actions,
            models,
            outcomes,
            successors,
            outcome_prob,
            state_cost,
            total_power,
            saturated,
        })
    }

    pub fn grid(&self) -> &StateGrid {
        &self.grid
    }

    pub fn actions(&self) -> &FeasibleActionSet {
        &self.actions
    }

    pub fn models(&self) -> &[SystemModel] {
        &self.models
    }

    /// Grid successors that fell outside the grid and were clamped.
    pub fn saturated_successors(&self) -> usize {
        self.saturated
    }

    /// Interpolated value of each outcome's successor from grid point `s`.
    fn successor_values(&self, j: &[f64], s: usize, out: &mut [f64]) {
        let base = s * self.outcomes;
        for (b, v) in out.iter_mut().enumerate() {
            *v = self.successors[base + b].apply(j);
        }
    }

    #[inline]
    fn q_value(&self, a: usize, s: usize, alpha: f64, succ: &[f64]) -> f64 {
        let probs = &self.outcome_prob[a * self.outcomes..(a + 1) * self.outcomes];
        let expected: f64 = probs.iter().zip(succ).map(|(p, v)| p * v).sum();
        self.state_cost[s] + self.total_power[a] + alpha * expected
    }

    /// Bellman target at grid point `s` without the argmin bookkeeping.
    fn target_value(&self, j: &[f64], s: usize, alpha: f64, succ: &mut [f64]) -> f64 {
        self.successor_values(j, s, succ);
        (0..self.actions.len())
            .map(|a| self.q_value(a, s, alpha, succ))
            .fold(f64::INFINITY, f64::min)
    }

    /// Bellman target at grid point `s` and the chosen action index.
    ///
    /// Among actions whose value is within [`VALUE_TIE_REL`] of the minimum,
    /// the lowest total power wins, then the lowest index.
    pub fn target_update(&self, j: &[f64], s: usize, alpha: f64) -> (f64, usize) {
        let mut succ = vec![0.0; self.outcomes];
        self.successor_values(j, s, &mut succ);
        let q: Vec<f64> = (0..self.actions.len())
            .map(|a| self.q_value(a, s, alpha, &succ))
            .collect();
        let best = q.iter().copied().fold(f64::INFINITY, f64::min);
        let value_tol = VALUE_TIE_REL * best.abs().max(f64::MIN_POSITIVE);
        let tied = || (0..q.len()).filter(|&a| q[a] <= best + value_tol);
        let min_power = tied().map(|a| self.total_power[a]).fold(f64::INFINITY, f64::min);
        let power_tol = POWER_TIE_REL * min_power.abs();
        let choice = tied()
            .find(|&a| self.total_power[a] <= min_power + power_tol)
            .expect("non-empty action set");
        (best, choice)
    }

    /// One Jacobi application of the Bellman operator to `j`.
    pub fn bellman_operator(&self, j: &[f64], alpha: f64) -> Vec<f64> {
        let eval = |s: usize| {
            let mut succ = vec![0.0; self.outcomes];
            self.target_value(j, s, alpha, &mut succ)
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..self.grid.len()).into_par_iter().map(eval).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..self.grid.len()).map(eval).collect()
        }
    }

    /// Approximate value iteration from `J ≡ 0` until the sup-norm change of
    /// a sweep drops to `epsilon` or `max_sweeps` is reached.
    pub fn value_iteration(&self, config: &SolverConfig) -> Result<Solution> {
        config.validate()?;
        let n = self.grid.len();
        let mut j = vec![0.0; n];
        let mut succ = vec![0.0; self.outcomes];
        let mut sweeps = 0;
        let mut delta = f64::INFINITY;
        let mut converged = false;
        while sweeps < config.max_sweeps {
            sweeps += 1;
            delta = 0.0;
            match config.update_mode {
                UpdateMode::InPlace => {
                    for s in 0..n {
                        let old = j[s];
                        j[s] = self.target_value(&j, s, config.alpha, &mut succ);
                        delta = f64::max(delta, (old - j[s]).abs());
                    }
                }
                UpdateMode::Snapshot => {
                    let next = self.bellman_operator(&j, config.alpha);
                    delta = j
                        .iter()
                        .zip(&next)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    j = next;
                }
            }
            if !delta.is_finite() {
                return Err(Error::NoConvergence("value function diverged".into()));
            }
            if delta <= config.epsilon {
                converged = true;
                break;
            }
        }
        Ok(Solution {
            value: ValueFunction::new(self.grid.clone(), j)?,
            sweeps,
            final_delta: delta,
            converged,
            config: *config,
        })
    }

    /// Greedy policy with respect to `j`.
    pub fn extract_policy(&self, j: &[f64], alpha: f64) -> Policy {
        let pick = |s: usize| self.target_update(j, s, alpha).1;
        #[cfg(feature = "parallel")]
        let action_index = {
            use rayon::prelude::*;
            (0..self.grid.len()).into_par_iter().map(pick).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let action_index = (0..self.grid.len()).map(pick).collect();
        Policy { grid: self.grid.clone(), actions: self.actions.clone(), action_index }
    }

    /// Value iteration followed by policy extraction.
    pub fn solve(&self, config: &SolverConfig) -> Result<(Solution, Policy)> {
        let sol = self.value_iteration(config)?;
        let policy = self.extract_policy(&sol.value.values, config.alpha);
        Ok((sol, policy))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub value: ValueFunction,
    pub sweeps: usize,
    pub final_delta: f64,
    pub converged: bool,
    pub config: SolverConfig,
}

/// Deterministic stationary policy on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub grid: StateGrid,
    pub actions: FeasibleActionSet,
    pub action_index: Vec<usize>,
}

impl Policy {
    pub fn new(grid: StateGrid, actions: FeasibleActionSet, action_index: Vec<usize>) -> Result<Self> {
        if action_index.len() != grid.len() {
            return Err(Error::Config("policy table size differs from the grid".into()));
        }
        if action_index.iter().any(|&a| a >= actions.len()) {
            return Err(Error::Config("policy refers to a missing action".into()));
        }
        if grid.systems() != actions.links() {
            return Err(Error::Config("policy grid and actions disagree on the link count".into()));
        }
        Ok(Self { grid, actions, action_index })
    }

    pub fn systems(&self) -> usize {
        self.grid.systems()
    }

    pub fn action_at(&self, grid_index: usize) -> &Action {
        &self.actions.actions[self.action_index[grid_index]]
    }

    /// Action of the grid point nearest to the covariance vector `s`.
    pub fn lookup(&self, s: &[f64]) -> &Action {
        self.action_at(self.grid.nearest(s))
    }
}
