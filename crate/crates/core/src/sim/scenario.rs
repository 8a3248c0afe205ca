use crate::channel::{build_gain_matrix, NoiseVector, PropagationParams};
use crate::error::{Error, Result};
use crate::estimation::SystemModel;
use crate::mdp::{Mdp, Policy, Solution, SolverConfig, StateGrid};
use crate::power_control::RadioNetwork;

use super::topology::{build_topology, TopologySpec};

/// Episode length, run count and seeding of a Monte Carlo study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    /// Leading steps of each episode left out of the averages.
    pub burn_in: usize,
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.runs == 0 {
            return Err(Error::Config("horizon and runs must be at least 1".into()));
        }
        if self.burn_in >= self.horizon {
            return Err(Error::Config(format!(
                "burn-in of {} leaves nothing of a {}-step horizon",
                self.burn_in, self.horizon
            )));
        }
        Ok(())
    }
}

/// Everything needed to solve for a policy and simulate it. Powers are in
/// watts.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: TopologySpec,
    pub propagation: PropagationParams,
    pub systems: Vec<SystemModel>,
    pub packet_bits: u32,
    pub noise_watt: Vec<f64>,
    pub p_max_watt: f64,
    pub p_min_watt: f64,
    pub solver: SolverConfig,
    /// Covariance levels per system.
    pub grid: Vec<Vec<f64>>,
    /// Candidate PSR levels per sensor.
    pub kappa_levels: Vec<Vec<f64>>,
    pub run: RunSpec,
}

/// A solved scenario.
#[derive(Debug, Clone)]
pub struct SolvedScenario {
    pub mdp: Mdp,
    pub solution: Solution,
    pub policy: Policy,
    /// Actions with some link allocated less than `p_min`.
    pub actions_below_floor: usize,
}

impl Scenario {
    pub fn links(&self) -> usize {
        self.topology.links()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.links();
        self.topology.validate()?;
        self.propagation.validate()?;
        self.solver.validate()?;
        self.run.validate()?;
        let sizes = [
            ("systems", self.systems.len()),
            ("noise levels", self.noise_watt.len()),
            ("grid axes", self.grid.len()),
            ("PSR level lists", self.kappa_levels.len()),
        ];
        for (what, n) in sizes {
            if n != l {
                return Err(Error::Config(format!("{l} links but {n} {what}")));
            }
        }
        if self.packet_bits == 0 {
            return Err(Error::Config("packet length must be at least one bit".into()));
        }
        if !(self.p_min_watt >= 0.0 && self.p_min_watt <= self.p_max_watt) {
            return Err(Error::Config("need 0 ≤ p_min ≤ p_max".into()));
        }
        Ok(())
    }

    pub fn radio_network(&self) -> Result<RadioNetwork> {
        self.validate()?;
        let topology = build_topology(&self.topology)?;
        let gains = build_gain_matrix(&topology, &self.propagation)?;
        let noise = NoiseVector::new(self.noise_watt.clone())?;
        RadioNetwork::new(gains, noise, self.packet_bits, self.p_max_watt)
    }

    pub fn mdp(&self) -> Result<Mdp> {
        let net = self.radio_network()?;
        let actions = net.enumerate_feasible_actions(&self.kappa_levels)?;
        let grid = StateGrid::new(self.grid.clone())?;
        Mdp::new(grid, actions, self.systems.clone())
    }

    pub fn solve(&self) -> Result<SolvedScenario> {
        let mdp = self.mdp()?;
        let (solution, policy) = mdp.solve(&self.solver)?;
        let actions_below_floor = mdp.actions().count_below_floor(self.p_min_watt);
        Ok(SolvedScenario { mdp, solution, policy, actions_below_floor })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::dbm_to_watts;
    use crate::power_control::uniform_levels;

    pub(crate) fn circular3(d2: f64) -> Scenario {
        let m = SystemModel::scalar(1.01, 0.3, 0.4, 1.1).unwrap();
        Scenario {
            topology: TopologySpec::Circular { links: 3, d1: 10.0, d2 },
            propagation: PropagationParams::default(),
            systems: vec![m; 3],
            packet_bits: 120,
            noise_watt: vec![dbm_to_watts(-100.0); 3],
            p_max_watt: dbm_to_watts(7.0),
            p_min_watt: dbm_to_watts(-24.0),
            solver: SolverConfig::default(),
            grid: vec![(0..5).map(|i| 5.0 * i as f64).collect(); 3],
            kappa_levels: vec![uniform_levels(4); 3],
            run: RunSpec { horizon: 50, runs: 4, seed: 7, burn_in: 0 },
        }
    }

    #[test]
    fn validation_catches_size_mismatch() {
        let mut s = circular3(10.0);
        assert!(s.validate().is_ok());
        s.noise_watt.pop();
        assert!(s.validate().is_err());
        let mut s = circular3(10.0);
        s.run.burn_in = 50;
        assert!(s.validate().is_err());
        let mut s = circular3(10.0);
        s.p_min_watt = 1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn solve_small_scenario() {
        let solved = circular3(10.0).solve().unwrap();
        assert!(solved.solution.converged);
        assert_eq!(solved.policy.action_index.len(), 125);
        assert!(solved.actions_below_floor <= solved.mdp.actions().len());
    }
}
