//! Browser bindings for three small demos: the PSR feasibility region of a
//! three-sensor circle, the optimal PSR policy of two sensors, and a
//! closed-loop episode under that policy.
//!
//! Every entry point returns a JSON string. The plain functions are usable
//! from Rust; the `#[wasm_bindgen]` wrappers only convert errors.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use wsn_tpc::channel::PropagationParams;
use wsn_tpc::estimation::SystemModel;
use wsn_tpc::mdp::SolverConfig;
use wsn_tpc::power_control::uniform_levels;
use wsn_tpc::sim::{run_episode, EpisodeOptions, RunSpec, Scenario, SolvedScenario, TopologySpec};
use wsn_tpc::{dbm_to_watts, Result};

const D1: f64 = 10.0;
const GRID_LEVELS: usize = 20;
const GRID_MAX: f64 = 20.0;
const PSR_LEVELS: usize = 12;

fn model(f: f64, lambda: f64) -> Result<SystemModel> {
    SystemModel::scalar(f, 0.3, 0.4, 1.1)?.with_lambda(lambda)
}

fn circular(links: usize, d2_over_d1: f64, systems: Vec<SystemModel>, alpha: f64) -> Scenario {
    Scenario {
        topology: TopologySpec::Circular { links, d1: D1, d2: D1 * d2_over_d1 },
        propagation: PropagationParams::default(),
        systems,
        packet_bits: 120,
        noise_watt: vec![dbm_to_watts(-100.0); links],
        p_max_watt: dbm_to_watts(7.0),
        p_min_watt: dbm_to_watts(-24.0),
        solver: SolverConfig { alpha, epsilon: 1e-4, ..SolverConfig::default() },
        grid: vec![(0..GRID_LEVELS).map(|i| GRID_MAX * i as f64 / (GRID_LEVELS - 1) as f64).collect(); links],
        kappa_levels: vec![uniform_levels(PSR_LEVELS); links],
        run: RunSpec { horizon: 1, runs: 1, seed: 0, burn_in: 0 },
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("demo output serialises")
}

#[derive(Debug, Serialize)]
pub struct Slice {
    /// PSR values along both axes.
    pub axis: Vec<f64>,
    /// Row-major over (κ₁, κ₂).
    pub feasible: Vec<bool>,
}

/// Feasible (κ₁, κ₂) pairs of a three-sensor circle with κ₃ pinned.
pub fn feasibility_slice_json(d2_over_d1: f64, kappa3: f64, resolution: usize) -> Result<String> {
    let systems = vec![model(1.01, 0.01)?; 3];
    let net = circular(3, d2_over_d1, systems, 0.9).radio_network()?;
    let cells = net.feasibility_region_slice(&[None, None, Some(kappa3)], resolution)?;
    Ok(to_json(&Slice {
        axis: uniform_levels(resolution),
        feasible: cells.iter().map(|c| c.feasible).collect(),
    }))
}

#[derive(Debug, Serialize)]
struct PolicyView<'a> {
    levels: &'a [f64],
    /// `kappa[l][a * n + b]` is link `l`'s PSR at covariances (levels[a], levels[b]).
    kappa: [Vec<f64>; 2],
    power_watt: Vec<f64>,
    actions: usize,
    sweeps: usize,
    converged: bool,
}

#[derive(Debug, Serialize)]
struct EpisodeView {
    covariance: [Vec<f64>; 2],
    power_watt: [Vec<f64>; 2],
    error: [Vec<f64>; 2],
    delivered: [Vec<bool>; 2],
}

/// Two sensors at equal distance from a shared receiver, solved once and
/// then simulated on demand.
#[wasm_bindgen]
pub struct PairDemo {
    scenario: Scenario,
    solved: SolvedScenario,
}

impl PairDemo {
    pub fn solve(f1: f64, f2: f64, lambda: f64, alpha: f64) -> Result<Self> {
        let scenario = circular(2, 1.0, vec![model(f1, lambda)?, model(f2, lambda)?], alpha);
        let solved = scenario.solve()?;
        Ok(Self { scenario, solved })
    }

    pub fn policy(&self) -> String {
        let grid = self.solved.mdp.grid();
        let mut kappa = [Vec::new(), Vec::new()];
        let mut power = Vec::new();
        for s in 0..grid.len() {
            let a = self.solved.policy.action_at(s);
            kappa[0].push(a.kappa[0]);
            kappa[1].push(a.kappa[1]);
            power.push(a.total_power);
        }
        to_json(&PolicyView {
            levels: &grid.levels()[0],
            kappa,
            power_watt: power,
            actions: self.solved.mdp.actions().len(),
            sweeps: self.solved.solution.sweeps,
            converged: self.solved.solution.converged,
        })
    }

    pub fn episode(&self, horizon: usize, seed: u64) -> Result<String> {
        let trace = run_episode(&self.solved.policy, &self.scenario.systems, horizon, seed, EpisodeOptions::default())?;
        let mut view = EpisodeView {
            covariance: Default::default(),
            power_watt: Default::default(),
            error: Default::default(),
            delivered: Default::default(),
        };
        for r in &trace.rows {
            view.covariance[r.link].push(r.covariance);
            view.power_watt[r.link].push(r.power_watt);
            view.error[r.link].push(r.error());
            view.delivered[r.link].push(r.delivered);
        }
        Ok(to_json(&view))
    }
}

fn js(e: wsn_tpc::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = feasibilitySlice)]
pub fn feasibility_slice(d2_over_d1: f64, kappa3: f64, resolution: usize) -> std::result::Result<String, JsError> {
    feasibility_slice_json(d2_over_d1, kappa3, resolution).map_err(js)
}

#[wasm_bindgen]
impl PairDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(f1: f64, f2: f64, lambda: f64, alpha: f64) -> std::result::Result<PairDemo, JsError> {
        Self::solve(f1, f2, lambda, alpha).map_err(js)
    }

    #[wasm_bindgen(js_name = policyJson)]
    pub fn policy_json(&self) -> String {
        self.policy()
    }

    #[wasm_bindgen(js_name = episodeJson)]
    pub fn episode_json(&self, horizon: usize, seed: u64) -> std::result::Result<String, JsError> {
        self.episode(horizon, seed).map_err(js)
    }
}
