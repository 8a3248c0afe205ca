//! JSON scenario configuration. Powers are given in dBm, distances in
//! meters and the carrier frequency in MHz.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use wsn_tpc::channel::PropagationParams;
use wsn_tpc::estimation::SystemModel;
use wsn_tpc::mdp::{SolverConfig, UpdateMode};
use wsn_tpc::power_control::{levels_between, uniform_levels};
use wsn_tpc::sim::{RunSpec, Scenario, TopologySpec};
use wsn_tpc::{dbm_to_watts, Error, Result};

/// A number, read as `s·I`, or a matrix given row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

impl MatrixSpec {
    fn rows(&self) -> usize {
        match self {
            Self::Scalar(_) => 1,
            Self::Rows(r) => r.len(),
        }
    }

    /// `n × n` for a scalar; the given shape otherwise.
    fn to_matrix(&self, n: usize, what: &str) -> Result<DMatrix<f64>> {
        match self {
            Self::Scalar(s) => Ok(DMatrix::identity(n, n) * *s),
            Self::Rows(rows) => {
                let cols = rows.first().map_or(0, Vec::len);
                if cols == 0 || rows.iter().any(|r| r.len() != cols) {
                    return Err(Error::Config(format!("{what} must be a non-empty rectangular matrix")));
                }
                Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
            }
        }
    }
}

/// A number repeated to the needed length, or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Scalar(f64),
    Items(Vec<f64>),
}

impl VectorSpec {
    fn expand(&self, n: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            Self::Scalar(s) => Ok(vec![*s; n]),
            Self::Items(v) if v.len() == n => Ok(v.clone()),
            Self::Items(v) => Err(Error::Config(format!("{what} has {} entries, expected {n}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub f: MatrixSpec,
    pub h: MatrixSpec,
    pub r1: MatrixSpec,
    pub r2: MatrixSpec,
    #[serde(default = "zero_vector")]
    pub m0: VectorSpec,
    #[serde(default = "unit_matrix")]
    pub r0: MatrixSpec,
    #[serde(default = "unit_matrix")]
    pub theta: MatrixSpec,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn zero_vector() -> VectorSpec {
    VectorSpec::Scalar(0.0)
}
fn unit_matrix() -> MatrixSpec {
    MatrixSpec::Scalar(1.0)
}
fn default_lambda() -> f64 {
    0.01
}

impl SystemConfig {
    /// Scalar plant with the default initial condition and weights.
    pub fn scalar(f: f64, h: f64, r1: f64, r2: f64, lambda: f64) -> Self {
        Self {
            f: MatrixSpec::Scalar(f),
            h: MatrixSpec::Scalar(h),
            r1: MatrixSpec::Scalar(r1),
            r2: MatrixSpec::Scalar(r2),
            m0: zero_vector(),
            r0: unit_matrix(),
            theta: unit_matrix(),
            lambda,
        }
    }

    pub fn to_model(&self) -> Result<SystemModel> {
        let n = self.f.rows();
        let p = self.h.rows();
        SystemModel::new(
            self.f.to_matrix(n, "f")?,
            self.h.to_matrix(p, "h")?,
            self.r1.to_matrix(n, "r1")?,
            self.r2.to_matrix(p, "r2")?,
            DVector::from_vec(self.m0.expand(n, "m0")?),
            self.r0.to_matrix(n, "r0")?,
            self.theta.to_matrix(n, "theta")?,
            self.lambda,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationConfig {
    pub frequency_mhz: f64,
    pub pathloss_exponent: f64,
    pub shadowing_variance_db: f64,
    pub reference_distance_m: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        let p = PropagationParams::default();
        Self {
            frequency_mhz: p.frequency_hz / 1e6,
            pathloss_exponent: p.pathloss_exponent,
            shadowing_variance_db: p.shadowing_variance_db,
            reference_distance_m: p.reference_distance_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    pub packet_bits: u32,
    pub noise_dbm: VectorSpec,
    pub p_max_dbm: f64,
    pub p_min_dbm: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self { packet_bits: 120, noise_dbm: VectorSpec::Scalar(-100.0), p_max_dbm: 7.0, p_min_dbm: -24.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub alpha: f64,
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub update_mode: UpdateMode,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self { alpha: s.alpha, epsilon: s.epsilon, max_sweeps: s.max_sweeps, update_mode: s.update_mode }
    }
}

/// Covariance grid: `levels` evenly spaced points on `[min, max]` per
/// system, unless `explicit` lists them (one list per system, or a single
/// list shared by all).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub levels: usize,
    pub min: f64,
    pub max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Vec<Vec<f64>>>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { levels: 10, min: 0.0, max: 20.0, explicit: None }
    }
}

/// PSR candidates per sensor: `levels` points `i/(levels+1)` by default,
/// evenly spaced on `[min, max]` when both are given, or `explicit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActionConfig {
    pub levels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Vec<Vec<f64>>>,
}

impl Default for ActionConfig {
    fn default() -> Self {
        Self { levels: 8, min: None, max: None, explicit: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    pub burn_in: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { horizon: 500, runs: 50, seed: 0, burn_in: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub topology: TopologySpec,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub radio: RadioConfig,
    pub systems: Vec<SystemConfig>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub actions: ActionConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn per_link(lists: &[Vec<f64>], links: usize, what: &str) -> Result<Vec<Vec<f64>>> {
    match lists.len() {
        1 => Ok(vec![lists[0].clone(); links]),
        n if n == links => Ok(lists.to_vec()),
        n => Err(Error::Config(format!("{what}: {n} lists for {links} links"))),
    }
}

impl ConfigDocument {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn links(&self) -> usize {
        self.topology.links()
    }

    pub fn propagation_params(&self) -> PropagationParams {
        let p = &self.propagation;
        PropagationParams {
            frequency_hz: p.frequency_mhz * 1e6,
            pathloss_exponent: p.pathloss_exponent,
            shadowing_variance_db: p.shadowing_variance_db,
            reference_distance_m: p.reference_distance_m,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig { alpha: s.alpha, epsilon: s.epsilon, max_sweeps: s.max_sweeps, update_mode: s.update_mode }
    }

    pub fn grid_levels(&self) -> Result<Vec<Vec<f64>>> {
        let g = &self.grid;
        if let Some(lists) = &g.explicit {
            return per_link(lists, self.links(), "grid.explicit");
        }
        if g.levels == 0 || !(g.min >= 0.0 && g.max > g.min) {
            return Err(Error::Config(format!(
                "grid needs at least one level on 0 <= min < max, got {} on [{}, {}]",
                g.levels, g.min, g.max
            )));
        }
        let lv: Vec<f64> = if g.levels == 1 {
            vec![g.min]
        } else {
            (0..g.levels)
                .map(|i| g.min + (g.max - g.min) * i as f64 / (g.levels - 1) as f64)
                .collect()
        };
        Ok(vec![lv; self.links()])
    }

    pub fn kappa_levels(&self) -> Result<Vec<Vec<f64>>> {
        let a = &self.actions;
        if let Some(lists) = &a.explicit {
            return per_link(lists, self.links(), "actions.explicit");
        }
        if a.levels == 0 {
            return Err(Error::Config("actions.levels must be at least 1".into()));
        }
        let lv = match (a.min, a.max) {
            (Some(lo), Some(hi)) => levels_between(a.levels, lo, hi)?,
            (None, None) => uniform_levels(a.levels),
            _ => return Err(Error::Config("actions.min and actions.max go together".into())),
        };
        Ok(vec![lv; self.links()])
    }

    pub fn run_spec(&self) -> RunSpec {
        let s = &self.simulation;
        RunSpec { horizon: s.horizon, runs: s.runs, seed: s.seed, burn_in: s.burn_in }
    }

    /// Converts to the internal scenario, in watts and hertz.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let links = self.links();
        let systems = self
            .systems
            .iter()
            .enumerate()
            .map(|(i, s)| s.to_model().map_err(|e| Error::Config(format!("system {}: {e}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        let radio = &self.radio;
        let scenario = Scenario {
            topology: self.topology.clone(),
            propagation: self.propagation_params(),
            systems,
            packet_bits: radio.packet_bits,
            noise_watt: radio.noise_dbm.expand(links, "radio.noise_dbm")?.into_iter().map(dbm_to_watts).collect(),
            p_max_watt: dbm_to_watts(radio.p_max_dbm),
            p_min_watt: dbm_to_watts(radio.p_min_dbm),
            solver: self.solver_config(),
            grid: self.grid_levels()?,
            kappa_levels: self.kappa_levels()?,
            run: self.run_spec(),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "topology": {"kind": "circular", "links": 2, "d1": 10, "d2": 10},
        "systems": [
            {"f": 1.01, "h": 0.3, "r1": 0.4, "r2": 1.1},
            {"f": 1.1, "h": 0.3, "r1": 0.4, "r2": 1.1, "lambda": 0.02}
        ]
    }"#;

    #[test]
    fn defaults_filled_in() {
        let doc = ConfigDocument::from_json(MINIMAL).unwrap();
        assert_eq!(doc.propagation.frequency_mhz, 2480.0);
        assert_eq!(doc.propagation.pathloss_exponent, 3.3);
        assert_eq!(doc.propagation.shadowing_variance_db, 2.75);
        assert_eq!(doc.radio, RadioConfig::default());
        assert_eq!(doc.radio.packet_bits, 120);
        assert_eq!(doc.systems[0].lambda, 0.01);
        let sc = doc.to_scenario().unwrap();
        assert!((sc.p_max_watt - 10f64.powf(0.7) * 1e-3).abs() < 1e-15);
        assert!((sc.noise_watt[0] - 1e-13).abs() < 1e-28);
        assert_eq!(sc.systems[1].lambda(), 0.02);
        assert_eq!(sc.grid[0].len(), 10);
        assert_eq!(sc.kappa_levels[1].len(), 8);
    }

    #[test]
    fn round_trip_is_identity() {
        let doc = ConfigDocument::from_json(MINIMAL).unwrap();
        let again = ConfigDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(doc, again);
        assert_eq!(doc.to_json(), again.to_json());
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replacen("\"systems\"", "\"sytems\": [], \"systems\"", 1);
        assert!(ConfigDocument::from_json(&bad).is_err());
        let bad = MINIMAL.replacen("\"d2\": 10", "\"d2\": 10, \"d3\": 4", 1);
        assert!(ConfigDocument::from_json(&bad).is_err());
    }

    #[test]
    fn matrix_systems() {
        let text = r#"{
            "topology": {"kind": "explicit", "tx": [[0, 0]], "rx": [[10, 0]]},
            "systems": [{"f": [[1.0, 0.1], [0.0, 1.0]], "h": [[1.0, 0.0]], "r1": 0.2, "r2": 1.0}]
        }"#;
        let doc = ConfigDocument::from_json(text).unwrap();
        let m = doc.systems[0].to_model().unwrap();
        assert_eq!(m.state_dim(), 2);
        assert_eq!(m.r1()[(1, 1)], 0.2);
        assert_eq!(m.r1()[(0, 1)], 0.0);
    }

    #[test]
    fn size_mismatches_are_config_errors() {
        let mut doc = ConfigDocument::from_json(MINIMAL).unwrap();
        doc.systems.pop();
        assert!(matches!(doc.to_scenario(), Err(Error::Config(_))));
        let mut doc = ConfigDocument::from_json(MINIMAL).unwrap();
        doc.radio.noise_dbm = VectorSpec::Items(vec![-100.0; 3]);
        assert!(matches!(doc.to_scenario(), Err(Error::Config(_))));
        let mut doc = ConfigDocument::from_json(MINIMAL).unwrap();
        doc.actions.min = Some(0.1);
        assert!(doc.to_scenario().is_err());
    }

    #[test]
    fn explicit_levels_shared() {
        let mut doc = ConfigDocument::from_json(MINIMAL).unwrap();
        doc.grid.explicit = Some(vec![vec![0.0, 1.0, 4.0]]);
        doc.actions.explicit = Some(vec![vec![0.5, 0.9], vec![0.7]]);
        let sc = doc.to_scenario().unwrap();
        assert_eq!(sc.grid, vec![vec![0.0, 1.0, 4.0]; 2]);
        assert_eq!(sc.kappa_levels[1], vec![0.7]);
    }
}
