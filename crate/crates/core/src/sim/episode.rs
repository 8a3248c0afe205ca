use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimation::{covariance_update, estimate_update, plant_step, SystemModel};
use crate::mdp::Policy;
use crate::watts_to_dbm;

pub const TRACE_CSV_HEADER: &str = "k,link,P,p_watt,p_dbm,kappa,beta,x,xhat,err";

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpisodeOptions {
    /// Replaces the Bernoulli draw with a fixed delivery outcome.
    pub force_delivery: Option<bool>,
}

/// One link at one step, recorded before the step's update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    /// Zero-based link index.
    pub link: usize,
    pub covariance: f64,
    pub power_watt: f64,
    pub kappa: f64,
    pub delivered: bool,
    pub x: f64,
    pub xhat: f64,
}

impl TraceRow {
    pub fn error(&self) -> f64 {
        self.x - self.xhat
    }
}

/// Rows ordered by step, then link.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub links: usize,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn steps(&self) -> usize {
        self.rows.len() / self.links.max(1)
    }

    pub fn link(&self, link: usize) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().skip(link).step_by(self.links)
    }

    /// Writes the trace as CSV; links are numbered from 1. A zero power is
    /// written as `-inf` dBm.
    pub fn write_csv<W: Write>(&self, mut out: W, config_hash: Option<&str>) -> io::Result<()> {
        if let Some(h) = config_hash {
            writeln!(out, "# config_hash: {h}")?;
        }
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.k,
                r.link + 1,
                r.covariance,
                r.power_watt,
                watts_to_dbm(r.power_watt),
                r.kappa,
                u8::from(r.delivered),
                r.x,
                r.xhat,
                r.error()
            )?;
        }
        Ok(())
    }
}

fn check_consistent(policy: &Policy, systems: &[SystemModel]) -> Result<()> {
    if policy.systems() != systems.len() {
        return Err(Error::Config(format!(
            "policy covers {} systems, scenario has {}",
            policy.systems(),
            systems.len()
        )));
    }
    if systems.iter().any(|m| m.state_dim() != 1 || m.output_dim() != 1) {
        return Err(Error::Config("simulation needs scalar plants".into()));
    }
    Ok(())
}

/// Closed-loop run of `horizon` steps under `policy`.
///
/// At every step the action of the grid point nearest to the current
/// covariance vector is applied, each link's delivery is drawn from
/// `Bernoulli(κ_ℓ)`, and plants, estimates and covariances advance.
pub fn run_episode(
    policy: &Policy,
    systems: &[SystemModel],
    horizon: usize,
    seed: u64,
    options: EpisodeOptions,
) -> Result<Trace> {
    check_consistent(policy, systems)?;
    let links = systems.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<DVector<f64>> = systems.iter().map(|m| m.sample_initial(&mut rng)).collect();
    let mut xhat: Vec<DVector<f64>> = systems.iter().map(|m| m.m0().clone()).collect();
    let mut p: Vec<DMatrix<f64>> = systems.iter().map(|m| m.r0().clone()).collect();
    let mut rows = Vec::with_capacity(horizon * links);
    let mut s = vec![0.0; links];
    let mut delivered = vec![false; links];

    for k in 0..horizon {
        for (sl, pl) in s.iter_mut().zip(&p) {
            *sl = pl[(0, 0)];
        }
        let action = policy.lookup(&s);
        for (d, &kappa) in delivered.iter_mut().zip(&action.kappa) {
            let draw = rng.random::<f64>() < kappa;
            *d = options.force_delivery.unwrap_or(draw);
        }
        for l in 0..links {
            let m = &systems[l];
            let (x_next, y) = plant_step(&x[l], m, &mut rng);
            rows.push(TraceRow {
                k,
                link: l,
                covariance: s[l],
                power_watt: action.power.as_slice()[l],
                kappa: action.kappa[l],
                delivered: delivered[l],
                x: x[l][0],
                xhat: xhat[l][0],
            });
            xhat[l] = estimate_update(&xhat[l], &p[l], Some(&y), delivered[l], m)?;
            p[l] = covariance_update(&p[l], delivered[l], m)?;
            x[l] = x_next;
        }
    }
    Ok(Trace { links, rows })
}
