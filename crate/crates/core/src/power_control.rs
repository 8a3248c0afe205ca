//! Foschini–Miljanic minimum-power allocation and the discretised PSR
//! feasibility region.
//!
//! For SINR targets `γ`, the componentwise-minimum powers solve
//! `(I - D(γ)T) p = u`, where `T` holds the cross gains normalised by each
//! receiver's direct gain and `u` the normalised noise. A solution with
//! `0 ≤ p ≤ p_max` exists iff the spectral radius of `D(γ)T` is below one and
//! the resulting powers fit the budget.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::channel::{sinr_from_psr, GainMatrix, NoiseVector};
use crate::error::{Error, Infeasibility, Result};

/// Relative slack used when deciding `ρ(D(γ)T) < 1`.
const SPECTRAL_MARGIN: f64 = 1e-12;

/// Cross gains normalised by the receiving link's direct gain;
/// `T[(ℓ, m)] = q(ℓ←m) / q(ℓ←ℓ)` and a zero diagonal.
pub fn normalized_gain_matrix(q: &GainMatrix) -> Result<DMatrix<f64>> {
    let l = q.links();
    let mut t = DMatrix::zeros(l, l);
    for rx in 0..l {
        let direct = q.gain(rx, rx);
        if direct <= 0.0 {
            return Err(Error::domain(format!("link {rx} has zero direct gain")));
        }
        for tx in (0..l).filter(|&tx| tx != rx) {
            t[(rx, tx)] = q.gain(rx, tx) / direct;
        }
    }
    Ok(t)
}

/// `u_ℓ = n_ℓ γ_ℓ / q(ℓ←ℓ)`.
pub fn normalized_interference(
    gamma: &[f64],
    noise: &NoiseVector,
    q: &GainMatrix,
) -> Result<DVector<f64>> {
    check_lengths(gamma, noise, q)?;
    Ok(DVector::from_iterator(
        gamma.len(),
        gamma
            .iter()
            .zip(noise.as_slice())
            .enumerate()
            .map(|(l, (&g, &n))| n * g / q.gain(l, l)),
    ))
}

fn check_lengths(gamma: &[f64], noise: &NoiseVector, q: &GainMatrix) -> Result<()> {
    if gamma.len() != q.links() || noise.len() != q.links() {
        return Err(Error::domain(format!(
            "dimension mismatch: {} targets, {} noise entries, {} links",
            gamma.len(),
            noise.len(),
            q.links()
        )));
    }
    if let Some(g) = gamma.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::domain(format!("SINR target {g} must be non-negative")));
    }
    Ok(())
}

fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Transmit powers (watts), one per link.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation(Vec<f64>);

impl PowerAllocation {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::domain("powers must be finite and non-negative"));
        }
        Ok(Self(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Minimum powers meeting the SINR targets `gamma` with equality.
pub fn foschini_miljanic(
    gamma: &[f64],
    q: &GainMatrix,
    noise: &NoiseVector,
) -> Result<PowerAllocation> {
    let t = normalized_gain_matrix(q)?;
    let u = normalized_interference(gamma, noise, q)?;
    let coupling = DMatrix::from_diagonal(&DVector::from_column_slice(gamma)) * t;

    let rho = spectral_radius(&coupling);
    if !(rho < 1.0 - SPECTRAL_MARGIN) {
        return Err(Error::Infeasible(Infeasibility::SpectralRadius(rho)));
    }
    let system = DMatrix::identity(gamma.len(), gamma.len()) - coupling;
    let p = system
        .lu()
        .solve(&u)
        .filter(|p| p.iter().all(|v| v.is_finite()))
        .ok_or(Error::Infeasible(Infeasibility::Singular))?;
    if let Some(link) = p.iter().position(|&v| v < 0.0) {
        return Err(Error::Infeasible(Infeasibility::NegativePower(link)));
    }
    Ok(PowerAllocation(p.iter().copied().collect()))
}

/// SINR targets are feasible within the per-link budget `p_max` (watts).
pub fn is_feasible(gamma: &[f64], q: &GainMatrix, noise: &NoiseVector, p_max: f64) -> bool {
    foschini_miljanic(gamma, q, noise).is_ok_and(|p| p.as_slice().iter().all(|&v| v <= p_max))
}

/// `n` PSR levels evenly spaced strictly inside `(0, 1)`.
pub fn uniform_levels(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

/// `n` evenly spaced levels on `[lo, hi]` inclusive; both ends must lie in
/// `(0, 1)`.
pub fn levels_between(n: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if n == 0 || !(0.0 < lo && lo <= hi && hi < 1.0) || (n > 1 && lo == hi) {
        return Err(Error::Config(format!(
            "cannot place {n} PSR levels on [{lo}, {hi}]"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

/// A PSR requirement vector and the minimum powers that realise it.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub kappa: Vec<f64>,
    pub power: PowerAllocation,
    pub total_power: f64,
}

/// Every feasible combination of per-sensor PSR levels, in lexicographic
/// order of `κ` (first link most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleActionSet {
    pub actions: Vec<Action>,
    pub per_sensor_levels: Vec<Vec<f64>>,
    pub p_max: f64,
}

impl FeasibleActionSet {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn links(&self) -> usize {
        self.per_sensor_levels.len()
    }

    /// Builds a set from explicit actions, e.g. when reloading a policy.
    pub fn from_actions(
        actions: Vec<Action>,
        per_sensor_levels: Vec<Vec<f64>>,
        p_max: f64,
    ) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::Config("action set is empty".into()));
        }
        let l = per_sensor_levels.len();
        if actions.iter().any(|a| a.kappa.len() != l || a.power.as_slice().len() != l) {
            return Err(Error::Config("action dimension mismatch".into()));
        }
        Ok(Self { actions, per_sensor_levels, p_max })
    }

    /// Number of allocations with some non-zero power below `p_min` watts.
    /// Such powers are kept; raising them would over-serve the target.
    pub fn count_below_floor(&self, p_min: f64) -> usize {
        self.actions
            .iter()
            .filter(|a| a.power.as_slice().iter().any(|&p| p > 0.0 && p < p_min))
            .count()
    }
}

/// The shared radio medium: gains, noise, packet length and power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioNetwork {
    pub gains: GainMatrix,
    pub noise: NoiseVector,
    pub packet_bits: u32,
    /// Per-transmitter power budget in watts.
    pub p_max: f64,
}

impl RadioNetwork {
    pub fn new(gains: GainMatrix, noise: NoiseVector, packet_bits: u32, p_max: f64) -> Result<Self> {
        if gains.links() != noise.len() {
            return Err(Error::domain("noise vector length differs from link count"));
        }
        if packet_bits == 0 {
            return Err(Error::domain("packet length must be at least one bit"));
        }
        if !(p_max.is_finite() && p_max > 0.0) {
            return Err(Error::domain("p_max must be positive"));
        }
        Ok(Self { gains, noise, packet_bits, p_max })
    }

    pub fn links(&self) -> usize {
        self.gains.links()
    }

    /// Minimum powers realising the PSR vector `kappa`, or why none exist.
    pub fn psi(&self, kappa: &[f64]) -> Result<PowerAllocation> {
        if kappa.len() != self.links() {
            return Err(Error::domain("PSR vector length differs from link count"));
        }
        let gamma = kappa
            .iter()
            .map(|&k| sinr_from_psr(k, self.packet_bits))
            .collect::<Result<Vec<_>>>()?;
        let p = foschini_miljanic(&gamma, &self.gains, &self.noise)?;
        if let Some((link, &power)) =
            p.as_slice().iter().enumerate().find(|(_, &v)| v > self.p_max)
        {
            return Err(Error::Infeasible(Infeasibility::ExceedsMax {
                link,
                power,
                p_max: self.p_max,
            }));
        }
        Ok(p)
    }

    pub fn action(&self, kappa: &[f64]) -> Result<Action> {
        let power = self.psi(kappa)?;
        let total_power = power.total();
        Ok(Action { kappa: kappa.to_vec(), power, total_power })
    }

    /// Filters the Cartesian product of per-sensor levels down to the
    /// feasible PSR vectors.
    pub fn enumerate_feasible_actions(&self, levels: &[Vec<f64>]) -> Result<FeasibleActionSet> {
        if levels.len() != self.links() {
            return Err(Error::Config(format!(
                "{} level lists for {} links",
                levels.len(),
                self.links()
            )));
        }
        for (l, lv) in levels.iter().enumerate() {
            let inside = lv.iter().all(|&k| k > 0.0 && k < 1.0);
            let increasing = lv.windows(2).all(|w| w[0] < w[1]);
            if lv.is_empty() || !inside || !increasing {
                return Err(Error::Config(format!(
                    "PSR levels of link {l} must be non-empty, strictly increasing and inside (0, 1)"
                )));
            }
        }

        let mut actions = Vec::new();
        let mut idx = vec![0usize; levels.len()];
        let mut kappa = vec![0.0; levels.len()];
        loop {
            for (k, (lv, &i)) in kappa.iter_mut().zip(levels.iter().zip(&idx)) {
                *k = lv[i];
            }
            match self.action(&kappa) {
                Ok(a) => actions.push(a),
                Err(Error::Infeasible(_)) => {}
                Err(e) => return Err(e),
            }
            // odometer, last link fastest
            let mut pos = levels.len();
            loop {
                if pos == 0 {
                    if actions.is_empty() {
                        return Err(Error::Infeasible(Infeasibility::EmptyActionSet { p_max: self.p_max }));
                    }
                    return Ok(FeasibleActionSet {
                        actions,
                        per_sensor_levels: levels.to_vec(),
                        p_max: self.p_max,
                    });
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < levels[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    /// Feasibility over a `resolution × resolution` grid of the two free
    /// links, with every other link pinned to its `fixed` PSR.
    pub fn feasibility_region_slice(
        &self,
        fixed: &[Option<f64>],
        resolution: usize,
    ) -> Result<Vec<SliceCell>> {
        if fixed.len() != self.links() {
            return Err(Error::Usage(format!(
                "{} PSR assignments for {} links",
                fixed.len(),
                self.links()
            )));
        }
        let free: Vec<usize> = (0..fixed.len()).filter(|&i| fixed[i].is_none()).collect();
        let &[i, j] = free.as_slice() else {
            return Err(Error::Usage(format!(
                "a feasibility slice needs exactly two free links, found {}",
                free.len()
            )));
        };
        if resolution == 0 {
            return Err(Error::Usage("resolution must be positive".into()));
        }
        let axis = uniform_levels(resolution);
        let mut kappa: Vec<f64> = fixed.iter().map(|k| k.unwrap_or(0.5)).collect();
        let mut cells = Vec::with_capacity(resolution * resolution);
        for &ki in &axis {
            for &kj in &axis {
                kappa[i] = ki;
                kappa[j] = kj;
                let feasible = match self.psi(&kappa) {
                    Ok(_) => true,
                    Err(Error::Infeasible(_)) => false,
                    Err(e) => return Err(e),
                };
                cells.push(SliceCell { kappa_i: ki, kappa_j: kj, feasible });
            }
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceCell {
    pub kappa_i: f64,
    pub kappa_j: f64,
    pub feasible: bool,
}

pub const SLICE_CSV_HEADER: &str = "kappa_i,kappa_j,feasible";

pub fn write_slice_csv<W: Write>(mut out: W, cells: &[SliceCell]) -> io::Result<()> {
    writeln!(out, "{SLICE_CSV_HEADER}")?;
    for c in cells {
        writeln!(out, "{},{},{}", c.kappa_i, c.kappa_j, u8::from(c.feasible))?;
    }
    Ok(())
}
