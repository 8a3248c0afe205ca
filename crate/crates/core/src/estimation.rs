//! LTI plants observed through a packet-erasure channel, and the MMSE
//! estimator whose measurement update is gated by the delivery indicator.
//!
//! ```text
//! x̂' = F x̂ + β K (y - H x̂)
//! P' = F P Fᵀ + R1 - β K H P Fᵀ,   K = F P Hᵀ (H P Hᵀ + R2)⁻¹
//! ```

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const SYM_TOL: f64 = 1e-9;

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    m.is_square() && (m - m.transpose()).amax() <= SYM_TOL * scale
}

fn is_psd(m: &DMatrix<f64>) -> bool {
    if !is_symmetric(m) {
        return false;
    }
    if m.nrows() == 1 {
        return m[(0, 0)] >= 0.0;
    }
    let floor = -SYM_TOL * m.amax().max(1.0);
    m.clone().symmetric_eigenvalues().iter().all(|&e| e >= floor)
}

fn cholesky_lower(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if !is_symmetric(m) {
        return Err(Error::domain(format!("{what} is not symmetric")));
    }
    m.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::domain(format!("{what} is not positive definite")))
}

/// One plant and the weights it contributes to the stage cost.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    f: DMatrix<f64>,
    h: DMatrix<f64>,
    r1: DMatrix<f64>,
    r2: DMatrix<f64>,
    m0: DVector<f64>,
    r0: DMatrix<f64>,
    theta: DMatrix<f64>,
    lambda: f64,
    // lower Cholesky factors used for sampling
    r1_l: DMatrix<f64>,
    r2_l: DMatrix<f64>,
    r0_l: DMatrix<f64>,
}

impl SystemModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        f: DMatrix<f64>,
        h: DMatrix<f64>,
        r1: DMatrix<f64>,
        r2: DMatrix<f64>,
        m0: DVector<f64>,
        r0: DMatrix<f64>,
        theta: DMatrix<f64>,
        lambda: f64,
    ) -> Result<Self> {
        let n = f.nrows();
        let p = h.nrows();
        if n == 0 || !f.is_square() {
            return Err(Error::domain("state matrix must be square and non-empty"));
        }
        if p == 0 || h.ncols() != n {
            return Err(Error::domain("output matrix must be p×n"));
        }
        let dims_ok = r1.shape() == (n, n)
            && r2.shape() == (p, p)
            && m0.len() == n
            && r0.shape() == (n, n)
            && theta.shape() == (n, n);
        if !dims_ok {
            return Err(Error::domain("covariance or weight matrix has the wrong shape"));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::domain("trade-off weight must be non-negative"));
        }
        let r1_l = cholesky_lower(&r1, "R1")?;
        let r2_l = cholesky_lower(&r2, "R2")?;
        let r0_l = cholesky_lower(&r0, "R0")?;
        cholesky_lower(&theta, "Θ")?;

        // observability: rank [H; HF; …; HF^{n-1}] = n
        let mut obs = DMatrix::zeros(n * p, n);
        let mut block = h.clone();
        for k in 0..n {
            obs.view_mut((k * p, 0), (p, n)).copy_from(&block);
            block = &block * &f;
        }
        if obs.rank(1e-10 * obs.amax().max(1.0)) < n {
            return Err(Error::domain("(F, H) is not observable"));
        }

        Ok(Self { f, h, r1, r2, m0, r0, theta, lambda, r1_l, r2_l, r0_l })
    }

    /// Scalar plant with `m0 = 0`, `R0 = 1`, `Θ = 1` and `λ = 0.01`.
    pub fn scalar(f: f64, h: f64, r1: f64, r2: f64) -> Result<Self> {
        let m = |v: f64| DMatrix::from_element(1, 1, v);
        Self::new(m(f), m(h), m(r1), m(r2), DVector::zeros(1), m(1.0), m(1.0), 0.01)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::domain("trade-off weight must be non-negative"));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn with_initial(self, m0: DVector<f64>, r0: DMatrix<f64>) -> Result<Self> {
        Self::new(self.f, self.h, self.r1, self.r2, m0, r0, self.theta, self.lambda)
    }

    pub fn with_theta(self, theta: DMatrix<f64>) -> Result<Self> {
        Self::new(self.f, self.h, self.r1, self.r2, self.m0, self.r0, theta, self.lambda)
    }

    pub fn state_dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }
    pub fn r1(&self) -> &DMatrix<f64> {
        &self.r1
    }
    pub fn r2(&self) -> &DMatrix<f64> {
        &self.r2
    }
    pub fn m0(&self) -> &DVector<f64> {
        &self.m0
    }
    pub fn r0(&self) -> &DMatrix<f64> {
        &self.r0
    }
    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `tr(Θ P)`
    pub fn weighted_trace(&self, p: &DMatrix<f64>) -> f64 {
        (&self.theta * p).trace()
    }

    /// Draws `x0 ~ N(m0, R0)`.
    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        &self.m0 + gaussian(&self.r0_l, rng)
    }
}

fn gaussian<R: Rng + ?Sized>(lower: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    let z = DVector::from_fn(lower.nrows(), |_, _| rng.sample::<f64, _>(StandardNormal));
    lower * z
}

/// Estimate and error covariance held by one remote estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub xhat: DVector<f64>,
    pub p: DMatrix<f64>,
}

impl EstimatorState {
    pub fn initial(model: &SystemModel) -> Self {
        Self { xhat: model.m0.clone(), p: model.r0.clone() }
    }

    /// Advances both the estimate and the covariance by one step.
    pub fn step(&self, y: Option<&DVector<f64>>, delivered: bool, model: &SystemModel) -> Result<Self> {
        Ok(Self {
            xhat: estimate_update(&self.xhat, &self.p, y, delivered, model)?,
            p: covariance_update(&self.p, delivered, model)?,
        })
    }
}

pub fn kalman_gain(p: &DMatrix<f64>, model: &SystemModel) -> Result<DMatrix<f64>> {
    if p.shape() != model.f.shape() || !is_psd(p) {
        return Err(Error::domain("error covariance must be a PSD n×n matrix"));
    }
    let ph_t = p * model.h.transpose();
    let innovation = &model.h * &ph_t + &model.r2;
    let chol = innovation
        .cholesky()
        .ok_or_else(|| Error::domain("innovation covariance is not positive definite"))?;
    // K = F P Hᵀ S⁻¹  ⇔  Kᵀ = S⁻¹ (F P Hᵀ)ᵀ
    let k_t = chol.solve(&(&model.f * ph_t).transpose());
    Ok(k_t.transpose())
}

/// Error covariance after one step; `delivered` is the erasure outcome β.
pub fn covariance_update(p: &DMatrix<f64>, delivered: bool, model: &SystemModel) -> Result<DMatrix<f64>> {
    let f = &model.f;
    let mut next = f * p * f.transpose() + &model.r1;
    if delivered {
        let k = kalman_gain(p, model)?;
        next -= k * &model.h * p * f.transpose();
    } else if p.shape() != f.shape() || !is_psd(p) {
        return Err(Error::domain("error covariance must be a PSD n×n matrix"));
    }
    Ok((&next + next.transpose()) * 0.5)
}

pub fn estimate_update(
    xhat: &DVector<f64>,
    p: &DMatrix<f64>,
    y: Option<&DVector<f64>>,
    delivered: bool,
    model: &SystemModel,
) -> Result<DVector<f64>> {
    let predicted = &model.f * xhat;
    if !delivered {
        return Ok(predicted);
    }
    let y = y.ok_or_else(|| Error::Usage("a delivered packet must carry a measurement".into()))?;
    if y.len() != model.output_dim() {
        return Err(Error::domain("measurement has the wrong dimension"));
    }
    let k = kalman_gain(p, model)?;
    Ok(predicted + k * (y - &model.h * xhat))
}

/// Samples `y = H x + v` and `x' = F x + w`; returns `(x', y)`.
pub fn plant_step<R: Rng + ?Sized>(
    x: &DVector<f64>,
    model: &SystemModel,
    rng: &mut R,
) -> (DVector<f64>, DVector<f64>) {
    let w = gaussian(&model.r1_l, rng);
    let v = gaussian(&model.r2_l, rng);
    let y = &model.h * x + v;
    (&model.f * x + w, y)
}

/// `Σ_k ‖x_k − x̂_k‖²_Θ` over one realised trajectory.
pub fn distortion(states: &[DVector<f64>], estimates: &[DVector<f64>], theta: &DMatrix<f64>) -> Result<f64> {
    if states.len() != estimates.len() {
        return Err(Error::domain("state and estimate sequences differ in length"));
    }
    Ok(states
        .iter()
        .zip(estimates)
        .map(|(x, xh)| {
            let e = x - xh;
            (e.transpose() * theta * &e)[(0, 0)]
        })
        .sum())
}

pub const RICCATI_TOL: f64 = 1e-12;
const RICCATI_MAX_ITER: usize = 1_000_000;

/// Steady-state covariance of the lossless filter, by iterating the
/// delivered-packet update from `R0`.
pub fn riccati_fixed_point(model: &SystemModel) -> Result<DMatrix<f64>> {
    riccati_fixed_point_from(model, &model.r0)
}

pub fn riccati_fixed_point_from(model: &SystemModel, start: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut p = start.clone();
    for _ in 0..RICCATI_MAX_ITER {
        let next = covariance_update(&p, true, model)?;
        let diff = (&next - &p).amax();
        p = next;
        if diff < RICCATI_TOL * p.amax().max(1.0) {
            return Ok(p);
        }
    }
    Err(Error::NoConvergence(format!(
        "Riccati iteration did not settle within {RICCATI_MAX_ITER} steps"
    )))
}
