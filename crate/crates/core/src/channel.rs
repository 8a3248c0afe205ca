//! Average wireless propagation between sensor transmitters and estimator
//! receivers.
//!
//! A link's channel coefficient is the log-distance path loss divided by the
//! mean of the log-normal fading term. Only this average coefficient is
//! modelled; individual fading realisations are never sampled.
//!
//! The O-QPSK/DSSS packet success ratio of a `W`-bit packet at SINR `γ` is
//! `κ = [1 - Q(4√γ)]^W`, where `Q` is the standard Gaussian tail.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Largest admissible channel coefficient. Shorter-than-physical distances
/// are clamped here instead of rejected.
pub const MAX_COEFFICIENT: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationParams {
    pub frequency_hz: f64,
    pub pathloss_exponent: f64,
    /// Variance of the dB-domain shadowing Gaussian (dB²).
    pub shadowing_variance_db: f64,
    pub reference_distance_m: f64,
}

impl Default for PropagationParams {
    /// Channel 26 of the 2.4 GHz ISM band in an indoor environment.
    fn default() -> Self {
        Self {
            frequency_hz: 2.48e9,
            pathloss_exponent: 3.3,
            shadowing_variance_db: 2.75,
            reference_distance_m: 1.0,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.frequency_hz) {
            return Err(Error::domain("frequency must be positive"));
        }
        if !ok(self.pathloss_exponent) {
            return Err(Error::domain("path-loss exponent must be positive"));
        }
        if !ok(self.reference_distance_m) {
            return Err(Error::domain("reference distance must be positive"));
        }
        if !(self.shadowing_variance_db.is_finite() && self.shadowing_variance_db >= 0.0) {
            return Err(Error::domain("shadowing variance must be non-negative"));
        }
        Ok(())
    }
}

/// Log-distance path loss `(c0 / (4π f d0))² (d0 / d)^η` as a linear gain.
pub fn path_loss(distance_m: f64, params: &PropagationParams) -> Result<f64> {
    params.validate()?;
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(Error::domain(format!("distance must be positive, got {distance_m}")));
    }
    let d0 = params.reference_distance_m;
    let free_space = (SPEED_OF_LIGHT / (4.0 * PI * params.frequency_hz * d0)).powi(2);
    Ok(free_space * (d0 / distance_m).powf(params.pathloss_exponent))
}

/// Mean of the log-normal fading term for a dB-domain variance.
pub fn shadowing_mean(shadowing_variance_db: f64) -> Result<f64> {
    if !(shadowing_variance_db.is_finite() && shadowing_variance_db >= 0.0) {
        return Err(Error::domain("shadowing variance must be non-negative"));
    }
    let ln_variance = (std::f64::consts::LN_10 / 10.0).powi(2) * shadowing_variance_db;
    Ok((ln_variance / 2.0).exp())
}

/// Coefficient plus whether it had to be clamped below one.
fn coefficient_with_clamp(distance_m: f64, params: &PropagationParams) -> Result<(f64, bool)> {
    let q = path_loss(distance_m, params)? / shadowing_mean(params.shadowing_variance_db)?;
    if q >= MAX_COEFFICIENT {
        Ok((MAX_COEFFICIENT, true))
    } else {
        Ok((q, false))
    }
}

/// Average channel coefficient at a given distance, always in `(0, 1)`.
pub fn channel_coefficient(distance_m: f64, params: &PropagationParams) -> Result<f64> {
    coefficient_with_clamp(distance_m, params).map(|(q, _)| q)
}

pub type Point = [f64; 2];

fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Transmitter and receiver positions of `L` links; link `ℓ` is the pair
/// `(tx[ℓ], rx[ℓ])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub tx_positions: Vec<Point>,
    pub rx_positions: Vec<Point>,
}

impl Topology {
    pub fn new(tx_positions: Vec<Point>, rx_positions: Vec<Point>) -> Result<Self> {
        let topo = Self { tx_positions, rx_positions };
        topo.validate()?;
        Ok(topo)
    }

    pub fn links(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.tx_positions.len();
        if l == 0 || l != self.rx_positions.len() {
            return Err(Error::domain(format!(
                "topology needs equal, non-zero tx/rx counts (got {l} and {})",
                self.rx_positions.len()
            )));
        }
        for (rx, &r) in self.rx_positions.iter().enumerate() {
            for (tx, &t) in self.tx_positions.iter().enumerate() {
                let d = distance(t, r);
                if !(d.is_finite() && d > 0.0) {
                    return Err(Error::domain(format!(
                        "transmitter {tx} coincides with receiver {rx}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Distance from transmitter `tx` to receiver `rx`.
    pub fn distance(&self, rx: usize, tx: usize) -> f64 {
        distance(self.tx_positions[tx], self.rx_positions[rx])
    }
}

/// `L×L` average gains; entry `(ℓ, m)` couples transmitter `m` into
/// receiver `ℓ`, so the diagonal holds each link's direct gain.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    q: DMatrix<f64>,
    clamped: usize,
}

impl GainMatrix {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if q.nrows() == 0 || !q.is_square() {
            return Err(Error::domain("gain matrix must be square and non-empty"));
        }
        if let Some(bad) = q.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::domain(format!("gain {bad} outside (0, 1)")));
        }
        Ok(Self { q, clamped: 0 })
    }

    /// Row-major convenience constructor.
    pub fn from_rows(links: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != links * links {
            return Err(Error::domain("gain matrix data has the wrong length"));
        }
        Self::new(DMatrix::from_row_slice(links, links, rows))
    }

    pub fn links(&self) -> usize {
        self.q.nrows()
    }

    /// Gain from transmitter `tx` into receiver `rx`.
    #[inline]
    pub fn gain(&self, rx: usize, tx: usize) -> f64 {
        self.q[(rx, tx)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Entries that were clamped below one while building from a topology.
    pub fn clamped_entries(&self) -> usize {
        self.clamped
    }
}

pub fn build_gain_matrix(topology: &Topology, params: &PropagationParams) -> Result<GainMatrix> {
    topology.validate()?;
    let l = topology.links();
    let mut q = DMatrix::zeros(l, l);
    let mut clamped = 0;
    for rx in 0..l {
        for tx in 0..l {
            let (g, was_clamped) = coefficient_with_clamp(topology.distance(rx, tx), params)?;
            clamped += usize::from(was_clamped);
            q[(rx, tx)] = g;
        }
    }
    Ok(GainMatrix { q, clamped })
}

/// Per-receiver AWGN powers in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseVector(Vec<f64>);

impl NoiseVector {
    pub fn new(n: Vec<f64>) -> Result<Self> {
        if n.is_empty() || n.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::domain("noise powers must be positive"));
        }
        Ok(Self(n))
    }

    pub fn uniform(links: usize, watts: f64) -> Result<Self> {
        Self::new(vec![watts; links])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// SINR at receiver `link` for the transmit powers `p` (watts).
pub fn sinr(p: &[f64], q: &GainMatrix, n: &NoiseVector, link: usize) -> f64 {
    let interference: f64 = p
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != link)
        .map(|(m, &pm)| pm * q.gain(link, m))
        .sum();
    p[link] * q.gain(link, link) / (interference + n.as_slice()[link])
}

/// Gaussian tail probability `P[N(0,1) > x]`.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`gaussian_tail`] for `p` in `(0, 1)`.
///
/// Starts from the inverse complementary error function and polishes with
/// Newton steps on the tail itself; falls back to bisection if the polish
/// misbehaves.
pub fn gaussian_tail_inv(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let mut x = SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..3 {
        let step = (gaussian_tail(x) - p) / std_normal_pdf(x);
        if !step.is_finite() {
            break;
        }
        x += step;
    }
    let rel = ((gaussian_tail(x) - p) / p).abs();
    if x.is_finite() && rel < 1e-12 {
        return x;
    }
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gaussian_tail(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Packet success ratio of a `bits`-long packet at SINR `gamma`.
pub fn psr_from_sinr(gamma: f64, bits: u32) -> f64 {
    let bit_error = gaussian_tail(4.0 * gamma.max(0.0).sqrt());
    (f64::from(bits) * (-bit_error).ln_1p()).exp()
}

/// Minimum SINR achieving packet success ratio `kappa`.
///
/// Ratios at or below `0.5^W` are already met at zero SINR.
pub fn sinr_from_psr(kappa: f64, bits: u32) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::domain(format!("PSR must lie in (0, 1), got {kappa}")));
    }
    if bits == 0 {
        return Err(Error::domain("packet length must be at least one bit"));
    }
    // 1 - κ^(1/W), computed without cancellation
    let bit_error = -(kappa.ln() / f64::from(bits)).exp_m1();
    if bit_error >= 0.5 {
        return Ok(0.0);
    }
    let x = gaussian_tail_inv(bit_error);
    Ok(x * x / 16.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    // Reference values below were evaluated with 40-digit arithmetic.
    const FREE_SPACE_1M: f64 = 9.253761799465808e-5;
    const MU_275: f64 = 1.0756241513702989;
    const GAMMA_099_W120: f64 = 0.8852830684829577;

    #[test]
    fn path_loss_reference_distance() {
        let p = PropagationParams::default();
        assert!(close(path_loss(1.0, &p).unwrap(), FREE_SPACE_1M, 1e-12));
        let eta5 = PropagationParams { pathloss_exponent: 5.0, ..p };
        assert!(close(path_loss(1.0, &eta5).unwrap(), FREE_SPACE_1M, 1e-12));
    }

    #[test]
    fn path_loss_doubling() {
        let p = PropagationParams::default();
        let ratio = path_loss(14.0, &p).unwrap() / path_loss(7.0, &p).unwrap();
        assert!(close(ratio, 0.10153154954452945, 1e-12));
    }

    #[test]
    fn path_loss_rejects_bad_distance() {
        let p = PropagationParams::default();
        assert!(matches!(path_loss(0.0, &p), Err(Error::Domain(_))));
        assert!(matches!(path_loss(-3.0, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn shadowing_mean_values() {
        assert_eq!(shadowing_mean(0.0).unwrap(), 1.0);
        let unit = 2.0 * (10.0 / std::f64::consts::LN_10).powi(2);
        assert!(close(shadowing_mean(unit).unwrap(), std::f64::consts::E, 1e-14));
        assert!(close(shadowing_mean(2.75).unwrap(), MU_275, 1e-13));
        assert!(shadowing_mean(-1.0).is_err());
    }

    #[test]
    fn coefficient_composes() {
        let p = PropagationParams::default();
        let q = channel_coefficient(10.0, &p).unwrap();
        assert!(close(q, 4.311791689514924e-8, 1e-12));
        let no_fade = PropagationParams { shadowing_variance_db: 0.0, ..p };
        assert_eq!(channel_coefficient(3.0, &no_fade).unwrap(), path_loss(3.0, &no_fade).unwrap());
    }

    #[test]
    fn coefficient_clamped_at_tiny_distance() {
        let p = PropagationParams::default();
        assert_eq!(channel_coefficient(1e-6, &p).unwrap(), MAX_COEFFICIENT);
        let topo = Topology::new(vec![[0.0, 0.0]], vec![[1e-6, 0.0]]).unwrap();
        let g = build_gain_matrix(&topo, &p).unwrap();
        assert_eq!(g.clamped_entries(), 1);
    }

    #[test]
    fn gain_matrix_single_link() {
        let p = PropagationParams::default();
        let topo = Topology::new(vec![[0.0, 0.0]], vec![[0.0, 7.0]]).unwrap();
        let g = build_gain_matrix(&topo, &p).unwrap();
        assert_eq!(g.links(), 1);
        assert_eq!(g.gain(0, 0), channel_coefficient(7.0, &p).unwrap());
    }

    #[test]
    fn gain_matrix_equal_radii_symmetric() {
        let p = PropagationParams::default();
        let ring = |k: usize| {
            let a = 2.0 * PI * k as f64 / 3.0;
            [10.0 * a.cos(), 10.0 * a.sin()]
        };
        let topo = Topology::new((0..3).map(ring).collect(), vec![[0.0, 0.0]; 3]).unwrap();
        let g = build_gain_matrix(&topo, &p).unwrap();
        let d = g.gain(0, 0);
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(g.gain(i, j), d, 1e-12));
            }
        }
    }

    #[test]
    fn gain_matrix_relabeling() {
        let p = PropagationParams::default();
        let tx = vec![[0.0, 0.0], [4.0, 0.0], [9.0, 1.0]];
        let rx = vec![[0.0, 5.0], [4.0, 7.0], [8.0, 6.0]];
        let perm = [2usize, 0, 1];
        let g = build_gain_matrix(&Topology::new(tx.clone(), rx.clone()).unwrap(), &p).unwrap();
        let tx_p = perm.iter().map(|&i| tx[i]).collect();
        let rx_p = perm.iter().map(|&i| rx[i]).collect();
        let gp = build_gain_matrix(&Topology::new(tx_p, rx_p).unwrap(), &p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(gp.gain(i, j), g.gain(perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn topology_rejects_coincident() {
        assert!(Topology::new(vec![[1.0, 1.0]], vec![[1.0, 1.0]]).is_err());
        assert!(Topology::new(vec![[0.0, 0.0]], vec![]).is_err());
    }

    #[test]
    fn sinr_examples() {
        let q = GainMatrix::from_rows(1, &[1e-8]).unwrap();
        let n = NoiseVector::uniform(1, 1e-13).unwrap();
        assert!(close(sinr(&[1e-4], &q, &n, 0), 10.0, 1e-12));
        assert_eq!(sinr(&[0.0], &q, &n, 0), 0.0);

        let q2 = GainMatrix::from_rows(2, &[4e-8, 1e-8, 1e-8, 4e-8]).unwrap();
        let n2 = NoiseVector::uniform(2, 1e-13).unwrap();
        // 2e-5 * 4e-8 / (2e-5 * 1e-8 + 1e-13) = 8e-13 / 3e-13
        let g = sinr(&[2e-5, 2e-5], &q2, &n2, 1);
        assert!(close(g, 8.0 / 3.0, 1e-12));
    }

    #[test]
    fn psr_boundaries() {
        assert!(close(psr_from_sinr(0.0, 120), 7.52316384526264e-37, 1e-12));
        assert!(psr_from_sinr(1e6, 120) == 1.0);
        assert_eq!(sinr_from_psr(0.5f64.powi(120), 120).unwrap(), 0.0);
    }

    #[test]
    fn psr_099_sinr() {
        // independent bisection on the forward map
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if psr_from_sinr(mid, 120) < 0.99 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(close(lo, GAMMA_099_W120, 1e-10));
        assert!(close(sinr_from_psr(0.99, 120).unwrap(), GAMMA_099_W120, 1e-10));
    }

    #[test]
    fn sinr_from_psr_domain() {
        for bad in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(sinr_from_psr(bad, 120), Err(Error::Domain(_))));
        }
        assert!(sinr_from_psr(0.5, 0).is_err());
    }

    #[test]
    fn round_trip_examples() {
        for k in [0.01, 0.5, 0.9, 0.999] {
            let g = sinr_from_psr(k, 120).unwrap();
            assert!((psr_from_sinr(g, 120) - k).abs() <= 1e-9, "kappa {k}");
        }
    }

    #[test]
    fn tail_inverse_accuracy() {
        for p in [1e-300, 1e-20, 1e-9, 0.01, 0.3, 0.5, 0.7, 0.999_999] {
            let x = gaussian_tail_inv(p);
            assert!(close(gaussian_tail(x), p, 1e-12), "p {p}");
        }
    }

    proptest! {
        #[test]
        fn path_loss_decreasing(d in 0.1f64..500.0, extra in 1e-3f64..50.0) {
            let p = PropagationParams::default();
            prop_assert!(path_loss(d + extra, &p).unwrap() < path_loss(d, &p).unwrap());
            prop_assert!(channel_coefficient(d + extra, &p).unwrap() < channel_coefficient(d, &p).unwrap());
        }

        #[test]
        fn psr_increasing_and_bounded(g in 0.0f64..4.0, dg in 1e-3f64..1.0, bits in 1u32..2048) {
            let a = psr_from_sinr(g, bits);
            let b = psr_from_sinr(g + dg, bits);
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b > a || b == 1.0);
        }

        // Only PSRs above 0.5^W are reachable with non-negative SINR.
        #[test]
        fn psr_round_trip(k in 0.01f64..0.999, w in prop::sample::select(vec![1u32, 120, 1024])) {
            prop_assume!(k > 0.5f64.powi(w as i32));
            let g = sinr_from_psr(k, w).unwrap();
            prop_assert!((psr_from_sinr(g, w) - k).abs() <= 1e-9);
        }

        #[test]
        fn sinr_scale_invariant(p1 in 1e-7f64..1e-2, p2 in 1e-7f64..1e-2, c in 1e-3f64..1e3) {
            let q = GainMatrix::from_rows(2, &[3e-8, 1e-8, 2e-8, 5e-8]).unwrap();
            let n = NoiseVector::new(vec![1e-13, 2e-13]).unwrap();
            let nc = NoiseVector::new(vec![c * 1e-13, c * 2e-13]).unwrap();
            for link in 0..2 {
                let a = sinr(&[p1, p2], &q, &n, link);
                let b = sinr(&[c * p1, c * p2], &q, &nc, link);
                prop_assert!((a - b).abs() <= 1e-12 * a);
            }
        }
    }
}
