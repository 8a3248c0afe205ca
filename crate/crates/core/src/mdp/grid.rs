use crate::error::{Error, Result};

/// Product grid over per-system scalar error covariances.
///
/// Points are numbered in row-major order: the last system varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    levels: Vec<Vec<f64>>,
    strides: Vec<usize>,
    len: usize,
}

/// Multilinear interpolation weights of one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub corners: Vec<(usize, f64)>,
    /// Some coordinate fell outside the grid and was clamped.
    pub saturated: bool,
}

impl Stencil {
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.corners.iter().map(|&(i, w)| w * values[i]).sum()
    }
}

impl StateGrid {
    pub fn new(levels: Vec<Vec<f64>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Config("state grid needs at least one system".into()));
        }
        for (l, lv) in levels.iter().enumerate() {
            let ok = !lv.is_empty()
                && lv.iter().all(|v| v.is_finite())
                && lv[0] >= 0.0
                && lv.windows(2).all(|w| w[0] < w[1]);
            if !ok {
                return Err(Error::Config(format!(
                    "covariance levels of system {l} must be non-negative and strictly increasing"
                )));
            }
        }
        let mut strides = vec![1; levels.len()];
        for l in (0..levels.len() - 1).rev() {
            strides[l] = strides[l + 1] * levels[l + 1].len();
        }
        let len = strides[0] * levels[0].len();
        Ok(Self { levels, strides, len })
    }

    /// `count` evenly spaced levels on `[lo, hi]` for each of `systems`.
    pub fn uniform(systems: usize, count: usize, lo: f64, hi: f64) -> Result<Self> {
        if count == 0 || !(lo >= 0.0 && hi > lo) && count > 1 {
            return Err(Error::Config(format!("cannot place {count} levels on [{lo}, {hi}]")));
        }
        let lv: Vec<f64> = if count == 1 {
            vec![lo]
        } else {
            (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect()
        };
        Self::new(vec![lv; systems])
    }

    pub fn systems(&self) -> usize {
        self.levels.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn coords(&self, index: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.levels)
            .map(|(&s, lv)| (index / s) % lv.len())
            .collect()
    }

    pub fn index_of(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(&c, &s)| c * s).sum()
    }

    /// Covariance vector at a grid index.
    pub fn point(&self, index: usize) -> Vec<f64> {
        self.coords(index)
            .iter()
            .zip(&self.levels)
            .map(|(&c, lv)| lv[c])
            .collect()
    }

    /// Grid index closest to `s`, per coordinate, clamped to the grid.
    /// Exact midpoints resolve to the lower level.
    pub fn nearest(&self, s: &[f64]) -> usize {
        let coords: Vec<usize> = s
            .iter()
            .zip(&self.levels)
            .map(|(&x, lv)| {
                let upper = lv.partition_point(|&v| v < x);
                if upper == 0 {
                    0
                } else if upper == lv.len() {
                    lv.len() - 1
                } else if x - lv[upper - 1] <= lv[upper] - x {
                    upper - 1
                } else {
                    upper
                }
            })
            .collect();
        self.index_of(&coords)
    }

    /// Multilinear interpolation weights for `s`; coordinates outside the
    /// grid are clamped to the boundary.
    pub fn stencil(&self, s: &[f64]) -> Stencil {
        debug_assert_eq!(s.len(), self.systems());
        let mut saturated = false;
        // per dimension: (lower index, weight of upper neighbour)
        let mut segs = Vec::with_capacity(s.len());
        for (&x, lv) in s.iter().zip(&self.levels) {
            let last = lv.len() - 1;
            if x <= lv[0] || last == 0 {
                saturated |= x < lv[0] || x > lv[last];
                segs.push((0, 0.0));
            } else if x >= lv[last] {
                saturated |= x > lv[last];
                segs.push((last, 0.0));
            } else {
                let hi = lv.partition_point(|&v| v <= x);
                let lo = hi - 1;
                segs.push((lo, (x - lv[lo]) / (lv[hi] - lv[lo])));
            }
        }
        let mut corners = Vec::with_capacity(1 << s.len());
        for mask in 0..(1usize << s.len()) {
            let mut w = 1.0;
            let mut idx = 0;
            for (d, &(lo, t)) in segs.iter().enumerate() {
                let up = mask >> d & 1 == 1;
                w *= if up { t } else { 1.0 - t };
                idx += (lo + usize::from(up)) * self.strides[d];
            }
            if w != 0.0 {
                corners.push((idx, w));
            }
        }
        Stencil { corners, saturated }
    }
}

/// Value table over a [`StateGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub grid: StateGrid,
    pub values: Vec<f64>,
}

impl ValueFunction {
    pub fn zeros(grid: StateGrid) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn new(grid: StateGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::domain("value table size differs from the grid"));
        }
        Ok(Self { grid, values })
    }
}

/// Multilinear interpolation of `j` at the covariance vector `s`.
pub fn interpolate_value(j: &ValueFunction, s: &[f64]) -> f64 {
    j.grid.stencil(s).apply(&j.values)
}
