use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::channel::{Point, Topology};
use crate::error::{Error, Result};

/// Parametric deployment geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    /// Co-located receivers at the origin, transmitters on evenly spaced
    /// rays. The reference link sits at `d1`, every other link at `d2`.
    Circular { links: usize, d1: f64, d2: f64 },
    /// Pairs spaced `d2` apart along a line, each transmitter `d1` from its
    /// receiver.
    AssemblyLine { links: usize, d1: f64, d2: f64 },
    Explicit { tx: Vec<Point>, rx: Vec<Point> },
}

/// Zero-based index of the circular topology's reference link: the middle
/// link, rounding up.
pub fn reference_link(links: usize) -> usize {
    links.div_ceil(2).saturating_sub(1)
}

impl TopologySpec {
    pub fn links(&self) -> usize {
        match self {
            Self::Circular { links, .. } | Self::AssemblyLine { links, .. } => *links,
            Self::Explicit { tx, .. } => tx.len(),
        }
    }

    /// Same geometry with `d2 = ratio · d1`.
    pub fn with_distance_ratio(&self, ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::domain(format!("distance ratio must be positive, got {ratio}")));
        }
        match *self {
            Self::Circular { links, d1, .. } => Ok(Self::Circular { links, d1, d2: ratio * d1 }),
            Self::AssemblyLine { links, d1, .. } => Ok(Self::AssemblyLine { links, d1, d2: ratio * d1 }),
            Self::Explicit { .. } => Err(Error::Config("an explicit topology has no distance ratio".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Circular { links, d1, d2 } | Self::AssemblyLine { links, d1, d2 } => {
                if links == 0 {
                    return Err(Error::Config("topology needs at least one link".into()));
                }
                if !(d1.is_finite() && d1 > 0.0 && d2.is_finite() && d2 > 0.0) {
                    return Err(Error::Config(format!("distances must be positive, got d1={d1}, d2={d2}")));
                }
                Ok(())
            }
            Self::Explicit { ref tx, ref rx } => {
                if tx.is_empty() || tx.len() != rx.len() {
                    return Err(Error::Config("explicit topology needs matching, non-empty tx and rx lists".into()));
                }
                Ok(())
            }
        }
    }
}

pub fn build_topology(spec: &TopologySpec) -> Result<Topology> {
    spec.validate()?;
    match *spec {
        TopologySpec::Circular { links, d1, d2 } => {
            let reference = reference_link(links);
            let tx = (0..links)
                .map(|l| {
                    let r = if l == reference { d1 } else { d2 };
                    let angle = TAU * l as f64 / links as f64;
                    [r * angle.cos(), r * angle.sin()]
                })
                .collect();
            Topology::new(tx, vec![[0.0, 0.0]; links])
        }
        TopologySpec::AssemblyLine { links, d1, d2 } => {
            let tx = (0..links).map(|l| [l as f64 * d2, 0.0]).collect();
            let rx = (0..links).map(|l| [l as f64 * d2, d1]).collect();
            Topology::new(tx, rx)
        }
        TopologySpec::Explicit { ref tx, ref rx } => Topology::new(tx.clone(), rx.clone()),
    }
}
