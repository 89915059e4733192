//! Radial profiles: sampled nonnegative functions of the radius used to build
//! interaction potentials.
//!
//! Two representations are supported, piecewise-constant and piecewise-linear.
//! The square barrier/well family is piecewise-constant with a single break.

use serde::{Deserialize, Serialize};

/// A sampled radial function on a finite interval, zero outside of it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    /// `values[i]` on `[breaks[i], breaks[i+1])`; `breaks` strictly increasing,
    /// `breaks.len() == values.len() + 1`.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// Linear interpolation of `(nodes[i], values[i])`; `nodes` strictly
    /// increasing.
    PiecewiseLinear { nodes: Vec<f64>, values: Vec<f64> },
}

impl RadialProfile {
    /// Constant value `v` on `[lo, hi)`.
    pub fn constant(lo: f64, hi: f64, v: f64) -> Self {
        RadialProfile::PiecewiseConstant {
            breaks: vec![lo, hi],
            values: vec![v],
        }
    }

    /// Identically zero profile (empty support).
    pub fn zero() -> Self {
        RadialProfile::PiecewiseConstant {
            breaks: vec![0.0],
            values: vec![],
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            RadialProfile::PiecewiseConstant { breaks, values } => {
                breaks.len() == values.len() + 1
                    && breaks.windows(2).all(|w| w[0] <= w[1])
                    && values.iter().all(|v| v.is_finite())
            }
            RadialProfile::PiecewiseLinear { nodes, values } => {
                nodes.len() == values.len()
                    && nodes.len() >= 2
                    && nodes.windows(2).all(|w| w[0] < w[1])
                    && values.iter().all(|v| v.is_finite())
            }
        }
    }

    /// Value at radius `r`; right-continuous at breakpoints, zero outside the
    /// covered interval.
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialProfile::PiecewiseConstant { breaks, values } => {
                if values.is_empty() || r < breaks[0] || r >= breaks[breaks.len() - 1] {
                    return 0.0;
                }
                // partition_point: first break strictly greater than r
                let i = breaks.partition_point(|&b| b <= r);
                values[i - 1]
            }
            RadialProfile::PiecewiseLinear { nodes, values } => {
                if r < nodes[0] || r > nodes[nodes.len() - 1] {
                    return 0.0;
                }
                let i = nodes.partition_point(|&b| b <= r).min(nodes.len() - 1);
                if i == 0 {
                    return values[0];
                }
                let (r0, r1) = (nodes[i - 1], nodes[i]);
                let t = (r - r0) / (r1 - r0);
                values[i - 1] * (1.0 - t) + values[i] * t
            }
        }
    }

    /// Radii where the profile is not smooth (integration must not step
    /// across these).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialProfile::PiecewiseConstant { breaks, .. } => breaks.clone(),
            RadialProfile::PiecewiseLinear { nodes, .. } => nodes.clone(),
        }
    }

    /// Supremum of the profile over its support.
    pub fn sup(&self) -> f64 {
        match self {
            RadialProfile::PiecewiseConstant { values, .. } => {
                values.iter().cloned().fold(0.0, f64::max)
            }
            RadialProfile::PiecewiseLinear { values, .. } => {
                values.iter().cloned().fold(0.0, f64::max)
            }
        }
    }

    /// Infimum of the profile over `[lo, hi]` (sampled exactly at nodes and
    /// endpoints, which is exact for both representations).
    pub fn inf_on(&self, lo: f64, hi: f64) -> f64 {
        let mut m = f64::INFINITY;
        let mut probe = |r: f64| {
            if r >= lo && r <= hi {
                m = m.min(self.eval(r));
            }
        };
        probe(lo);
        probe(hi);
        for b in self.breakpoints() {
            probe(b);
            // value just right of a break catches right-continuous jumps down
            probe(b + (hi - lo) * 1e-12);
        }
        m
    }

    pub fn min_value(&self) -> f64 {
        match self {
            RadialProfile::PiecewiseConstant { values, .. } => {
                values.iter().cloned().fold(f64::INFINITY, f64::min)
            }
            RadialProfile::PiecewiseLinear { values, .. } => {
                values.iter().cloned().fold(f64::INFINITY, f64::min)
            }
        }
    }
}
