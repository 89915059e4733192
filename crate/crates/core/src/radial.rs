//! Radial grids, a fixed-step RK4 integrator for zero-energy radial problems,
//! and composite Simpson quadrature.
//!
//! Grids are piecewise uniform and aligned with the breakpoints of the
//! potential, so the integrator never steps across a jump. Each uniform
//! segment carries an even number of intervals, which keeps composite Simpson
//! applicable segment by segment.

use crate::error::{CoreError, Result};

/// A radial potential with known support and smoothness breaks.
pub trait RadialPotential: Sync {
    fn eval(&self, r: f64) -> f64;
    /// Radius beyond which the potential vanishes identically.
    fn support_radius(&self) -> f64;
    /// Radii at which the potential may jump or kink, in increasing order.
    fn breakpoints(&self) -> Vec<f64>;
}

/// Radial potential given by a plain closure (used by tests and by callers
/// that already sampled their potential).
pub struct FnPotential<F: Fn(f64) -> f64 + Sync> {
    pub f: F,
    pub support: f64,
    pub breaks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> RadialPotential for FnPotential<F> {
    fn eval(&self, r: f64) -> f64 {
        (self.f)(r)
    }
    fn support_radius(&self) -> f64 {
        self.support
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// Piecewise-uniform radial grid on `[0, r_max]`.
///
/// `spacing` is the nominal (largest) step; segments between forced
/// breakpoints refine below it so that every breakpoint is a grid node.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    r_points: Vec<f64>,
    /// Indices that end each uniform segment (`segment_ends[k]` is the last
    /// node of segment `k`); the first segment starts at node 0.
    segment_ends: Vec<usize>,
    spacing: f64,
}

impl RadialGrid {
    /// Uniform grid with `n` intervals on `[0, r_max]` (`n` rounded up to even).
    pub fn uniform(r_max: f64, n: usize) -> Self {
        Self::aligned(r_max, r_max / n.max(2) as f64, &[])
    }

    /// Grid on `[0, r_max]` with steps at most `h_target`, with every given
    /// breakpoint inside `(0, r_max)` placed exactly on a node.
    pub fn aligned(r_max: f64, h_target: f64, breakpoints: &[f64]) -> Self {
        assert!(r_max > 0.0 && h_target > 0.0);
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > 1e-300 && b < r_max * (1.0 - 1e-12))
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() <= r_max * 1e-13);
        cuts.push(r_max);

        let mut r_points = vec![0.0];
        let mut segment_ends = Vec::with_capacity(cuts.len());
        let mut lo = 0.0;
        let mut max_h: f64 = 0.0;
        for &hi in &cuts {
            let len = hi - lo;
            let mut n = (len / h_target).ceil() as usize;
            n = n.max(2);
            if n % 2 == 1 {
                n += 1;
            }
            let h = len / n as f64;
            max_h = max_h.max(h);
            for i in 1..=n {
                r_points.push(lo + h * i as f64);
            }
            *r_points.last_mut().unwrap() = hi; // exact node at each cut
            segment_ends.push(r_points.len() - 1);
            lo = hi;
        }
        RadialGrid {
            r_points,
            segment_ends,
            spacing: max_h,
        }
    }

    pub fn r(&self) -> &[f64] {
        &self.r_points
    }

    pub fn len(&self) -> usize {
        self.r_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_points.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.r_points.last().unwrap()
    }

    /// Nominal (largest) step of the grid.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Iterator over `(start_idx, end_idx)` of each uniform segment.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let starts = std::iter::once(0).chain(self.segment_ends.iter().copied());
        starts.zip(self.segment_ends.iter().copied())
    }

    /// Composite Simpson integral of sampled values over the whole grid.
    ///
    /// Every segment has an even interval count by construction, so this is
    /// plain composite Simpson per segment, O(h^4).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len());
        let mut total = 0.0;
        for (s, e) in self.segments() {
            let n = e - s;
            if n == 0 {
                continue;
            }
            debug_assert!(n % 2 == 0);
            let h = (self.r_points[e] - self.r_points[s]) / n as f64;
            let mut acc = values[s] + values[e];
            for (k, v) in values[s + 1..e].iter().enumerate() {
                acc += if k % 2 == 0 { 4.0 * v } else { 2.0 * v };
            }
            total += acc * h / 3.0;
        }
        total
    }

    /// Composite Simpson integral of `weight(r) * samples[i]` where `weight`
    /// may jump at segment boundaries (and only there).
    ///
    /// At the closing node of each segment the weight is evaluated a relative
    /// 1e-9 step inside the segment, so a right-continuous jump located on
    /// the boundary is integrated with its left limit, as the measure
    /// requires. `samples` must be continuous across boundaries.
    pub fn integrate_product(&self, weight: &dyn Fn(f64) -> f64, samples: &[f64]) -> f64 {
        assert_eq!(samples.len(), self.len());
        let mut total = 0.0;
        for (s, e) in self.segments() {
            let n = e - s;
            if n == 0 {
                continue;
            }
            debug_assert!(n % 2 == 0);
            let h = (self.r_points[e] - self.r_points[s]) / n as f64;
            let nudge = h * 1e-9;
            let val = |i: usize| {
                let r = if i == e {
                    self.r_points[i] - nudge
                } else {
                    self.r_points[i]
                };
                weight(r) * samples[i]
            };
            let mut acc = val(s) + val(e);
            for i in s + 1..e {
                acc += if (i - s) % 2 == 1 {
                    4.0 * val(i)
                } else {
                    2.0 * val(i)
                };
            }
            total += acc * h / 3.0;
        }
        total
    }

    /// Cumulative integral of `weight(r) * samples[i]` by per-interval
    /// quadratic rules (exact for parabolas), with the same sided evaluation
    /// of `weight` at segment boundaries as [`integrate_product`].
    pub fn cumulative_product(&self, weight: &dyn Fn(f64) -> f64, samples: &[f64]) -> Vec<f64> {
        assert_eq!(samples.len(), self.len());
        let mut out = vec![0.0; self.len()];
        for (s, e) in self.segments() {
            let n = e - s;
            if n == 0 {
                continue;
            }
            let h = (self.r_points[e] - self.r_points[s]) / n as f64;
            let nudge = h * 1e-9;
            let g = |i: usize| {
                let r = if i == e {
                    self.r_points[i] - nudge
                } else {
                    self.r_points[i]
                };
                weight(r) * samples[i]
            };
            let mut acc = out[s];
            for i in s..e {
                let inc = if i == s {
                    h / 12.0 * (5.0 * g(i) + 8.0 * g(i + 1) - g(i + 2))
                } else {
                    h / 12.0 * (-g(i - 1) + 8.0 * g(i) + 5.0 * g(i + 1))
                };
                acc += inc;
                out[i + 1] = acc;
            }
        }
        out
    }

    /// Cumulative trapezoid integral: out[i] = integral of `values` over
    /// `[0, r_i]`.
    pub fn cumulative(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.len());
        let mut out = Vec::with_capacity(self.len());
        out.push(0.0);
        for i in 1..self.len() {
            let h = self.r_points[i] - self.r_points[i - 1];
            out.push(out[i - 1] + 0.5 * h * (values[i] + values[i - 1]));
        }
        out
    }
}

/// Solution samples of an outward radial integration.
pub struct RadialIvp {
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

/// Integrates `-u'' + c(r) u = 0` outward from `u(0) = 0`, `u'(0) = 1` with
/// classic RK4 on the grid.
///
/// Evaluations at the right end of a step are nudged left by a relative
/// 1e-9 of the step so that right-continuous jumps located exactly on grid
/// nodes are always sampled from the side the step belongs to.
pub fn integrate_zero_energy(c: &dyn Fn(f64) -> f64, grid: &RadialGrid) -> RadialIvp {
    let r = grid.r();
    let n = r.len();
    let mut u = Vec::with_capacity(n);
    let mut du = Vec::with_capacity(n);
    u.push(0.0);
    du.push(1.0);
    let (mut y, mut v) = (0.0f64, 1.0f64);
    for i in 1..n {
        let r0 = r[i - 1];
        let h = r[i] - r0;
        let nudge = h * 1e-9;
        let c0 = c(r0);
        let cm = c(r0 + 0.5 * h);
        let c1 = c(r0 + h - nudge);

        // y' = v, v' = c y
        let k1y = v;
        let k1v = c0 * y;
        let k2y = v + 0.5 * h * k1v;
        let k2v = cm * (y + 0.5 * h * k1y);
        let k3y = v + 0.5 * h * k2v;
        let k3v = cm * (y + 0.5 * h * k2y);
        let k4y = v + h * k3v;
        let k4v = c1 * (y + h * k3y);

        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        u.push(y);
        du.push(v);
    }
    RadialIvp { u, du }
}

/// Solves a symmetric tridiagonal system `A x = b` (Thomas algorithm).
///
/// `diag` and `off` follow the usual convention: `A[i][i] = diag[i]`,
/// `A[i][i+1] = A[i+1][i] = off[i]`. Fails on a vanishing pivot.
pub fn solve_tridiagonal(diag: &[f64], off: &[f64], b: &[f64], spacing: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(off.len() + 1 == n && b.len() == n);
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    let mut denom = diag[0];
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let tiny = scale * 1e-300_f64.max(f64::EPSILON * 1e-2);
    if denom.abs() < tiny {
        return Err(CoreError::NumericalDegeneracy { spacing });
    }
    c_prime[0] = off.first().map_or(0.0, |&o| o) / denom;
    d_prime[0] = b[0] / denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c_prime[i - 1];
        if denom.abs() < tiny {
            return Err(CoreError::NumericalDegeneracy { spacing });
        }
        c_prime[i] = if i < n - 1 { off[i] / denom } else { 0.0 };
        d_prime[i] = (b[i] - off[i - 1] * d_prime[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d_prime[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d_prime[i] - c_prime[i] * x[i + 1];
    }
    Ok(x)
}
