//! Uniform periodic grids and spectral derivatives.
//!
//! A `PeriodicGrid` describes one particle's coordinate box: `n` points per
//! axis, `dim` axes, box length `L`, positions `x_i = i L / n`. Many-body
//! tensors are row-major over the concatenated axes of all particles, so the
//! same axis-wise FFT driver serves both the one-body and few-body solvers.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    /// Spatial dimension (1 or 3).
    pub dim: usize,
    /// Points per axis.
    pub n: usize,
    /// Box length per axis.
    pub box_length: f64,
}

impl PeriodicGrid {
    pub fn new(dim: usize, n: usize, box_length: f64) -> Self {
        assert!(dim == 1 || dim == 2 || dim == 3, "dim must be 1, 2 or 3");
        assert!(n >= 2 && box_length > 0.0);
        PeriodicGrid { dim, n, box_length }
    }

    /// Number of one-body grid points `n^dim`.
    pub fn num_points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Volume of one grid cell `(L/n)^dim`.
    pub fn cell_volume(&self) -> f64 {
        (self.box_length / self.n as f64).powi(self.dim as i32)
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Coordinates of the one-body grid point with row-major flat index.
    pub fn position(&self, mut idx: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        let h = self.spacing();
        for d in (0..self.dim).rev() {
            out[d] = (idx % self.n) as f64 * h;
            idx /= self.n;
        }
        out
    }

    /// Angular wavenumbers in FFT bin order: `2 pi m / L` with
    /// `m = 0, 1, ..., n/2-1, -n/2, ..., -1`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        (0..n)
            .map(|i| {
                let m = if i <= (n - 1) / 2 { i } else { i - n };
                2.0 * std::f64::consts::PI * m as f64 / self.box_length
            })
            .collect()
    }

    /// Minimum-image distance between two one-body grid points.
    pub fn min_image_distance(&self, idx_a: usize, idx_b: usize) -> f64 {
        let pa = self.position(idx_a);
        let pb = self.position(idx_b);
        let mut acc = 0.0;
        for d in 0..self.dim {
            let mut delta = (pa[d] - pb[d]).abs();
            if delta > 0.5 * self.box_length {
                delta = self.box_length - delta;
            }
            acc += delta * delta;
        }
        acc.sqrt()
    }
}

/// Weighted L2 norm of grid samples.
pub fn l2_norm(values: &[Complex64], cell_volume: f64) -> f64 {
    (values.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell_volume).sqrt()
}

/// Weighted inner product `<a, b>` (conjugate-linear in `a`).
pub fn inner(a: &[Complex64], b: &[Complex64], cell_volume: f64) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        * cell_volume
}

/// Axis-wise FFT driver with cached plans.
///
/// Forward transforms are plain sums; inverse transforms carry the `1/n`
/// factor per axis so that a forward/inverse round trip is the identity.
pub struct SpectralOps {
    planner: Mutex<FftPlanner<f64>>,
    plans: Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>,
}

impl Default for SpectralOps {
    fn default() -> Self {
        Self::new()
    }
}

impl SpectralOps {
    pub fn new() -> Self {
        SpectralOps {
            planner: Mutex::new(FftPlanner::new()),
            plans: Mutex::new(HashMap::new()),
        }
    }

    fn plan(&self, n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
        let mut plans = self.plans.lock().unwrap();
        plans
            .entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = self.planner.lock().unwrap();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    }

    /// In-place FFT along one axis of a row-major multi-axis array.
    pub fn transform_axis(
        &self,
        data: &mut [Complex64],
        shape: &[usize],
        axis: usize,
        inverse: bool,
    ) {
        let mid = shape[axis];
        let inner_len: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        debug_assert_eq!(data.len(), outer * mid * inner_len);
        let plan = self.plan(mid, inverse);
        let mut line = vec![Complex64::new(0.0, 0.0); mid];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let scale = if inverse { 1.0 / mid as f64 } else { 1.0 };

        for o in 0..outer {
            let base = o * mid * inner_len;
            if inner_len == 1 {
                let slice = &mut data[base..base + mid];
                plan.process_with_scratch(slice, &mut scratch);
                if inverse {
                    for z in slice.iter_mut() {
                        *z *= scale;
                    }
                }
                continue;
            }
            for i in 0..inner_len {
                for k in 0..mid {
                    line[k] = data[base + k * inner_len + i];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                if inverse {
                    for k in 0..mid {
                        data[base + k * inner_len + i] = line[k] * scale;
                    }
                } else {
                    for k in 0..mid {
                        data[base + k * inner_len + i] = line[k];
                    }
                }
            }
        }
    }

    /// In-place FFT along every axis.
    pub fn transform_all(&self, data: &mut [Complex64], shape: &[usize], inverse: bool) {
        for axis in 0..shape.len() {
            self.transform_axis(data, shape, axis, inverse);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let ops = SpectralOps::new();
        let shape = [4usize, 8, 2];
        let total: usize = shape.iter().product();
        let orig: Vec<Complex64> = (0..total)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        ops.transform_all(&mut data, &shape, false);
        ops.transform_all(&mut data, &shape, true);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_is_spectral_delta() {
        let ops = SpectralOps::new();
        let n = 8usize;
        let grid = PeriodicGrid::new(1, n, 2.0 * std::f64::consts::PI);
        let k = grid.wavenumbers();
        // e^{i k_3 x}: single bin 3 after forward transform
        let mut data: Vec<Complex64> = (0..n)
            .map(|i| (Complex64::i() * k[3] * grid.position(i)[0]).exp())
            .collect();
        ops.transform_axis(&mut data, &[n], 0, false);
        for (i, z) in data.iter().enumerate() {
            let expect = if i == 3 { n as f64 } else { 0.0 };
            assert!((z - Complex64::new(expect, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn min_image_wraps() {
        let grid = PeriodicGrid::new(1, 8, 8.0);
        assert!((grid.min_image_distance(0, 7) - 1.0).abs() < 1e-15);
        assert!((grid.min_image_distance(1, 5) - 4.0).abs() < 1e-15);
    }
}
