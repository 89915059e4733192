//! Configuration indicator sets built from pairwise proximity: for one
//! distinguished particle `j`, the set where some other particle comes
//! closer than the cutoff radius, and the set where two particles other
//! than `j` do.
//!
//! Membership is decided at grid points (minimum-image metric); the cutoff
//! defaults to `N^(-26/27)` but the exponent is exposed so scaling checks
//! can sweep it.

use super::ManyBodyState;
use crate::error::{CoreError, Result};
use crate::grid::SpectralOps;
use num_complex::Complex64;

/// The four masks attached to one distinguished particle.
pub struct IndicatorMasks {
    /// Some `k != j` with `|x_j - x_k| < radius` ("near" set of `j`).
    pub near_j: Vec<bool>,
    /// A pair `k, l != j` with `|x_k - x_l| < radius` ("spectator pair" set).
    pub spectator_pair: Vec<bool>,
    pub radius: f64,
    pub particle: usize,
}

impl IndicatorMasks {
    /// Fraction of configuration points inside the near set.
    pub fn near_fraction(&self) -> f64 {
        self.near_j.iter().filter(|&&b| b).count() as f64 / self.near_j.len() as f64
    }
}

/// Default proximity cutoff `N^(-26/27)`.
pub fn default_radius(n_particles: usize) -> f64 {
    (n_particles as f64).powf(-26.0 / 27.0)
}

/// Builds the proximity masks of the distinguished particle at the given
/// cutoff radius.
pub fn indicator_masks(
    state: &ManyBodyState,
    particle: usize,
    radius: f64,
) -> Result<IndicatorMasks> {
    let n = state.n_particles;
    if particle >= n {
        return Err(CoreError::Parameter(format!(
            "particle index {particle} out of range for N = {n}"
        )));
    }
    let total = state.total_dim();
    let mut near_j = vec![false; total];
    let mut spectator_pair = vec![false; total];
    let mut parts = vec![0usize; n];
    // pairwise proximity by one-body index offset
    let m = state.one_body_dim();
    let close: Vec<bool> = (0..m)
        .map(|offset| state.grid.min_image_distance(offset, 0) < radius)
        .collect();
    for flat in 0..total {
        state.particle_indices(flat, &mut parts);
        let mut nj = false;
        let mut sp = false;
        for a in 0..n {
            for b in a + 1..n {
                if close[super::offset_index(&state.grid, parts[a], parts[b])] {
                    if a == particle || b == particle {
                        nj = true;
                    } else {
                        sp = true;
                    }
                }
            }
        }
        near_j[flat] = nj;
        spectator_pair[flat] = sp;
    }
    Ok(IndicatorMasks {
        near_j,
        spectator_pair,
        radius,
        particle,
    })
}

fn masked_copy(state: &ManyBodyState, mask: &[bool], keep_inside: bool) -> ManyBodyState {
    let amplitudes = state
        .amplitudes
        .iter()
        .zip(mask)
        .map(|(&z, &inside)| {
            if inside == keep_inside {
                z
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    ManyBodyState {
        amplitudes,
        symmetric: false,
        ..state.clone()
    }
}

/// The four masked states, in the order: away-from-others, near-others,
/// no-spectator-pair, spectator-pair.
pub fn indicator_sets(
    state: &ManyBodyState,
    particle: usize,
    radius: f64,
) -> Result<[ManyBodyState; 4]> {
    let masks = indicator_masks(state, particle, radius)?;
    Ok([
        masked_copy(state, &masks.near_j, false),
        masked_copy(state, &masks.near_j, true),
        masked_copy(state, &masks.spectator_pair, false),
        masked_copy(state, &masks.spectator_pair, true),
    ])
}

/// Applies a boolean mask in place (true keeps the amplitude).
pub fn apply_mask(amplitudes: &mut [Complex64], mask: &[bool], keep_inside: bool) {
    for (z, &inside) in amplitudes.iter_mut().zip(mask) {
        if inside != keep_inside {
            *z = Complex64::new(0.0, 0.0);
        }
    }
}

/// `sum_axis || mask . d_axis(psi on particle) ||^2` — the squared norm of a
/// mask-localized spectral gradient on one particle.
///
/// Pass `None` as the mask for the plain gradient norm.
pub fn masked_gradient_norm_sq(
    state: &ManyBodyState,
    particle: usize,
    mask: Option<(&[bool], bool)>,
    ops: &SpectralOps,
) -> f64 {
    let shape = state.shape();
    let k = state.grid.wavenumbers();
    let n = state.grid.n;
    let w = state.config_volume();
    let mut acc = 0.0;
    for c in 0..state.grid.dim {
        let axis = particle * state.grid.dim + c;
        let mut work = state.amplitudes.clone();
        ops.transform_axis(&mut work, &shape, axis, false);
        // multiply by i k along this axis
        let inner_len: usize = shape[axis + 1..].iter().product();
        for (flat, z) in work.iter_mut().enumerate() {
            let bin = (flat / inner_len) % n;
            *z *= Complex64::i() * k[bin];
        }
        ops.transform_axis(&mut work, &shape, axis, true);
        if let Some((mask, keep)) = mask {
            apply_mask(&mut work, mask, keep);
        }
        acc += work.iter().map(|z| z.norm_sqr()).sum::<f64>() * w;
    }
    acc
}
