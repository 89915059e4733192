//! Scaling diagnostics: the proximity-indicator norm ratio across particle
//! numbers, and the fitted constants of the interaction/gradient norm
//! inequalities.

use crate::error::Result;
use crate::gp::ExternalPotential;
use crate::manybody::{
    apply_hamiltonian, masked_gradient_norm_sq, offset_index, pair_values_by_offset, ManyBodyState,
};
use crate::potentials::{scaled_potential, PotentialSpec};
use crate::radial::RadialGrid;
use crate::stats::log_log_slope;
use serde::Serialize;

/// Ratio sweep of `||1_{|rel| < r_N} Omega|| / ||grad_1 Omega||` for a
/// product-Gaussian pair, with the proximity radius `r_N = N^(-exponent)`.
#[derive(Debug, Clone, Serialize)]
pub struct ProximityScalingReport {
    pub ns: Vec<u64>,
    pub ratios: Vec<f64>,
    /// Fitted log-log slope of the ratio against N.
    pub slope: f64,
    /// Largest `ratio * N^(7/54)` over the sweep (the constant of the
    /// claimed bound, finite when the bound holds).
    pub c_bound: f64,
    pub exponent: f64,
    pub sigma: f64,
}

/// Evaluates the indicator-localized norm of a two-particle product Gaussian
/// analytically in the relative coordinate (radial quadrature), sweeping the
/// proximity radius through the particle number.
pub fn proximity_scaling(sigma: f64, ns: &[u64], exponent: f64) -> ProximityScalingReport {
    // relative coordinate of two width-sigma Gaussians: width sigma*sqrt(2)
    let s = sigma * std::f64::consts::SQRT_2;
    let norm3d = (2.0 * std::f64::consts::PI * s * s).powf(-1.5);
    let grad_norm = (3.0 / (4.0 * sigma * sigma)).sqrt();

    let mut ratios = Vec::with_capacity(ns.len());
    for &n in ns {
        let r_n = (n as f64).powf(-exponent);
        let grid = RadialGrid::uniform(r_n, 2048);
        let vals: Vec<f64> = grid
            .r()
            .iter()
            .map(|&r| norm3d * (-r * r / (2.0 * s * s)).exp() * r * r)
            .collect();
        let mass = 4.0 * std::f64::consts::PI * grid.integrate(&vals);
        ratios.push(mass.sqrt() / grad_norm);
    }
    let nsf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let slope = if ns.len() >= 2 {
        log_log_slope(&nsf, &ratios)
    } else {
        f64::NAN
    };
    let c_bound = ns
        .iter()
        .zip(&ratios)
        .map(|(&n, &r)| r * (n as f64).powf(7.0 / 54.0))
        .fold(0.0f64, f64::max);
    ProximityScalingReport {
        ns: ns.to_vec(),
        ratios,
        slope,
        c_bound,
        exponent,
        sigma,
    }
}

/// Grid-based realization of the same ratio on a two-particle state, for
/// cross-validation at radii the grid can resolve.
pub fn indicator_ratio_on_grid(state: &ManyBodyState, radius: f64) -> Result<f64> {
    use crate::grid::SpectralOps;
    let ops = SpectralOps::new();
    let masks = crate::manybody::indicator_masks(state, 0, radius)?;
    let mut masked = state.clone();
    crate::manybody::apply_mask(&mut masked.amplitudes, &masks.near_j, true);
    let masked_norm = masked.norm();
    let grad = masked_gradient_norm_sq(state, 0, None, &ops).sqrt();
    Ok(masked_norm / grad)
}

/// Fitted constants of the two norm inequalities: the interaction norm
/// against the energy, and the single-particle gradient against the
/// per-particle energy.
#[derive(Debug, Clone, Serialize)]
pub struct InteractionNormReport {
    /// max over states of `||V1(x_0 - x_j) psi||^2 / (<H> + N)`.
    pub c_interaction: f64,
    /// max over states of `N ||grad_0 psi||^2 / (<H> + 1)`.
    pub c_gradient: f64,
    pub per_state: Vec<(f64, f64)>,
}

pub fn interaction_norm_diagnostics(
    states: &[ManyBodyState],
    spec: &PotentialSpec,
    pot: &ExternalPotential,
) -> Result<InteractionNormReport> {
    use crate::grid::SpectralOps;
    let ops = SpectralOps::new();
    let mut per_state = Vec::with_capacity(states.len());
    let mut c_interaction: f64 = 0.0;
    let mut c_gradient: f64 = 0.0;

    for state in states {
        let n = state.n_particles;
        let nf = n as f64;
        let h_psi = apply_hamiltonian(state, spec, pot)?;
        let h_exp =
            crate::grid::inner(&state.amplitudes, &h_psi.amplitudes, state.config_volume()).re;

        // interaction norm against the partner farthest in index (the third
        // particle when available)
        let partner = if n >= 3 { 2 } else { 1 };
        let v1 = scaled_potential(spec, n as u64, 1.0)?;
        let pair = pair_values_by_offset(&state.grid, &v1);
        let mut parts = vec![0usize; n];
        let mut v_norm_sq = 0.0;
        for flat in 0..state.total_dim() {
            let a = state.amplitudes[flat].norm_sqr();
            if a == 0.0 {
                continue;
            }
            state.particle_indices(flat, &mut parts);
            let v = pair[offset_index(&state.grid, parts[0], parts[partner])];
            v_norm_sq += a * v * v;
        }
        v_norm_sq *= state.config_volume();

        let grad_sq = masked_gradient_norm_sq(state, 0, None, &ops);

        let ci = v_norm_sq / (h_exp + nf);
        let cg = nf * grad_sq / (h_exp + 1.0);
        c_interaction = c_interaction.max(ci);
        c_gradient = c_gradient.max(cg);
        per_state.push((ci, cg));
    }
    Ok(InteractionNormReport {
        c_interaction,
        c_gradient,
        per_state,
    })
}
