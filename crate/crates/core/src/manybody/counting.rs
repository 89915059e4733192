//! Condensate counting: the one-particle projectors onto and away from a
//! reference mode, the k-excitation sector weights, and weighted counting
//! operators built from them.

use super::ManyBodyState;
use crate::error::{CoreError, Result};
use crate::gp::GPField;
use num_complex::Complex64;

/// Which side of the rank-one splitting to apply on one particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projector {
    /// Onto the reference mode.
    P,
    /// Its complement.
    Q,
}

/// Hard cap on the sector enumeration (2^N branches).
pub const MAX_COUNTING_PARTICLES: usize = 12;

fn check_phi(state: &ManyBodyState, phi: &GPField) -> Result<()> {
    if phi.grid != state.grid {
        return Err(CoreError::DimensionMismatch(
            "reference mode lives on a different grid".into(),
        ));
    }
    Ok(())
}

fn apply_projector_into(
    amplitudes: &[Complex64],
    state: &ManyBodyState,
    phi: &GPField,
    particle: usize,
    which: Projector,
    out: &mut Vec<Complex64>,
) {
    let m = state.one_body_dim();
    let stride = m.pow((state.n_particles - 1 - particle) as u32);
    let block = stride * m;
    let total = amplitudes.len();
    let w = state.grid.cell_volume();
    out.clear();
    out.resize(total, Complex64::new(0.0, 0.0));

    for base in (0..total).step_by(block) {
        for inner_idx in 0..stride {
            let start = base + inner_idx;
            // overlap <phi, psi(.)> along this particle's fiber
            let mut overlap = Complex64::new(0.0, 0.0);
            for g in 0..m {
                overlap += phi.values[g].conj() * amplitudes[start + g * stride];
            }
            overlap *= w;
            match which {
                Projector::P => {
                    for g in 0..m {
                        out[start + g * stride] = phi.values[g] * overlap;
                    }
                }
                Projector::Q => {
                    for g in 0..m {
                        out[start + g * stride] =
                            amplitudes[start + g * stride] - phi.values[g] * overlap;
                    }
                }
            }
        }
    }
}

/// Applies the rank-one projector (or its complement) on one particle index.
pub fn pq_project(
    state: &ManyBodyState,
    phi: &GPField,
    particle: usize,
    which: Projector,
) -> Result<ManyBodyState> {
    check_phi(state, phi)?;
    if particle >= state.n_particles {
        return Err(CoreError::Parameter(format!(
            "particle index {particle} out of range for N = {}",
            state.n_particles
        )));
    }
    let mut out = Vec::new();
    apply_projector_into(&state.amplitudes, state, phi, particle, which, &mut out);
    Ok(ManyBodyState {
        amplitudes: out,
        symmetric: false,
        ..state.clone()
    })
}

/// Sector weights `<P_k>` for `k = 0..N`: the projector branches are
/// enumerated recursively (p/q per particle), so the cost is `2^N` tensor
/// traversals.
pub fn pk_spectrum(state: &ManyBodyState, phi: &GPField) -> Result<Vec<f64>> {
    check_phi(state, phi)?;
    let n = state.n_particles;
    if n > MAX_COUNTING_PARTICLES {
        return Err(CoreError::Capability(format!(
            "sector enumeration needs 2^N branches; N = {n} exceeds the cap {MAX_COUNTING_PARTICLES}"
        )));
    }
    let mut out = vec![0.0; n + 1];
    let w_total = state.config_volume();
    let mut scratch = Vec::new();

    fn recurse(
        amplitudes: Vec<Complex64>,
        particle: usize,
        q_count: usize,
        state: &ManyBodyState,
        phi: &GPField,
        out: &mut [f64],
        scratch: &mut Vec<Complex64>,
        w_total: f64,
    ) {
        if particle == state.n_particles {
            let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * w_total;
            out[q_count] += norm_sq;
            return;
        }
        apply_projector_into(&amplitudes, state, phi, particle, Projector::P, scratch);
        let p_branch = scratch.clone();
        recurse(
            p_branch,
            particle + 1,
            q_count,
            state,
            phi,
            out,
            scratch,
            w_total,
        );
        apply_projector_into(&amplitudes, state, phi, particle, Projector::Q, scratch);
        let q_branch = std::mem::take(scratch);
        recurse(
            q_branch,
            particle + 1,
            q_count + 1,
            state,
            phi,
            out,
            scratch,
            w_total,
        );
    }

    recurse(
        state.amplitudes.clone(),
        0,
        0,
        state,
        phi,
        &mut out,
        &mut scratch,
        w_total,
    );
    Ok(out)
}

/// A map `k -> m(k)` on `0..=N` defining the weighted counting operator.
#[derive(Debug, Clone)]
pub struct CountingWeight {
    pub weights: Vec<f64>,
    /// Set when the weight was built from the two-regime construction below.
    pub xi: Option<f64>,
}

impl CountingWeight {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(CoreError::Parameter(
                "counting weights must be nonnegative and finite".into(),
            ));
        }
        Ok(CountingWeight { weights, xi: None })
    }

    /// `m(k) = 1` (resolution of identity).
    pub fn uniform(n: usize) -> Self {
        CountingWeight {
            weights: vec![1.0; n + 1],
            xi: None,
        }
    }

    /// `m(k) = k/N` (mean departed fraction).
    pub fn linear(n: usize) -> Self {
        CountingWeight {
            weights: (0..=n).map(|k| k as f64 / n as f64).collect(),
            xi: None,
        }
    }

    /// `m(k) = sqrt(k/N)` (the counting weight of the convergence functional).
    pub fn sqrt(n: usize) -> Self {
        CountingWeight {
            weights: (0..=n).map(|k| (k as f64 / n as f64).sqrt()).collect(),
            xi: None,
        }
    }

    /// The two-regime weight: `sqrt(k/N)` above `N^(1-2 xi)`, affine
    /// `(N^(xi-1) k + N^-xi)/2` below it.
    pub fn from_xi(n: usize, xi: f64) -> Result<Self> {
        if xi <= 0.0 {
            return Err(CoreError::Parameter("xi must be positive".into()));
        }
        let nf = n as f64;
        let threshold = nf.powf(1.0 - 2.0 * xi);
        let weights = (0..=n)
            .map(|k| {
                let kf = k as f64;
                if kf >= threshold {
                    (kf / nf).sqrt()
                } else {
                    0.5 * (nf.powf(-1.0 + xi) * kf + nf.powf(-xi))
                }
            })
            .collect();
        Ok(CountingWeight {
            weights,
            xi: Some(xi),
        })
    }

    /// Pointwise square of the weight (e.g. the `k/N` weight from `sqrt`).
    pub fn squared(&self) -> CountingWeight {
        CountingWeight {
            weights: self.weights.iter().map(|w| w * w).collect(),
            xi: self.xi,
        }
    }
}

/// `sum_k m(k) <P_k>`.
pub fn weighted_expectation(
    state: &ManyBodyState,
    phi: &GPField,
    weight: &CountingWeight,
) -> Result<f64> {
    if weight.weights.len() != state.n_particles + 1 {
        return Err(CoreError::Parameter(format!(
            "weight table has {} entries, expected N+1 = {}",
            weight.weights.len(),
            state.n_particles + 1
        )));
    }
    let pk = pk_spectrum(state, phi)?;
    Ok(pk.iter().zip(&weight.weights).map(|(&p, &w)| p * w).sum())
}
