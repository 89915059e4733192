//! Exact few-body dynamics on a periodic grid: the N-particle Hamiltonian
//! with pairwise rescaled interaction and bounded external potential, Krylov
//! time propagation, reduced one-body densities, condensate counting
//! projectors, configuration indicator sets, and the energy-difference
//! decomposition.
//!
//! Tensors are row-major over the concatenated particle axes; particle 0 is
//! the slowest index. Feasible sizes are deliberately small: `d = 3` runs at
//! `N = 2`, `d = 1` runs at `N <= 3` exercise the projector and decomposition
//! structure on finer particle numbers.

mod counting;
mod decomposition;
mod indicators;

pub use counting::{pk_spectrum, pq_project, weighted_expectation, CountingWeight, Projector};
pub use decomposition::{
    energy_decomposition, localized_gradient_diagnostic, localized_gradient_diagnostic_with_radius,
    DecompositionTerm, EnergyDecomposition,
};
pub use indicators::{
    apply_mask, default_radius, indicator_masks, indicator_sets, masked_gradient_norm_sq,
    IndicatorMasks,
};

use crate::error::{CoreError, Result};
use crate::gp::{ExternalPotential, GPField};
use crate::grid::{inner, l2_norm, PeriodicGrid, SpectralOps};
use crate::linalg::{lanczos_extreme, tridiag_eigen_ql};
use crate::potentials::{scaled_potential, PotentialSpec};
use crate::radial::RadialPotential;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Complex N-particle tensor on a product grid.
#[derive(Clone)]
pub struct ManyBodyState {
    pub amplitudes: Vec<Complex64>,
    pub n_particles: usize,
    /// One-body grid shared by all particles.
    pub grid: PeriodicGrid,
    pub time: f64,
    pub symmetric: bool,
}

impl std::fmt::Debug for ManyBodyState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManyBodyState")
            .field("n_particles", &self.n_particles)
            .field("grid", &self.grid)
            .field("time", &self.time)
            .field("symmetric", &self.symmetric)
            .field("norm", &self.norm())
            .finish()
    }
}

impl ManyBodyState {
    /// One-body Hilbert dimension `n^d`.
    pub fn one_body_dim(&self) -> usize {
        self.grid.num_points()
    }

    /// Total tensor length `(n^d)^N`.
    pub fn total_dim(&self) -> usize {
        self.one_body_dim().pow(self.n_particles as u32)
    }

    /// Configuration-space cell measure `(L/n)^(d N)`.
    pub fn config_volume(&self) -> f64 {
        self.grid.cell_volume().powi(self.n_particles as i32)
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes, self.config_volume())
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        assert!(n > 0.0);
        for z in self.amplitudes.iter_mut() {
            *z /= n;
        }
    }

    /// Product state `phi x ... x phi` (exactly normalized when `phi` is).
    pub fn product(phi: &GPField, n_particles: usize) -> Self {
        let m = phi.grid.num_points();
        let total = m.pow(n_particles as u32);
        let mut amplitudes = vec![Complex64::new(1.0, 0.0); total];
        for (flat, amp) in amplitudes.iter_mut().enumerate() {
            let mut rest = flat;
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..n_particles {
                acc *= phi.values[rest % m];
                rest /= m;
            }
            *amp = acc;
        }
        ManyBodyState {
            amplitudes,
            n_particles,
            grid: phi.grid,
            time: phi.time,
            symmetric: true,
        }
    }

    /// Seeded random normalized symmetric state.
    pub fn random_symmetric(grid: PeriodicGrid, n_particles: usize, seed: u64) -> Self {
        let m = grid.num_points();
        let total = m.pow(n_particles as u32);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amplitudes: Vec<Complex64> = (0..total)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut state = ManyBodyState {
            amplitudes,
            n_particles,
            grid,
            time: 0.0,
            symmetric: false,
        };
        state.symmetrize();
        state.normalize();
        state
    }

    /// Decomposes a flat index into per-particle one-body indices
    /// (particle 0 first).
    pub fn particle_indices(&self, flat: usize, out: &mut [usize]) {
        let m = self.one_body_dim();
        let mut rest = flat;
        for j in (0..self.n_particles).rev() {
            out[j] = rest % m;
            rest /= m;
        }
    }

    fn compose_index(&self, parts: &[usize]) -> usize {
        let m = self.one_body_dim();
        parts.iter().fold(0usize, |acc, &p| acc * m + p)
    }

    /// Averages over all particle permutations and marks the state symmetric.
    pub fn symmetrize(&mut self) {
        let n = self.n_particles;
        let perms = permutations(n);
        let mut out = vec![Complex64::new(0.0, 0.0); self.total_dim()];
        let mut parts = vec![0usize; n];
        let mut permuted = vec![0usize; n];
        for flat in 0..self.total_dim() {
            self.particle_indices(flat, &mut parts);
            let mut acc = Complex64::new(0.0, 0.0);
            for perm in &perms {
                for (slot, &src) in perm.iter().enumerate() {
                    permuted[slot] = parts[src];
                }
                acc += self.amplitudes[self.compose_index(&permuted)];
            }
            out[flat] = acc / perms.len() as f64;
        }
        self.amplitudes = out;
        self.symmetric = true;
    }

    /// Largest deviation from transposition symmetry, in amplitude units.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n_particles;
        let mut worst: f64 = 0.0;
        let mut parts = vec![0usize; n];
        for flat in 0..self.total_dim() {
            self.particle_indices(flat, &mut parts);
            for i in 0..n {
                for j in i + 1..n {
                    parts.swap(i, j);
                    let other = self.compose_index(&parts);
                    parts.swap(i, j);
                    worst = worst.max((self.amplitudes[flat] - self.amplitudes[other]).norm());
                }
            }
        }
        worst
    }

    pub fn distance(&self, other: &ManyBodyState) -> f64 {
        let diff: Vec<Complex64> = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a - b)
            .collect();
        l2_norm(&diff, self.config_volume())
    }

    /// Row-major axis lengths of the full tensor.
    pub(crate) fn shape(&self) -> Vec<usize> {
        vec![self.grid.n; self.grid.dim * self.n_particles]
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    heap_permute(&mut items, n, &mut out);
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// Pairwise potential values indexed by the one-body index difference
/// (componentwise modulo the axis length).
pub fn pair_values_by_offset(grid: &PeriodicGrid, pot: &dyn RadialPotential) -> Vec<f64> {
    let m = grid.num_points();
    (0..m)
        .map(|offset| pot.eval(grid.min_image_distance(offset, 0)))
        .collect()
}

/// Row-major index of the componentwise difference `(a - b) mod n`.
pub fn offset_index(grid: &PeriodicGrid, a: usize, b: usize) -> usize {
    // componentwise (a - b) mod n, recomposed row-major
    let n = grid.n;
    let mut out = 0usize;
    let mut aa = a;
    let mut bb = b;
    let mut mul = 1usize;
    let mut digits = [0usize; 3];
    for d in 0..grid.dim {
        let da = aa % n;
        let db = bb % n;
        digits[d] = (da + n - db) % n;
        aa /= n;
        bb /= n;
    }
    for d in (0..grid.dim).rev() {
        out += digits[d] * mul;
        mul *= n;
    }
    out
}

/// `H psi` with spectral per-particle Laplacians, the pairwise rescaled
/// interaction `N^2 V(N (x_j - x_k))`, and the one-body external potential
/// at the state's own time. The result is unnormalized.
pub fn apply_hamiltonian(
    state: &ManyBodyState,
    spec: &PotentialSpec,
    pot: &ExternalPotential,
) -> Result<ManyBodyState> {
    let ops = SpectralOps::new();
    let v1 = scaled_potential(spec, state.n_particles as u64, 1.0)?;
    let pair = pair_values_by_offset(&state.grid, &v1);
    let a_vals = pot.sample(&state.grid, state.time)?;
    apply_hamiltonian_with(state, &pair, &a_vals, &ops)
}

/// Same as [`apply_hamiltonian`], with the pair table, external samples and
/// FFT plans supplied by the caller (the propagation hot path).
pub fn apply_hamiltonian_with(
    state: &ManyBodyState,
    pair_by_offset: &[f64],
    a_vals: &[f64],
    ops: &SpectralOps,
) -> Result<ManyBodyState> {
    let out = hamiltonian_apply_raw(state, &state.amplitudes, pair_by_offset, a_vals, ops)?;
    Ok(ManyBodyState {
        amplitudes: out,
        n_particles: state.n_particles,
        grid: state.grid,
        time: state.time,
        symmetric: state.symmetric,
    })
}

/// `H` applied to raw amplitudes that share `meta`'s geometry; avoids
/// cloning the tensor metadata holder in the Krylov inner loop.
fn hamiltonian_apply_raw(
    meta: &ManyBodyState,
    amplitudes: &[Complex64],
    pair_by_offset: &[f64],
    a_vals: &[f64],
    ops: &SpectralOps,
) -> Result<Vec<Complex64>> {
    if pair_by_offset.len() != meta.one_body_dim() || a_vals.len() != meta.one_body_dim() {
        return Err(CoreError::DimensionMismatch(
            "pair table or external samples do not match the one-body grid".into(),
        ));
    }
    if amplitudes.len() != meta.total_dim() {
        return Err(CoreError::DimensionMismatch(
            "amplitude length does not match the state geometry".into(),
        ));
    }
    let shape = meta.shape();
    let k = meta.grid.wavenumbers();
    let naxes = shape.len();
    let n = meta.grid.n;

    // kinetic: full spectral round trip with the total |k|^2 multiplier
    let mut out = amplitudes.to_vec();
    ops.transform_all(&mut out, &shape, false);
    for (flat, z) in out.iter_mut().enumerate() {
        let mut rest = flat;
        let mut k2 = 0.0;
        for _ in 0..naxes {
            let kk = k[rest % n];
            k2 += kk * kk;
            rest /= n;
        }
        *z *= k2;
    }
    ops.transform_all(&mut out, &shape, true);

    // pairwise interaction and one-body external terms (position diagonal)
    let nparts = meta.n_particles;
    let mut parts = vec![0usize; nparts];
    for (flat, o) in out.iter_mut().enumerate() {
        let amp = amplitudes[flat];
        if amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        meta.particle_indices(flat, &mut parts);
        let mut v = 0.0;
        for j in 0..nparts {
            v += a_vals[parts[j]];
            for kk in j + 1..nparts {
                v += pair_by_offset[offset_index(&meta.grid, parts[j], parts[kk])];
            }
        }
        *o += amp * v;
    }
    Ok(out)
}

/// Per-particle energy `<psi, H psi> / N`.
pub fn many_body_energy(
    state: &ManyBodyState,
    spec: &PotentialSpec,
    pot: &ExternalPotential,
) -> Result<f64> {
    let h_psi = apply_hamiltonian(state, spec, pot)?;
    let e = inner(&state.amplitudes, &h_psi.amplitudes, state.config_volume());
    Ok(e.re / state.n_particles as f64)
}

/// Options of the Krylov propagation.
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// Hard cap on the Krylov dimension per step.
    pub krylov_dim: usize,
    /// Target on the propagation residual estimate per step.
    pub tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            krylov_dim: 30,
            tol: 1e-11,
        }
    }
}

/// Propagates `steps` short steps of `exp(-i H dt)` with a Lanczos Krylov
/// factorization per step. The external potential is frozen at each step's
/// midpoint, which keeps second order for bounded time derivatives.
pub fn evolve(
    state: &ManyBodyState,
    spec: &PotentialSpec,
    pot: &ExternalPotential,
    dt: f64,
    steps: usize,
) -> Result<ManyBodyState> {
    evolve_with(state, spec, pot, dt, steps, &EvolveOptions::default())
}

pub fn evolve_with(
    state: &ManyBodyState,
    spec: &PotentialSpec,
    pot: &ExternalPotential,
    dt: f64,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<ManyBodyState> {
    let ops = SpectralOps::new();
    let v1 = scaled_potential(spec, state.n_particles as u64, 1.0)?;
    let pair = pair_values_by_offset(&state.grid, &v1);
    let mut current = state.clone();
    for _ in 0..steps {
        let a_vals = pot.sample(&current.grid, current.time + 0.5 * dt)?;
        current = krylov_step(&current, &pair, &a_vals, dt, opts, &ops)?;
    }
    Ok(current)
}

fn krylov_step(
    state: &ManyBodyState,
    pair: &[f64],
    a_vals: &[f64],
    dt: f64,
    opts: &EvolveOptions,
    ops: &SpectralOps,
) -> Result<ManyBodyState> {
    let dim = state.total_dim();
    let w_cell = state.config_volume();
    let psi_norm = state.norm();

    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let mut q0: Vec<Complex64> = state.amplitudes.iter().map(|z| z / psi_norm).collect();
    basis.push(std::mem::take(&mut q0));

    let mut prev_y: Option<Vec<Complex64>> = None;
    let mut result_y: Option<Vec<Complex64>> = None;
    let mut happy = false;

    for m in 0..opts.krylov_dim {
        // w = H q_m
        let mut w = hamiltonian_apply_raw(state, &basis[m], pair, a_vals, ops)?;
        let a = inner(&basis[m], &w, w_cell).re;
        alpha.push(a);
        if m > 0 {
            let b = beta[m - 1];
            for ((wz, qm), qp) in w.iter_mut().zip(&basis[m]).zip(&basis[m - 1]) {
                *wz -= qm * a + qp * b;
            }
        } else {
            for (wz, qm) in w.iter_mut().zip(&basis[m]) {
                *wz -= qm * a;
            }
        }
        let b = l2_norm(&w, w_cell);

        // exp(-i T dt) e1 in the current Krylov basis
        let (vals, vecs) = tridiag_eigen_ql(&alpha, &beta, true);
        let mlen = alpha.len();
        let z = vecs.unwrap();
        let mut y = vec![Complex64::new(0.0, 0.0); mlen];
        for (j, yj) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, &val) in vals.iter().enumerate() {
                let phase = (-Complex64::i() * (val * dt)).exp();
                acc += Complex64::new(z[j + mlen * l] * z[mlen * l], 0.0) * phase;
            }
            *yj = acc;
        }

        let est = match &prev_y {
            Some(py) => {
                let mut acc = 0.0;
                for j in 0..mlen {
                    let prev = if j < py.len() {
                        py[j]
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    acc += (y[j] - prev).norm_sqr();
                }
                acc.sqrt()
            }
            None => f64::INFINITY,
        };
        prev_y = Some(y.clone());
        result_y = Some(y);

        if b < 1e-13 {
            happy = true;
            break;
        }
        if est <= opts.tol && m >= 2 {
            happy = true;
            break;
        }
        if m + 1 == opts.krylov_dim {
            if est > opts.tol {
                return Err(CoreError::KrylovBreakdown {
                    residual: est,
                    tol: opts.tol,
                });
            }
            happy = true;
            break;
        }
        beta.push(b);
        let mut next = w;
        let inv = 1.0 / b;
        for z in next.iter_mut() {
            *z *= inv;
        }
        basis.push(next);
    }
    debug_assert!(happy);

    let y = result_y.unwrap();
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (j, qj) in basis.iter().enumerate().take(y.len()) {
        let c = y[j] * psi_norm;
        for (o, q) in out.iter_mut().zip(qj) {
            *o += q * c;
        }
    }
    Ok(ManyBodyState {
        amplitudes: out,
        n_particles: state.n_particles,
        grid: state.grid,
        time: state.time + dt,
        symmetric: state.symmetric,
    })
}

/// One-body reduced kernel, stored as a dense matrix over grid points.
#[derive(Clone)]
pub struct ReducedDensity {
    /// Row-major `m x m` kernel values (continuum normalization: the trace
    /// is `sum_g kernel[g,g] * cell_volume`).
    pub kernel: Vec<Complex64>,
    pub m: usize,
    pub cell_volume: f64,
}

impl ReducedDensity {
    pub fn trace(&self) -> f64 {
        (0..self.m)
            .map(|g| self.kernel[g * self.m + g].re)
            .sum::<f64>()
            * self.cell_volume
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.m {
            for j in 0..self.m {
                worst = worst
                    .max((self.kernel[i * self.m + j] - self.kernel[j * self.m + i].conj()).norm());
            }
        }
        worst
    }

    /// Occupation numbers: eigenvalues of the kernel as an operator
    /// (ascending).
    pub fn occupations(&self) -> Vec<f64> {
        let scaled: Vec<Complex64> = self.kernel.iter().map(|z| z * self.cell_volume).collect();
        crate::linalg::hermitian_eigenvalues(&scaled, self.m)
    }
}

const REDUCED_DENSITY_COST_CAP: usize = 1 << 31;

/// Contracts all but one particle index. For symmetric states every index
/// gives the same kernel; the first index is used and symmetry is checked on
/// small states.
pub fn reduced_density(state: &ManyBodyState) -> Result<ReducedDensity> {
    let m = state.one_body_dim();
    let rest: usize = state.total_dim() / m;
    if m * m * rest > REDUCED_DENSITY_COST_CAP {
        return Err(CoreError::Capability(format!(
            "reduced density contraction of {} x {} x {} exceeds the dense cap; \
             use the operator-based trace distance instead",
            m, m, rest
        )));
    }
    let w = state.config_volume() / state.grid.cell_volume(); // cell^(N-1)
                                                              // particle 0 is the slowest index: psi reshapes to (m, rest)
    let psi = &state.amplitudes;
    let mut kernel = vec![Complex64::new(0.0, 0.0); m * m];
    for g in 0..m {
        for h in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            let (bg, bh) = (g * rest, h * rest);
            for r in 0..rest {
                acc += psi[bg + r] * psi[bh + r].conj();
            }
            kernel[g * m + h] = acc * w;
        }
    }
    let rd = ReducedDensity {
        kernel,
        m,
        cell_volume: state.grid.cell_volume(),
    };

    // cross-check the index independence claim on small symmetric states
    if state.symmetric && state.total_dim() <= 1 << 16 && state.n_particles >= 2 {
        let m1 = reduced_density_for_particle(state, 1);
        let mut worst: f64 = 0.0;
        for (a, b) in rd.kernel.iter().zip(&m1) {
            worst = worst.max((a - b).norm());
        }
        if worst > 1e-8 {
            return Err(CoreError::Parameter(format!(
                "state flagged symmetric but particle kernels differ by {worst:.3e}"
            )));
        }
    }
    Ok(rd)
}

fn reduced_density_for_particle(state: &ManyBodyState, particle: usize) -> Vec<Complex64> {
    let m = state.one_body_dim();
    let w = state.config_volume() / state.grid.cell_volume();
    let stride = m.pow((state.n_particles - 1 - particle) as u32);
    let total = state.total_dim();
    let mut kernel = vec![Complex64::new(0.0, 0.0); m * m];
    for flat in 0..total {
        let g = (flat / stride) % m;
        let base = flat - g * stride;
        let amp = state.amplitudes[flat];
        for h in 0..m {
            let other = base + h * stride;
            kernel[g * m + h] += amp * state.amplitudes[other].conj() * w;
        }
    }
    kernel
}

/// Trace distance `Tr |gamma - |phi><phi||` via a dense eigendecomposition
/// of the Hermitian difference. Values lie in `[0, 2]`.
pub fn trace_distance(gamma: &ReducedDensity, phi: &GPField) -> Result<f64> {
    if gamma.m != phi.grid.num_points() {
        return Err(CoreError::DimensionMismatch(
            "kernel and field live on different grids".into(),
        ));
    }
    let m = gamma.m;
    let w = gamma.cell_volume;
    let mut diff = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..m {
        for j in 0..m {
            let proj = phi.values[i] * phi.values[j].conj();
            diff[i * m + j] = (gamma.kernel[i * m + j] - proj) * w;
        }
    }
    let vals = crate::linalg::hermitian_eigenvalues(&diff, m);
    Ok(vals.iter().map(|v| v.abs()).sum())
}

/// Trace distance computed without materializing the kernel.
///
/// For a positive semidefinite unit-trace kernel and a rank-one projector,
/// the difference has at most one negative eigenvalue and zero trace, so the
/// trace norm equals `-2 lambda_min`; that extreme eigenvalue is found by
/// operator Lanczos with `gamma v` evaluated through two tensor
/// contractions.
pub fn trace_distance_operator(state: &ManyBodyState, phi: &GPField) -> Result<f64> {
    let m = state.one_body_dim();
    if m != phi.grid.num_points() {
        return Err(CoreError::DimensionMismatch(
            "state and field live on different grids".into(),
        ));
    }
    let rest = state.total_dim() / m;
    let w_cell = state.grid.cell_volume();
    let w_rest = state.config_volume() / w_cell;
    let psi = &state.amplitudes;
    let phi_vals = &phi.values;

    let apply = |v: &[Complex64], out: &mut [Complex64]| {
        // t[r] = sum_h conj(psi[h, r]) v[h] * cell
        let mut t = vec![Complex64::new(0.0, 0.0); rest];
        for h in 0..m {
            let vh = v[h] * w_cell;
            let base = h * rest;
            for r in 0..rest {
                t[r] += psi[base + r].conj() * vh;
            }
        }
        // (gamma v)[g] = sum_r psi[g, r] t[r] * cell^(N-1)
        for (g, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            let base = g * rest;
            for r in 0..rest {
                acc += psi[base + r] * t[r];
            }
            *o = acc * w_rest;
        }
        // subtract the projector |phi><phi| v
        let overlap = inner(phi_vals, v, w_cell);
        for (o, p) in out.iter_mut().zip(phi_vals) {
            *o -= p * overlap;
        }
    };
    let (lambda_min, _) = lanczos_extreme(m, apply, true, 400, 1e-12, 20_260_101)?;
    Ok((-2.0 * lambda_min).max(0.0))
}

#[cfg(test)]
mod tests;
