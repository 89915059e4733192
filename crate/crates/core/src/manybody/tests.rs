use super::*;
use crate::gp::{gp_evolve, ExternalPotential, GPField};
use crate::grid::PeriodicGrid;
use crate::potentials::PotentialSpec;
use crate::profile::RadialProfile;
use num_complex::Complex64;

fn free_spec() -> PotentialSpec {
    PotentialSpec {
        r1: 0.25,
        r2: 0.5,
        big_r: 1.0,
        lambda_plus: 0.0,
        lambda_minus: 0.0,
        vplus_profile: RadialProfile::zero(),
        vminus_profile: RadialProfile::zero(),
        epsilon: 0.5,
    }
}

fn interacting_spec() -> PotentialSpec {
    PotentialSpec::square(0.25, 0.5, 1.0, 50.0, 1e-4, 0.5).unwrap()
}

fn grid_1d(n: usize) -> PeriodicGrid {
    PeriodicGrid::new(1, n, 8.0)
}

#[test]
fn plane_wave_product_is_kinetic_eigenvector() {
    let grid = grid_1d(16);
    let phi = GPField::plane_wave(grid, &[2]);
    let state = ManyBodyState::product(&phi, 2);
    let h_psi = apply_hamiltonian(&state, &free_spec(), &ExternalPotential::zero()).unwrap();
    let k = 2.0 * std::f64::consts::PI * 2.0 / grid.box_length;
    let expect = 2.0 * k * k;
    for (h, s) in h_psi.amplitudes.iter().zip(&state.amplitudes) {
        assert!((h - s * expect).norm() < 1e-10);
    }
    let e = many_body_energy(&state, &free_spec(), &ExternalPotential::zero()).unwrap();
    assert!((e - expect / 2.0).abs() < 1e-10);
}

#[test]
fn hamiltonian_expectation_is_real() {
    let grid = grid_1d(12);
    let spec = interacting_spec();
    for seed in 0..4 {
        let state = ManyBodyState::random_symmetric(grid, 2, seed);
        let h_psi = apply_hamiltonian(&state, &spec, &ExternalPotential::constant(0.3)).unwrap();
        let e = crate::grid::inner(&state.amplitudes, &h_psi.amplitudes, state.config_volume());
        assert!(
            e.im.abs() < 1e-10 * (1.0 + e.re.abs()),
            "imag part {}",
            e.im
        );
    }
}

#[test]
fn two_body_matches_relative_coordinate_operator() {
    // psi = e^{iK(x1+x2)} g(x1-x2): H psi = e^{iK.} (2K^2 g + (-2 g'' + V1 g))
    let grid = grid_1d(32);
    let n = grid.n;
    let l = grid.box_length;
    let spec = interacting_spec();
    let v1 = crate::potentials::scaled_potential(&spec, 2, 1.0).unwrap();
    let pair = pair_values_by_offset(&grid, &v1);

    // bandlimited periodic g from three modes
    let g_of = |idx_diff: usize| -> Complex64 {
        let rho = idx_diff as f64 * grid.spacing();
        let k1 = 2.0 * std::f64::consts::PI / l;
        Complex64::new(1.0, 0.0)
            + Complex64::new(0.4, 0.1) * (Complex64::i() * (k1 * rho)).exp()
            + Complex64::new(0.2, -0.3) * (Complex64::i() * (2.0 * k1 * rho)).exp()
    };
    let kmode = 1i64;
    let kval = 2.0 * std::f64::consts::PI * kmode as f64 / l;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let phase = kval * (i + j) as f64 * grid.spacing();
            amplitudes[i * n + j] = (Complex64::i() * phase).exp() * g_of((i + n - j) % n);
        }
    }
    let state = ManyBodyState {
        amplitudes,
        n_particles: 2,
        grid,
        time: 0.0,
        symmetric: false,
    };
    let h_psi = apply_hamiltonian(&state, &spec, &ExternalPotential::zero()).unwrap();

    // one-body relative operator on g: -2 d^2/drho^2 + V1(rho)
    let ops = SpectralOps::new();
    let mut g: Vec<Complex64> = (0..n).map(g_of).collect();
    let gk = grid.wavenumbers();
    let mut g_hat = g.clone();
    ops.transform_axis(&mut g_hat, &[n], 0, false);
    for (b, z) in g_hat.iter_mut().enumerate() {
        *z *= 2.0 * gk[b] * gk[b];
    }
    ops.transform_axis(&mut g_hat, &[n], 0, true);
    for (idx, gz) in g.iter_mut().enumerate() {
        *gz = g_hat[idx] + *gz * (2.0 * kval * kval + pair[idx]);
    }

    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let phase = kval * (i + j) as f64 * grid.spacing();
            let expect = (Complex64::i() * phase).exp() * g[(i + n - j) % n];
            worst = worst.max((h_psi.amplitudes[i * n + j] - expect).norm());
        }
    }
    assert!(worst < 1e-9, "worst deviation {worst}");
}

#[test]
fn free_evolution_factorizes() {
    let grid = grid_1d(32);
    let phi = GPField::gaussian(grid, 0.9);
    let state = ManyBodyState::product(&phi, 2);
    let pot = ExternalPotential::zero();
    let spec = free_spec();
    let dt = 0.02;
    let steps = 5;
    let evolved = evolve(&state, &spec, &pot, dt, steps).unwrap();

    let one_body = gp_evolve(&phi, 0.0, &pot, dt * steps as f64, dt, usize::MAX)
        .unwrap()
        .snapshots
        .pop()
        .unwrap();
    let expect = ManyBodyState::product(&one_body, 2);
    assert!(
        evolved.distance(&expect) < 1e-9,
        "distance {}",
        evolved.distance(&expect)
    );
}

#[test]
fn evolution_preserves_norm_and_energy() {
    let grid = grid_1d(16);
    let spec = interacting_spec();
    let pot = ExternalPotential::gaussian_well(0.5, 2.0, 4.0);
    let phi = GPField::gaussian(grid, 1.0);
    let state = ManyBodyState::product(&phi, 2);
    let e0 = many_body_energy(&state, &spec, &pot).unwrap();
    let evolved = evolve(&state, &spec, &pot, 0.01, 20).unwrap();
    assert!((evolved.norm() - 1.0).abs() < 1e-10);
    let e1 = many_body_energy(&evolved, &spec, &pot).unwrap();
    assert!((e1 - e0).abs() < 1e-8, "energy drift {}", (e1 - e0).abs());
}

#[test]
fn driven_evolution_self_converges_second_order() {
    let grid = grid_1d(16);
    let spec = interacting_spec();
    let pot = ExternalPotential::driven_gaussian_well(0.8, 2.0, 4.0, 3.0);
    let phi = GPField::gaussian(grid, 1.0);
    let state = ManyBodyState::product(&phi, 2);
    let t_final = 0.32;
    let run = |dt: f64| evolve(&state, &spec, &pot, dt, (t_final / dt).round() as usize).unwrap();
    let coarse = run(0.04);
    let medium = run(0.02);
    let fine = run(0.01);
    let d12 = coarse.distance(&medium);
    let d23 = medium.distance(&fine);
    let p = (d12 / d23).log2();
    assert!((p - 2.0).abs() < 0.4, "observed order {p}");
}

#[test]
fn reduced_density_of_product_is_rank_one() {
    let grid = grid_1d(24);
    let phi = GPField::gaussian(grid, 1.0);
    let state = ManyBodyState::product(&phi, 3);
    let rd = reduced_density(&state).unwrap();
    assert!((rd.trace() - 1.0).abs() < 1e-10);
    assert!(rd.hermiticity_defect() < 1e-12);
    let occ = rd.occupations();
    assert!((occ.last().unwrap() - 1.0).abs() < 1e-10);
    for v in &occ[..occ.len() - 1] {
        assert!(v.abs() < 1e-10);
    }
}

#[test]
fn symmetrized_excitation_has_half_half_occupations() {
    let grid = grid_1d(24);
    let phi = GPField::plane_wave(grid, &[0]);
    let psi = GPField::plane_wave(grid, &[1]);
    let m = grid.num_points();
    let mut amp = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..m {
        for j in 0..m {
            amp[i * m + j] =
                (phi.values[i] * psi.values[j] + psi.values[i] * phi.values[j]) / 2.0f64.sqrt();
        }
    }
    let mut state = ManyBodyState {
        amplitudes: amp,
        n_particles: 2,
        grid,
        time: 0.0,
        symmetric: true,
    };
    state.normalize();
    let rd = reduced_density(&state).unwrap();
    let occ = rd.occupations();
    let top_two: Vec<f64> = occ.iter().rev().take(2).cloned().collect();
    assert!((top_two[0] - 0.5).abs() < 1e-10, "occ {top_two:?}");
    assert!((top_two[1] - 0.5).abs() < 1e-10);

    // orthogonal-mode counting: exactly one particle departed
    let pk = pk_spectrum(&state, &phi).unwrap();
    assert!((pk[1] - 1.0).abs() < 1e-10, "pk {pk:?}");
}

#[test]
fn random_symmetric_reduced_density_invariants() {
    let grid = grid_1d(12);
    let state = ManyBodyState::random_symmetric(grid, 3, 11);
    assert!(state.symmetry_defect() < 1e-12);
    let rd = reduced_density(&state).unwrap();
    assert!((rd.trace() - 1.0).abs() < 1e-8);
    assert!(rd.hermiticity_defect() < 1e-10);
    let occ = rd.occupations();
    assert!(occ.iter().all(|&v| v > -1e-8), "occupations {occ:?}");
}

#[test]
fn trace_distance_limits() {
    let grid = grid_1d(16);
    let phi = GPField::plane_wave(grid, &[0]);
    let psi = GPField::plane_wave(grid, &[3]);

    // pure condensate: distance zero
    let product = ManyBodyState::product(&phi, 2);
    let rd = reduced_density(&product).unwrap();
    assert!(trace_distance(&rd, &phi).unwrap() < 1e-10);

    // orthogonal pure state: distance two
    let product_other = ManyBodyState::product(&psi, 2);
    let rd2 = reduced_density(&product_other).unwrap();
    assert!((trace_distance(&rd2, &phi).unwrap() - 2.0).abs() < 1e-10);
}

#[test]
fn trace_distance_mixed_oracle_and_operator_route() {
    // gamma = (1-t)|phi><phi| + t|psi><psi| has distance 2t
    let grid = grid_1d(16);
    let phi = GPField::plane_wave(grid, &[0]);
    let psi = GPField::plane_wave(grid, &[2]);
    let m = grid.num_points();
    let t = 0.3;
    let w = grid.cell_volume();

    let mut kernel = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..m {
        for j in 0..m {
            kernel[i * m + j] = (1.0 - t) * phi.values[i] * phi.values[j].conj()
                + t * psi.values[i] * psi.values[j].conj();
        }
    }
    let rd = ReducedDensity {
        kernel,
        m,
        cell_volume: w,
    };
    let dist = trace_distance(&rd, &phi).unwrap();
    assert!((dist - 2.0 * t).abs() < 1e-10, "distance {dist}");

    // operator route agrees with the dense route on a generic state
    let state = ManyBodyState::random_symmetric(grid, 2, 5);
    let rd = reduced_density(&state).unwrap();
    let dense = trace_distance(&rd, &phi).unwrap();
    let operator = trace_distance_operator(&state, &phi).unwrap();
    assert!(
        (dense - operator).abs() < 1e-8,
        "dense {dense} vs operator {operator}"
    );
}

#[test]
fn projector_algebra() {
    let grid = grid_1d(12);
    let phi = GPField::gaussian(grid, 1.0);
    let state = ManyBodyState::random_symmetric(grid, 2, 3);

    let p = pq_project(&state, &phi, 0, Projector::P).unwrap();
    let pp = pq_project(&p, &phi, 0, Projector::P).unwrap();
    assert!(p.distance(&pp) < 1e-12, "p not idempotent");

    let q = pq_project(&state, &phi, 0, Projector::Q).unwrap();
    let pq = pq_project(&q, &phi, 0, Projector::P).unwrap();
    assert!(pq.norm() < 1e-12, "p q != 0");

    // p + q = identity
    let mut sum = p.clone();
    for (z, qz) in sum.amplitudes.iter_mut().zip(&q.amplitudes) {
        *z += qz;
    }
    assert!(sum.distance(&state) < 1e-12);

    // product state: p acts as identity, q annihilates
    let product = ManyBodyState::product(&phi, 2);
    let p_on_product = pq_project(&product, &phi, 1, Projector::P).unwrap();
    assert!(p_on_product.distance(&product) < 1e-12);
    let q_on_product = pq_project(&product, &phi, 1, Projector::Q).unwrap();
    assert!(q_on_product.norm() < 1e-12);
}

#[test]
fn pk_spectrum_product_and_sum_rule() {
    let grid = grid_1d(12);
    let phi = GPField::gaussian(grid, 1.0);
    let product = ManyBodyState::product(&phi, 3);
    let pk = pk_spectrum(&product, &phi).unwrap();
    assert!((pk[0] - 1.0).abs() < 1e-12);
    for &p in &pk[1..] {
        assert!(p.abs() < 1e-12);
    }

    for seed in [1u64, 9, 23] {
        let state = ManyBodyState::random_symmetric(grid, 3, seed);
        let pk = pk_spectrum(&state, &phi).unwrap();
        let total: f64 = pk.iter().sum();
        assert!((total - 1.0).abs() < 1e-10, "sum {total}");
        assert!(pk.iter().all(|&p| p >= -1e-12));
    }
}

#[test]
fn pk_spectrum_matches_brute_force_two_mode() {
    // independent oracle: expand a random N=2 state over the four projector
    // branches by direct tensor contraction with explicit loops
    let grid = grid_1d(10);
    let phi = GPField::gaussian(grid, 1.2);
    let state = ManyBodyState::random_symmetric(grid, 2, 77);
    let pk = pk_spectrum(&state, &phi).unwrap();

    let m = grid.num_points();
    let w = grid.cell_volume();
    let psi = &state.amplitudes;
    // overlaps o1(j) = sum_i conj(phi_i) psi[i,j] w, o2(i) likewise
    let mut o_first = vec![Complex64::new(0.0, 0.0); m];
    let mut o_second = vec![Complex64::new(0.0, 0.0); m];
    let mut oo = Complex64::new(0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            o_first[j] += phi.values[i].conj() * psi[i * m + j] * w;
            o_second[i] += phi.values[j].conj() * psi[i * m + j] * w;
        }
    }
    for j in 0..m {
        oo += phi.values[j].conj() * o_first[j] * w;
    }
    // branch norms
    let mut norms = [0.0f64; 3]; // k = 0, 1, 2
    for i in 0..m {
        for j in 0..m {
            let pp = phi.values[i] * phi.values[j] * oo;
            let p1q2 = phi.values[i] * o_first[j] - phi.values[i] * phi.values[j] * oo;
            let q1p2 = phi.values[j] * o_second[i] - phi.values[i] * phi.values[j] * oo;
            let qq = psi[i * m + j] - phi.values[i] * o_first[j] - phi.values[j] * o_second[i]
                + phi.values[i] * phi.values[j] * oo;
            norms[0] += pp.norm_sqr();
            norms[1] += p1q2.norm_sqr() + q1p2.norm_sqr();
            norms[2] += qq.norm_sqr();
        }
    }
    for k in 0..3 {
        let expect = norms[k] * w * w;
        assert!(
            (pk[k] - expect).abs() < 1e-12,
            "k = {k}: {} vs {}",
            pk[k],
            expect
        );
    }
}

#[test]
fn weighted_expectations() {
    let grid = grid_1d(12);
    let phi = GPField::gaussian(grid, 1.0);
    for (n, seed) in [(2usize, 4u64), (3, 8)] {
        let state = ManyBodyState::random_symmetric(grid, n, seed);
        // resolution of identity
        let one = weighted_expectation(&state, &phi, &CountingWeight::uniform(n)).unwrap();
        assert!((one - 1.0).abs() < 1e-10);
        // mean departed fraction equals the one-particle departure weight
        let lin = weighted_expectation(&state, &phi, &CountingWeight::linear(n)).unwrap();
        let q1 = pq_project(&state, &phi, 0, Projector::Q).unwrap();
        let q1_sq = q1.norm().powi(2);
        assert!((lin - q1_sq).abs() < 1e-10, "N={n}: {lin} vs {q1_sq}");
        // the squared sqrt weight is the linear weight
        let n_hat_sq =
            weighted_expectation(&state, &phi, &CountingWeight::sqrt(n).squared()).unwrap();
        assert!((n_hat_sq - q1_sq).abs() < 1e-12);
    }
    // counting on the pure product vanishes
    let product = ManyBodyState::product(&phi, 3);
    let nh = weighted_expectation(&product, &phi, &CountingWeight::sqrt(3)).unwrap();
    assert!(nh.abs() < 1e-12);
    // the two-regime weight is nonnegative and interpolates to sqrt(k/N)
    let cw = CountingWeight::from_xi(8, 0.2).unwrap();
    assert!(cw.weights.iter().all(|&w| w >= 0.0));
    assert!((cw.weights[8] - 1.0).abs() < 1e-12);
}

#[test]
fn indicator_mask_limits() {
    let grid = grid_1d(8);
    let state = ManyBodyState::random_symmetric(grid, 3, 2);
    // radius beyond the box diameter: every configuration is near
    let big = indicator_masks(&state, 0, 100.0).unwrap();
    assert!(big.near_j.iter().all(|&b| b));
    assert!(big.spectator_pair.iter().all(|&b| b));
    // zero radius: nothing is near
    let none = indicator_masks(&state, 0, 0.0).unwrap();
    assert!(none.near_j.iter().all(|&b| !b));
    assert!(none.spectator_pair.iter().all(|&b| !b));
}

#[test]
fn indicator_masked_norm_matches_quadrature() {
    // Gaussian pair: the masked norm equals the direct sum over the
    // pair-distance region (same grid measure, independent loop)
    let grid = grid_1d(32);
    let phi = GPField::gaussian(grid, 1.1);
    let state = ManyBodyState::product(&phi, 2);
    let radius = 1.3;
    let sets = indicator_sets(&state, 0, radius).unwrap();
    let masked_norm_sq = sets[1].norm().powi(2);

    let m = grid.num_points();
    let mut direct = 0.0;
    for i in 0..m {
        for j in 0..m {
            if grid.min_image_distance(i, j) < radius {
                direct += state.amplitudes[i * m + j].norm_sqr();
            }
        }
    }
    direct *= state.config_volume();
    assert!(
        (masked_norm_sq - direct).abs() < 1e-12,
        "{masked_norm_sq} vs {direct}"
    );
}

#[test]
fn localized_gradient_gauge_invariance_and_product_limit() {
    let grid = grid_1d(16);
    let phi = GPField::gaussian(grid, 1.0);
    let state = ManyBodyState::random_symmetric(grid, 2, 6);
    let base = localized_gradient_diagnostic(&state, &phi).unwrap();

    let mut rotated = state.clone();
    let phase = (Complex64::i() * 0.7).exp();
    for z in rotated.amplitudes.iter_mut() {
        *z *= phase;
    }
    let rot = localized_gradient_diagnostic(&rotated, &phi).unwrap();
    assert!((base - rot).abs() < 1e-10 * (1.0 + base));

    // zero radius: both localized pieces vanish on the product state
    let product = ManyBodyState::product(&phi, 2);
    let v = localized_gradient_diagnostic_with_radius(&product, &phi, 0.0).unwrap();
    assert!(v.abs() < 1e-12);
}
