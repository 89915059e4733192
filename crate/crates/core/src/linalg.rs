//! Dense and iterative eigensolvers sized for this crate's problems:
//! symmetric tridiagonal matrices from radial discretizations, small Krylov
//! matrices, and Hermitian kernels/operators applied as closures.

use crate::error::{CoreError, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below
/// `lambda`, counted with the Sturm sequence (negative LDLt pivots).
pub fn sturm_count(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    debug_assert_eq!(off.len() + 1, n);
    let guard = 1e-300;
    let mut count = 0usize;
    let mut q = diag[0] - lambda;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let q_safe = if q.abs() < guard {
            if q >= 0.0 {
                guard
            } else {
                -guard
            }
        } else {
            q
        };
        q = (diag[i] - lambda) - off[i - 1] * off[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin bounds for a symmetric tridiagonal matrix.
fn tridiag_bounds(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i + 1 < n {
            radius += off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    (lo, hi)
}

/// k-th smallest eigenvalue (0-based) of a symmetric tridiagonal matrix by
/// Sturm bisection, to absolute tolerance `tol`.
pub fn tridiag_eigenvalue_sturm(diag: &[f64], off: &[f64], k: usize, tol: f64) -> f64 {
    let (mut lo, mut hi) = tridiag_bounds(diag, off);
    while hi - lo > tol.max((hi.abs() + lo.abs()) * 1e-15) {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All eigenvalues (ascending), and optionally the orthonormal eigenvectors,
/// of a symmetric tridiagonal matrix, by the implicit-shift QL iteration.
///
/// Eigenvectors are returned column-major: `z[i + n * j]` is component `i`
/// of eigenvector `j`.
pub fn tridiag_eigen_ql(
    diag: &[f64],
    off: &[f64],
    with_vectors: bool,
) -> (Vec<f64>, Option<Vec<f64>>) {
    let n = diag.len();
    let mut d = diag.to_vec();
    // e is padded to length n with e[n-1] unused
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = if with_vectors {
        let mut ident = vec![0.0; n * n];
        for i in 0..n {
            ident[i + n * i] = 1.0;
        }
        Some(ident)
    } else {
        None
    };

    for l in 0..n {
        let mut iter = 0;
        loop {
            // find a negligible off-diagonal element
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 50, "QL iteration did not converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zm) = z.as_mut() {
                    for k in 0..n {
                        f = zm[k + n * (i + 1)];
                        zm[k + n * (i + 1)] = s * zm[k + n * i] + c * f;
                        zm[k + n * i] = c * zm[k + n * i] - s * f;
                    }
                }
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // sort ascending, permuting vectors alongside
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = z.map(|zm| {
        let mut out = vec![0.0; n * n];
        for (jnew, &jold) in order.iter().enumerate() {
            out[n * jnew..n * (jnew + 1)].copy_from_slice(&zm[n * jold..n * (jold + 1)]);
        }
        out
    });
    (values, vectors)
}

/// Lowest eigenpair of a symmetric tridiagonal matrix via Lanczos on the
/// shifted inverse `(A - sigma I)^{-1}`, `sigma` below the spectrum.
///
/// Each iteration is one Thomas solve; convergence is fast because the
/// spectral transformation isolates the bottom of the spectrum.
pub fn tridiag_lowest_shift_invert(
    diag: &[f64],
    off: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>)> {
    let n = diag.len();
    // the shift must sit close below the spectrum: a distant shift destroys
    // the separation of the transformed extremes, so seed it with a cheap
    // Sturm bracket of the lowest eigenvalue
    let lo_est = tridiag_eigenvalue_sturm(diag, off, 0, 1e-10 * (1.0 + diag[0].abs()));
    let sigma = lo_est - 1e-4 * (1.0 + lo_est.abs());
    let shifted: Vec<f64> = diag.iter().map(|d| d - sigma).collect();
    let spacing = 0.0;

    let apply = |v: &[f64]| -> Result<Vec<f64>> {
        crate::radial::solve_tridiagonal(&shifted, off, v, spacing)
    };

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut q = vec![0.0; n];
    // deterministic pseudo-random start avoids symmetry-orthogonal initials
    for (i, qi) in q.iter_mut().enumerate() {
        *qi = ((i as f64 + 1.0) * 0.754877666).fract() - 0.5;
    }
    normalize(&mut q);
    basis.push(q.clone());
    let mut prev_theta = f64::NAN;

    for m in 0..max_iter {
        let mut w = apply(&basis[m])?;
        let a = dot(&basis[m], &w);
        alpha.push(a);
        for i in 0..n {
            w[i] -= a * basis[m][i];
        }
        if m > 0 {
            let b = beta[m - 1];
            for i in 0..n {
                w[i] -= b * basis[m - 1][i];
            }
        }
        // full reorthogonalization keeps the tiny problem stable
        for q_prev in &basis {
            let c = dot(q_prev, &w);
            for i in 0..n {
                w[i] -= c * q_prev[i];
            }
        }
        let b = norm(&w);

        // largest Ritz value of the inverse -> lowest eigenvalue of A
        let (vals, vecs) = tridiag_eigen_ql(&alpha, &beta, true);
        let idx = vals.len() - 1;
        let theta = vals[idx];
        let lambda = sigma + 1.0 / theta;
        if m > 2 && (lambda - prev_theta).abs() <= tol * (1.0 + lambda.abs()) {
            let y = &vecs.unwrap()[(alpha.len()) * idx..(alpha.len()) * (idx + 1)];
            let mut v = vec![0.0; n];
            for (j, qj) in basis.iter().enumerate() {
                for i in 0..n {
                    v[i] += y[j] * qj[i];
                }
            }
            normalize(&mut v);
            return Ok((lambda, v));
        }
        prev_theta = lambda;
        if b < 1e-14 {
            // invariant subspace found; current Ritz value is exact
            let y = &vecs.unwrap()[(alpha.len()) * idx..(alpha.len()) * (idx + 1)];
            let mut v = vec![0.0; n];
            for (j, qj) in basis.iter().enumerate() {
                for i in 0..n {
                    v[i] += y[j] * qj[i];
                }
            }
            normalize(&mut v);
            return Ok((lambda, v));
        }
        beta.push(b);
        let mut next = w;
        for x in next.iter_mut() {
            *x /= b;
        }
        basis.push(next);
    }
    Err(CoreError::KrylovBreakdown {
        residual: (prev_theta).abs(),
        tol,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) {
    let n = norm(a);
    for x in a.iter_mut() {
        *x /= n;
    }
}

/// Reduces a Hermitian matrix (row-major, size `n * n`) to a real symmetric
/// tridiagonal matrix with the same spectrum, via Householder reflections.
/// Only the diagonal and the moduli of the off-diagonal are returned.
fn hermitian_to_tridiag(a: &mut [Complex64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    if n == 0 {
        return (d, e);
    }
    let idx = |i: usize, j: usize| i * n + j;

    for k in 0..n.saturating_sub(1) {
        // column below the diagonal
        let mut xnorm2 = 0.0;
        for i in k + 1..n {
            xnorm2 += a[idx(i, k)].norm_sqr();
        }
        let x0 = a[idx(k + 1, k)];
        let xnorm = xnorm2.sqrt();
        if xnorm < 1e-300 {
            e[k] = 0.0;
            continue;
        }
        let phase = if x0.norm() < 1e-300 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        // Householder vector v = x - alpha e1, normalized
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for i in k + 1..n {
            v[i] = a[idx(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 < 1e-300 {
            e[k] = xnorm;
            continue;
        }
        let inv = 1.0 / vnorm2.sqrt();
        for z in v.iter_mut() {
            *z *= inv;
        }
        // A <- (I - 2 v v*) A (I - 2 v v*): p = 2 A v, w = p - (v* p) v,
        // A <- A - v w* - w v*
        let mut p = vec![Complex64::new(0.0, 0.0); n];
        for i in k..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in k + 1..n {
                acc += a[idx(i, j)] * v[j];
            }
            p[i] = acc * 2.0;
        }
        let vp: Complex64 = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
        let mut w = p;
        for i in k..n {
            w[i] -= v[i] * vp;
        }
        for i in k..n {
            for j in k..n {
                let delta = v[i] * w[j].conj() + w[i] * v[j].conj();
                a[idx(i, j)] -= delta;
            }
        }
        e[k] = a[idx(k + 1, k)].norm();
        d[k] = a[idx(k, k)].re;
    }
    for k in 0..n {
        d[k] = a[idx(k, k)].re;
    }
    (d, e)
}

/// All eigenvalues (ascending) of a Hermitian matrix given row-major.
pub fn hermitian_eigenvalues(a: &[Complex64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    let mut work = a.to_vec();
    let (d, e) = hermitian_to_tridiag(&mut work, n);
    let (vals, _) = tridiag_eigen_ql(&d, &e, false);
    vals
}

/// Extreme eigenvalue of a Hermitian operator given as a closure, by Lanczos
/// with full reorthogonalization. Returns the eigenvalue and Ritz vector.
///
/// `smallest` selects which end of the spectrum is targeted.
pub fn lanczos_extreme<F>(
    dim: usize,
    mut apply: F,
    smallest: bool,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<(f64, Vec<Complex64>)>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let mut q = vec![Complex64::new(0.0, 0.0); dim];
    for z in q.iter_mut() {
        *z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    }
    cnormalize(&mut q);
    basis.push(q);
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut prev = f64::NAN;

    for m in 0..max_iter {
        apply(&basis[m], &mut w);
        let a = basis[m]
            .iter()
            .zip(&w)
            .map(|(x, y)| (x.conj() * y).re)
            .sum::<f64>();
        alpha.push(a);
        for i in 0..dim {
            w[i] -= basis[m][i] * a;
        }
        if m > 0 {
            let b = beta[m - 1];
            for i in 0..dim {
                w[i] -= basis[m - 1][i] * b;
            }
        }
        for q_prev in &basis {
            let c: Complex64 = q_prev.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
            for i in 0..dim {
                w[i] -= q_prev[i] * c;
            }
        }
        let b = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

        let (vals, vecs) = tridiag_eigen_ql(&alpha, &beta, true);
        let idx = if smallest { 0 } else { vals.len() - 1 };
        let theta = vals[idx];
        let converged = m > 2 && (theta - prev).abs() <= tol * (1.0 + theta.abs());
        if converged || b < 1e-13 || m + 1 == max_iter {
            let mlen = alpha.len();
            let y = &vecs.unwrap()[mlen * idx..mlen * (idx + 1)];
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            for (j, qj) in basis.iter().enumerate() {
                let yj = y[j];
                for i in 0..dim {
                    v[i] += qj[i] * yj;
                }
            }
            cnormalize(&mut v);
            return Ok((theta, v));
        }
        prev = theta;
        beta.push(b);
        let mut next = std::mem::replace(&mut w, vec![Complex64::new(0.0, 0.0); dim]);
        for z in next.iter_mut() {
            *z /= b;
        }
        basis.push(next);
    }
    Err(CoreError::KrylovBreakdown {
        residual: f64::NAN,
        tol,
    })
}

fn cnormalize(v: &mut [Complex64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ql_matches_known_spectrum() {
        // Dirichlet Laplacian on 4 points: eigenvalues 2 - 2cos(k pi / 5)
        let diag = vec![2.0; 4];
        let off = vec![-1.0; 3];
        let (vals, vecs) = tridiag_eigen_ql(&diag, &off, true);
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 5.0).cos();
            assert!((v - exact).abs() < 1e-12);
        }
        // eigenvectors orthonormal
        let z = vecs.unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let d: f64 = (0..4).map(|i| z[i + 4 * a] * z[i + 4 * b]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sturm_agrees_with_ql() {
        let diag: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin() * 3.0).collect();
        let off: Vec<f64> = (0..49).map(|i| (i as f64 * 0.3).cos()).collect();
        let (vals, _) = tridiag_eigen_ql(&diag, &off, false);
        for probe in [-3.0, -1.0, 0.0, 0.5, 2.0] {
            let expected = vals.iter().filter(|&&v| v < probe).count();
            assert_eq!(sturm_count(&diag, &off, probe), expected);
        }
    }

    #[test]
    fn shift_invert_finds_lowest() {
        let diag: Vec<f64> = (0..200).map(|i| 2.0 + 0.01 * i as f64).collect();
        let off = vec![-1.0; 199];
        let (vals, _) = tridiag_eigen_ql(&diag, &off, false);
        let (lo, v) = tridiag_lowest_shift_invert(&diag, &off, 1e-12, 300).unwrap();
        assert!((lo - vals[0]).abs() < 1e-9 * (1.0 + vals[0].abs()));
        assert!((norm(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_eigenvalues_match_construction() {
        // A = U D U* for a hand-built unitary mixing of 3 modes
        let n = 3;
        let d = [1.0, -0.5, 2.5];
        let c = |re: f64, im: f64| Complex64::new(re, im);
        // columns of a unitary matrix: a complex 2x2 rotation plus identity
        let u = [
            [c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)],
            [c(0.0, 0.8), c(0.6, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        ];
        let mut a = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = c(0.0, 0.0);
                for k in 0..n {
                    acc += u[i][k] * d[k] * u[j][k].conj();
                }
                a[i * n + j] = acc;
            }
        }
        let vals = hermitian_eigenvalues(&a, n);
        let mut expect = d.to_vec();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (v, e) in vals.iter().zip(&expect) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn lanczos_extreme_on_diagonal_operator() {
        let dim = 400;
        let diag: Vec<f64> = (0..dim).map(|i| (i as f64 * 0.37).sin() * 2.0).collect();
        let apply = |v: &[Complex64], out: &mut [Complex64]| {
            for i in 0..dim {
                out[i] = v[i] * diag[i];
            }
        };
        let (lo, _) = lanczos_extreme(dim, apply, true, 200, 1e-13, 7).unwrap();
        let exact = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((lo - exact).abs() < 1e-9);
    }
}
