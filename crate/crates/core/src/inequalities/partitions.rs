//! Half/half particle partitions: exact membership ratios from enumeration,
//! the interaction splitting across partition classes, and the operator-level
//! identity that reassembles the localized Hamiltonian from its partition
//! pieces on a tiny discretization.

use crate::error::{CoreError, Result};
use crate::grid::PeriodicGrid;
use crate::potentials::PotentialSpec;
use serde::Serialize;
use std::collections::BTreeMap;

/// Exact rational from enumeration counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl Ratio {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0);
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let sign = if den < 0 { -1 } else { 1 };
        Ratio {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

impl std::ops::Add for Ratio {
    type Output = Ratio;
    fn add(self, rhs: Ratio) -> Ratio {
        Ratio::new(self.num * rhs.den + rhs.num * self.den, self.den * rhs.den)
    }
}

/// Enumerated membership ratios of the ordered half/half partitions.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionStats {
    pub n: usize,
    /// Keys: single_pi1, pair_11, pair_12, pair_21, pair_22.
    pub ratios: BTreeMap<String, Ratio>,
}

impl PartitionStats {
    pub fn ratio(&self, key: &str) -> Ratio {
        self.ratios[key]
    }
}

pub const PARTITION_MIN_N: usize = 4;
pub const PARTITION_MAX_N: usize = 12;

/// Enumerates all ordered partitions `(pi1, pi2)` of `{0..N}` with
/// `|pi1| = N/2` (even) or `(N-1)/2` (odd) and returns the exact membership
/// ratios for a fixed particle and a fixed ordered pair.
pub fn partition_identities(n: usize) -> Result<PartitionStats> {
    if !(PARTITION_MIN_N..=PARTITION_MAX_N).contains(&n) {
        return Err(CoreError::Capability(format!(
            "partition enumeration supports {PARTITION_MIN_N} <= N <= {PARTITION_MAX_N}, got {n}"
        )));
    }
    let half = if n % 2 == 0 { n / 2 } else { (n - 1) / 2 };
    let mut total = 0i64;
    let mut single = 0i64;
    let (mut c11, mut c12, mut c21, mut c22) = (0i64, 0i64, 0i64, 0i64);

    // enumerate subsets of {0..n} of size `half` as bitmasks
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != half {
            continue;
        }
        total += 1;
        let in1 = |j: usize| mask & (1 << j) != 0;
        if in1(0) {
            single += 1;
        }
        match (in1(0), in1(1)) {
            (true, true) => c11 += 1,
            (true, false) => c12 += 1,
            (false, true) => c21 += 1,
            (false, false) => c22 += 1,
        }
    }

    let mut ratios = BTreeMap::new();
    ratios.insert("single_pi1".into(), Ratio::new(single, total));
    ratios.insert("pair_11".into(), Ratio::new(c11, total));
    ratios.insert("pair_12".into(), Ratio::new(c12, total));
    ratios.insert("pair_21".into(), Ratio::new(c21, total));
    ratios.insert("pair_22".into(), Ratio::new(c22, total));
    Ok(PartitionStats { n, ratios })
}

/// Largest pointwise defect of the interaction splitting identity
/// `(U_11 + U_12 + U_22) / 4 = U` with `U_11 = U_22 = U+`,
/// `U_12 = 2 U+ - 4 U-`, sampled across the support.
pub fn pair_splitting_identity_defect(spec: &PotentialSpec) -> f64 {
    let mut worst: f64 = 0.0;
    let samples = 4096;
    for i in 0..=samples {
        let r = spec.big_r * i as f64 / samples as f64;
        let u_plus = spec.v_plus(r);
        let u_minus = spec.v_minus(r);
        let u11 = u_plus;
        let u22 = u_plus;
        let u12 = 2.0 * u_plus - 4.0 * u_minus;
        let rebuilt = 0.25 * (u11 + u12 + u22);
        worst = worst.max((rebuilt - spec.v(r)).abs());
    }
    worst
}

/// Defect of the operator identity `H_P = H1/2 + sum_{j in pi1} H2_j` on a
/// tiny `N = 3`, `d = 1` discretization, as dense matrices (max-abs entry of
/// the difference relative to the largest entry of `H_P`).
///
/// `H_P` carries the partition `pi1 = {0}`, `pi2 = {1, 2}`. The pieces split
/// the attractive part of the cross interaction by cell occupancy: when the
/// probe cell of particle 0 has at least `2 n1` spectator particles within
/// reach, the attraction is charged to the potential-only piece, otherwise
/// to the kinetic piece. The identity must hold for every threshold;
/// `n1_override` picks the occupancy threshold (pass 1 to exercise the
/// crowded branch at three particles, or None for the spec's covering
/// number).
pub fn hamiltonian_partition_identity(
    spec: &PotentialSpec,
    n_grid: usize,
    n1_override: Option<u64>,
) -> Result<f64> {
    let grid = PeriodicGrid::new(1, n_grid, 8.0 * spec.big_r);
    let l = grid.box_length;
    let m = grid.num_points();
    let dim = m * m * m;
    let r_tilde = 2.0 * spec.big_r;

    // 1D cells of length at most r1/sqrt(3), dividing the box exactly
    let cell_target = spec.r1 / 3.0f64.sqrt();
    let n_cells = (l / cell_target).ceil() as usize;
    let cell = l / n_cells as f64;
    let n1 = match n1_override {
        Some(v) => v as i64,
        None => crate::potentials::covering_number(spec.r1, spec.big_r)? as i64,
    };

    let pos = |g: usize| g as f64 * grid.spacing();
    let min_image = |a: f64, b: f64| {
        let mut d = (a - b).rem_euclid(l);
        if d > 0.5 * l {
            d = l - d;
        }
        d
    };

    // |G(cell)|: the largest number of spectator particles within distance R
    // of a probe point at wrapped distance <= 2R from the cell
    let big_r = spec.big_r;
    let g_count = |cell_idx: usize, x1: f64, x2: f64| -> i64 {
        let lo = cell_idx as f64 * cell;
        let hi = lo + cell;
        let mid_cell = 0.5 * (lo + hi);
        let window = 2.0 * big_r;
        let in_window = |y: f64| {
            let d = (min_image(y, mid_cell) - 0.5 * cell).max(0.0);
            d <= window + 1e-12
        };
        let mut candidates = vec![
            lo,
            hi,
            (lo - window).rem_euclid(l),
            (hi + window).rem_euclid(l),
            x1,
            x2,
            (0.5 * (x1 + x2)).rem_euclid(l),
            (0.5 * (x1 + x2) + 0.5 * l).rem_euclid(l),
        ];
        for &x in &[x1, x2] {
            candidates.push((x + big_r * (1.0 - 1e-12)).rem_euclid(l));
            candidates.push((x - big_r * (1.0 - 1e-12)).rem_euclid(l));
        }
        let mut best = 0i64;
        for &y in &candidates {
            if !in_window(y) {
                continue;
            }
            let mut count = 0i64;
            for &x in &[x1, x2] {
                if min_image(y, x) <= big_r + 1e-12 {
                    count += 1;
                }
            }
            best = best.max(count);
        }
        best
    };

    // one-body spectral kinetic matrix -2 d^2/dx^2 (real symmetric circulant)
    let k = grid.wavenumbers();
    let mut kin1 = vec![0.0f64; m * m];
    for a in 0..m {
        for b in 0..m {
            let mut acc = 0.0;
            for (bin, kk) in k.iter().enumerate() {
                let phase =
                    2.0 * std::f64::consts::PI * bin as f64 * (a as f64 - b as f64) / m as f64;
                acc += kk * kk * phase.cos();
            }
            kin1[a * m + b] = 2.0 * acc / m as f64;
        }
    }

    let u_plus = |r: f64| spec.v_plus(r);
    let u_minus = |r: f64| spec.v_minus(r);
    let cell_of = |x: f64| ((x / cell) as usize).min(n_cells - 1);
    let decompose = |flat: usize| (flat / (m * m), (flat / m) % m, flat % m);

    // diagonal (multiplication) parts of the three operators
    let mut diag_hp = vec![0.0f64; dim];
    let mut diag_h1 = vec![0.0f64; dim];
    let mut diag_h2 = vec![0.0f64; dim];
    let mut mask_c0 = vec![0.0f64; dim];
    for flat in 0..dim {
        let (g0, g1, g2) = decompose(flat);
        let (x0, x1, x2) = (pos(g0), pos(g1), pos(g2));
        let d01 = min_image(x0, x1);
        let d02 = min_image(x0, x2);
        let d12 = min_image(x1, x2);
        // reach sets: particles other than j closer than R~ to each other
        let c0 = if d12 <= r_tilde { 1.0 } else { 0.0 };
        let c1 = if d02 <= r_tilde { 1.0 } else { 0.0 };
        let c2 = if d01 <= r_tilde { 1.0 } else { 0.0 };
        mask_c0[flat] = c0;

        let u12_of = |d: f64| 2.0 * u_plus(d) - 4.0 * u_minus(d);

        // H_P: cross terms (i in pi2, j = 0) plus the pi2 pair (both orders)
        diag_hp[flat] += c0 * 0.5 * (u12_of(d01) + u12_of(d02));
        diag_hp[flat] += 0.5 * u_plus(d12) * (c1 + c2);

        // H1: pi2-pair interaction (both orders, coefficient one) plus the
        // occupancy-gated attractive cross part
        diag_h1[flat] += u_plus(d12) * (c1 + c2);
        let crowded = g_count(cell_of(x0), x1, x2) >= 2 * n1;
        if crowded {
            diag_h1[flat] -= c0 * 4.0 * (u_minus(d01) + u_minus(d02));
        } else {
            diag_h2[flat] -= c0 * 0.5 * 4.0 * (u_minus(d01) + u_minus(d02));
        }

        // H2: the repulsive half of the cross term
        diag_h2[flat] += c0 * 0.5 * 2.0 * (u_plus(d01) + u_plus(d02));
    }

    // assemble dense matrices: both sides carry -2 Delta_0 1_{C0}
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for row in 0..dim {
        let (r0, r1v, r2v) = decompose(row);
        for col in 0..dim {
            let (c0i, c1i, c2i) = decompose(col);
            let kinetic = if r1v == c1i && r2v == c2i {
                kin1[r0 * m + c0i] * mask_c0[col]
            } else {
                0.0
            };
            let lhs = kinetic + if row == col { diag_hp[row] } else { 0.0 };
            let rhs = kinetic
                + if row == col {
                    0.5 * diag_h1[row] + diag_h2[row]
                } else {
                    0.0
                };
            scale = scale.max(lhs.abs());
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst / scale.max(1e-300))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_ratios_match_closed_forms() {
        for n in [5usize, 7, 9, 11] {
            let stats = partition_identities(n).unwrap();
            let nf = n as i64;
            assert_eq!(stats.ratio("single_pi1"), Ratio::new(nf - 1, 2 * nf));
            assert_eq!(stats.ratio("pair_11"), Ratio::new(nf - 3, 4 * nf));
            assert_eq!(stats.ratio("pair_12"), Ratio::new(nf + 1, 4 * nf));
            assert_eq!(stats.ratio("pair_21"), Ratio::new(nf + 1, 4 * nf));
            assert_eq!(stats.ratio("pair_22"), Ratio::new(nf + 1, 4 * nf));
        }
    }

    #[test]
    fn five_particle_pair_count_brute_force() {
        // independent count: subsets of size 2 from \{0..5\} containing both
        // fixed particles: C(3,0) over C(5,2)
        let stats = partition_identities(5).unwrap();
        assert_eq!(stats.ratio("pair_11"), Ratio::new(1, 10));
    }

    #[test]
    fn even_ratios_exact_values() {
        for n in [4usize, 6, 8] {
            let stats = partition_identities(n).unwrap();
            let nf = n as i64;
            assert_eq!(stats.ratio("single_pi1"), Ratio::new(1, 2));
            // exact enumeration values carry the 1/(N-1) finite-size factor
            assert_eq!(stats.ratio("pair_11"), Ratio::new(nf - 2, 4 * (nf - 1)));
            assert_eq!(stats.ratio("pair_22"), Ratio::new(nf - 2, 4 * (nf - 1)));
            assert_eq!(stats.ratio("pair_12"), Ratio::new(nf, 4 * (nf - 1)));
            assert_eq!(stats.ratio("pair_21"), Ratio::new(nf, 4 * (nf - 1)));
        }
    }

    #[test]
    fn pair_ratios_sum_to_one() {
        for n in 4..=9 {
            let stats = partition_identities(n).unwrap();
            let total = stats.ratio("pair_11")
                + stats.ratio("pair_12")
                + stats.ratio("pair_21")
                + stats.ratio("pair_22");
            assert_eq!(total, Ratio::new(1, 1), "N = {n}");
        }
    }

    #[test]
    fn splitting_identity_is_exact() {
        let spec = PotentialSpec::square(0.25, 0.5, 1.0, 50.0, 1e-4, 0.5).unwrap();
        assert_eq!(pair_splitting_identity_defect(&spec), 0.0);
    }

    #[test]
    fn out_of_range_is_capability_error() {
        assert!(partition_identities(3).is_err());
        assert!(partition_identities(13).is_err());
    }
}
