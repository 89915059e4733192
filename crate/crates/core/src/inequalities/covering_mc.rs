//! Monte-Carlo check of the covered-pair counting bound: among `m` points in
//! a ball of radius `R`, the number of unordered pairs sharing a lattice
//! cube of side `r1/sqrt(3)` is at least `m^2/(2 n1) - m/2`, because at most
//! `n1` cubes meet the ball and same-cube points are closer than `r1`.

use crate::error::Result;
use crate::potentials::PotentialSpec;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

#[derive(Debug, Clone, Serialize)]
pub struct CoveringBoundReport {
    pub samples: usize,
    pub points_per_sample: usize,
    pub n1: u64,
    /// Smallest observed `pairs - bound` margin (nonnegative means the bound
    /// held on every configuration).
    pub worst_margin: f64,
    pub violations: usize,
    /// Smallest observed same-cube pair count across adversarial
    /// configurations.
    pub adversarial_min_pairs: usize,
}

fn same_cube_pairs(points: &[[f64; 3]], side: f64) -> usize {
    let mut cells: HashMap<(i64, i64, i64), usize> = HashMap::new();
    for p in points {
        let key = (
            (p[0] / side).floor() as i64,
            (p[1] / side).floor() as i64,
            (p[2] / side).floor() as i64,
        );
        *cells.entry(key).or_insert(0) += 1;
    }
    cells.values().map(|&c| c * (c - 1) / 2).sum()
}

fn pair_bound(m: usize, n1: u64) -> f64 {
    let mf = m as f64;
    mf * mf / (2.0 * n1 as f64) - mf / 2.0
}

/// Samples `samples` uniform configurations of `m` points in the ball of
/// radius `R` and verifies the same-cube pair bound on each, plus two
/// adversarial families (all points coincident; points spread one per cube).
pub fn covering_energy_bound_check(
    spec: &PotentialSpec,
    samples: usize,
    points_per_sample: usize,
    seed: u64,
) -> Result<CoveringBoundReport> {
    let n1 = crate::potentials::covering_number(spec.r1, spec.big_r)?;
    let side = spec.r1 / 3.0f64.sqrt();
    let radius = spec.big_r;
    let m = points_per_sample;
    let bound = pair_bound(m, n1);

    let results: Vec<(f64, bool)> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s as u64));
            let mut points = Vec::with_capacity(m);
            while points.len() < m {
                let x = rng.random::<f64>() * 2.0 - 1.0;
                let y = rng.random::<f64>() * 2.0 - 1.0;
                let z = rng.random::<f64>() * 2.0 - 1.0;
                if x * x + y * y + z * z <= 1.0 {
                    points.push([x * radius, y * radius, z * radius]);
                }
            }
            let pairs = same_cube_pairs(&points, side) as f64;
            (pairs - bound, pairs < bound)
        })
        .collect();

    let mut worst_margin = f64::INFINITY;
    let mut violations = 0;
    for (margin, violated) in results {
        worst_margin = worst_margin.min(margin);
        if violated {
            violations += 1;
        }
    }

    // adversarial family 1: all points coincident -> m(m-1)/2 pairs
    let coincident = vec![[0.1 * radius, 0.0, 0.0]; m];
    let coincident_pairs = same_cube_pairs(&coincident, side);
    if (coincident_pairs as f64) < bound {
        violations += 1;
    }
    worst_margin = worst_margin.min(coincident_pairs as f64 - bound);

    // adversarial family 2: spread points across distinct cube centers
    // inside the ball (zero same-cube pairs; the bound must be nonpositive
    // whenever that many distinct cubes fit)
    let mut spread = Vec::new();
    let reach = (radius / side).floor() as i64;
    'fill: for i in -reach..=reach {
        for j in -reach..=reach {
            for kk in -reach..=reach {
                let p = [
                    (i as f64 + 0.5) * side,
                    (j as f64 + 0.5) * side,
                    (kk as f64 + 0.5) * side,
                ];
                if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= radius * radius {
                    spread.push(p);
                    if spread.len() == m {
                        break 'fill;
                    }
                }
            }
        }
    }
    let spread_pairs = same_cube_pairs(&spread, side);
    if (spread_pairs as f64) < pair_bound(spread.len(), n1) {
        violations += 1;
    }

    Ok(CoveringBoundReport {
        samples,
        points_per_sample: m,
        n1,
        worst_margin,
        violations,
        adversarial_min_pairs: coincident_pairs.min(spread_pairs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> PotentialSpec {
        PotentialSpec::square(0.25, 0.5, 1.0, 50.0, 1e-4, 0.5).unwrap()
    }

    #[test]
    fn single_point_bound_is_trivial() {
        let report = covering_energy_bound_check(&canonical(), 50, 1, 7).unwrap();
        assert_eq!(report.violations, 0);
        // bound for m = 1 is negative, pairs are zero
        assert!(report.worst_margin >= 0.0);
    }

    #[test]
    fn random_configurations_never_violate() {
        let report = covering_energy_bound_check(&canonical(), 2000, 20, 11).unwrap();
        assert_eq!(report.violations, 0, "report: {report:?}");
        assert!(report.worst_margin >= 0.0);
    }

    #[test]
    fn coincident_points_saturate_pair_count() {
        let report = covering_energy_bound_check(&canonical(), 1, 12, 3).unwrap();
        // coincident family contributes m(m-1)/2 = 66 pairs
        assert!(report.adversarial_min_pairs <= 66);
        assert_eq!(report.violations, 0);
    }
}
