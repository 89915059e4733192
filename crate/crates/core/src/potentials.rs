//! The admissible interaction-potential family and its validation.
//!
//! A potential is a radial pair `V = V+ - V-` with a repulsive core of height
//! at least `lambda_plus` inside `r1`, the positive part supported in `[0, r2]`
//! and the negative part in `[r2, R]`. Admissibility additionally requires
//! a lattice-covering bound `lambda_plus > 8 n2 lambda_minus` and the
//! nonnegativity of a radial energy form on the support ball.

use crate::error::{CoreError, Result};
use crate::profile::RadialProfile;
use crate::radial::{solve_tridiagonal, RadialPotential};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const PROFILE_TOL: f64 = 1e-9;

/// Radial piecewise potential with core/well geometry and validation inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialSpec {
    /// Repulsive-core radius: `V+ >= lambda_plus` on `[0, r1]`.
    pub r1: f64,
    /// Support radius of the positive part.
    pub r2: f64,
    /// Outer support radius of the whole potential.
    #[serde(rename = "R")]
    pub big_r: f64,
    /// Guaranteed core height.
    pub lambda_plus: f64,
    /// Sup norm of the negative part.
    pub lambda_minus: f64,
    /// Nonnegative radial profile of `V+` on `[0, r2]`.
    pub vplus_profile: RadialProfile,
    /// Nonnegative radial profile of `V-` on `[r2, R]`.
    pub vminus_profile: RadialProfile,
    /// The form parameter in `(0, 1)` used by the energy-form check.
    pub epsilon: f64,
}

impl PotentialSpec {
    pub fn new(
        r1: f64,
        r2: f64,
        big_r: f64,
        lambda_plus: f64,
        lambda_minus: f64,
        vplus_profile: RadialProfile,
        vminus_profile: RadialProfile,
        epsilon: f64,
    ) -> Result<Self> {
        let spec = PotentialSpec {
            r1,
            r2,
            big_r,
            lambda_plus,
            lambda_minus,
            vplus_profile,
            vminus_profile,
            epsilon,
        };
        spec.check_invariants()?;
        Ok(spec)
    }

    /// The canonical square barrier/well family: `V+ = lambda_plus` on
    /// `[0, r2]`, `V- = lambda_minus` on `[r2, R]`.
    pub fn square(
        r1: f64,
        r2: f64,
        big_r: f64,
        lambda_plus: f64,
        lambda_minus: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let vminus = if lambda_minus == 0.0 {
            RadialProfile::zero()
        } else {
            RadialProfile::constant(r2, big_r, lambda_minus)
        };
        Self::new(
            r1,
            r2,
            big_r,
            lambda_plus,
            lambda_minus,
            RadialProfile::constant(0.0, r2, lambda_plus),
            vminus,
            epsilon,
        )
    }

    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(CoreError::Parameter(msg));
        if !(self.r1 > 0.0 && self.r1 <= self.r2 && self.r2 < self.big_r) {
            return fail(format!(
                "need 0 < r1 <= r2 < R, got r1={}, r2={}, R={}",
                self.r1, self.r2, self.big_r
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("epsilon must lie in (0,1), got {}", self.epsilon));
        }
        if !self.vplus_profile.is_valid() || !self.vminus_profile.is_valid() {
            return fail("malformed radial profile".into());
        }
        if self.vplus_profile.min_value() < -PROFILE_TOL {
            return fail("V+ profile must be nonnegative".into());
        }
        if self.lambda_minus > 0.0 && self.vminus_profile.min_value() < -PROFILE_TOL {
            return fail("V- profile must be nonnegative".into());
        }
        // supports: V+ in [0, r2], V- in [r2, R]
        for b in self.vplus_profile.breakpoints() {
            if b < -PROFILE_TOL || b > self.r2 + PROFILE_TOL {
                return fail("V+ profile must be supported in [0, r2]".into());
            }
        }
        if self.lambda_minus > 0.0 {
            for b in self.vminus_profile.breakpoints() {
                if b < self.r2 - PROFILE_TOL || b > self.big_r + PROFILE_TOL {
                    return fail("V- profile must be supported in [r2, R]".into());
                }
            }
        }
        if self.vplus_profile.inf_on(0.0, self.r1) < self.lambda_plus - PROFILE_TOL {
            return fail("V+ must dominate lambda_plus on the core [0, r1]".into());
        }
        let vminus_sup = self.vminus_profile.sup();
        if (vminus_sup - self.lambda_minus).abs() > PROFILE_TOL * (1.0 + self.lambda_minus) {
            return fail(format!(
                "sup V- = {} must equal lambda_minus = {}",
                vminus_sup, self.lambda_minus
            ));
        }
        Ok(())
    }

    pub fn v_plus(&self, r: f64) -> f64 {
        if r < self.r2 {
            self.vplus_profile.eval(r)
        } else {
            0.0
        }
    }

    pub fn v_minus(&self, r: f64) -> f64 {
        if r >= self.r2 && r < self.big_r {
            self.vminus_profile.eval(r)
        } else {
            0.0
        }
    }

    /// `V(r) = V+(r) - V-(r)`, compactly supported in the ball of radius `R`.
    pub fn v(&self, r: f64) -> f64 {
        self.v_plus(r) - self.v_minus(r)
    }

    /// Radii where `V` may jump, including the split radius and the support edge.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.vplus_profile.breakpoints();
        b.extend(self.vminus_profile.breakpoints());
        b.push(self.r1);
        b.push(self.r2);
        b.push(self.big_r);
        b.sort_by(|a, c| a.partial_cmp(c).unwrap());
        b.dedup_by(|a, c| (*a - *c).abs() < 1e-15);
        b.retain(|&x| x > 0.0);
        b
    }

    pub fn sup_norm(&self) -> f64 {
        self.vplus_profile.sup().max(self.vminus_profile.sup())
    }
}

impl RadialPotential for PotentialSpec {
    fn eval(&self, r: f64) -> f64 {
        self.v(r)
    }
    fn support_radius(&self) -> f64 {
        self.big_r
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints()
    }
}

/// The rescaled interaction `r -> N^(3 beta - 1) V(N^beta r)`.
#[derive(Debug, Clone)]
pub struct ScaledPotential {
    pub spec: PotentialSpec,
    pub n: u64,
    pub beta: f64,
    /// `N^(3 beta - 1)`
    pub amplitude: f64,
    /// `N^beta`
    pub dilation: f64,
}

/// Returns the scaled interaction; `beta = 1` gives `N^2 V(N x)`.
pub fn scaled_potential(spec: &PotentialSpec, n: u64, beta: f64) -> Result<ScaledPotential> {
    if n < 1 {
        return Err(CoreError::Domain("particle number must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(CoreError::Domain(format!(
            "beta must lie in [0, 1], got {beta}"
        )));
    }
    let nf = n as f64;
    Ok(ScaledPotential {
        spec: spec.clone(),
        n,
        beta,
        amplitude: nf.powf(3.0 * beta - 1.0),
        dilation: nf.powf(beta),
    })
}

impl RadialPotential for ScaledPotential {
    fn eval(&self, r: f64) -> f64 {
        self.amplitude * self.spec.v(self.dilation * r)
    }
    fn support_radius(&self) -> f64 {
        self.spec.big_r / self.dilation
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.spec
            .breakpoints()
            .into_iter()
            .map(|b| b / self.dilation)
            .collect()
    }
}

/// How many closed lattice cubes of side `b1 / sqrt(3)` a closed ball of
/// radius `b2` can meet, maximized over the ball center.
///
/// The count is piecewise constant in the center, so a uniform sweep of one
/// lattice cell at `resolution^3` samples (corners included) attains the
/// maximum away from measure-zero placements. Tangential contacts count:
/// cube-ball intersection is decided by `dist(center, cube) <= b2`.
pub fn covering_number_with_resolution(b1: f64, b2: f64, resolution: usize) -> Result<u64> {
    if !(b1 > 0.0) || !(b2 > 0.0) {
        return Err(CoreError::Domain(format!(
            "covering_number needs positive radii, got b1={b1}, b2={b2}"
        )));
    }
    let side = b1 / 3.0f64.sqrt();
    let r2 = b2 * b2;
    let eps = r2 * 1e-12 + 1e-300;

    // Axis index range that can possibly intersect for a center in [0, side).
    let m_lo = (-(b2 / side)).floor() as i64 - 1;
    let m_hi = (b2 / side).floor() as i64 + 1;
    let width = (m_hi - m_lo + 1) as usize;

    // axis_d2[u][k]: squared axis distance from center u*side/res to cube
    // slab [ (m_lo+k) side, (m_lo+k+1) side ].
    let res = resolution.max(2);
    let axis_d2: Vec<Vec<f64>> = (0..res)
        .map(|u| {
            let x = side * u as f64 / res as f64;
            (0..width)
                .map(|k| {
                    let lo = (m_lo + k as i64) as f64 * side;
                    let hi = lo + side;
                    let d = if x < lo {
                        lo - x
                    } else if x > hi {
                        x - hi
                    } else {
                        0.0
                    };
                    d * d
                })
                .collect()
        })
        .collect();
    let sorted_d2: Vec<Vec<f64>> = axis_d2
        .iter()
        .map(|v| {
            let mut s = v.clone();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s
        })
        .collect();

    // The count is symmetric under permuting axes, so sweep u1 <= u2 <= u3.
    let best = (0..res)
        .into_par_iter()
        .map(|u1| {
            let mut local_best = 0u64;
            for u2 in u1..res {
                for u3 in u2..res {
                    let dx = &axis_d2[u1];
                    let dy = &axis_d2[u2];
                    let dz = &sorted_d2[u3];
                    let mut count = 0u64;
                    for &a in dx {
                        if a > r2 + eps {
                            continue;
                        }
                        for &b in dy {
                            let rem = r2 + eps - a - b;
                            if rem < 0.0 {
                                continue;
                            }
                            count += dz.partition_point(|&c| c <= rem) as u64;
                        }
                    }
                    local_best = local_best.max(count);
                }
            }
            local_best
        })
        .max()
        .unwrap_or(0);
    Ok(best)
}

/// Covering count at the default sweep resolution of 32 samples per axis.
pub fn covering_number(b1: f64, b2: f64) -> Result<u64> {
    covering_number_with_resolution(b1, b2, DEFAULT_SWEEP_RESOLUTION)
}

pub const DEFAULT_SWEEP_RESOLUTION: usize = 32;
pub const DEFAULT_ER_GRID_POINTS: usize = 4096;
pub const DEFAULT_TOL_FORM: f64 = 1e-8;

/// Resolution and tolerance knobs recorded alongside every validation result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationSettings {
    /// Samples per axis of the covering-number center sweep.
    pub sweep_resolution: usize,
    /// Radial intervals of the energy-form discretization.
    pub er_grid_points: usize,
    /// Slack allowed below zero for the energy-form infimum.
    pub tol_form: f64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        ValidationSettings {
            sweep_resolution: DEFAULT_SWEEP_RESOLUTION,
            er_grid_points: DEFAULT_ER_GRID_POINTS,
            tol_form: DEFAULT_TOL_FORM,
        }
    }
}

/// Outcome of the admissibility checks, one flag per condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n1: u64,
    pub n2: u64,
    pub core_check: bool,
    pub sign_structure_check: bool,
    pub lambda_ratio_check: bool,
    /// Infimum of the radial energy form at the spec's own epsilon.
    /// `-f64::MAX` marks a form that is unbounded below.
    pub er_infimum: f64,
    pub er_check: bool,
    pub overall: bool,
    /// Largest epsilon on the grid {0.01, ..., 0.99} passing the form check.
    pub best_epsilon: Option<f64>,
    pub settings: ValidationSettings,
}

/// Minimum of the radial quadratic energy form over trial functions equal to
/// one at the support edge, at the spec's stored epsilon.
///
/// The substitution `u = r phi` turns the form into a one-dimensional
/// quadratic functional with `u(0) = 0` and `u(R) = R` pinned; the interior
/// minimizer solves a tridiagonal linear system, so the discrete minimum is
/// exact up to the mesh. Returns `f64::NEG_INFINITY` when the form is
/// unbounded below (the pinned-boundary operator has a negative eigenvalue).
pub fn er_infimum(spec: &PotentialSpec) -> Result<f64> {
    let n1 = covering_number(spec.r1, spec.big_r)?;
    er_infimum_with(spec, spec.epsilon, n1, DEFAULT_ER_GRID_POINTS)
}

/// Same as [`er_infimum`] with the covering number, epsilon and mesh supplied.
pub fn er_infimum_with(
    spec: &PotentialSpec,
    epsilon: f64,
    n1: u64,
    grid_points: usize,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CoreError::Domain(format!(
            "epsilon must lie in (0,1), got {epsilon}"
        )));
    }
    let r_max = spec.big_r;
    let m = grid_points.max(16) & !1usize; // even interval count
    let h = r_max / m as f64;
    let coeff = n1 as f64 / (1.0 - epsilon);

    // element midpoint coefficient c_e of the zero-order term
    let c_elem: Vec<f64> = (0..m)
        .map(|e| {
            let rm = (e as f64 + 0.5) * h;
            coeff * (2.0 * spec.v_plus(rm) - 4.0 * spec.v_minus(rm))
        })
        .collect();

    // P1 finite elements on u: stiffness 1/h [1,-1;-1,1], zero-order term
    // c_e h/6 [2,1;1,2] per element.
    let n_nodes = m + 1;
    let mut diag = vec![0.0; n_nodes];
    let mut off = vec![0.0; n_nodes - 1];
    for e in 0..m {
        let k = 1.0 / h;
        let c6 = c_elem[e] * h / 6.0;
        diag[e] += k + 2.0 * c6;
        diag[e + 1] += k + 2.0 * c6;
        off[e] += -k + c6;
    }

    // interior system for nodes 1..m-1 with u_0 = 0, u_m = R pinned
    let int_diag = &diag[1..m];
    let int_off = &off[1..m - 1];
    if sturm_negative(int_diag, int_off) {
        return Ok(f64::NEG_INFINITY);
    }
    let mut rhs = vec![0.0; m - 1];
    rhs[m - 2] = -off[m - 1] * r_max;
    let interior = solve_tridiagonal(int_diag, int_off, &rhs, h)?;

    let mut u = Vec::with_capacity(n_nodes);
    u.push(0.0);
    u.extend_from_slice(&interior);
    u.push(r_max);

    // evaluate the quadratic form on the P1 minimizer
    let mut q = 0.0;
    for e in 0..m {
        let (a, b) = (u[e], u[e + 1]);
        let du = (b - a) / h;
        q += du * du * h + c_elem[e] * h / 3.0 * (a * a + a * b + b * b);
    }
    Ok(4.0 * std::f64::consts::PI * (q - r_max))
}

fn sturm_negative(diag: &[f64], off: &[f64]) -> bool {
    crate::linalg::sturm_count(diag, off, 0.0) > 0
}

/// Runs every admissibility check and assembles the report.
pub fn validate_assumption(spec: &PotentialSpec) -> Result<ValidationReport> {
    validate_assumption_with(spec, &ValidationSettings::default())
}

pub fn validate_assumption_with(
    spec: &PotentialSpec,
    settings: &ValidationSettings,
) -> Result<ValidationReport> {
    spec.check_invariants()?;
    let n1 = covering_number_with_resolution(spec.r1, spec.big_r, settings.sweep_resolution)?;
    let n2 = covering_number_with_resolution(spec.r1, 3.0 * spec.big_r, settings.sweep_resolution)?;

    let core_check = spec.vplus_profile.inf_on(0.0, spec.r1) >= spec.lambda_plus - PROFILE_TOL;
    let sign_structure_check = spec.vplus_profile.min_value() >= -PROFILE_TOL
        && (spec.lambda_minus == 0.0 || spec.vminus_profile.min_value() >= -PROFILE_TOL);
    let lambda_ratio_check = spec.lambda_plus > 8.0 * n2 as f64 * spec.lambda_minus;

    let er = er_infimum_with(spec, spec.epsilon, n1, settings.er_grid_points)?;
    let er_check = er >= -settings.tol_form;

    let mut best_epsilon = None;
    for k in (1..100).rev() {
        let eps = k as f64 / 100.0;
        let v = er_infimum_with(spec, eps, n1, settings.er_grid_points)?;
        if v >= -settings.tol_form {
            best_epsilon = Some(eps);
            break;
        }
    }

    let overall = core_check && sign_structure_check && lambda_ratio_check && er_check;
    Ok(ValidationReport {
        n1,
        n2,
        core_check,
        sign_structure_check,
        lambda_ratio_check,
        er_infimum: er.max(-f64::MAX),
        er_check,
        overall,
        best_epsilon,
        settings: settings.clone(),
    })
}
