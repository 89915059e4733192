//! Zero-energy radial scattering: the scattering state and length of the
//! bare interaction, and the auxiliary shell construction that cancels it.
//!
//! The shell potential of height `a N^(3 beta1 - 1)` on `(N^-beta1, R_beta]`
//! is tuned so that the combined potential has scattering length zero; the
//! minimal such outer radius and the matching constant between the bare and
//! combined scattering states are computed here, together with the norm and
//! integral diagnostics the construction is supposed to satisfy.

use crate::error::{CoreError, Result};
use crate::potentials::{scaled_potential, PotentialSpec, ScaledPotential};
use crate::radial::{integrate_zero_energy, RadialGrid, RadialPotential};
use rayon::prelude::*;
use serde::Serialize;

/// Zero-energy radial solution in the `u(r) = r f(r)` convention,
/// normalized so that the affine tail is `r - a`.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub grid: RadialGrid,
    pub u_values: Vec<f64>,
    pub du_values: Vec<f64>,
    /// `u/r` with the limit value at the origin.
    pub f_values: Vec<f64>,
    /// Scattering length from the tail intercept.
    pub a: f64,
    /// Scattering length recomputed from the integral of `(V/2) f r^2`.
    pub a_integral: f64,
    /// Raw tail slope of the unnormalized shot (divided out of the samples).
    pub normalization: f64,
}

impl ScatteringSolution {
    /// `f` at an arbitrary radius: linear interpolation on the grid, affine
    /// tail `1 - a/r` beyond it.
    pub fn f_at(&self, r: f64) -> f64 {
        let pts = self.grid.r();
        let r_max = self.grid.r_max();
        if r >= r_max {
            return 1.0 - self.a / r;
        }
        if r <= 0.0 {
            return self.f_values[0];
        }
        let i = pts.partition_point(|&p| p <= r);
        let (r0, r1) = (pts[i - 1], pts[i]);
        let t = (r - r0) / (r1 - r0);
        self.f_values[i - 1] * (1.0 - t) + self.f_values[i] * t
    }
}

const TAIL_TOL: f64 = 1e-8;

/// Integrates the zero-energy problem of `potential / 2` outward and
/// normalizes the affine tail to `r - a`.
///
/// The scattering length is read off the tail intercept and recomputed from
/// the integral formula; both are stored and must agree.
pub fn solve_zero_energy(
    potential: &dyn RadialPotential,
    r_max: f64,
    grid: &RadialGrid,
) -> Result<ScatteringSolution> {
    let support = potential.support_radius();
    if support >= r_max {
        return Err(CoreError::Parameter(format!(
            "potential support {support} must lie inside r_max = {r_max}"
        )));
    }
    if (grid.r_max() - r_max).abs() > 1e-12 * r_max {
        return Err(CoreError::Parameter(
            "grid must cover exactly [0, r_max]".into(),
        ));
    }
    let c = |r: f64| 0.5 * potential.eval(r);
    let ivp = integrate_zero_energy(&c, grid);

    let slope = *ivp.du.last().unwrap();
    if slope.abs() < 1e-300 || !slope.is_finite() {
        return Err(CoreError::IntegrationFailure(format!(
            "tail slope {slope} is degenerate (zero-energy resonance or overflow)"
        )));
    }
    // beyond the support u must be affine: constant derivative
    for (i, &r) in grid.r().iter().enumerate() {
        if r > support * (1.0 + 1e-12) {
            let rel = (ivp.du[i] - slope).abs() / slope.abs();
            if rel > TAIL_TOL {
                return Err(CoreError::IntegrationFailure(format!(
                    "tail not affine: u' varies by relative {rel:.3e} beyond the support"
                )));
            }
        }
    }
    let a = r_max - ivp.u.last().unwrap() / slope;

    let inv = 1.0 / slope;
    let u_values: Vec<f64> = ivp.u.iter().map(|v| v * inv).collect();
    let du_values: Vec<f64> = ivp.du.iter().map(|v| v * inv).collect();
    let mut f_values = Vec::with_capacity(u_values.len());
    f_values.push(du_values[0]);
    for i in 1..u_values.len() {
        f_values.push(u_values[i] / grid.r()[i]);
    }

    // a = int (V/2) f r^2 dr  (the solid angle cancels the 1/(4 pi))
    let ur: Vec<f64> = grid
        .r()
        .iter()
        .zip(&u_values)
        .map(|(&r, &u)| u * r)
        .collect();
    let a_integral = grid.integrate_product(&c, &ur);

    Ok(ScatteringSolution {
        grid: grid.clone(),
        u_values,
        du_values,
        f_values,
        a,
        a_integral,
        normalization: slope,
    })
}

/// Scattering length of `spec.v / 2` on a default fine grid.
pub fn scattering_length(spec: &PotentialSpec) -> Result<f64> {
    Ok(solve_bare(spec)?.a)
}

/// Zero-energy solution of the bare potential on a default fine grid.
pub fn solve_bare(spec: &PotentialSpec) -> Result<ScatteringSolution> {
    let r_max = 2.0 * spec.big_r;
    let grid = RadialGrid::aligned(r_max, spec.big_r / 16384.0, &spec.breakpoints());
    solve_zero_energy(spec, r_max, &grid)
}

/// Monotonicity flag and the accuracy of the radial flux identity
/// `t'(r) = a_r / r^2` with `a_r` the running integral of `(V/2) t r^2`.
#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub monotone: bool,
    /// Max deviation between the numerical derivative of `f` and the flux
    /// quadrature, relative to the largest derivative value.
    pub max_identity_error: f64,
}

pub fn monotonicity_check(
    sol: &ScatteringSolution,
    potential: &dyn RadialPotential,
) -> MonotonicityReport {
    let r = sol.grid.r();
    let n = r.len();
    let f = &sol.f_values;

    let slack = 1e-10 * f.iter().cloned().fold(0.0, f64::max).max(1.0);
    let monotone = f.windows(2).all(|w| w[1] >= w[0] - slack);

    // running integral a_r = int_0^r (V/2) t r'^2 dr'
    let ur: Vec<f64> = r
        .iter()
        .zip(&sol.u_values)
        .map(|(&rr, &u)| u * rr)
        .collect();
    let a_r = sol
        .grid
        .cumulative_product(&|rr| 0.5 * potential.eval(rr), &ur);

    // second-order stencils kept inside each smooth segment: one-sided at the
    // segment edges, central inside (f'' may jump across segment boundaries)
    let mut max_err = 0.0f64;
    let mut max_deriv = 0.0f64;
    let mut check = |i: usize, dfdr: f64| {
        max_deriv = max_deriv.max(dfdr.abs());
        let rhs = a_r[i] / (r[i] * r[i]).max(1e-300);
        max_err = max_err.max((dfdr - rhs).abs());
    };
    for (s, e) in sol.grid.segments() {
        if e - s < 2 {
            continue;
        }
        let h = (r[e] - r[s]) / (e - s) as f64;
        if s > 0 {
            check(s, (-3.0 * f[s] + 4.0 * f[s + 1] - f[s + 2]) / (2.0 * h));
        }
        for i in s + 1..e {
            check(i, (f[i + 1] - f[i - 1]) / (2.0 * h));
        }
        check(e, (3.0 * f[e] - 4.0 * f[e - 1] + f[e - 2]) / (2.0 * h));
    }
    let _ = n;
    MonotonicityReport {
        monotone,
        max_identity_error: max_err / (max_deriv + 1e-300),
    }
}

/// Constant repulsive shell supported on `[inner, outer)`.
#[derive(Debug, Clone, Copy)]
pub struct ShellPotential {
    pub inner: f64,
    pub outer: f64,
    pub height: f64,
}

impl RadialPotential for ShellPotential {
    fn eval(&self, r: f64) -> f64 {
        if r >= self.inner && r < self.outer {
            self.height
        } else {
            0.0
        }
    }
    fn support_radius(&self) -> f64 {
        self.outer
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.inner, self.outer]
    }
}

/// Difference `V1 - W` as a radial potential.
struct CombinedPotential<'a> {
    v1: &'a ScaledPotential,
    w: ShellPotential,
}

impl RadialPotential for CombinedPotential<'_> {
    fn eval(&self, r: f64) -> f64 {
        self.v1.eval(r) - self.w.eval(r)
    }
    fn support_radius(&self) -> f64 {
        self.v1.support_radius().max(self.w.outer)
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.v1.breakpoints();
        b.push(self.w.inner);
        b.push(self.w.outer);
        b.sort_by(|a, c| a.partial_cmp(c).unwrap());
        b.dedup_by(|a, c| (*a - *c).abs() < 1e-18);
        b
    }
}

/// Knobs of the minimal-radius search.
#[derive(Debug, Clone)]
pub struct ScatteringSettings {
    /// Grid points across the smallest potential feature (the scaled core).
    pub points_per_feature: usize,
    /// Geometric ratio of the bracketing scan.
    pub scan_ratio: f64,
    /// Geometric ratio of the minimality confirmation scan.
    pub refine_ratio: f64,
    /// Stop bisection once |s| falls below this fraction of the natural
    /// scale `8 pi a / N`.
    pub s_rel_tol: f64,
    /// Scan cap as a multiple of `N^-beta1 * max(1, 100 a N^(beta1-1))`.
    pub cap_factor: f64,
}

impl Default for ScatteringSettings {
    fn default() -> Self {
        ScatteringSettings {
            points_per_feature: 64,
            scan_ratio: 1.05,
            refine_ratio: 1.005,
            s_rel_tol: 1e-10,
            cap_factor: 10.0,
        }
    }
}

/// The shell construction at one `(N, beta1)`: minimal outer radius, matched
/// scattering state, matching constant, and shell height.
#[derive(Debug, Clone)]
pub struct ModifiedScattering {
    pub n: u64,
    pub beta1: f64,
    /// Minimal outer shell radius at which the combined potential has
    /// scattering length zero.
    pub r_beta: f64,
    /// `N^-beta1`, the inner shell radius.
    pub inner_radius: f64,
    /// Shell height `a N^(3 beta1 - 1)`.
    pub w_height: f64,
    /// Matching constant between the rescaled bare state and `f`.
    pub k_beta: f64,
    /// Scattering length of the bare `V/2`.
    pub a: f64,
    /// Combined-potential scattering state, normalized to one at `r_beta`.
    pub f_solution: ScatteringSolution,
    /// Quadrature of `(V1 - W) f` at the returned radius.
    pub s_at_root: f64,
    /// True when the confirmation scan found no earlier sign change.
    pub minimality_confirmed: bool,
    pub spec: PotentialSpec,
}

impl ModifiedScattering {
    pub fn w_potential(&self) -> ShellPotential {
        ShellPotential {
            inner: self.inner_radius,
            outer: self.r_beta,
            height: self.w_height,
        }
    }

    pub fn v1(&self) -> ScaledPotential {
        scaled_potential(&self.spec, self.n, 1.0).expect("spec validated at construction")
    }

    /// `f` extended by one beyond the shell.
    pub fn f_at(&self, r: f64) -> f64 {
        if r >= self.r_beta {
            1.0
        } else {
            self.f_solution.f_at(r)
        }
    }
}

struct CandidateSolve {
    u: Vec<f64>,
    du: Vec<f64>,
    grid: RadialGrid,
    s: f64,
    scale: f64,
}

fn solve_candidate(
    v1: &ScaledPotential,
    inner: f64,
    r_c: f64,
    w_height: f64,
    h: f64,
) -> Result<CandidateSolve> {
    let w = ShellPotential {
        inner,
        outer: r_c,
        height: if r_c > inner { w_height } else { 0.0 },
    };
    let combined = CombinedPotential { v1, w };
    let mut breaks = combined.breakpoints();
    breaks.retain(|&b| b < r_c);
    let grid = RadialGrid::aligned(r_c, h, &breaks);
    let c = |r: f64| 0.5 * combined.eval(r);
    let ivp = integrate_zero_energy(&c, &grid);
    let u_end = *ivp.u.last().unwrap();
    if u_end.abs() < 1e-300 || !u_end.is_finite() {
        return Err(CoreError::IntegrationFailure(format!(
            "combined-potential solution vanished at candidate radius {r_c}"
        )));
    }
    let scale = r_c / u_end;
    let u: Vec<f64> = ivp.u.iter().map(|v| v * scale).collect();
    let du: Vec<f64> = ivp.du.iter().map(|v| v * scale).collect();
    // s = int (V1 - W) f d^3x = 4 pi int (V1 - W) u r dr
    let ur: Vec<f64> = grid.r().iter().zip(&u).map(|(&r, &uu)| uu * r).collect();
    let s = 4.0 * std::f64::consts::PI * grid.integrate_product(&|r| combined.eval(r), &ur);
    Ok(CandidateSolve {
        u,
        du,
        grid,
        s,
        scale,
    })
}

fn finish_solution(c: CandidateSolve) -> ScatteringSolution {
    let mut f_values = Vec::with_capacity(c.u.len());
    f_values.push(c.du[0]);
    for i in 1..c.u.len() {
        f_values.push(c.u[i] / c.grid.r()[i]);
    }
    ScatteringSolution {
        a: 0.0,
        a_integral: 0.0,
        normalization: 1.0 / c.scale,
        grid: c.grid,
        u_values: c.u,
        du_values: c.du,
        f_values,
    }
}

/// Finds the minimal shell radius at which the combined potential has
/// scattering length zero, by a geometric bracketing scan and bisection on
/// the quadrature of `(V1 - W) f`.
pub fn find_minimal_r(spec: &PotentialSpec, n: u64, beta1: f64) -> Result<ModifiedScattering> {
    find_minimal_r_with(spec, n, beta1, &ScatteringSettings::default())
}

pub fn find_minimal_r_with(
    spec: &PotentialSpec,
    n: u64,
    beta1: f64,
    settings: &ScatteringSettings,
) -> Result<ModifiedScattering> {
    if !(beta1 > 0.0 && beta1 < 1.0) {
        return Err(CoreError::Parameter(format!(
            "beta1 must lie in (0,1), got {beta1}"
        )));
    }
    let nf = n as f64;
    let inner = nf.powf(-beta1);
    let v1 = scaled_potential(spec, n, 1.0)?;
    if v1.support_radius() >= inner {
        return Err(CoreError::Parameter(format!(
            "supports overlap: R/N = {} must be below N^-beta1 = {inner}; increase N",
            v1.support_radius()
        )));
    }
    let a = {
        let bare = solve_bare(spec)?;
        let rel = (bare.a - bare.a_integral).abs() / bare.a.abs().max(1e-12);
        if rel > 1e-6 {
            return Err(CoreError::IntegrationFailure(format!(
                "tail and integral scattering lengths disagree by relative {rel:.3e}"
            )));
        }
        bare.a
    };
    let h = spec.r1 / (settings.points_per_feature as f64 * nf);
    let w_height = a * nf.powf(3.0 * beta1 - 1.0);

    if a.abs() <= 1e-12 * spec.big_r {
        // zero scattering length: the shell is empty and the minimal radius
        // sits at the inner edge
        let sol = solve_candidate(&v1, inner, inner, 0.0, h)?;
        let s_at_root = sol.s;
        let f_solution = finish_solution(sol);
        let k_beta = 1.0 / f_solution.f_values.last().unwrap();
        return Ok(ModifiedScattering {
            n,
            beta1,
            r_beta: inner,
            inner_radius: inner,
            w_height: 0.0,
            k_beta,
            a,
            f_solution,
            s_at_root,
            minimality_confirmed: true,
            spec: spec.clone(),
        });
    }

    let cap = settings.cap_factor * inner * (100.0 * a * nf.powf(beta1 - 1.0)).max(1.0);
    let s_scale = 8.0 * std::f64::consts::PI * a / nf;
    let s_tol = settings.s_rel_tol * s_scale.abs();

    // bracketing scan on a geometric ladder
    let mut r_lo = inner;
    let mut s_lo = solve_candidate(&v1, inner, r_lo, w_height, h)?.s;
    let mut bracket = None;
    let mut r_c = inner * settings.scan_ratio;
    while r_c <= cap {
        let s_c = solve_candidate(&v1, inner, r_c, w_height, h)?.s;
        if s_lo > 0.0 && s_c <= 0.0 {
            bracket = Some((r_lo, r_c));
            break;
        }
        r_lo = r_c;
        s_lo = s_c;
        r_c *= settings.scan_ratio;
    }
    let (mut lo, mut hi) = bracket.ok_or(CoreError::RootNotFound {
        r_lo: inner,
        s_lo: 8.0 * std::f64::consts::PI * a / nf,
        r_hi: r_lo,
        s_hi: s_lo,
    })?;

    // confirmation scan at the finer ratio: no sign change before `lo`
    let mut minimality_confirmed = true;
    let mut r_f = inner * settings.refine_ratio;
    while r_f < lo {
        let s_f = solve_candidate(&v1, inner, r_f, w_height, h)?.s;
        if s_f <= 0.0 {
            // an earlier root exists: adopt the tighter bracket
            minimality_confirmed = false;
            hi = r_f;
            lo = r_f / settings.refine_ratio;
            break;
        }
        r_f *= settings.refine_ratio;
    }

    // bisection until s itself is resolved to the requested fraction
    let mut best = None;
    for _ in 0..240 {
        let mid = 0.5 * (lo + hi);
        let cand = solve_candidate(&v1, inner, mid, w_height, h)?;
        let s_mid = cand.s;
        best = Some((mid, cand));
        if s_mid.abs() <= s_tol {
            break;
        }
        if s_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < f64::EPSILON * hi * 4.0 {
            break;
        }
    }
    let (r_beta, cand) = best.unwrap();
    let s_at_root = cand.s;
    if s_at_root.abs() > s_tol * 100.0 {
        return Err(CoreError::IntegrationFailure(format!(
            "bisection stalled: |s| = {:.3e} above tolerance {:.3e}",
            s_at_root.abs(),
            s_tol
        )));
    }
    let f_solution = finish_solution(cand);

    // matching constant: the rescaled bare state is affine at N r = N^(1-beta1)
    let j_at_inner = 1.0 - a * nf.powf(beta1 - 1.0);
    let idx_inner = f_solution
        .grid
        .r()
        .iter()
        .position(|&r| (r - inner).abs() <= 1e-12 * inner)
        .expect("inner radius is a grid node");
    let k_beta = j_at_inner / f_solution.f_values[idx_inner];

    Ok(ModifiedScattering {
        n,
        beta1,
        r_beta,
        inner_radius: inner,
        w_height,
        k_beta,
        a,
        f_solution,
        s_at_root,
        minimality_confirmed,
        spec: spec.clone(),
    })
}

/// Radial norms of `g = 1 - f`, supported inside the shell radius.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GNorms {
    pub l1: f64,
    pub l3half: f64,
    pub l2: f64,
    pub linf: f64,
}

pub fn g_norms(ms: &ModifiedScattering) -> GNorms {
    let grid = &ms.f_solution.grid;
    let g: Vec<f64> = ms
        .f_solution
        .f_values
        .iter()
        .map(|&f| (1.0 - f).max(0.0))
        .collect();
    let r = grid.r();
    let four_pi = 4.0 * std::f64::consts::PI;
    let w1: Vec<f64> = g.iter().zip(r).map(|(&g, &r)| g * r * r).collect();
    let w32: Vec<f64> = g
        .iter()
        .zip(r)
        .map(|(&g, &r)| g.powf(1.5) * r * r)
        .collect();
    let w2: Vec<f64> = g.iter().zip(r).map(|(&g, &r)| g * g * r * r).collect();
    GNorms {
        l1: four_pi * grid.integrate(&w1),
        l3half: (four_pi * grid.integrate(&w32)).powf(2.0 / 3.0),
        l2: (four_pi * grid.integrate(&w2)).sqrt(),
        linf: g.iter().cloned().fold(0.0, f64::max),
    }
}

/// The three shell integrals `N ||V1 f||, N ||W f||, N ||W||` (signed
/// quadratures; the first two agree identically at the root).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WIntegrals {
    pub nvf: f64,
    pub nwf: f64,
    pub nw: f64,
}

pub fn w_integrals(ms: &ModifiedScattering) -> WIntegrals {
    let grid = &ms.f_solution.grid;
    let r = grid.r();
    let u = &ms.f_solution.u_values;
    let v1 = ms.v1();
    let w = ms.w_potential();
    let four_pi = 4.0 * std::f64::consts::PI;
    let nf = ms.n as f64;

    let ur: Vec<f64> = r.iter().zip(u).map(|(&r, &u)| u * r).collect();
    let rr: Vec<f64> = r.iter().map(|&r| r * r).collect();
    WIntegrals {
        nvf: nf * four_pi * grid.integrate_product(&|r| v1.eval(r), &ur),
        nwf: nf * four_pi * grid.integrate_product(&|r| w.eval(r), &ur),
        nw: nf * four_pi * grid.integrate_product(&|r| w.eval(r), &rr),
    }
}

/// Fitted constants of the pointwise bound on `g`: near the core the bound
/// uses the truncated-core scattering length, outside it the bare one.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GBoundReport {
    /// Scattering length of the truncated potential `(V/2) 1_{r <= r2}`.
    pub a_tilde: f64,
    /// Smallest constant with `g <= a_tilde/(N r) + c_inner/N` for `N r <= R`.
    pub c_inner: f64,
    /// Smallest constant with `g <= a/(N r) + c_outer N^(beta1 - 1)` outside.
    pub c_outer: f64,
}

pub fn pointwise_g_bound(ms: &ModifiedScattering) -> Result<GBoundReport> {
    let spec = &ms.spec;
    let truncated = crate::radial::FnPotential {
        f: |r: f64| if r <= spec.r2 { spec.v(r) } else { 0.0 },
        support: spec.r2,
        breaks: spec
            .breakpoints()
            .into_iter()
            .filter(|&b| b <= spec.r2)
            .collect(),
    };
    let r_max = 2.0 * spec.big_r;
    let grid = RadialGrid::aligned(r_max, spec.big_r / 16384.0, &truncated.breakpoints());
    let a_tilde = solve_zero_energy(&truncated, r_max, &grid)?.a;

    let nf = ms.n as f64;
    let r = ms.f_solution.grid.r();
    let mut c_inner = 0.0f64;
    let mut c_outer = 0.0f64;
    for (i, &ri) in r.iter().enumerate().skip(1) {
        if ri > ms.r_beta {
            break;
        }
        let g = (1.0 - ms.f_solution.f_values[i]).max(0.0);
        if nf * ri <= spec.big_r {
            c_inner = c_inner.max((g - a_tilde / (nf * ri)) * nf);
        } else {
            c_outer = c_outer.max((g - ms.a / (nf * ri)) * nf.powf(1.0 - ms.beta1));
        }
    }
    Ok(GBoundReport {
        a_tilde,
        c_inner: c_inner.max(0.0),
        c_outer: c_outer.max(0.0),
    })
}

/// One row of the scaling sweep emitted as CSV by the front end.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: u64,
    pub beta1: f64,
    pub r_beta: f64,
    pub k_beta: f64,
    pub a: f64,
    pub nvf: f64,
    pub nwf: f64,
    pub nw: f64,
    pub g_l1: f64,
    pub g_l3half: f64,
    pub g_l2: f64,
    pub g_linf: f64,
}

/// Runs the shell construction across particle numbers and collects the
/// scaling diagnostics.
pub fn scattering_sweep(spec: &PotentialSpec, ns: &[u64], beta1: f64) -> Result<Vec<SweepRow>> {
    // particle numbers are independent; the rows come back in input order
    ns.par_iter()
        .map(|&n| {
            let ms = find_minimal_r(spec, n, beta1)?;
            let gi = g_norms(&ms);
            let wi = w_integrals(&ms);
            Ok(SweepRow {
                n,
                beta1,
                r_beta: ms.r_beta,
                k_beta: ms.k_beta,
                a: ms.a,
                nvf: wi.nvf,
                nwf: wi.nwf,
                nw: wi.nw,
                g_l1: gi.l1,
                g_l3half: gi.l3half,
                g_l2: gi.l2,
                g_linf: gi.linf,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::FnPotential;

    fn canonical() -> PotentialSpec {
        PotentialSpec::square(0.25, 0.5, 1.0, 50.0, 1e-4, 0.5).unwrap()
    }

    fn barrier_only(height: f64, r2: f64) -> FnPotential<impl Fn(f64) -> f64 + Sync> {
        FnPotential {
            f: move |r: f64| if r < r2 { height } else { 0.0 },
            support: r2,
            breaks: vec![r2],
        }
    }

    #[test]
    fn free_problem_has_zero_length() {
        let pot = barrier_only(0.0, 0.5);
        let grid = RadialGrid::uniform(1.0, 2048);
        let sol = solve_zero_energy(&pot, 1.0, &grid).unwrap();
        assert!(sol.a.abs() < 1e-12);
        assert!(sol.a_integral.abs() < 1e-14);
        for &f in &sol.f_values {
            assert!((f - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn square_barrier_matches_closed_form() {
        // a = r2 - tanh(kappa r2)/kappa with kappa = sqrt(V0/2)
        let v0 = 8.0f64;
        let r2 = 0.5f64;
        let kappa = (v0 / 2.0).sqrt();
        let exact = r2 - (kappa * r2).tanh() / kappa;
        let pot = barrier_only(v0, r2);
        let grid = RadialGrid::aligned(1.0, 1.0 / 8192.0, &[r2]);
        let sol = solve_zero_energy(&pot, 1.0, &grid).unwrap();
        assert!(
            (sol.a - exact).abs() / exact < 1e-6,
            "a = {}, exact = {exact}",
            sol.a
        );
        assert!((sol.a - sol.a_integral).abs() / exact < 1e-6);
    }

    #[test]
    fn admissible_spec_has_nonnegative_length() {
        let sol = solve_bare(&canonical()).unwrap();
        assert!(sol.a >= -1e-8, "a = {}", sol.a);
        assert!(sol.a > 0.0);
    }

    #[test]
    fn monotonicity_and_flux_identity() {
        let spec = canonical();
        let sol = solve_bare(&spec).unwrap();
        let report = monotonicity_check(&sol, &spec);
        assert!(report.monotone);
        assert!(
            report.max_identity_error < 1e-5,
            "identity error {}",
            report.max_identity_error
        );

        // V = 0: t' and a_r both vanish identically
        let free = barrier_only(0.0, 0.5);
        let grid = RadialGrid::uniform(1.0, 1024);
        let fsol = solve_zero_energy(&free, 1.0, &grid).unwrap();
        let frep = monotonicity_check(&fsol, &free);
        assert!(frep.monotone);
        assert!(frep.max_identity_error.is_finite());
    }

    #[test]
    fn minimal_radius_basics() {
        let spec = canonical();
        let ms = find_minimal_r(&spec, 1000, 0.5).unwrap();
        assert!(ms.r_beta >= ms.inner_radius);
        assert!(ms.minimality_confirmed);
        // K within the proven window
        let nf = 1000f64;
        let lower = 1.0 - ms.a / nf.powf(1.0 - ms.beta1);
        assert!(ms.k_beta <= 1.0 + 1e-12, "K = {}", ms.k_beta);
        assert!(
            ms.k_beta >= lower - 1e-12,
            "K = {} lower {lower}",
            ms.k_beta
        );
        // f nonnegative, nondecreasing, one at the edge
        let f = &ms.f_solution.f_values;
        assert!(f.iter().all(|&x| x >= -1e-12));
        assert!(f.windows(2).all(|w| w[1] >= w[0] - 1e-10));
        assert!((f.last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_length_short_circuit() {
        // free potential -> a = 0 -> shell collapses to the inner edge
        let spec = PotentialSpec {
            r1: 0.25,
            r2: 0.5,
            big_r: 1.0,
            lambda_plus: 0.0,
            lambda_minus: 0.0,
            vplus_profile: crate::profile::RadialProfile::zero(),
            vminus_profile: crate::profile::RadialProfile::zero(),
            epsilon: 0.5,
        };
        let ms = find_minimal_r(&spec, 100, 0.5).unwrap();
        assert_eq!(ms.r_beta, ms.inner_radius);
        assert!((ms.k_beta - 1.0).abs() < 1e-12);
        assert!(ms
            .f_solution
            .f_values
            .iter()
            .all(|&f| (f - 1.0).abs() < 1e-12));
    }

    #[test]
    fn gauss_identity_at_root() {
        // f'(R_beta) from the solved derivative agrees with the flux integral
        // and both vanish at the root
        let spec = canonical();
        let ms = find_minimal_r(&spec, 1000, 0.5).unwrap();
        let n = ms.f_solution.grid.len();
        let r_b = ms.r_beta;
        let u_end = ms.f_solution.u_values[n - 1];
        let du_end = ms.f_solution.du_values[n - 1];
        let fprime_end = du_end / r_b - u_end / (r_b * r_b);
        // flux route: f'(R) = s(R) / (8 pi R^2)
        let gauss = ms.s_at_root / (8.0 * std::f64::consts::PI * r_b * r_b);
        let scale = 8.0 * std::f64::consts::PI * ms.a / ms.n as f64;
        assert!(ms.s_at_root.abs() <= 1e-10 * scale);
        assert!((fprime_end - gauss).abs() < 1e-6 / r_b);
        assert!(fprime_end.abs() < 1e-8 / r_b, "f'(R_beta) = {fprime_end}");
    }

    #[test]
    fn matching_constant_reproduces_bare_state() {
        // K f(r) = j(N r) for r inside the inner radius
        let spec = canonical();
        let n = 1000u64;
        let ms = find_minimal_r(&spec, n, 0.5).unwrap();
        let bare = solve_bare(&spec).unwrap();
        let nf = n as f64;
        let grid = ms.f_solution.grid.r();
        let mut checked = 0;
        for (i, &r) in grid.iter().enumerate() {
            if r <= 0.0 || r > ms.inner_radius {
                continue;
            }
            let lhs = ms.k_beta * ms.f_solution.f_values[i];
            let rhs = bare.f_at(nf * r);
            if rhs.abs() > 1e-6 {
                assert!(
                    (lhs - rhs).abs() / rhs.abs() < 1e-6,
                    "r = {r}: K f = {lhs}, j(Nr) = {rhs}"
                );
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn comparison_bound_inside_shell() {
        // j(N x)/j(N R_beta) <= f(x) <= 1 between the scaled support and R_beta
        let spec = canonical();
        let n = 1000u64;
        let ms = find_minimal_r(&spec, n, 0.5).unwrap();
        let bare = solve_bare(&spec).unwrap();
        let nf = n as f64;
        let j_rb = bare.f_at(nf * ms.r_beta);
        for (i, &r) in ms.f_solution.grid.r().iter().enumerate() {
            if r < spec.big_r / nf || r > ms.r_beta {
                continue;
            }
            let f = ms.f_solution.f_values[i];
            assert!(f <= 1.0 + 1e-9);
            let lower = bare.f_at(nf * r) / j_rb;
            assert!(f >= lower - 1e-6, "r = {r}: f = {f}, bound = {lower}");
        }
    }

    #[test]
    fn w_integrals_match_at_root() {
        let spec = canonical();
        let ms = find_minimal_r(&spec, 1000, 0.5).unwrap();
        let wi = w_integrals(&ms);
        assert!(
            (wi.nvf - wi.nwf).abs() <= 1e-8 * wi.nvf.abs(),
            "NVf = {}, NWf = {}",
            wi.nvf,
            wi.nwf
        );
        // both equal 8 pi a / K
        let expect = 8.0 * std::f64::consts::PI * ms.a / ms.k_beta;
        assert!((wi.nvf - expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn shell_radius_stays_on_scale_across_sweep() {
        let spec = canonical();
        let mut scaled = Vec::new();
        for n in [100u64, 1000, 10_000] {
            let ms = find_minimal_r(&spec, n, 0.5).unwrap();
            scaled.push(ms.r_beta * (n as f64).powf(ms.beta1));
        }
        let max = scaled.iter().cloned().fold(0.0, f64::max);
        let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max < 10.0, "R_beta N^beta1 = {scaled:?}");
        assert!(max / min < 2.0, "R_beta N^beta1 drifts: {scaled:?}");
    }

    #[test]
    fn construction_holds_across_shell_exponents() {
        // the matching window and the integral identity are exponent
        // independent; the scaled radius approaches the same constant
        let spec = canonical();
        for (n, beta1) in [(1000u64, 0.3f64), (10_000, 0.3), (1000, 0.7), (10_000, 0.7)] {
            let ms = find_minimal_r(&spec, n, beta1).unwrap();
            let nf = n as f64;
            assert!(ms.minimality_confirmed);
            assert!(ms.k_beta <= 1.0 + 1e-12);
            assert!(ms.k_beta >= 1.0 - ms.a / nf.powf(1.0 - beta1) - 1e-12);
            let wi = w_integrals(&ms);
            assert!((wi.nvf - wi.nwf).abs() <= 1e-8 * wi.nvf.abs());
            let scaled = ms.r_beta * nf.powf(beta1);
            assert!((1.0..4.0).contains(&scaled), "R_beta N^beta1 = {scaled}");
        }
    }

    #[test]
    fn piecewise_linear_spec_full_construction() {
        // ramp core and triangular well exercise the interpolated profiles
        let vplus = crate::profile::RadialProfile::PiecewiseLinear {
            nodes: vec![0.0, 0.5],
            values: vec![100.0, 0.0],
        };
        let vminus = crate::profile::RadialProfile::PiecewiseLinear {
            nodes: vec![0.5, 0.75, 1.0],
            values: vec![0.0, 1e-4, 0.0],
        };
        let spec = PotentialSpec::new(0.25, 0.5, 1.0, 50.0, 1e-4, vplus, vminus, 0.5).unwrap();
        let report = crate::potentials::validate_assumption(&spec).unwrap();
        assert!(report.overall, "report: {report:?}");

        let sol = solve_bare(&spec).unwrap();
        assert!(sol.a > 0.0);
        assert!((sol.a - sol.a_integral).abs() < 1e-6 * sol.a);

        let ms = find_minimal_r(&spec, 1000, 0.5).unwrap();
        assert!(ms.k_beta <= 1.0 && ms.k_beta >= 1.0 - ms.a / 1000f64.powf(0.5));
        assert!(
            monotonicity_check(
                &ms.f_solution,
                &CombinedPotential {
                    v1: &ms.v1(),
                    w: ms.w_potential(),
                }
            )
            .monotone
        );
    }

    #[test]
    fn g_bound_constants_finite_and_stable() {
        let spec = canonical();
        let mut reports = Vec::new();
        for n in [1000u64, 10_000, 100_000] {
            let ms = find_minimal_r(&spec, n, 0.5).unwrap();
            let rep = pointwise_g_bound(&ms).unwrap();
            assert!(rep.a_tilde > 0.0);
            assert!(rep.c_inner.is_finite() && rep.c_outer.is_finite());
            reports.push(rep);
        }
        let cs: Vec<f64> = reports.iter().map(|r| r.c_outer).collect();
        let big = cs.iter().cloned().fold(0.0f64, f64::max);
        let small = cs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(
            big <= 2.0 * small + 1e-9,
            "outer constants not stable: {cs:?}"
        );
    }
}
