//! Configuration-driven front end: validation, scattering sweeps, one-body
//! and few-body propagation, co-evolution, inequality verification, and the
//! energy decomposition, each emitting machine-readable reports.
//!
//! Exit codes: 0 success, 2 configuration errors, 3 capability limits,
//! 4 tolerance violations, 1 anything else.

use clap::{Args, Parser, Subcommand};
use condensate::compare::{run_compare, CompareConfig, COMPARE_COLUMNS};
use condensate::error::CoreError;
use condensate::gp::{gp_evolve, ExternalPotential, GPField};
use condensate::grid::PeriodicGrid;
use condensate::inequalities::{
    covering_energy_bound_check, hamiltonian_partition_identity, interaction_norm_diagnostics,
    partition_identities, proximity_scaling, verify_split_positivity,
};
use condensate::io;
use condensate::manybody::{
    energy_decomposition, evolve_with, localized_gradient_diagnostic, many_body_energy,
    pk_spectrum, reduced_density, trace_distance, trace_distance_operator, weighted_expectation,
    CountingWeight, EvolveOptions, ManyBodyState,
};
use condensate::potentials::validate_assumption;
use condensate::scattering::{find_minimal_r, scattering_sweep};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "condensate",
    about = "Desk-scale toolkit for dilute-gas effective dynamics",
    version
)]
struct Cli {
    /// JSON file whose fields override the matching command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, serde::Deserialize, Default)]
#[serde(default)]
struct CommonArgs {
    /// Potential spec JSON file.
    #[arg(long)]
    spec: Option<PathBuf>,

    /// Output directory for reports and series.
    #[arg(long, default_value = "out")]
    #[serde(skip)]
    out: PathBuf,

    /// Seed for every randomized check.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Tolerance for the command's pass/fail assertions.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args, Clone, serde::Deserialize, Default)]
#[serde(default)]
struct GridArgs {
    /// Grid points per axis.
    #[arg(long, default_value_t = 32)]
    grid: usize,

    /// Spatial dimension (1 or 3).
    #[arg(long, default_value_t = 1)]
    dim: usize,

    /// Periodic box length.
    #[arg(long, default_value_t = 12.0)]
    box_length: f64,

    /// Initial Gaussian width.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Check a potential spec against the admissibility conditions.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Shell construction and scaling diagnostics across particle numbers.
    ScatteringSweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Particle numbers, comma separated.
        #[arg(long = "N", value_delimiter = ',', default_values_t = [100u64, 1000, 10_000, 100_000])]
        n: Vec<u64>,
        #[arg(long, default_value_t = 0.5)]
        beta1: f64,
    },
    /// Propagate the one-body field and emit snapshots plus diagnostics.
    GpEvolve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long = "t-final", default_value_t = 0.5)]
        t_final: f64,
        /// Snapshot stride in steps.
        #[arg(long, default_value_t = 100)]
        stride: usize,
    },
    /// Propagate the few-body state and emit the diagnostics series.
    ManybodyEvolve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long = "n-particles", default_value_t = 2)]
        n_particles: usize,
        #[arg(long, default_value_t = 2e-3)]
        dt: f64,
        #[arg(long = "t-final", default_value_t = 0.05)]
        t_final: f64,
        #[arg(long, default_value_t = 5)]
        stride: usize,
    },
    /// Co-evolve the few-body state against the one-body field.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long = "n-particles", default_value_t = 2)]
        n_particles: usize,
        #[arg(long, default_value_t = 0.5)]
        beta1: f64,
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long, default_value_t = 5e-3)]
        dt: f64,
        #[arg(long = "t-final", default_value_t = 5e-2)]
        t_final: f64,
        #[arg(long, default_value_t = 2)]
        stride: usize,
        /// Weight the initial product by the pair scattering profile.
        #[arg(long)]
        correlated: bool,
    },
    /// Run the positivity and combinatorial checks and emit a JSON report.
    VerifyInequalities {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 0.5)]
        beta1: f64,
        #[arg(long = "N", default_value_t = 1000)]
        n: u64,
        #[arg(long, default_value_t = 400)]
        trials: usize,
    },
    /// Split the energy difference of a sampled pair state into its terms.
    DecomposeEnergy {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long = "n-particles", default_value_t = 2)]
        n_particles: usize,
        #[arg(long, default_value_t = 0.5)]
        beta1: f64,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
    fn tolerance(message: impl Into<String>) -> Self {
        Failure {
            code: 4,
            message: message.into(),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(err: CoreError) -> Self {
        let code = match &err {
            CoreError::Capability(_) => 3,
            CoreError::Parameter(_) | CoreError::Serde(_) | CoreError::Io(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn load_spec(common: &CommonArgs) -> Result<condensate::PotentialSpec, Failure> {
    let path = common
        .spec
        .as_ref()
        .ok_or_else(|| Failure::config("--spec is required"))?;
    io::read_spec(path).map_err(|e| Failure::config(format!("spec {}: {e}", path.display())))
}

fn ensure_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::config(format!("out dir: {e}")))
}

/// Overlays JSON config fields onto the parsed arguments (the file wins).
fn apply_config_overlay(cli: &mut Cli) -> Result<(), Failure> {
    let Some(path) = cli.config.clone() else {
        return Ok(());
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::config(format!("config {}: {e}", path.display())))?;
    let json: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::config(format!("config {}: {e}", path.display())))?;
    let obj = json
        .as_object()
        .ok_or_else(|| Failure::config("config must be a JSON object"))?;

    // the overlay touches the knobs shared by every command
    let get_f = |key: &str| obj.get(key).and_then(|v| v.as_f64());
    let get_u = |key: &str| obj.get(key).and_then(|v| v.as_u64());
    let get_s = |key: &str| obj.get(key).and_then(|v| v.as_str());

    macro_rules! overlay_common {
        ($common:expr) => {
            if let Some(s) = get_s("spec") {
                $common.spec = Some(PathBuf::from(s));
            }
            if let Some(s) = get_s("out") {
                $common.out = PathBuf::from(s);
            }
            if let Some(v) = get_u("seed") {
                $common.seed = v;
            }
            if let Some(v) = get_f("tol") {
                $common.tol = v;
            }
        };
    }
    macro_rules! overlay_grid {
        ($grid:expr) => {
            if let Some(v) = get_u("grid") {
                $grid.grid = v as usize;
            }
            if let Some(v) = get_u("dim") {
                $grid.dim = v as usize;
            }
            if let Some(v) = get_f("box_length") {
                $grid.box_length = v;
            }
            if let Some(v) = get_f("sigma") {
                $grid.sigma = v;
            }
        };
    }

    match &mut cli.command {
        Command::Validate { common } => {
            overlay_common!(common);
        }
        Command::ScatteringSweep { common, n, beta1 } => {
            overlay_common!(common);
            if let Some(arr) = obj.get("N").and_then(|v| v.as_array()) {
                *n = arr.iter().filter_map(|v| v.as_u64()).collect();
            }
            if let Some(v) = get_f("beta1") {
                *beta1 = v;
            }
        }
        Command::GpEvolve {
            common,
            grid,
            dt,
            t_final,
            stride,
        } => {
            overlay_common!(common);
            overlay_grid!(grid);
            if let Some(v) = get_f("dt") {
                *dt = v;
            }
            if let Some(v) = get_f("t_final") {
                *t_final = v;
            }
            if let Some(v) = get_u("stride") {
                *stride = v as usize;
            }
        }
        Command::ManybodyEvolve {
            common,
            grid,
            n_particles,
            dt,
            t_final,
            stride,
        } => {
            overlay_common!(common);
            overlay_grid!(grid);
            if let Some(v) = get_u("n_particles") {
                *n_particles = v as usize;
            }
            if let Some(v) = get_f("dt") {
                *dt = v;
            }
            if let Some(v) = get_f("t_final") {
                *t_final = v;
            }
            if let Some(v) = get_u("stride") {
                *stride = v as usize;
            }
        }
        Command::Compare {
            common,
            grid,
            n_particles,
            beta1,
            xi,
            dt,
            t_final,
            stride,
            correlated,
        } => {
            overlay_common!(common);
            overlay_grid!(grid);
            if let Some(v) = get_u("n_particles") {
                *n_particles = v as usize;
            }
            if let Some(v) = get_f("beta1") {
                *beta1 = v;
            }
            if let Some(v) = get_f("xi") {
                *xi = Some(v);
            }
            if let Some(v) = get_f("dt") {
                *dt = v;
            }
            if let Some(v) = get_f("t_final") {
                *t_final = v;
            }
            if let Some(v) = get_u("stride") {
                *stride = v as usize;
            }
            if let Some(v) = obj.get("correlated").and_then(|v| v.as_bool()) {
                *correlated = v;
            }
        }
        Command::VerifyInequalities {
            common,
            beta1,
            n,
            trials,
        } => {
            overlay_common!(common);
            if let Some(v) = get_f("beta1") {
                *beta1 = v;
            }
            if let Some(v) = get_u("N") {
                *n = v;
            }
            if let Some(v) = get_u("trials") {
                *trials = v as usize;
            }
        }
        Command::DecomposeEnergy {
            common,
            grid,
            n_particles,
            beta1,
            eps,
        } => {
            overlay_common!(common);
            overlay_grid!(grid);
            if let Some(v) = get_u("n_particles") {
                *n_particles = v as usize;
            }
            if let Some(v) = get_f("beta1") {
                *beta1 = v;
            }
            if let Some(v) = get_f("eps") {
                *eps = v;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    if let Err(f) = apply_config_overlay(&mut cli) {
        eprintln!("error: {}", f.message);
        return ExitCode::from(f.code);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { common } => {
            let spec = load_spec(&common)?;
            ensure_out(&common.out)?;
            let report = validate_assumption(&spec)?;
            io::write_validation_report(&common.out.join("validation.json"), &report)?;
            println!(
                "validation: overall = {}, n1 = {}, n2 = {}, energy-form infimum = {:.6e}",
                report.overall, report.n1, report.n2, report.er_infimum
            );
            if !report.overall {
                return Err(Failure::tolerance("spec failed the admissibility checks"));
            }
            Ok(())
        }
        Command::ScatteringSweep { common, n, beta1 } => {
            let spec = load_spec(&common)?;
            ensure_out(&common.out)?;
            let rows = scattering_sweep(&spec, &n, beta1)?;
            let meta = serde_json::json!({
                "beta1": beta1,
                "points_per_feature": 64,
                "s_rel_tol": 1e-10,
                "seed": common.seed,
            });
            io::write_sweep_csv(&common.out.join("sweep.csv"), &rows, &meta)?;
            for r in &rows {
                println!(
                    "N = {:>7}: R_beta = {:.6e}, K = {:.12}, N||Wf|| = {:.9}",
                    r.n, r.r_beta, r.k_beta, r.nwf
                );
            }
            Ok(())
        }
        Command::GpEvolve {
            common,
            grid,
            dt,
            t_final,
            stride,
        } => {
            let spec = load_spec(&common)?;
            ensure_out(&common.out)?;
            let a = condensate::scattering::scattering_length(&spec)?;
            let g = PeriodicGrid::new(grid.dim, grid.grid, grid.box_length);
            let field = GPField::gaussian(g, grid.sigma);
            let pot = ExternalPotential::zero();
            let traj = gp_evolve(&field, a, &pot, t_final, dt, stride)?;
            for (i, snap) in traj.snapshots.iter().enumerate() {
                io::write_snapshot(&common.out, i, snap, a)?;
            }
            io::write_density_csv(
                &common.out.join("density_final.csv"),
                traj.snapshots.last().unwrap(),
            )?;
            println!(
                "gp evolution: {} snapshots, norm drift {:.3e}, energy drift {:.3e}",
                traj.snapshots.len(),
                traj.max_norm_drift,
                traj.max_energy_drift
            );
            if traj.max_norm_drift > common.tol.max(1e-10) {
                return Err(Failure::tolerance(format!(
                    "norm drift {:.3e} above tolerance",
                    traj.max_norm_drift
                )));
            }
            Ok(())
        }
        Command::ManybodyEvolve {
            common,
            grid,
            n_particles,
            dt,
            t_final,
            stride,
        } => {
            let spec = load_spec(&common)?;
            ensure_out(&common.out)?;
            let g = PeriodicGrid::new(grid.dim, grid.grid, grid.box_length);
            let phi = GPField::gaussian(g, grid.sigma);
            let mut psi = ManyBodyState::product(&phi, n_particles);
            let pot = ExternalPotential::zero();
            let steps = (t_final / dt).round() as usize;
            let opts = EvolveOptions::default();
            let weight = CountingWeight::sqrt(n_particles);

            let meta = serde_json::json!({
                "n_particles": n_particles, "grid": grid.grid, "dim": grid.dim,
                "box_length": grid.box_length, "dt": dt, "seed": common.seed,
            });
            let mut series = io::TimeSeriesWriter::create(
                &common.out.join("diagnostics.csv"),
                &[
                    "t",
                    "norm",
                    "energy_per_particle",
                    "departed_fraction",
                    "counting_weight",
                    "trace_distance",
                    "localized_gradient",
                ],
                &meta,
            )?;
            let mut emit = |psi: &ManyBodyState| -> Result<(), Failure> {
                let e = many_body_energy(psi, &spec, &pot)?;
                let pk = pk_spectrum(psi, &phi)?;
                let q1: f64 = pk
                    .iter()
                    .enumerate()
                    .map(|(k, &p)| k as f64 / n_particles as f64 * p)
                    .sum();
                let nh = weighted_expectation(psi, &phi, &weight)?;
                let td = if psi.one_body_dim() <= 512 {
                    trace_distance(&reduced_density(psi)?, &phi)?
                } else {
                    trace_distance_operator(psi, &phi)?
                };
                let c4 = localized_gradient_diagnostic(psi, &phi)?;
                series.write_row(&[psi.time, psi.norm(), e, q1, nh, td, c4])?;
                Ok(())
            };
            emit(&psi)?;
            let mut done = 0usize;
            let mut checkpoint = 0usize;
            while done < steps {
                let chunk = stride.min(steps - done);
                psi = evolve_with(&psi, &spec, &pot, dt, chunk, &opts)?;
                done += chunk;
                checkpoint += 1;
                emit(&psi)?;
                io::write_json(
                    &common.out.join(format!("checkpoint_{checkpoint:04}.json")),
                    &serde_json::json!({
                        "time": psi.time, "n_particles": n_particles,
                        "grid": grid.grid, "dim": grid.dim,
                        "box_length": grid.box_length,
                    }),
                )?;
                write_amplitudes(
                    &common.out.join(format!("checkpoint_{checkpoint:04}.bin")),
                    &psi,
                )?;
            }
            println!(
                "manybody evolution: {steps} steps, final norm {:.12}",
                psi.norm()
            );
            Ok(())
        }
        Command::Compare {
            common,
            grid,
            n_particles,
            beta1,
            xi,
            dt,
            t_final,
            stride,
            correlated,
        } => {
            let spec = load_spec(&common)?;
            ensure_out(&common.out)?;
            let config = CompareConfig {
                n_particles,
                dim: grid.dim,
                grid_points: grid.grid,
                box_length: grid.box_length,
                sigma: grid.sigma,
                beta1,
                xi,
                dt,
                t_final,
                sample_stride: stride,
                correlated,
                krylov_dim: if grid.dim == 3 { 8 } else { 24 },
                seed: common.seed,
            };
            let result = run_compare(&spec, &ExternalPotential::zero(), &config)?;
            let meta = serde_json::json!({
                "n_particles": n_particles, "grid": grid.grid, "dim": grid.dim,
                "box_length": grid.box_length, "dt": dt, "beta1": beta1,
                "xi": xi, "correlated": correlated, "seed": common.seed,
                "scattering_length": result.scattering_length,
                "correlation_energy_shift": result.correlation_energy_shift,
            });
            let mut series = io::TimeSeriesWriter::create(
                &common.out.join("compare.csv"),
                &COMPARE_COLUMNS,
                &meta,
            )?;
            for s in &result.samples {
                series.write_row(&s.row())?;
            }
            let last = result.samples.last().unwrap();
            println!(
                "compare: {} samples, final trace distance {:.6e}, departed fraction {:.6e}",
                result.samples.len(),
                last.trace_distance,
                last.departed_fraction
            );
            for s in &result.samples {
                if !s.trace_distance.is_finite() || (s.norm - 1.0).abs() > 1e-8 {
                    return Err(Failure::tolerance(
                        "diagnostics left their tolerance envelope",
                    ));
                }
            }
            Ok(())
        }
        Command::VerifyInequalities {
            common,
            beta1,
            n,
            trials,
        } => {
            let spec = load_spec(&common)?;
            ensure_out(&common.out)?;
            let validation = validate_assumption(&spec)?;
            let split_positivity = verify_split_positivity(&spec, trials, common.seed)?;
            let ms = find_minimal_r(&spec, n, beta1)?;
            let localized = condensate::inequalities::shell_form_check_scaled(&ms, 1.0)?;
            let over = condensate::inequalities::shell_form_check_scaled(&ms, 2.0)?;
            let covering = covering_energy_bound_check(&spec, 10_000, 20, common.seed)?;
            let partitions: Vec<_> = (4..=9)
                .map(partition_identities)
                .collect::<condensate::Result<_>>()?;
            let operator_identity = hamiltonian_partition_identity(&spec, 8, Some(1))?;
            let prop1 =
                proximity_scaling(1.0, &[100, 1000, 10_000, 100_000, 1_000_000], 26.0 / 27.0);
            let interaction_norms = {
                let diag_grid = PeriodicGrid::new(1, 16, 8.0);
                let phi = GPField::gaussian(diag_grid, 1.0);
                let states = vec![
                    ManyBodyState::product(&phi, 2),
                    ManyBodyState::random_symmetric(diag_grid, 2, common.seed),
                    ManyBodyState::random_symmetric(diag_grid, 2, common.seed + 1),
                    ManyBodyState::product(&phi, 3),
                    ManyBodyState::random_symmetric(diag_grid, 3, common.seed + 2),
                ];
                interaction_norm_diagnostics(&states, &spec, &ExternalPotential::zero())?
            };

            let pass = validation.overall
                && split_positivity.pass
                && !localized.violated
                && over.violated
                && covering.violations == 0
                && operator_identity < 1e-12
                && prop1.slope <= -7.0 / 54.0
                && interaction_norms.c_interaction.is_finite()
                && interaction_norms.c_gradient.is_finite();
            let report = serde_json::json!({
                "validation": validation,
                "two_body_split_positivity": split_positivity,
                "localized_shell_form": localized,
                "localized_shell_form_oversubtracted": over,
                "covered_pair_bound": covering,
                "partition_ratios": partitions,
                "partition_operator_identity_defect": operator_identity,
                "proximity_scaling": prop1,
                "interaction_norm_constants": interaction_norms,
                "pass": pass,
            });
            io::write_json(&common.out.join("inequalities.json"), &report)?;
            println!("inequalities: pass = {pass}");
            if !pass {
                return Err(Failure::tolerance("an inequality check failed"));
            }
            Ok(())
        }
        Command::DecomposeEnergy {
            common,
            grid,
            n_particles,
            beta1,
            eps,
        } => {
            let spec = load_spec(&common)?;
            ensure_out(&common.out)?;
            let g = PeriodicGrid::new(grid.dim, grid.grid, grid.box_length);
            let phi = GPField::gaussian(g, grid.sigma);
            let psi = ManyBodyState::random_symmetric(g, n_particles, common.seed);
            let ms = find_minimal_r(&spec, n_particles as u64, beta1)?;
            let pot = ExternalPotential::zero();
            let dec = energy_decomposition(&psi, &phi, &ms, &pot, eps)?;
            io::write_json(
                &common.out.join("decomposition.json"),
                &serde_json::json!({
                    "terms": dec.terms.iter().map(|t| (t.label, t.value)).collect::<Vec<_>>(),
                    "sum": dec.sum,
                    "energy_difference": dec.energy_difference,
                    "residual": dec.residual,
                    "scale": dec.scale,
                }),
            )?;
            println!(
                "decomposition: residual {:.3e} against scale {:.3e}",
                dec.residual, dec.scale
            );
            if dec.residual > common.tol * dec.scale {
                return Err(Failure::tolerance(format!(
                    "decomposition residual {:.3e} above tolerance",
                    dec.residual
                )));
            }
            Ok(())
        }
    }
}

fn write_amplitudes(path: &Path, state: &ManyBodyState) -> Result<(), Failure> {
    let mut raw = Vec::with_capacity(state.amplitudes.len() * 16);
    for z in &state.amplitudes {
        raw.extend_from_slice(&z.re.to_le_bytes());
        raw.extend_from_slice(&z.im.to_le_bytes());
    }
    std::fs::write(path, raw).map_err(|e| Failure::config(format!("checkpoint: {e}")))?;
    Ok(())
}
