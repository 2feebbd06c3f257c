//! Implementations of the command-line entry points.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rbopt::benchmark::{build_benchmark, load_experiment, Method};
use rbopt::fom;
use rbopt::greedy::{error_study, goal_oriented_greedy};
use rbopt::mesh::build_structured_mesh;
use rbopt::model::FullOrderModel;
use rbopt::optimizer::{projected_bfgs, OptimizeOptions, OptimizeResult, TerminationReason};
use rbopt::rom::{FunctionalMode, ProjectionMode, ReducedBasis, ReducedModel, RomError};
use rbopt::trust_region::{tr_rb_optimize, TRConfig, TrMode, TrTermination};

use crate::output;

/// Training-set size for the greedy search.
const GREEDY_TRAINING: usize = 100;
/// Validation-set size for the error-decay study.
const STUDY_VALIDATION: usize = 50;
/// Iteration budget for the full-order reference optimizer.
const FOM_MAX_ITER: usize = 5000;

fn fom_value(fom: &FullOrderModel) -> impl FnMut(&DVector<f64>) -> Option<f64> + '_ {
    move |mu| fom::solve_primal(fom, mu).ok().map(|p| fom::objective(fom, &p))
}

fn fom_gradient(fom: &FullOrderModel) -> impl FnMut(&DVector<f64>) -> DVector<f64> + '_ {
    move |mu| {
        let (primal, dual) =
            fom::solve_pair(fom, mu).expect("full-order solve failed during optimization");
        fom::gradient(fom, &primal, &dual)
    }
}

fn run_fom_bfgs(fom: &FullOrderModel, mu0: &DVector<f64>, tau_foc: f64) -> OptimizeResult {
    projected_bfgs(
        fom_value(fom),
        fom_gradient(fom),
        mu0,
        &fom.bounds,
        OptimizeOptions { tau_foc, max_iter: FOM_MAX_ITER, ..OptimizeOptions::new() },
    )
}

/// Full-order solves consumed by a quasi-Newton run: one per value
/// evaluation, two per gradient evaluation (state and adjoint).
fn bfgs_fom_solves(run: &OptimizeResult) -> usize {
    run.value_evals + 2 * run.gradient_evals
}

fn parse_mu(arg: &str, expected: usize) -> Result<DVector<f64>> {
    let values: Vec<f64> = arg
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .with_context(|| format!("cannot parse '{}' as a number", part.trim()))
        })
        .collect::<Result<_>>()?;
    if values.len() != expected {
        bail!("expected {expected} parameter components, got {}", values.len());
    }
    Ok(DVector::from_vec(values))
}

pub fn fom_solve(config_path: &Path, mu_arg: &str, out: &Path) -> Result<()> {
    let (config, geometry) = load_experiment(config_path)?;
    let fom = build_benchmark(&geometry, config.nx, config.ny, &config)?;
    let mu = parse_mu(mu_arg, fom.n_params())?;
    if !fom.bounds.contains(&mu) {
        bail!("parameter {:?} lies outside the box", mu.as_slice());
    }

    let (primal, dual) = fom::solve_pair(&fom, &mu)?;
    let value = fom::objective(&fom, &primal);
    let grad = fom::gradient(&fom, &primal, &dual);
    let foc = fom::foc_measure(&fom.bounds, &mu, &grad);

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let names = geometry.parameter_names();
    let summary_path = out.join("fom_summary.csv");
    output::fom_summary_doc(&names, &mu, value, foc, &grad).write(&summary_path)?;
    let mesh = build_structured_mesh(geometry.domain, config.nx, config.ny);
    let state_path = out.join("fom_state.csv");
    output::state_doc(&mesh, &primal.u, &dual.p).write(&state_path)?;

    println!("objective {value:.12e}  foc {foc:.3e}  dofs {}", fom.n_dofs());
    println!("wrote {}", summary_path.display());
    println!("wrote {}", state_path.display());
    Ok(())
}

fn projection_for(method: Method) -> ProjectionMode {
    match method {
        Method::TrPg => ProjectionMode::PetrovGalerkin,
        _ => ProjectionMode::Galerkin,
    }
}

pub fn greedy(config_path: &Path, tol: f64, max: usize, out: &Path, no_timings: bool) -> Result<()> {
    let (config, geometry) = load_experiment(config_path)?;
    let fom = build_benchmark(&geometry, config.nx, config.ny, &config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let training: Vec<_> = (0..GREEDY_TRAINING).map(|_| fom.bounds.sample(&mut rng)).collect();
    let validation: Vec<_> = (0..STUDY_VALIDATION).map(|_| fom.bounds.sample(&mut rng)).collect();

    let (v_pr, v_du, history) =
        goal_oriented_greedy(&fom, &training, tol, max, projection_for(config.method))?;
    let table = error_study(&fom, &v_pr, &v_du, &validation)?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let names = geometry.parameter_names();
    let history_path = out.join("greedy_history.csv");
    output::greedy_history_doc(&history, &names, !no_timings).write(&history_path)?;
    let study_path = out.join("error_study.csv");
    output::error_study_doc(&table).write(&study_path)?;

    println!(
        "greedy: {} snapshot pairs, final max relative estimate {:.3e}{}",
        history.steps.len(),
        history.final_max_estimate,
        if history.stagnated { " (stagnated)" } else { "" }
    );
    println!("wrote {}", history_path.display());
    println!("wrote {}", study_path.display());
    Ok(())
}

pub fn optimize(
    config_path: &Path,
    method_override: Option<Method>,
    starts_override: Option<usize>,
    out: &Path,
    no_timings: bool,
) -> Result<()> {
    let (mut config, geometry) = load_experiment(config_path)?;
    if let Some(method) = method_override {
        config.method = method;
    }
    if let Some(starts) = starts_override {
        config.starts = starts;
    }
    if config.starts == 0 {
        bail!("at least one start is required");
    }

    let fom = build_benchmark(&geometry, config.nx, config.ny, &config)?;
    let names = geometry.parameter_names();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start_points: Vec<_> = (0..config.starts).map(|_| fom.bounds.sample(&mut rng)).collect();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut rows = Vec::with_capacity(start_points.len());
    for (i, mu0) in start_points.iter().enumerate() {
        let history_path = out.join(format!("start_{i}_history.csv"));
        let row = match config.method {
            Method::FomBfgs => {
                let clock = Instant::now();
                let run = run_fom_bfgs(&fom, mu0, config.tau_foc);
                let runtime_s = clock.elapsed().as_secs_f64();
                if run.reason != TerminationReason::Foc {
                    eprintln!("warning: start {i} stopped without criticality ({:?})", run.reason);
                }
                output::bfgs_history_doc(&run, &names).write(&history_path)?;
                output::StartSummary {
                    start: i,
                    method: config.method.label(),
                    iterations: run.iterations(),
                    fom_solves: bfgs_fom_solves(&run),
                    j_final: run.value,
                    foc: run.foc,
                    rel_error: 0.0,
                    runtime_s,
                    ref_iterations: run.iterations(),
                    ref_runtime_s: runtime_s,
                    speedup: 1.0,
                }
            }
            Method::TrNcd | Method::TrPg => {
                let clock = Instant::now();
                let reference = run_fom_bfgs(&fom, mu0, config.tau_foc);
                let ref_runtime_s = clock.elapsed().as_secs_f64();

                let mode = match config.method {
                    Method::TrPg => TrMode::PetrovGalerkin,
                    _ => TrMode::GalerkinNcd,
                };
                let tr_config = TRConfig { tau_foc: config.tau_foc, ..TRConfig::new(mode) };
                let clock = Instant::now();
                let run = tr_rb_optimize(&fom, mu0, &tr_config)?;
                let runtime_s = clock.elapsed().as_secs_f64();
                if run.reason != TrTermination::Converged {
                    eprintln!("warning: start {i} stopped without criticality ({})", run.reason.label());
                }
                output::tr_history_doc(&run.history, &names, !no_timings).write(&history_path)?;

                let ref_norm = reference.mu.norm();
                let rel_error = if ref_norm > 0.0 {
                    (&run.mu - &reference.mu).norm() / ref_norm
                } else {
                    (&run.mu - &reference.mu).norm()
                };
                output::StartSummary {
                    start: i,
                    method: config.method.label(),
                    iterations: run.history.outer_iterations(),
                    fom_solves: run.history.total_fom_solves(),
                    j_final: run.j_h,
                    foc: run.foc,
                    rel_error,
                    runtime_s,
                    ref_iterations: reference.iterations(),
                    ref_runtime_s,
                    speedup: if runtime_s > 0.0 { ref_runtime_s / runtime_s } else { 0.0 },
                }
            }
        };
        println!(
            "start {i}: J {:.12e}  foc {:.3e}  iterations {}  rel-error {:.3e}",
            row.j_final, row.foc, row.iterations, row.rel_error
        );
        rows.push(row);
    }

    let summary_path = out.join("summary.csv");
    output::summary_doc(&rows, !no_timings).write(&summary_path)?;
    println!("wrote {}", summary_path.display());
    Ok(())
}

/// Re-checks solver guarantees on a coarsened mesh: objective positivity,
/// the adjoint gradient against finite differences, error-estimator
/// validity, and the vanishing correction of the Petrov-Galerkin model.
pub fn validate(config_path: &Path) -> Result<()> {
    let (config, geometry) = load_experiment(config_path)?;
    let nx = config.nx.min(24);
    let ny = ((config.ny as f64 * nx as f64 / config.nx as f64).round() as usize)
        .clamp(1, config.ny);
    let fom = build_benchmark(&geometry, nx, ny, &config)?;
    println!("validating on a {nx}x{ny} mesh ({} dofs)", fom.n_dofs());

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut all_ok = true;
    let mut report = |name: &str, ok: bool, detail: String| {
        if ok {
            println!("PASS {name}");
        } else {
            println!("FAIL {name}: {detail}");
        }
        all_ok &= ok;
    };

    // Objective stays at or above its constant offset.
    {
        let mut ok = true;
        let mut detail = String::new();
        for _ in 0..3 {
            let mu = fom.bounds.sample(&mut rng);
            let primal = fom::solve_primal(&fom, &mu)?;
            let value = fom::objective(&fom, &primal);
            if !(value >= 1.0 - 1e-9) {
                ok = false;
                detail = format!("objective {value:.6e} below 1 at {:?}", mu.as_slice());
                break;
            }
        }
        report("objective-positivity", ok, detail);
    }

    // Adjoint gradient against central finite differences.
    {
        let mut ok = true;
        let mut detail = String::new();
        for _ in 0..2 {
            let mu = fom.bounds.sample(&mut rng);
            let (primal, dual) = fom::solve_pair(&fom, &mu)?;
            let grad = fom::gradient(&fom, &primal, &dual);
            let mut fd = DVector::zeros(mu.len());
            for i in 0..mu.len() {
                let h = 1e-6 * (1.0 + mu[i].abs());
                let mut plus = mu.clone();
                plus[i] += h;
                let mut minus = mu.clone();
                minus[i] -= h;
                let j_plus = fom::objective(&fom, &fom::solve_primal(&fom, &plus)?);
                let j_minus = fom::objective(&fom, &fom::solve_primal(&fom, &minus)?);
                fd[i] = (j_plus - j_minus) / (2.0 * h);
            }
            let rel = (&fd - &grad).norm() / grad.norm().max(1e-12);
            if !(rel <= 1e-4) {
                ok = false;
                detail = format!("relative deviation {rel:.3e} at {:?}", mu.as_slice());
                break;
            }
        }
        report("adjoint-gradient", ok, detail);
    }

    // Reduced-model error estimators bound the true errors, and the
    // Petrov-Galerkin correction term vanishes.
    {
        let mut v_pr = ReducedBasis::empty(fom.n_dofs());
        let mut v_du = ReducedBasis::empty(fom.n_dofs());
        for _ in 0..2 {
            let mu = fom.bounds.sample(&mut rng);
            let (primal, dual) = fom::solve_pair(&fom, &mu)?;
            (v_pr, _) = v_pr.extended(&primal.u, fom.product());
            (v_du, _) = v_du.extended(&dual.p, fom.product());
        }
        let galerkin = ReducedModel::project(
            &fom,
            &v_pr,
            &v_du,
            ProjectionMode::Galerkin,
            FunctionalMode::NcdCorrected,
        )?;
        let pg = ReducedModel::project(
            &fom,
            &v_pr,
            &v_du,
            ProjectionMode::PetrovGalerkin,
            FunctionalMode::NcdCorrected,
        )?;

        let mut bounds_ok = true;
        let mut bounds_detail = String::new();
        let mut pg_ok = true;
        let mut pg_detail = String::new();
        for _ in 0..6 {
            let mu = fom.bounds.sample(&mut rng);
            let eval = match galerkin.online().evaluate(&mu) {
                Ok(eval) => eval,
                Err(RomError::Unstable { condition, .. }) => {
                    bounds_ok = false;
                    bounds_detail =
                        format!("reduced solve unstable (condition {condition:.3e}) at {:?}", mu.as_slice());
                    break;
                }
                Err(err) => return Err(err.into()),
            };
            let (primal, dual) = fom::solve_pair(&fom, &mu)?;
            let err_pr = fom.product_norm(&(galerkin.reconstruct_primal(&eval.primal.coeffs) - &primal.u));
            let err_du = fom.product_norm(&(galerkin.reconstruct_dual(&eval.dual.coeffs) - &dual.p));
            let err_j = (fom::objective(&fom, &primal) - eval.value).abs();
            let slack = 1.0 + 1e-9;
            if !(eval.estimates.delta_pr * slack >= err_pr
                && eval.estimates.delta_du * slack >= err_du
                && eval.estimates.delta_j * slack >= err_j)
            {
                bounds_ok = false;
                bounds_detail = format!(
                    "estimate below true error at {:?}: ({:.3e}, {:.3e}, {:.3e}) vs ({:.3e}, {:.3e}, {:.3e})",
                    mu.as_slice(),
                    eval.estimates.delta_pr,
                    eval.estimates.delta_du,
                    eval.estimates.delta_j,
                    err_pr,
                    err_du,
                    err_j
                );
            }

            if let Ok((u_r, p_r)) = pg.online().solve_pair(&mu) {
                let correction = pg.online().primal_residual_at_dual(&mu, &u_r.coeffs, &p_r.coeffs);
                let scale = 1.0 + pg.online().objective(&mu, &u_r.coeffs, &p_r.coeffs).abs();
                if !(correction.abs() <= 1e-8 * scale) {
                    pg_ok = false;
                    pg_detail =
                        format!("correction {:.3e} at {:?}", correction.abs(), mu.as_slice());
                }
            }
        }
        report("error-estimator-validity", bounds_ok, bounds_detail);
        report("petrov-galerkin-correction", pg_ok, pg_detail);
    }

    if !all_ok {
        bail!("validation failed");
    }
    println!("all checks passed");
    Ok(())
}
