//! Adaptive trust-region optimization driven by a reduced model and its
//! error estimator.
//!
//! [`tr_rb_optimize`] keeps a pair of snapshot bases that start at the
//! initial parameter and grow at every accepted iterate. Each outer
//! iteration solves the subproblem
//!
//! > minimize `J_r(μ)` subject to `Δ_J(μ) / J_r(μ) ≤ radius`
//!
//! on the current reduced model with the projected-BFGS solver, decides
//! acceptance with cheap certified bounds (falling back to a single
//! full-order value only when the bounds overlap), enriches the bases with
//! full-order snapshots at accepted candidates, and adapts the radius from
//! the agreement between the actual and the model-predicted decrease. The
//! loop terminates when the full-order criticality measure at an accepted
//! iterate drops to the configured tolerance.

use crate::fom::{self, foc_measure, SolveError};
use crate::model::FullOrderModel;
use crate::optimizer::{projected_bfgs, OptimizeOptions, TrustRegionConstraint};
use crate::rom::{FunctionalMode, ProjectionMode, ReducedBasis, ReducedEvaluation, ReducedModel, RomError};
use nalgebra::DVector;
use std::cell::RefCell;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Rom(#[from] RomError),
}

/// Which reduced model drives the outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrMode {
    /// Galerkin projection with the residual-corrected functional and the
    /// inexact gradient.
    GalerkinNcd,
    /// Petrov-Galerkin projection (correction vanishes, gradient exact).
    PetrovGalerkin,
}

impl TrMode {
    pub fn label(&self) -> &'static str {
        match self {
            TrMode::GalerkinNcd => "galerkin_ncd",
            TrMode::PetrovGalerkin => "petrov_galerkin",
        }
    }

    fn projection(&self) -> ProjectionMode {
        match self {
            TrMode::GalerkinNcd => ProjectionMode::Galerkin,
            TrMode::PetrovGalerkin => ProjectionMode::PetrovGalerkin,
        }
    }
}

/// Subproblem solver knobs (the trust-region coupling itself is wired by the
/// outer loop).
#[derive(Debug, Clone, Copy)]
pub struct SubproblemConfig {
    pub max_iter: usize,
    pub armijo_alpha: f64,
    pub armijo_kappa: f64,
    pub max_backtracks: usize,
    /// Fraction of the radius at which a subproblem iterate counts as a
    /// boundary hit.
    pub boundary_beta: f64,
}

impl Default for SubproblemConfig {
    fn default() -> Self {
        SubproblemConfig {
            max_iter: 1000,
            armijo_alpha: 1e-4,
            armijo_kappa: 0.5,
            max_backtracks: 40,
            boundary_beta: 0.95,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TRConfig {
    /// Initial trust radius on the relative estimator gauge.
    pub radius0: f64,
    /// Shrink factor applied on rejection (and its inverse on enlargement).
    pub shrink_beta1: f64,
    /// Decrease-agreement threshold at or above which the radius grows.
    pub eta_rho: f64,
    /// Full-order criticality tolerance of the outer loop.
    pub tau_foc: f64,
    pub max_outer: usize,
    pub mode: TrMode,
    pub subproblem: SubproblemConfig,
}

impl TRConfig {
    pub fn new(mode: TrMode) -> Self {
        TRConfig {
            radius0: 0.1,
            shrink_beta1: 0.5,
            eta_rho: 0.75,
            tau_foc: 1e-6,
            max_outer: 40,
            mode,
            subproblem: SubproblemConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrTermination {
    /// Full-order criticality reached the tolerance.
    Converged,
    MaxOuter,
    /// An accepted candidate's snapshots no longer extend the bases (or the
    /// subproblem could not move), so the surrogate cannot improve further.
    Stagnation,
    /// The reduced system stayed unstable at the current iterate even after
    /// an enrichment retry.
    PersistentInstability,
}

impl TrTermination {
    pub fn label(&self) -> &'static str {
        match self {
            TrTermination::Converged => "converged",
            TrTermination::MaxOuter => "max_outer",
            TrTermination::Stagnation => "stagnation",
            TrTermination::PersistentInstability => "instability",
        }
    }
}

/// One outer iteration (row zero is the seeded start).
#[derive(Debug, Clone)]
pub struct TROuterRecord {
    pub k: usize,
    /// Current iterate after this iteration's decision.
    pub mu: DVector<f64>,
    /// Full-order objective at the iterate.
    pub j_h: f64,
    /// Full-order criticality measure at the iterate.
    pub foc: f64,
    /// Trust radius after this iteration's update.
    pub radius: f64,
    pub accepted: bool,
    /// Total basis size (primal + dual columns).
    pub n_basis: usize,
    pub t_cumulative_s: f64,
    /// Full-order solves spent in this iteration.
    pub fom_solves: usize,
}

#[derive(Debug, Clone, Default)]
pub struct TRHistory {
    pub rows: Vec<TROuterRecord>,
}

impl TRHistory {
    pub fn total_fom_solves(&self) -> usize {
        self.rows.iter().map(|r| r.fom_solves).sum()
    }

    /// Number of model generations the loop ran. Rejected candidates re-solve
    /// the subproblem with a smaller radius inside the same generation, so
    /// retry rows share their `k` and do not add to this count.
    pub fn outer_iterations(&self) -> usize {
        self.rows.iter().map(|r| r.k).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct TRResult {
    pub mu: DVector<f64>,
    pub j_h: f64,
    pub foc: f64,
    pub reason: TrTermination,
    pub history: TRHistory,
}

/// Acceptance test for a subproblem candidate, using certified bounds first
/// and a full-order value only when they overlap.
///
/// Accepts outright when `J_r(cand) + Δ_J(cand) ≤ J_r(AGC)` (the corrected
/// value cannot exceed the comparison value), rejects outright when
/// `J_r(cand) - Δ_J(cand) > J_r(AGC)` (it cannot be below), and otherwise
/// asks `fom_value` for the true objective at the candidate. The second flag
/// reports whether that expensive branch ran.
pub fn sufficient_decrease_check<E>(
    j_r_next: f64,
    delta_j_next: f64,
    j_r_agc: f64,
    fom_value: impl FnOnce() -> Result<f64, E>,
) -> Result<(bool, bool), E> {
    if j_r_next + delta_j_next <= j_r_agc {
        Ok((true, false))
    } else if j_r_next - delta_j_next > j_r_agc {
        Ok((false, false))
    } else {
        let j_h = fom_value()?;
        Ok((j_h <= j_r_agc, true))
    }
}

/// Radius adaptation from the agreement of actual to predicted decrease,
/// both measured between the previous iterate and the accepted candidate.
/// An agreement ratio at or above `eta_rho` enlarges the radius by
/// `1 / shrink_beta1`; anything else leaves it unchanged (shrinking happens
/// only on rejection). A vanishing predicted decrease keeps the radius.
pub fn radius_update(
    j_h_prev: f64,
    j_h_next: f64,
    j_r_prev: f64,
    j_r_next: f64,
    radius: f64,
    config: &TRConfig,
) -> f64 {
    let predicted = j_r_prev - j_r_next;
    if predicted == 0.0 {
        return radius;
    }
    let ratio = (j_h_prev - j_h_next) / predicted;
    if ratio >= config.eta_rho {
        radius / config.shrink_beta1
    } else {
        radius
    }
}

/// Runs the trust-region loop from `mu0` (which must lie in the parameter
/// box) and returns the final iterate with the per-iteration record.
/// Smallest radius the rejection retry loop will attempt. The radius bounds a
/// relative error estimate, so rounding scale means no certifiable step exists.
const RADIUS_FLOOR: f64 = 1e-14;

pub fn tr_rb_optimize(
    fom: &FullOrderModel,
    mu0: &DVector<f64>,
    config: &TRConfig,
) -> Result<TRResult, TrError> {
    assert!(config.shrink_beta1 > 0.0 && config.shrink_beta1 < 1.0, "shrink_beta1 must lie in (0, 1)");
    assert!(config.eta_rho > 0.0 && config.eta_rho < 1.0, "eta_rho must lie in (0, 1)");
    assert!(fom.bounds.contains(mu0), "starting parameter must lie in the box");
    let started = Instant::now();
    let projection = config.mode.projection();

    // Seed the bases with the snapshot pair at the start.
    let (primal, dual) = fom::solve_pair(fom, mu0)?;
    let mut v_pr = ReducedBasis::empty(fom.n_dofs()).extended(&primal.u, fom.product()).0;
    let mut v_du = ReducedBasis::empty(fom.n_dofs()).extended(&dual.p, fom.product()).0;
    let mut mu = mu0.clone();
    let mut j_h = fom::objective(fom, &primal);
    let grad = fom::gradient(fom, &primal, &dual);
    let mut foc = foc_measure(&fom.bounds, &mu, &grad);
    let mut radius = config.radius0;

    let mut history = TRHistory::default();
    history.rows.push(TROuterRecord {
        k: 0,
        mu: mu.clone(),
        j_h,
        foc,
        radius,
        accepted: true,
        n_basis: v_pr.len() + v_du.len(),
        t_cumulative_s: started.elapsed().as_secs_f64(),
        fom_solves: 2,
    });
    let finish = |reason: TrTermination, mu: DVector<f64>, j_h: f64, foc: f64, history: TRHistory| {
        Ok(TRResult { mu, j_h, foc, reason, history })
    };
    if foc <= config.tau_foc {
        return finish(TrTermination::Converged, mu, j_h, foc, history);
    }

    let mut model = ReducedModel::project(fom, &v_pr, &v_du, projection, FunctionalMode::NcdCorrected)?;

    let mut needs_projection = false;
    'outer: for k in 1..=config.max_outer {
        if needs_projection {
            model = ReducedModel::project(fom, &v_pr, &v_du, projection, FunctionalMode::NcdCorrected)?;
        }
        let mut row_solves = 0usize;

        // The reduced model must be usable at the current iterate before a
        // subproblem can run; one enrichment retry is allowed, then the run
        // aborts as persistently unstable.
        let mut retried = false;
        let center: ReducedEvaluation = loop {
            match model.online().evaluate(&mu) {
                Ok(eval) => break eval,
                Err(RomError::Unstable { .. }) => {
                    if retried {
                        return finish(TrTermination::PersistentInstability, mu, j_h, foc, history);
                    }
                    retried = true;
                    let (primal, dual) = fom::solve_pair(fom, &mu)?;
                    row_solves += 2;
                    let (next_pr, ok_pr) = v_pr.extended(&primal.u, fom.product());
                    let (next_du, ok_du) = v_du.extended(&dual.p, fom.product());
                    if !(ok_pr && ok_du) {
                        return finish(TrTermination::PersistentInstability, mu, j_h, foc, history);
                    }
                    v_pr = next_pr;
                    v_du = next_du;
                    model = ReducedModel::project(fom, &v_pr, &v_du, projection, FunctionalMode::NcdCorrected)?;
                }
                Err(other) => return Err(other.into()),
            }
        };

        // Subproblem on the generation-k model, constrained to the region
        // where the relative estimate stays below the radius. The three
        // callbacks share one memoized evaluation (the solver probes value,
        // gauge and gradient at the same point back to back).
        let online = model.online();
        let cache: RefCell<Option<(DVector<f64>, ReducedEvaluation)>> = RefCell::new(None);
        let eval_cached = |probe: &DVector<f64>| -> Option<ReducedEvaluation> {
            if let Some((key, eval)) = cache.borrow().as_ref() {
                if key == probe {
                    return Some(eval.clone());
                }
            }
            match online.evaluate(probe) {
                Ok(eval) => {
                    *cache.borrow_mut() = Some((probe.clone(), eval.clone()));
                    Some(eval)
                }
                Err(_) => None,
            }
        };
        let tau_sub = config.tau_foc.min(1e-8 * (1.0 + center.value.abs()));
        // A rejected candidate keeps the iterate and the model generation:
        // the radius shrinks and the subproblem is solved again. `k` only
        // advances once a candidate is accepted.
        loop {
            let sub = projected_bfgs(
                |probe| eval_cached(probe).map(|e| e.value),
                |probe| {
                    let eval = eval_cached(probe).expect("gradient is only requested at evaluable iterates");
                    online.gradient(probe, &eval.primal.coeffs, &eval.dual.coeffs)
                },
                &mu,
                &fom.bounds,
                OptimizeOptions {
                    tau_foc: tau_sub,
                    max_iter: config.subproblem.max_iter,
                    armijo_alpha: config.subproblem.armijo_alpha,
                    armijo_kappa: config.subproblem.armijo_kappa,
                    max_backtracks: config.subproblem.max_backtracks,
                    tr_constraint: Some(TrustRegionConstraint {
                        ratio: Box::new(|probe| {
                            eval_cached(probe).map(|e| e.estimates.delta_j / e.value.abs())
                        }),
                        radius,
                        boundary_beta: config.subproblem.boundary_beta,
                    }),
                },
            );

            if sub.iterations() == 0 {
                // The subproblem cannot move away from the current iterate, and
                // the surrogate is already exact here (its snapshots are in the
                // bases), so further outer iterations would repeat this state.
                history.rows.push(TROuterRecord {
                    k,
                    mu: mu.clone(),
                    j_h,
                    foc,
                    radius,
                    accepted: false,
                    n_basis: v_pr.len() + v_du.len(),
                    t_cumulative_s: started.elapsed().as_secs_f64(),
                    fom_solves: row_solves,
                });
                return finish(TrTermination::Stagnation, mu, j_h, foc, history);
            }

            let cand = sub.mu.clone();
            let j_r_agc = sub.agc.as_ref().expect("a moved subproblem has an accepted first iterate").value;
            let cand_eval = match eval_cached(&cand) {
                Some(eval) => eval,
                None => return finish(TrTermination::PersistentInstability, cand, j_h, foc, history),
            };

            let mut acceptance_primal = None;
            let (accept, _used_fom) = sufficient_decrease_check(
                cand_eval.value,
                cand_eval.estimates.delta_j,
                j_r_agc,
                || -> Result<f64, SolveError> {
                    let primal = fom::solve_primal(fom, &cand)?;
                    let value = fom::objective(fom, &primal);
                    acceptance_primal = Some(primal);
                    Ok(value)
                },
            )?;
            if acceptance_primal.is_some() {
                row_solves += 1;
            }

            if accept {
                let primal = match acceptance_primal {
                    Some(primal) => primal,
                    None => {
                        row_solves += 1;
                        fom::solve_primal(fom, &cand)?
                    }
                };
                let dual = fom::solve_dual(fom, &cand, &primal)?;
                row_solves += 1;
                let j_h_next = fom::objective(fom, &primal);
                let grad = fom::gradient(fom, &primal, &dual);
                let foc_next = foc_measure(&fom.bounds, &cand, &grad);
                radius = radius_update(j_h, j_h_next, center.value, sub.value, radius, config);

                // Keep the bases the same size: columns are only committed in
                // pairs. A half-spanned candidate (one snapshot new, one
                // already contained) leaves the model as is and lets the next
                // subproblem continue from the moved iterate; only a fully
                // spanned candidate, where the surrogate is already exact,
                // ends the run.
                let (next_pr, ok_pr) = v_pr.extended(&primal.u, fom.product());
                let (next_du, ok_du) = v_du.extended(&dual.p, fom.product());
                let enriched = ok_pr && ok_du;
                if enriched {
                    v_pr = next_pr;
                    v_du = next_du;
                }

                mu = cand;
                j_h = j_h_next;
                foc = foc_next;
                history.rows.push(TROuterRecord {
                    k,
                    mu: mu.clone(),
                    j_h,
                    foc,
                    radius,
                    accepted: true,
                    n_basis: v_pr.len() + v_du.len(),
                    t_cumulative_s: started.elapsed().as_secs_f64(),
                    fom_solves: row_solves,
                });

                if foc <= config.tau_foc {
                    return finish(TrTermination::Converged, mu, j_h, foc, history);
                }
                if !ok_pr && !ok_du {
                    return finish(TrTermination::Stagnation, mu, j_h, foc, history);
                }
                needs_projection = enriched;
                continue 'outer;
            } else {
                // Near a minimizer the decrease left to certify drops below the
                // surrogate's value accuracy and the comparison above turns into
                // noise, rejecting forever. The overlap branch has already paid
                // for the candidate's full-order state, so one adjoint solve
                // settles the question that actually matters: if the candidate
                // is critical at the full-order level, the run is done.
                if let Some(primal) = acceptance_primal {
                    let dual = fom::solve_dual(fom, &cand, &primal)?;
                    row_solves += 1;
                    let grad = fom::gradient(fom, &primal, &dual);
                    let cand_foc = foc_measure(&fom.bounds, &cand, &grad);
                    if cand_foc <= config.tau_foc {
                        let cand_j_h = fom::objective(fom, &primal);
                        history.rows.push(TROuterRecord {
                            k,
                            mu: cand.clone(),
                            j_h: cand_j_h,
                            foc: cand_foc,
                            radius,
                            accepted: false,
                            n_basis: v_pr.len() + v_du.len(),
                            t_cumulative_s: started.elapsed().as_secs_f64(),
                            fom_solves: row_solves,
                        });
                        return finish(TrTermination::Converged, cand, cand_j_h, cand_foc, history);
                    }
                }
                radius *= config.shrink_beta1;
                history.rows.push(TROuterRecord {
                    k,
                    mu: mu.clone(),
                    j_h,
                    foc,
                    radius,
                    accepted: false,
                    n_basis: v_pr.len() + v_du.len(),
                    t_cumulative_s: started.elapsed().as_secs_f64(),
                    fom_solves: row_solves,
                });
                row_solves = 0;
                if radius < RADIUS_FLOOR {
                    // The gauge is a relative error, so a radius at rounding
                    // scale can never admit a certifiable step: the surrogate
                    // has nothing left to offer at this iterate.
                    return finish(TrTermination::Stagnation, mu, j_h, foc, history);
                }
            }
        }
    }

    finish(TrTermination::MaxOuter, mu, j_h, foc, history)
}
