//! Goal-oriented greedy basis generation and the reduction-error study.
//!
//! [`goal_oriented_greedy`] grows a snapshot pair (primal + dual) by
//! repeatedly enriching at the training parameter with the worst relative
//! objective-error estimate. [`error_study`] replays a produced basis pair at
//! a range of truncated sizes and tabulates the true reduction errors of the
//! three reduced variants (plain Galerkin, residual-corrected Galerkin,
//! Petrov-Galerkin) over a validation set.

use crate::fom::{self, SolveError};
use crate::model::FullOrderModel;
use crate::rom::{FunctionalMode, ProjectionMode, ReducedBasis, ReducedModel, RomError};
use nalgebra::DVector;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GreedyError {
    #[error("training set must not be empty")]
    EmptyTrainingSet,
    #[error(transparent)]
    Rom(#[from] RomError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// One enrichment event. The seed step has no preceding estimator sweep and
/// records an infinite trigger value.
#[derive(Debug, Clone)]
pub struct GreedyStep {
    pub selected_mu: DVector<f64>,
    /// Total basis size (primal + dual columns) after the step.
    pub basis_size: usize,
    /// Max relative objective-error estimate over the training set that
    /// triggered this enrichment.
    pub max_rel_estimate: f64,
    /// Seconds spent on this step (sweep plus snapshot solves plus
    /// re-projection).
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct GreedyHistory {
    pub steps: Vec<GreedyStep>,
    /// Max relative estimate over the training set for the returned bases.
    pub final_max_estimate: f64,
    /// True when enrichment stopped because every candidate's snapshots were
    /// already contained in the bases, rather than because the tolerance or
    /// the extension budget was reached.
    pub stagnated: bool,
}

/// Grows reduced bases by greedy search over `training` until the max
/// relative objective-error estimate `Δ_J(μ)/|J_r(μ)|` drops to `tol` or
/// `max_extensions` enrichments (the seed included) have been spent.
///
/// The bases start empty and are seeded with the full-order primal and dual
/// snapshots of the first training parameter. Each following step sweeps the
/// estimator over the training set on the current reduced model (an unstable
/// reduced solve counts as an infinite estimate, forcing enrichment there),
/// selects the argmax — ties broken by lowest index — and enriches both
/// bases at it. A parameter whose snapshot pair no longer extends the bases
/// is dropped from the candidate pool.
pub fn goal_oriented_greedy(
    fom: &FullOrderModel,
    training: &[DVector<f64>],
    tol: f64,
    max_extensions: usize,
    mode: ProjectionMode,
) -> Result<(ReducedBasis, ReducedBasis, GreedyHistory), GreedyError> {
    if training.is_empty() {
        return Err(GreedyError::EmptyTrainingSet);
    }
    let mut v_pr = ReducedBasis::empty(fom.n_dofs());
    let mut v_du = ReducedBasis::empty(fom.n_dofs());
    let mut steps = Vec::new();
    let mut exhausted = vec![false; training.len()];
    let mut stagnated = false;
    let mut final_max = f64::INFINITY;

    let enrich = |v_pr: &ReducedBasis,
                  v_du: &ReducedBasis,
                  mu: &DVector<f64>|
     -> Result<Option<(ReducedBasis, ReducedBasis)>, GreedyError> {
        let (primal, dual) = fom::solve_pair(fom, mu)?;
        let (next_pr, ok_pr) = v_pr.extended(&primal.u, fom.product());
        let (next_du, ok_du) = v_du.extended(&dual.p, fom.product());
        // Only a jointly accepted pair keeps the two bases the same size.
        Ok((ok_pr && ok_du).then_some((next_pr, next_du)))
    };

    let mut extensions = 0usize;
    while extensions < max_extensions {
        let started = Instant::now();
        let (selected, trigger) = if extensions == 0 {
            (0usize, f64::INFINITY)
        } else {
            let model = ReducedModel::project(fom, &v_pr, &v_du, mode, FunctionalMode::NcdCorrected)?;
            let estimates = sweep_relative_estimates(model.online(), training)?;
            let max = estimates.iter().copied().fold(0.0f64, f64::max);
            final_max = max;
            if max <= tol {
                break;
            }
            // Argmax over parameters that can still contribute snapshots.
            let Some(selected) = argmax_open(&estimates, &exhausted) else {
                stagnated = true;
                break;
            };
            (selected, estimates[selected])
        };

        match enrich(&v_pr, &v_du, &training[selected])? {
            Some((next_pr, next_du)) => {
                v_pr = next_pr;
                v_du = next_du;
                extensions += 1;
                steps.push(GreedyStep {
                    selected_mu: training[selected].clone(),
                    basis_size: v_pr.len() + v_du.len(),
                    max_rel_estimate: trigger,
                    wall_time_s: started.elapsed().as_secs_f64(),
                });
            }
            None => {
                exhausted[selected] = true;
                if exhausted.iter().all(|e| *e) {
                    stagnated = true;
                    break;
                }
            }
        }
    }

    // Report where the returned bases stand, also when the loop ended on the
    // extension budget or on the seed alone.
    if !v_pr.is_empty() {
        let model = ReducedModel::project(fom, &v_pr, &v_du, mode, FunctionalMode::NcdCorrected)?;
        let estimates = sweep_relative_estimates(model.online(), training)?;
        final_max = estimates.iter().copied().fold(0.0f64, f64::max);
    }

    let history = GreedyHistory { steps, final_max_estimate: final_max, stagnated };
    Ok((v_pr, v_du, history))
}

/// Relative objective-error estimates over a parameter set; unstable reduced
/// solves map to infinity.
fn sweep_relative_estimates(
    online: &crate::rom::OnlineModel,
    params: &[DVector<f64>],
) -> Result<Vec<f64>, GreedyError> {
    params
        .iter()
        .map(|mu| match online.evaluate(mu) {
            Ok(eval) => Ok(eval.estimates.delta_j / eval.value.abs()),
            Err(RomError::Unstable { .. }) => Ok(f64::INFINITY),
            Err(other) => Err(GreedyError::Rom(other)),
        })
        .collect()
}

fn argmax_open(estimates: &[f64], exhausted: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, value) in estimates.iter().enumerate() {
        if exhausted[i] {
            continue;
        }
        if best.is_none_or(|b| *value > estimates[b]) {
            best = Some(i);
        }
    }
    best
}

/// The three reduced variants the error study compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyVariant {
    PlainGalerkin,
    NcdGalerkin,
    PetrovGalerkin,
}

impl StudyVariant {
    pub const ALL: [StudyVariant; 3] =
        [StudyVariant::PlainGalerkin, StudyVariant::NcdGalerkin, StudyVariant::PetrovGalerkin];

    pub fn label(&self) -> &'static str {
        match self {
            StudyVariant::PlainGalerkin => "plain",
            StudyVariant::NcdGalerkin => "ncd",
            StudyVariant::PetrovGalerkin => "pg",
        }
    }
}

/// Error observables tabulated per basis size and variant, each as a max
/// over the validation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMetric {
    /// `|J_h - J_r|`
    ObjectiveError,
    /// `‖∇J_h - ∇J_r‖_2`
    GradientError,
    /// `‖u_h - u_r‖_V`
    PrimalStateError,
    /// `‖p_h - p_r‖_V`
    DualStateError,
}

impl StudyMetric {
    pub const ALL: [StudyMetric; 4] = [
        StudyMetric::ObjectiveError,
        StudyMetric::GradientError,
        StudyMetric::PrimalStateError,
        StudyMetric::DualStateError,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            StudyMetric::ObjectiveError => "objective_error",
            StudyMetric::GradientError => "gradient_error",
            StudyMetric::PrimalStateError => "primal_state_error",
            StudyMetric::DualStateError => "dual_state_error",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ErrorStudyRow {
    /// Total basis size (primal + dual columns).
    pub basis_size: usize,
    pub variant: StudyVariant,
    pub metric: StudyMetric,
    /// Max of the metric over the validation parameters with stable solves.
    pub value: f64,
    /// Validation parameters skipped at this size/variant because the
    /// reduced system was reported unstable.
    pub unstable_count: usize,
}

#[derive(Debug, Clone)]
pub struct ErrorStudyTable {
    pub rows: Vec<ErrorStudyRow>,
}

impl ErrorStudyTable {
    /// Rows of one variant/metric combination ordered by basis size.
    pub fn series(&self, variant: StudyVariant, metric: StudyMetric) -> Vec<&ErrorStudyRow> {
        let mut rows: Vec<&ErrorStudyRow> =
            self.rows.iter().filter(|r| r.variant == variant && r.metric == metric).collect();
        rows.sort_by_key(|r| r.basis_size);
        rows
    }
}

/// Replays the leading `2, 4, ..` column pairs of the given bases and
/// tabulates, for each total size and variant, the max true errors over
/// `validation`. Plain and corrected Galerkin share one projection (they
/// differ only in the reported objective), the Petrov-Galerkin variant is
/// projected separately from the same bases. Unstable reduced solves are
/// excluded from the max and counted per size/variant.
pub fn error_study(
    fom: &FullOrderModel,
    v_pr: &ReducedBasis,
    v_du: &ReducedBasis,
    validation: &[DVector<f64>],
) -> Result<ErrorStudyTable, GreedyError> {
    let per_space = v_pr.len().min(v_du.len());
    let mut truth = Vec::with_capacity(validation.len());
    for mu in validation {
        let (primal, dual) = fom::solve_pair(fom, mu)?;
        let value = fom::objective(fom, &primal);
        let grad = fom::gradient(fom, &primal, &dual);
        truth.push((primal, dual, value, grad));
    }

    let mut rows = Vec::new();
    for m in (2..=per_space).step_by(2) {
        let pr = v_pr.truncated(m);
        let du = v_du.truncated(m);
        let galerkin =
            ReducedModel::project(fom, &pr, &du, ProjectionMode::Galerkin, FunctionalMode::NcdCorrected)?;
        let pg = ReducedModel::project(fom, &pr, &du, ProjectionMode::PetrovGalerkin, FunctionalMode::NcdCorrected)?;

        let mut maxima = [[0.0f64; 4]; 3];
        let mut unstable = [0usize; 3];
        for (mu, (primal, dual, j_h, g_h)) in validation.iter().zip(&truth) {
            // One Galerkin solve pair serves both Galerkin variants.
            match galerkin.online().solve_pair(mu) {
                Ok((u_r, p_r)) => {
                    let e_pr = fom.product_norm(&(galerkin.reconstruct_primal(&u_r.coeffs) - &primal.u));
                    let e_du = fom.product_norm(&(galerkin.reconstruct_dual(&p_r.coeffs) - &dual.p));
                    let e_g = (g_h - galerkin.online().gradient(mu, &u_r.coeffs, &p_r.coeffs)).norm();
                    let j_ncd = galerkin.online().objective(mu, &u_r.coeffs, &p_r.coeffs);
                    let j_plain = j_ncd - galerkin.online().primal_residual_at_dual(mu, &u_r.coeffs, &p_r.coeffs);
                    for (variant, j_r) in [(0usize, j_plain), (1, j_ncd)] {
                        let errors = [(j_h - j_r).abs(), e_g, e_pr, e_du];
                        for (slot, e) in maxima[variant].iter_mut().zip(errors) {
                            *slot = slot.max(e);
                        }
                    }
                }
                Err(RomError::Unstable { .. }) => {
                    unstable[0] += 1;
                    unstable[1] += 1;
                }
                Err(other) => return Err(GreedyError::Rom(other)),
            }
            match pg.online().solve_pair(mu) {
                Ok((u_r, p_r)) => {
                    let e_pr = fom.product_norm(&(pg.reconstruct_primal(&u_r.coeffs) - &primal.u));
                    let e_du = fom.product_norm(&(pg.reconstruct_dual(&p_r.coeffs) - &dual.p));
                    let e_g = (g_h - pg.online().gradient(mu, &u_r.coeffs, &p_r.coeffs)).norm();
                    let j_r = pg.online().objective(mu, &u_r.coeffs, &p_r.coeffs);
                    let errors = [(j_h - j_r).abs(), e_g, e_pr, e_du];
                    for (slot, e) in maxima[2].iter_mut().zip(errors) {
                        *slot = slot.max(e);
                    }
                }
                Err(RomError::Unstable { .. }) => unstable[2] += 1,
                Err(other) => return Err(GreedyError::Rom(other)),
            }
        }

        for (v, variant) in StudyVariant::ALL.iter().enumerate() {
            for (k, metric) in StudyMetric::ALL.iter().enumerate() {
                rows.push(ErrorStudyRow {
                    basis_size: 2 * m,
                    variant: *variant,
                    metric: *metric,
                    value: maxima[v][k],
                    unstable_count: unstable[v],
                });
            }
        }
    }
    Ok(ErrorStudyTable { rows })
}
