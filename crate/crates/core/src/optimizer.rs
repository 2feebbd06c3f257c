//! Projected BFGS with Armijo backtracking over box constraints.
//!
//! [`projected_bfgs`] serves two roles: as the full-order reference
//! optimizer, and as the trust-region subproblem solver when an
//! [`TrustRegionConstraint`] is attached. In the latter case every accepted
//! iterate must keep the caller-supplied error gauge below the radius, and
//! the run terminates early once an iterate lands in the boundary band
//! `[boundary_beta * radius, radius]`.

use crate::fom::foc_measure;
use crate::model::ParameterBox;
use nalgebra::{DMatrix, DVector};

/// Curvature values at or below this reset the inverse-Hessian approximation
/// to the identity instead of updating it.
const CURVATURE_FLOOR: f64 = 1e-14;

/// Trust-region coupling for the subproblem use of [`projected_bfgs`].
pub struct TrustRegionConstraint<'a> {
    /// Relative error gauge evaluated at a candidate parameter; `None`
    /// marks the candidate as unusable (for example an unstable reduced
    /// solve), which makes the line search backtrack past it.
    pub ratio: Box<dyn FnMut(&DVector<f64>) -> Option<f64> + 'a>,
    /// Gauge ceiling; candidates above it are rejected.
    pub radius: f64,
    /// Fraction of the radius at which an accepted iterate counts as a
    /// boundary hit and terminates the run.
    pub boundary_beta: f64,
}

pub struct OptimizeOptions<'a> {
    /// First-order criticality tolerance.
    pub tau_foc: f64,
    pub max_iter: usize,
    /// Sufficient-decrease factor of the projected Armijo condition.
    pub armijo_alpha: f64,
    /// Step shrink factor per backtrack, in (0, 1).
    pub armijo_kappa: f64,
    pub max_backtracks: usize,
    pub tr_constraint: Option<TrustRegionConstraint<'a>>,
}

impl<'a> OptimizeOptions<'a> {
    pub fn new() -> Self {
        OptimizeOptions {
            tau_foc: 1e-6,
            max_iter: 200,
            armijo_alpha: 1e-4,
            armijo_kappa: 0.5,
            max_backtracks: 40,
            tr_constraint: None,
        }
    }
}

impl Default for OptimizeOptions<'static> {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    /// The criticality measure dropped to the tolerance.
    Foc,
    /// An accepted iterate reached the trust-region boundary band.
    TrBoundary,
    MaxIter,
    /// Backtracking was exhausted (even after one curvature reset); the best
    /// iterate found so far is returned.
    Stalled,
}

/// One accepted iterate (the starting point is record zero).
#[derive(Debug, Clone)]
pub struct IterateRecord {
    pub mu: DVector<f64>,
    pub value: f64,
    pub foc: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub mu: DVector<f64>,
    pub value: f64,
    pub foc: f64,
    /// Starting point plus every accepted iterate, in order.
    pub history: Vec<IterateRecord>,
    /// First accepted Armijo iterate of the run (the approximate generalized
    /// Cauchy point the trust-region acceptance test compares against).
    pub agc: Option<IterateRecord>,
    pub reason: TerminationReason,
    pub value_evals: usize,
    pub gradient_evals: usize,
}

impl OptimizeResult {
    /// Number of accepted steps.
    pub fn iterations(&self) -> usize {
        self.history.len() - 1
    }
}

/// Componentwise clip onto the box.
pub fn project_box(mu: &DVector<f64>, bounds: &ParameterBox) -> DVector<f64> {
    bounds.project(mu)
}

/// Marks the coordinates sitting on (or numerically at) a box face.
///
/// The quasi-Newton model is restricted to the complementary free
/// coordinates: bound coordinates take plain gradient steps and are excluded
/// from the curvature pairs, so clipped steps cannot poison the inverse
/// Hessian.
fn active_mask(mu: &DVector<f64>, bounds: &ParameterBox) -> Vec<bool> {
    let lower = bounds.lower();
    let upper = bounds.upper();
    (0..mu.len())
        .map(|i| {
            let band = 1e-12 * (1.0 + lower[i].abs() + upper[i].abs());
            mu[i] - lower[i] <= band || upper[i] - mu[i] <= band
        })
        .collect()
}

fn masked(v: &DVector<f64>, mask: &[bool]) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| if mask[i] { 0.0 } else { v[i] })
}

/// Minimizes `value_fn` over the box from `mu0`.
///
/// The search direction is `-H g` on the free coordinates, with `H` the
/// BFGS inverse-Hessian approximation built from projected iterate
/// differences, and the plain `-g` on coordinates sitting on a box face;
/// candidates are `project_box(mu + t d)` and a step is accepted when
/// `value(cand) <= value(mu) - (armijo_alpha / t) * ||cand - mu||^2`
/// (plus gauge feasibility in trust-region mode). `value_fn` may return
/// `None` to mark a candidate unusable, which backtracks past it. If
/// `value_fn` fails at `mu0` itself there is nothing to optimize over and
/// the run returns immediately as stalled with a NaN value.
pub fn projected_bfgs(
    mut value_fn: impl FnMut(&DVector<f64>) -> Option<f64>,
    mut gradient_fn: impl FnMut(&DVector<f64>) -> DVector<f64>,
    mu0: &DVector<f64>,
    bounds: &ParameterBox,
    mut options: OptimizeOptions<'_>,
) -> OptimizeResult {
    assert!(options.armijo_alpha > 0.0, "armijo_alpha must be positive");
    assert!(
        options.armijo_kappa > 0.0 && options.armijo_kappa < 1.0,
        "armijo_kappa must lie in (0, 1)"
    );
    let p = mu0.len();
    let mut mu = project_box(mu0, bounds);
    let mut value_evals = 0usize;
    let mut gradient_evals = 0usize;

    let mut value = match value_fn(&mu) {
        Some(v) => {
            value_evals += 1;
            v
        }
        None => {
            return OptimizeResult {
                mu: mu.clone(),
                value: f64::NAN,
                foc: f64::NAN,
                history: vec![IterateRecord { mu, value: f64::NAN, foc: f64::NAN }],
                agc: None,
                reason: TerminationReason::Stalled,
                value_evals: 1,
                gradient_evals: 0,
            };
        }
    };
    let mut grad = gradient_fn(&mu);
    gradient_evals += 1;
    let mut foc = foc_measure(bounds, &mu, &grad);

    let mut history = vec![IterateRecord { mu: mu.clone(), value, foc }];
    let mut agc: Option<IterateRecord> = None;
    let mut h = DMatrix::<f64>::identity(p, p);
    let mut reason = TerminationReason::MaxIter;

    if foc <= options.tau_foc {
        reason = TerminationReason::Foc;
        return OptimizeResult { mu, value, foc, history, agc, reason, value_evals, gradient_evals };
    }

    'outer: for _ in 0..options.max_iter {
        let mut reset_used = false;
        let accepted = loop {
            // Quasi-Newton step on the free coordinates, gradient step on
            // the bound ones (the projection keeps the latter feasible).
            let mask = active_mask(&mu, bounds);
            let mut direction = -(&h * masked(&grad, &mask));
            for (i, active) in mask.iter().enumerate() {
                if *active {
                    direction[i] = -grad[i];
                }
            }
            let mut found = None;
            let mut t = 1.0;
            for _ in 0..=options.max_backtracks {
                let cand = project_box(&(&mu + t * &direction), bounds);
                let step = (&cand - &mu).norm();
                if step > 0.0 {
                    let cand_value = {
                        value_evals += 1;
                        value_fn(&cand)
                    };
                    if let Some(cand_value) = cand_value {
                        let gauge = match options.tr_constraint.as_mut() {
                            Some(tr) => {
                                let g = (tr.ratio)(&cand);
                                match g {
                                    Some(g) if g <= tr.radius => Some(g),
                                    _ => None,
                                }
                            }
                            None => Some(0.0),
                        };
                        if let Some(gauge) = gauge {
                            if cand_value <= value - (options.armijo_alpha / t) * step * step {
                                found = Some((cand, cand_value, gauge));
                                break;
                            }
                        }
                    }
                }
                t *= options.armijo_kappa;
            }
            match found {
                Some(hit) => break Some(hit),
                None if !reset_used && h != DMatrix::identity(p, p) => {
                    // One curvature reset before declaring a stall: retry the
                    // iterate along the plain projected-gradient direction.
                    h = DMatrix::identity(p, p);
                    reset_used = true;
                }
                None => break None,
            }
        };

        let Some((cand, cand_value, gauge)) = accepted else {
            reason = TerminationReason::Stalled;
            break 'outer;
        };

        let next_grad = gradient_fn(&cand);
        gradient_evals += 1;
        let step = &cand - &mu;
        let grad_diff = &next_grad - &grad;

        mu = cand;
        value = cand_value;
        grad = next_grad;
        foc = foc_measure(bounds, &mu, &grad);
        let record = IterateRecord { mu: mu.clone(), value, foc };
        if agc.is_none() {
            agc = Some(record.clone());
        }
        history.push(record);

        if foc <= options.tau_foc {
            reason = TerminationReason::Foc;
            break 'outer;
        }
        if let Some(tr) = options.tr_constraint.as_ref() {
            if gauge >= tr.boundary_beta * tr.radius {
                reason = TerminationReason::TrBoundary;
                break 'outer;
            }
        }

        // Curvature pair restricted to the coordinates free at the new
        // iterate, so clipped components never enter the recursion.
        let mask = active_mask(&mu, bounds);
        let step = masked(&step, &mask);
        let grad_diff = masked(&grad_diff, &mask);
        let curvature = step.dot(&grad_diff);
        if curvature <= CURVATURE_FLOOR {
            h = DMatrix::identity(p, p);
        } else {
            let rho = 1.0 / curvature;
            let left = DMatrix::identity(p, p) - rho * &step * grad_diff.transpose();
            h = &left * h * left.transpose() + rho * &step * step.transpose();
        }
    }

    OptimizeResult { mu, value, foc, history, agc, reason, value_evals, gradient_evals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn cube(p: usize, lo: f64, hi: f64) -> ParameterBox {
        ParameterBox::new(DVector::from_element(p, lo), DVector::from_element(p, hi))
    }

    fn bowl<'a>(
        d: &'a [f64],
        c: &'a [f64],
    ) -> (impl Fn(&DVector<f64>) -> Option<f64> + 'a, impl Fn(&DVector<f64>) -> DVector<f64> + 'a) {
        let value = move |mu: &DVector<f64>| {
            Some((0..d.len()).map(|i| d[i] * (mu[i] - c[i]).powi(2)).sum())
        };
        let gradient = move |mu: &DVector<f64>| DVector::from_fn(d.len(), |i, _| 2.0 * d[i] * (mu[i] - c[i]));
        (value, gradient)
    }

    #[test]
    fn project_box_clips_componentwise() {
        let bounds = cube(3, -1.0, 2.0);
        let interior = DVector::from_vec(vec![0.5, -0.5, 1.0]);
        assert_eq!(project_box(&interior, &bounds), interior);
        let above = DVector::from_vec(vec![3.0, 0.0, -4.0]);
        let clipped = project_box(&above, &bounds);
        assert_eq!(clipped, DVector::from_vec(vec![2.0, 0.0, -1.0]));
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..10 {
            let mu = DVector::from_fn(3, |_, _| rand::Rng::gen_range(&mut rng, -5.0..5.0));
            let once = project_box(&mu, &bounds);
            assert_eq!(project_box(&once, &bounds), once);
        }
    }

    #[test]
    fn quadratic_bowl_converges_to_the_interior_minimum() {
        let d = [1.0, 4.0, 9.0];
        let c = [0.3, -0.7, 1.2];
        let (value, gradient) = bowl(&d, &c);
        let bounds = cube(3, -10.0, 10.0);
        let mu0 = DVector::from_vec(vec![8.0, 8.0, -8.0]);
        let options = OptimizeOptions { tau_foc: 1e-10, ..OptimizeOptions::new() };
        let result = projected_bfgs(value, gradient, &mu0, &bounds, options);
        assert_eq!(result.reason, TerminationReason::Foc);
        assert!(result.foc <= 1e-10);
        assert!(result.iterations() <= 50, "took {} iterations", result.iterations());
        for i in 0..3 {
            assert!((result.mu[i] - c[i]).abs() <= 1e-8);
        }
    }

    #[test]
    fn exterior_minimum_lands_on_the_projection() {
        let d = [2.0, 1.0];
        let c = [5.0, -3.0];
        let (value, gradient) = bowl(&d, &c);
        let bounds = cube(2, -1.0, 1.0);
        let mu0 = DVector::from_vec(vec![0.0, 0.0]);
        let options = OptimizeOptions { tau_foc: 1e-10, ..OptimizeOptions::new() };
        let result = projected_bfgs(value, gradient, &mu0, &bounds, options);
        let expected = project_box(&DVector::from_vec(vec![5.0, -3.0]), &bounds);
        assert_eq!(result.reason, TerminationReason::Foc);
        for i in 0..2 {
            assert!((result.mu[i] - expected[i]).abs() <= 1e-8);
        }
    }

    #[test]
    fn critical_start_returns_without_iterating() {
        let d = [1.0, 1.0];
        let c = [0.25, 0.75];
        let (value, gradient) = bowl(&d, &c);
        let bounds = cube(2, 0.0, 1.0);
        let mu0 = DVector::from_vec(vec![0.25, 0.75]);
        let result = projected_bfgs(value, gradient, &mu0, &bounds, OptimizeOptions::new());
        assert_eq!(result.reason, TerminationReason::Foc);
        assert_eq!(result.iterations(), 0);
        assert_eq!(result.mu, mu0);
        assert!(result.agc.is_none());
        assert_eq!(result.value_evals, 1);
        assert_eq!(result.gradient_evals, 1);
    }

    #[test]
    fn accepted_iterates_decrease_and_stay_feasible() {
        // A coupled quartic keeps the line search busy for several steps.
        let value = |mu: &DVector<f64>| {
            let (x, y) = (mu[0], mu[1]);
            Some((x * x + y - 3.0).powi(2) + 0.5 * (y - 1.0).powi(2))
        };
        let gradient = |mu: &DVector<f64>| {
            let (x, y) = (mu[0], mu[1]);
            let inner = x * x + y - 3.0;
            DVector::from_vec(vec![4.0 * x * inner, 2.0 * inner + (y - 1.0)])
        };
        let bounds = cube(2, -4.0, 4.0);
        let mu0 = DVector::from_vec(vec![3.5, -2.0]);
        let result = projected_bfgs(value, gradient, &mu0, &bounds, OptimizeOptions::new());
        assert!(result.history.len() > 2);
        for pair in result.history.windows(2) {
            assert!(pair[1].value < pair[0].value, "objective must strictly decrease");
        }
        for record in &result.history {
            assert!(bounds.contains(&record.mu));
        }
        let agc = result.agc.as_ref().unwrap();
        assert_eq!(agc.mu, result.history[1].mu);
        assert_eq!(agc.value, result.history[1].value);
    }

    #[test]
    fn inactive_constraint_reproduces_the_plain_run() {
        let d = [1.0, 3.0];
        let c = [0.4, 0.6];
        let bounds = cube(2, -2.0, 2.0);
        let mu0 = DVector::from_vec(vec![-1.5, 1.5]);
        let (value, gradient) = bowl(&d, &c);
        let plain = projected_bfgs(value, gradient, &mu0, &bounds, OptimizeOptions::new());

        let (value, gradient) = bowl(&d, &c);
        let constrained = projected_bfgs(
            value,
            gradient,
            &mu0,
            &bounds,
            OptimizeOptions {
                tr_constraint: Some(TrustRegionConstraint {
                    ratio: Box::new(|_| Some(0.0)),
                    radius: 1.0,
                    boundary_beta: 0.95,
                }),
                ..OptimizeOptions::new()
            },
        );
        assert_eq!(plain.history.len(), constrained.history.len());
        for (a, b) in plain.history.iter().zip(&constrained.history) {
            assert_eq!(a.mu, b.mu);
            assert_eq!(a.value, b.value);
        }
    }

    #[test]
    fn boundary_band_terminates_the_subproblem() {
        // Gauge grows with distance from the start, so the first accepted
        // step that survives the feasibility backtracking sits exactly on
        // the trust-region boundary.
        let value = |mu: &DVector<f64>| Some((mu[0] - 10.0).powi(2));
        let gradient = |mu: &DVector<f64>| DVector::from_vec(vec![2.0 * (mu[0] - 10.0)]);
        let bounds = cube(1, 0.0, 10.0);
        let mu0 = DVector::from_vec(vec![0.0]);
        let result = projected_bfgs(
            value,
            gradient,
            &mu0,
            &bounds,
            OptimizeOptions {
                tr_constraint: Some(TrustRegionConstraint {
                    ratio: Box::new(|mu| Some(0.2 * mu[0])),
                    radius: 1.0,
                    boundary_beta: 0.95,
                }),
                ..OptimizeOptions::new()
            },
        );
        assert_eq!(result.reason, TerminationReason::TrBoundary);
        assert!((result.mu[0] - 5.0).abs() <= 1e-12);
        let gauge = 0.2 * result.mu[0];
        assert!(gauge <= 1.0 && gauge >= 0.95);
    }

    #[test]
    fn unusable_values_backtrack_and_eventually_stall() {
        // Everything past x = 2 reports failure, so the optimizer walks to
        // the edge of the usable region and stalls there.
        let value = |mu: &DVector<f64>| {
            if mu[0] > 2.0 {
                None
            } else {
                Some((mu[0] - 4.0).powi(2))
            }
        };
        let gradient = |mu: &DVector<f64>| DVector::from_vec(vec![2.0 * (mu[0] - 4.0)]);
        let bounds = cube(1, 0.0, 10.0);
        let mu0 = DVector::from_vec(vec![0.0]);
        let result = projected_bfgs(value, gradient, &mu0, &bounds, OptimizeOptions::new());
        assert_eq!(result.reason, TerminationReason::Stalled);
        assert_eq!(result.mu[0], 2.0);
        assert_eq!(result.value, 4.0);
        for record in &result.history {
            assert!(record.mu[0] <= 2.0);
        }
    }
}
