//! Full-order solves, objective evaluation and the adjoint gradient.
//!
//! The primal equation is `a_μ(u, v) = l_μ(v)` for all test functions `v`;
//! the dual (adjoint) equation is `a_μ(q, p) = j_μ(q) + 2 k_μ(q, u)` for all
//! `q`. With both states available the objective gradient is
//!
//! `(∇J)_i = ∂_i Θ(μ) + ∂_i j_μ(u) + ∂_i k_μ(u, u) + ∂_i l_μ(p) - ∂_i a_μ(u, p)`,
//!
//! where `∂_i` differentiates only the affine coefficient functions.

use crate::model::{FullOrderModel, ParameterBox};
use crate::sparse::{BandedCholesky, FactorError};
use nalgebra::DVector;
use thiserror::Error;

/// Absolute floor and relative factor for the post-solve residual check.
const RESIDUAL_ABS_TOL: f64 = 1e-10;
const RESIDUAL_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("system factorization failed: {0}")]
    Factor(#[from] FactorError),
    #[error("solver residual {achieved:.3e} exceeds tolerance {tol:.3e}")]
    ResidualTooLarge { achieved: f64, tol: f64 },
    #[error("dual solve received a primal state from a different parameter")]
    ParameterMismatch,
}

/// A primal state together with the parameter it was solved at.
#[derive(Debug, Clone)]
pub struct PrimalSolution {
    pub mu: DVector<f64>,
    pub u: DVector<f64>,
}

/// A dual (adjoint) state together with the parameter it was solved at.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub mu: DVector<f64>,
    pub p: DVector<f64>,
}

fn checked_solve(
    fom: &FullOrderModel,
    factor: &BandedCholesky,
    matrix: &crate::sparse::CsrMatrix,
    rhs: &DVector<f64>,
) -> Result<DVector<f64>, SolveError> {
    let x = factor.solve_refined(matrix, rhs);
    let residual = rhs - matrix.mul_vec(&x);
    let achieved = fom.dual_norm(&residual);
    let tol = RESIDUAL_ABS_TOL.max(RESIDUAL_REL_TOL * fom.dual_norm(rhs));
    if achieved > tol {
        return Err(SolveError::ResidualTooLarge { achieved, tol });
    }
    Ok(x)
}

/// Solves the primal equation at `mu`.
pub fn solve_primal(fom: &FullOrderModel, mu: &DVector<f64>) -> Result<PrimalSolution, SolveError> {
    let a = fom.a.evaluate(mu);
    let factor = BandedCholesky::factor(&a)?;
    let rhs = fom.l.evaluate(mu);
    let u = checked_solve(fom, &factor, &a, &rhs)?;
    Ok(PrimalSolution { mu: mu.clone(), u })
}

/// Solves the dual equation at `mu`, given the primal state at the same
/// parameter.
pub fn solve_dual(fom: &FullOrderModel, mu: &DVector<f64>, primal: &PrimalSolution) -> Result<DualSolution, SolveError> {
    if primal.mu != *mu {
        return Err(SolveError::ParameterMismatch);
    }
    let a = fom.a.evaluate(mu);
    let factor = BandedCholesky::factor(&a)?;
    dual_with_factor(fom, mu, primal, &a, &factor)
}

/// Solves primal and dual at `mu`, sharing one factorization.
pub fn solve_pair(fom: &FullOrderModel, mu: &DVector<f64>) -> Result<(PrimalSolution, DualSolution), SolveError> {
    let a = fom.a.evaluate(mu);
    let factor = BandedCholesky::factor(&a)?;
    let rhs = fom.l.evaluate(mu);
    let u = checked_solve(fom, &factor, &a, &rhs)?;
    let primal = PrimalSolution { mu: mu.clone(), u };
    let dual = dual_with_factor(fom, mu, &primal, &a, &factor)?;
    Ok((primal, dual))
}

fn dual_with_factor(
    fom: &FullOrderModel,
    mu: &DVector<f64>,
    primal: &PrimalSolution,
    a: &crate::sparse::CsrMatrix,
    factor: &BandedCholesky,
) -> Result<DualSolution, SolveError> {
    // Right-hand side: j_μ + 2 K_μ u. The system matrix is a_μ itself since
    // the discrete forms are symmetric.
    let mut rhs = fom.j.evaluate(mu);
    let k_thetas = fom.k.eval_thetas(mu);
    for (q, w) in k_thetas.iter().enumerate() {
        if *w != 0.0 {
            rhs.axpy(2.0 * w, &fom.k.component(q).mul_vec(&primal.u), 1.0);
        }
    }
    let p = checked_solve(fom, factor, a, &rhs)?;
    Ok(DualSolution { mu: mu.clone(), p })
}

/// Objective value `J(u, μ) = Θ(μ) + j_μ(u) + k_μ(u, u)`.
pub fn objective(fom: &FullOrderModel, primal: &PrimalSolution) -> f64 {
    let mu = &primal.mu;
    let u = &primal.u;
    let mut value = fom.theta_term.value(mu);
    for (t, f) in fom.l_j_components() {
        value += t.evaluate(mu) * f.dot(u);
    }
    for (t, m) in fom.k.components() {
        value += t.evaluate(mu) * m.bilinear(u, u);
    }
    value
}

/// Adjoint-based objective gradient at `mu`.
pub fn gradient(fom: &FullOrderModel, primal: &PrimalSolution, dual: &DualSolution) -> DVector<f64> {
    assert_eq!(primal.mu, dual.mu, "primal and dual states must belong to the same parameter");
    let mu = &primal.mu;
    let u = &primal.u;
    let p = &dual.p;
    let mut g = fom.theta_term.gradient(mu);
    for i in 0..mu.len() {
        g[i] += fom.j.partial_apply(i, u);
        g[i] += fom.k.partial_form(i, u, u);
        g[i] += fom.l.partial_apply(i, p);
        g[i] -= fom.a.partial_form(i, p, u);
    }
    g
}

/// First-order criticality measure for box constraints:
/// `‖μ - clip(μ - ∇J, lower, upper)‖₂`. Zero exactly at box-constrained
/// stationary points.
pub fn foc_measure(bounds: &ParameterBox, mu: &DVector<f64>, grad: &DVector<f64>) -> f64 {
    (mu - bounds.project(&(mu - grad))).norm()
}

/// Primal residual functional applied to a vector:
/// `r^pr_μ(u)[v] = l_μ(v) - a_μ(u, v)`.
pub fn primal_residual_applied(fom: &FullOrderModel, mu: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let l = fom.l.evaluate(mu);
    let a = fom.a.evaluate(mu);
    l.dot(v) - a.bilinear(v, u)
}

impl FullOrderModel {
    /// Iterator over the components of `j` (kept private to the objective
    /// since `l` and `j` have the same shape but different roles).
    fn l_j_components(&self) -> impl Iterator<Item = (&crate::model::ThetaFunction, &DVector<f64>)> {
        self.j.components()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use crate::test_oracles;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn pure_robin_problem_reproduces_the_ambient_state() {
        let fom = samples::constant_robin_model(9, 9, 5.0);
        let mu = DVector::<f64>::zeros(0);
        let primal = solve_primal(&fom, &mu).unwrap();
        for i in 0..fom.n_dofs() {
            assert!((primal.u[i] - 5.0).abs() <= 1e-10, "node {i}: {}", primal.u[i]);
        }
    }

    #[test]
    fn primal_solve_matches_dense_oracle() {
        let fom = samples::two_parameter_unit_square(8, 8);
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..5 {
            let mu = fom.bounds.sample(&mut rng);
            let primal = solve_primal(&fom, &mu).unwrap();
            let oracle = test_oracles::dense_solve(&fom.a.evaluate(&mu), &fom.l.evaluate(&mu));
            assert!((&primal.u - &oracle).norm() <= 1e-10 * oracle.norm().max(1.0));
        }
    }

    #[test]
    fn dual_solve_matches_dense_oracle() {
        let fom = samples::two_parameter_unit_square(8, 8);
        let mut rng = StdRng::seed_from_u64(22);
        let mu = fom.bounds.sample(&mut rng);
        let (primal, dual) = solve_pair(&fom, &mu).unwrap();
        let mut rhs = fom.j.evaluate(&mu);
        rhs += 2.0 * fom.k.evaluate(&mu).mul_vec(&primal.u);
        let oracle = test_oracles::dense_solve(&fom.a.evaluate(&mu), &rhs);
        assert!((&dual.p - &oracle).norm() <= 1e-10 * oracle.norm().max(1.0));
    }

    #[test]
    fn dual_solve_rejects_foreign_primal() {
        let fom = samples::two_parameter_unit_square(4, 4);
        let mu1 = DVector::from_vec(vec![1.0, 1.0]);
        let mu2 = DVector::from_vec(vec![2.0, 1.0]);
        let primal = solve_primal(&fom, &mu1).unwrap();
        assert!(matches!(solve_dual(&fom, &mu2, &primal), Err(SolveError::ParameterMismatch)));
    }

    #[test]
    fn full_order_states_annihilate_the_primal_residual() {
        let fom = samples::two_parameter_unit_square(10, 10);
        let mut rng = StdRng::seed_from_u64(23);
        let mu = fom.bounds.sample(&mut rng);
        let (primal, dual) = solve_pair(&fom, &mu).unwrap();
        let r = primal_residual_applied(&fom, &mu, &primal.u, &dual.p);
        let scale = fom.l.evaluate(&mu).dot(&dual.p).abs().max(1.0);
        assert!(r.abs() <= 1e-9 * scale, "residual at the exact state: {r}");
    }

    #[test]
    fn adjoint_gradient_matches_directional_finite_differences() {
        let fom = samples::two_parameter_unit_square(8, 8);
        let mut rng = StdRng::seed_from_u64(24);
        let value = |mu: &DVector<f64>| {
            let primal = solve_primal(&fom, mu).unwrap();
            objective(&fom, &primal)
        };
        for _ in 0..10 {
            let mu = {
                // Sample away from the box edges so FD stencils stay inside.
                let raw = fom.bounds.sample(&mut rng);
                0.9 * raw + 0.05 * (fom.bounds.lower() + fom.bounds.upper())
            };
            let dir = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)).normalize();
            let (primal, dual) = solve_pair(&fom, &mu).unwrap();
            let g = gradient(&fom, &primal, &dual);
            let h = 1e-6;
            let fd = (value(&(&mu + h * &dir)) - value(&(&mu - h * &dir))) / (2.0 * h);
            let exact = g.dot(&dir);
            assert!(
                (fd - exact).abs() <= 1e-5 * exact.abs().max(1e-3),
                "directional derivative mismatch: adjoint {exact}, fd {fd}"
            );
        }
    }

    #[test]
    fn objective_stays_above_its_offset_floor() {
        // j = 0 and k PSD: the objective can never drop below Θ's offset.
        let fom = samples::two_parameter_unit_square(6, 6);
        let mut rng = StdRng::seed_from_u64(25);
        for _ in 0..5 {
            let mu = fom.bounds.sample(&mut rng);
            let primal = solve_primal(&fom, &mu).unwrap();
            assert!(objective(&fom, &primal) >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn foc_measure_detects_stationarity_and_active_bounds() {
        let fom = samples::two_parameter_unit_square(4, 4);
        let bounds = &fom.bounds;
        let interior = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(foc_measure(bounds, &interior, &DVector::zeros(2)), 0.0);
        // At the lower bound, a gradient pushing further down is invisible.
        let at_lower = DVector::from_vec(vec![0.1, 0.0]);
        let outward = DVector::from_vec(vec![5.0, 5.0]);
        assert_eq!(foc_measure(bounds, &at_lower, &outward), 0.0);
        // A gradient pushing inward is visible.
        let inward = DVector::from_vec(vec![-1.0, 0.0]);
        assert!(foc_measure(bounds, &at_lower, &inward) > 0.5);
    }

    #[test]
    fn solver_residual_meets_the_advertised_tolerance() {
        let fom = samples::two_parameter_unit_square(12, 12);
        let mu = DVector::from_vec(vec![3.0, 2.0]);
        let primal = solve_primal(&fom, &mu).unwrap();
        let r = fom.l.evaluate(&mu) - fom.a.evaluate(&mu).mul_vec(&primal.u);
        assert!(fom.dual_norm(&r) <= 1e-10);
    }
}
