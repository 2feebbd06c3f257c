//! Reduced-basis models: projection, reduced solves, corrected functionals,
//! reduced gradients and certified error estimates.
//!
//! [`ReducedModel::project`] compresses a [`FullOrderModel`] onto a pair of
//! low-dimensional snapshot spaces (see [`basis::ReducedBasis`]). The result
//! carries an [`OnlineModel`] holding only reduced-dimension data — projected
//! affine components plus factored residual-norm maps — so that every online
//! operation (solves, objective, gradient, error estimates) costs nothing
//! proportional to the full-order dimension.
//!
//! Two projection pairings are supported. In [`ProjectionMode::Galerkin`]
//! each equation is tested with its own ansatz space. In
//! [`ProjectionMode::PetrovGalerkin`] the primal equation is tested with the
//! dual space and vice versa; the primal residual then vanishes on the dual
//! space by construction, which makes the residual-corrected objective
//! collapse to the plain one and turns the online gradient formula into the
//! exact gradient of the reduced objective.

pub mod basis;

pub use basis::ReducedBasis;

use crate::model::{min_theta_bound, FullOrderModel, ModelError, ParameterBox, ThetaFunction, ThetaTerm};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Reduced systems whose condition estimate exceeds this are reported as
/// unstable rather than silently solved.
const DEFAULT_CONDITION_LIMIT: f64 = 1e14;

/// A Riesz representative whose orthogonalization remainder drops below this
/// fraction of its norm is expressed in the already-orthonormalized set
/// instead of extending it.
const RIESZ_DEP_TOL: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum RomError {
    #[error("reduced solve requested on an empty basis")]
    EmptyBasis,
    #[error("primal and dual bases must have equal size (got {pr} and {du})")]
    BasisSizeMismatch { pr: usize, du: usize },
    #[error("basis vectors have {basis} entries but the model has {model} degrees of freedom")]
    DimensionMismatch { basis: usize, model: usize },
    #[error("reduced system unstable at mu = {mu:?} (condition estimate {condition:.3e})")]
    Unstable { mu: Vec<f64>, condition: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How the reduced test spaces pair with the ansatz spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    /// Each equation is tested with its own ansatz space.
    Galerkin,
    /// The primal equation is tested with the dual space and vice versa.
    PetrovGalerkin,
}

/// Which value [`OnlineModel::objective`] reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalMode {
    /// The objective evaluated at the reduced primal state only.
    Plain,
    /// Adds the primal residual evaluated at the reduced dual state — the
    /// non-conforming dual (NCD) correction. Under Petrov-Galerkin pairing
    /// the correction vanishes identically, so both modes then agree.
    NcdCorrected,
}

/// Certified bounds on the reduced primal-state, dual-state and objective
/// errors w.r.t. the full-order quantities (the objective bound applies to
/// the residual-corrected value, which Petrov-Galerkin pairing reproduces
/// automatically).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimates {
    pub delta_pr: f64,
    pub delta_du: f64,
    pub delta_j: f64,
}

/// Reduced solve output: expansion coefficients in the ansatz basis plus the
/// condition estimate of the reduced system matrix.
#[derive(Debug, Clone)]
pub struct ReducedSolution {
    pub coeffs: DVector<f64>,
    pub condition: f64,
}

/// Everything a trust-region step needs at one parameter, from a single pair
/// of reduced solves.
#[derive(Debug, Clone)]
pub struct ReducedEvaluation {
    pub primal: ReducedSolution,
    pub dual: ReducedSolution,
    pub value: f64,
    pub estimates: ErrorEstimates,
}

/// Evaluates dual norms of residuals that are linear combinations of a fixed
/// set of functionals.
///
/// Offline, the Riesz representatives of the components are orthonormalized
/// in the full-order product and each representative's coordinates in the
/// orthonormal set are stored column-wise. Online, the dual norm of the
/// combination with coefficients `c` is the plain Euclidean norm of
/// `map · c`. Compared with a Gram-matrix quadratic form this keeps the
/// cancellation linear in machine precision, so residual norms stay
/// meaningful down to the full-order solver tolerance (a quadratic form
/// bottoms out near the square root of machine precision).
#[derive(Debug, Clone)]
struct ResidualNormMap {
    /// `rank x m` coordinate matrix; column `i` holds the coordinates of the
    /// i-th component's Riesz representative.
    map: DMatrix<f64>,
}

impl ResidualNormMap {
    fn build(fom: &FullOrderModel, comps: &[DVector<f64>]) -> ResidualNormMap {
        let m = comps.len();
        let mut ortho: Vec<DVector<f64>> = Vec::new();
        // Product-transformed copies of `ortho`, so each Gram-Schmidt
        // coefficient is a plain dot product instead of a sparse quadratic
        // form; the transform is applied once per accepted column.
        let mut ortho_w: Vec<DVector<f64>> = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
        for f in comps {
            let mut z = fom.product_factor().solve_refined(fom.product(), f);
            let pre = fom.product_norm(&z);
            let mut coeffs = vec![0.0; ortho.len()];
            if pre > 0.0 {
                for _ in 0..2 {
                    for (k, zeta) in ortho.iter().enumerate() {
                        let c = ortho_w[k].dot(&z);
                        coeffs[k] += c;
                        z.axpy(-c, zeta, 1.0);
                    }
                }
                let rem = fom.product_norm(&z);
                if rem > RIESZ_DEP_TOL * pre {
                    z /= rem;
                    ortho_w.push(fom.product().mul_vec(&z));
                    ortho.push(z);
                    coeffs.push(rem);
                }
            }
            cols.push(coeffs);
        }
        let mut map = DMatrix::zeros(ortho.len(), m);
        for (i, coeffs) in cols.iter().enumerate() {
            for (k, c) in coeffs.iter().enumerate() {
                map[(k, i)] = *c;
            }
        }
        ResidualNormMap { map }
    }

    fn norm(&self, c: &DVector<f64>) -> f64 {
        (&self.map * c).norm()
    }
}

/// The reduced model: snapshot bases plus the self-contained online part.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    v_pr: ReducedBasis,
    v_du: ReducedBasis,
    online: OnlineModel,
}

/// The online-evaluable core of a reduced model. Holds no full-order data;
/// cloning it and dropping the parent model (and the full-order model) keeps
/// every method usable.
#[derive(Debug, Clone)]
pub struct OnlineModel {
    mode: ProjectionMode,
    functional: FunctionalMode,
    n: usize,
    /// Primal system `Σ θ^a_q a_pr[q]` (rows: mode-dependent test space,
    /// columns: primal ansatz).
    a_pr: Vec<DMatrix<f64>>,
    l_pr: Vec<DVector<f64>>,
    /// Dual system (rows: mode-dependent test space, columns: dual ansatz).
    a_du: Vec<DMatrix<f64>>,
    j_du: Vec<DVector<f64>>,
    /// Dual right-hand side coupling `test^T K_q V_pr`.
    k_du: Vec<DMatrix<f64>>,
    /// Objective pieces evaluated at primal coefficients.
    j_obj: Vec<DVector<f64>>,
    k_obj: Vec<DMatrix<f64>>,
    /// Correction/gradient pieces: `V_du^T l_q` and `V_du^T A_q V_pr`.
    l_corr: Vec<DVector<f64>>,
    a_corr: Vec<DMatrix<f64>>,
    residual_pr: ResidualNormMap,
    residual_du: ResidualNormMap,
    theta_a: Vec<ThetaFunction>,
    theta_l: Vec<ThetaFunction>,
    theta_j: Vec<ThetaFunction>,
    theta_k: Vec<ThetaFunction>,
    theta_term: ThetaTerm,
    bounds: ParameterBox,
    alpha_ref: f64,
    theta_a_ref: Vec<f64>,
    gamma_k: Vec<f64>,
    condition_limit: f64,
}

impl ReducedModel {
    /// Projects the full-order model onto the given bases.
    ///
    /// Both bases must have equal size (the cross-testing of the
    /// Petrov-Galerkin pairing needs square systems, and the Galerkin
    /// variant keeps the same discipline so that enrichment is uniform).
    /// Besides the projected affine components this precomputes the
    /// residual-norm maps from Riesz representatives of every residual
    /// component, which is the only full-order work the error estimator
    /// ever needs.
    pub fn project(
        fom: &FullOrderModel,
        v_pr: &ReducedBasis,
        v_du: &ReducedBasis,
        mode: ProjectionMode,
        functional: FunctionalMode,
    ) -> Result<Self, RomError> {
        let n = v_pr.len();
        if v_du.len() != n {
            return Err(RomError::BasisSizeMismatch { pr: n, du: v_du.len() });
        }
        for basis in [v_pr, v_du] {
            if basis.dim() != fom.n_dofs() {
                return Err(RomError::DimensionMismatch { basis: basis.dim(), model: fom.n_dofs() });
            }
        }
        let (w_pr, w_du) = match mode {
            ProjectionMode::Galerkin => (v_pr, v_du),
            ProjectionMode::PetrovGalerkin => (v_du, v_pr),
        };

        let qa = fom.a.n_components();
        let ql = fom.l.n_components();
        let qj = fom.j.n_components();
        let qk = fom.k.n_components();

        let project_onto =
            |basis: &ReducedBasis, f: &DVector<f64>| DVector::from_fn(n, |i, _| basis.column(i).dot(f));

        let l_pr: Vec<_> = (0..ql).map(|q| project_onto(w_pr, fom.l.component(q))).collect();
        let l_corr: Vec<_> = (0..ql).map(|q| project_onto(v_du, fom.l.component(q))).collect();
        let j_du: Vec<_> = (0..qj).map(|q| project_onto(w_du, fom.j.component(q))).collect();
        let j_obj: Vec<_> = (0..qj).map(|q| project_onto(v_pr, fom.j.component(q))).collect();

        let mut a_pr = vec![DMatrix::zeros(n, n); qa];
        let mut a_corr = vec![DMatrix::zeros(n, n); qa];
        let mut a_du = vec![DMatrix::zeros(n, n); qa];
        let mut k_obj = vec![DMatrix::zeros(n, n); qk];
        let mut k_du = vec![DMatrix::zeros(n, n); qk];

        // Residual expansion components, in the exact order the online
        // coefficient layout assumes: primal `l_q` then `A_q v_j^pr`
        // column-major over j; dual `j_q`, then `K_q v_j^pr`, then
        // `A_q v_j^du`. The operator applications feed both the projected
        // matrices and the residual maps.
        let mut comps_pr: Vec<DVector<f64>> = (0..ql).map(|q| fom.l.component(q).clone()).collect();
        let mut comps_du: Vec<DVector<f64>> = (0..qj).map(|q| fom.j.component(q).clone()).collect();

        for j in 0..n {
            for q in 0..qa {
                let t = fom.a.component(q).mul_vec(v_pr.column(j));
                for i in 0..n {
                    a_pr[q][(i, j)] = w_pr.column(i).dot(&t);
                    a_corr[q][(i, j)] = v_du.column(i).dot(&t);
                }
                comps_pr.push(t);
            }
        }
        for j in 0..n {
            for q in 0..qk {
                let t = fom.k.component(q).mul_vec(v_pr.column(j));
                for i in 0..n {
                    k_obj[q][(i, j)] = v_pr.column(i).dot(&t);
                    k_du[q][(i, j)] = w_du.column(i).dot(&t);
                }
                comps_du.push(t);
            }
        }
        for j in 0..n {
            for q in 0..qa {
                let t = fom.a.component(q).mul_vec(v_du.column(j));
                for i in 0..n {
                    a_du[q][(i, j)] = w_du.column(i).dot(&t);
                }
                comps_du.push(t);
            }
        }

        let residual_pr = ResidualNormMap::build(fom, &comps_pr);
        let residual_du = ResidualNormMap::build(fom, &comps_du);

        let online = OnlineModel {
            mode,
            functional,
            n,
            a_pr,
            l_pr,
            a_du,
            j_du,
            k_du,
            j_obj,
            k_obj,
            l_corr,
            a_corr,
            residual_pr,
            residual_du,
            theta_a: (0..qa).map(|q| fom.a.theta(q).clone()).collect(),
            theta_l: (0..ql).map(|q| fom.l.theta(q).clone()).collect(),
            theta_j: (0..qj).map(|q| fom.j.theta(q).clone()).collect(),
            theta_k: (0..qk).map(|q| fom.k.theta(q).clone()).collect(),
            theta_term: fom.theta_term.clone(),
            bounds: fom.bounds.clone(),
            alpha_ref: fom.alpha_ref(),
            theta_a_ref: fom.a.eval_thetas(&fom.mu_ref),
            gamma_k: fom.gamma_k_components().to_vec(),
            condition_limit: DEFAULT_CONDITION_LIMIT,
        };
        Ok(ReducedModel { v_pr: v_pr.clone(), v_du: v_du.clone(), online })
    }

    /// Overrides the condition-estimate ceiling above which reduced solves
    /// report instability (default `1e14`).
    pub fn with_condition_limit(mut self, limit: f64) -> Self {
        assert!(limit > 0.0, "condition limit must be positive");
        self.online.condition_limit = limit;
        self
    }

    pub fn online(&self) -> &OnlineModel {
        &self.online
    }

    /// Surrenders the online part, proving by construction that it does not
    /// borrow from the full-order model or the bases.
    pub fn into_online(self) -> OnlineModel {
        self.online
    }

    pub fn v_pr(&self) -> &ReducedBasis {
        &self.v_pr
    }

    pub fn v_du(&self) -> &ReducedBasis {
        &self.v_du
    }

    /// Lifts primal coefficients to a full-order vector.
    pub fn reconstruct_primal(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        self.v_pr.lift(coeffs)
    }

    /// Lifts dual coefficients to a full-order vector.
    pub fn reconstruct_dual(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        self.v_du.lift(coeffs)
    }
}

fn eval_thetas(thetas: &[ThetaFunction], mu: &DVector<f64>) -> Vec<f64> {
    thetas.iter().map(|t| t.evaluate(mu)).collect()
}

fn combine_matrices(weights: &[f64], comps: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(comps[0].nrows(), comps[0].ncols());
    for (w, c) in weights.iter().zip(comps) {
        if *w != 0.0 {
            out += c * *w;
        }
    }
    out
}

fn combine_vectors(weights: &[f64], comps: &[DVector<f64>]) -> DVector<f64> {
    let mut out = DVector::zeros(comps[0].len());
    for (w, c) in weights.iter().zip(comps) {
        if *w != 0.0 {
            out.axpy(*w, c, 1.0);
        }
    }
    out
}

impl OnlineModel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> ProjectionMode {
        self.mode
    }

    pub fn functional(&self) -> FunctionalMode {
        self.functional
    }

    pub fn bounds(&self) -> &ParameterBox {
        &self.bounds
    }

    /// Solves the reduced primal system at `mu`.
    pub fn solve_primal(&self, mu: &DVector<f64>) -> Result<ReducedSolution, RomError> {
        if self.n == 0 {
            return Err(RomError::EmptyBasis);
        }
        let mat = combine_matrices(&eval_thetas(&self.theta_a, mu), &self.a_pr);
        let rhs = combine_vectors(&eval_thetas(&self.theta_l, mu), &self.l_pr);
        self.solve_dense(mat, &rhs, mu)
    }

    /// Solves the reduced dual system at `mu` given primal coefficients.
    pub fn solve_dual(&self, mu: &DVector<f64>, u_r: &DVector<f64>) -> Result<ReducedSolution, RomError> {
        if self.n == 0 {
            return Err(RomError::EmptyBasis);
        }
        assert_eq!(u_r.len(), self.n, "primal coefficient count must match the basis");
        let mat = combine_matrices(&eval_thetas(&self.theta_a, mu), &self.a_du);
        let mut rhs = combine_vectors(&eval_thetas(&self.theta_j, mu), &self.j_du);
        for (w, c) in eval_thetas(&self.theta_k, mu).iter().zip(&self.k_du) {
            if *w != 0.0 {
                rhs.axpy(2.0 * w, &(c * u_r), 1.0);
            }
        }
        self.solve_dense(mat, &rhs, mu)
    }

    /// Primal and dual solves back to back.
    pub fn solve_pair(&self, mu: &DVector<f64>) -> Result<(ReducedSolution, ReducedSolution), RomError> {
        let primal = self.solve_primal(mu)?;
        let dual = self.solve_dual(mu, &primal.coeffs)?;
        Ok((primal, dual))
    }

    fn solve_dense(&self, mat: DMatrix<f64>, rhs: &DVector<f64>, mu: &DVector<f64>) -> Result<ReducedSolution, RomError> {
        let svd = mat.svd(true, true);
        let mut smin = f64::INFINITY;
        let mut smax: f64 = 0.0;
        for s in svd.singular_values.iter() {
            smin = smin.min(*s);
            smax = smax.max(*s);
        }
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !condition.is_finite() || condition > self.condition_limit {
            return Err(RomError::Unstable { mu: mu.iter().copied().collect(), condition });
        }
        let coeffs = svd.solve(rhs, 0.0).expect("SVD was computed with both factors");
        Ok(ReducedSolution { coeffs, condition })
    }

    /// Reduced objective at `mu`: `Θ(μ) + j_μ(u_r) + k_μ(u_r, u_r)`, plus
    /// the residual correction in [`FunctionalMode::NcdCorrected`].
    pub fn objective(&self, mu: &DVector<f64>, u_r: &DVector<f64>, p_r: &DVector<f64>) -> f64 {
        let mut value = self.theta_term.value(mu);
        for (w, c) in eval_thetas(&self.theta_j, mu).iter().zip(&self.j_obj) {
            value += w * c.dot(u_r);
        }
        for (w, c) in eval_thetas(&self.theta_k, mu).iter().zip(&self.k_obj) {
            value += w * (c * u_r).dot(u_r);
        }
        if self.functional == FunctionalMode::NcdCorrected {
            value += self.primal_residual_at_dual(mu, u_r, p_r);
        }
        value
    }

    /// The correction term `r^pr_μ(u_r)[p_r] = l_μ(p_r) - a_μ(u_r, p_r)`
    /// evaluated from projected data.
    pub fn primal_residual_at_dual(&self, mu: &DVector<f64>, u_r: &DVector<f64>, p_r: &DVector<f64>) -> f64 {
        let mut value = 0.0;
        for (w, c) in eval_thetas(&self.theta_l, mu).iter().zip(&self.l_corr) {
            value += w * c.dot(p_r);
        }
        for (w, c) in eval_thetas(&self.theta_a, mu).iter().zip(&self.a_corr) {
            value -= w * (c * u_r).dot(p_r);
        }
        value
    }

    /// Online objective gradient
    /// `(∇J)_i = ∂_i Θ + ∂_i j(u_r) + ∂_i k(u_r, u_r) + ∂_i l(p_r) - ∂_i a(u_r, p_r)`,
    /// where `∂_i` hits only the affine coefficient functions. Exact for the
    /// Petrov-Galerkin pairing; an approximation in Galerkin mode.
    pub fn gradient(&self, mu: &DVector<f64>, u_r: &DVector<f64>, p_r: &DVector<f64>) -> DVector<f64> {
        let p = mu.len();
        let mut g = self.theta_term.gradient(mu);
        for (th, c) in self.theta_j.iter().zip(&self.j_obj) {
            let s = c.dot(u_r);
            for i in 0..p {
                g[i] += th.partial(i) * s;
            }
        }
        for (th, c) in self.theta_k.iter().zip(&self.k_obj) {
            let s = (c * u_r).dot(u_r);
            for i in 0..p {
                g[i] += th.partial(i) * s;
            }
        }
        for (th, c) in self.theta_l.iter().zip(&self.l_corr) {
            let s = c.dot(p_r);
            for i in 0..p {
                g[i] += th.partial(i) * s;
            }
        }
        for (th, c) in self.theta_a.iter().zip(&self.a_corr) {
            let s = (c * u_r).dot(p_r);
            for i in 0..p {
                g[i] -= th.partial(i) * s;
            }
        }
        g
    }

    /// Dual norm of the primal residual `l_μ(·) - a_μ(u_r, ·)`.
    pub fn primal_residual_norm(&self, mu: &DVector<f64>, u_r: &DVector<f64>) -> f64 {
        assert_eq!(u_r.len(), self.n, "primal coefficient count must match the basis");
        let ql = self.theta_l.len();
        let qa = self.theta_a.len();
        let mut c = DVector::zeros(ql + self.n * qa);
        for (q, th) in self.theta_l.iter().enumerate() {
            c[q] = th.evaluate(mu);
        }
        let ta = eval_thetas(&self.theta_a, mu);
        for j in 0..self.n {
            for q in 0..qa {
                c[ql + j * qa + q] = -ta[q] * u_r[j];
            }
        }
        self.residual_pr.norm(&c)
    }

    /// Dual norm of the dual residual `j_μ(·) + 2 k_μ(·, u_r) - a_μ(·, p_r)`.
    pub fn dual_residual_norm(&self, mu: &DVector<f64>, u_r: &DVector<f64>, p_r: &DVector<f64>) -> f64 {
        assert_eq!(u_r.len(), self.n, "primal coefficient count must match the basis");
        assert_eq!(p_r.len(), self.n, "dual coefficient count must match the basis");
        let qj = self.theta_j.len();
        let qk = self.theta_k.len();
        let qa = self.theta_a.len();
        let mut c = DVector::zeros(qj + self.n * (qk + qa));
        for (q, th) in self.theta_j.iter().enumerate() {
            c[q] = th.evaluate(mu);
        }
        let tk = eval_thetas(&self.theta_k, mu);
        for j in 0..self.n {
            for q in 0..qk {
                c[qj + j * qk + q] = 2.0 * tk[q] * u_r[j];
            }
        }
        let ta = eval_thetas(&self.theta_a, mu);
        let base = qj + self.n * qk;
        for j in 0..self.n {
            for q in 0..qa {
                c[base + j * qa + q] = -ta[q] * p_r[j];
            }
        }
        self.residual_du.norm(&c)
    }

    /// Min-theta coercivity lower bound, from the coefficients copied out of
    /// the full-order model.
    pub fn coercivity_lower_bound(&self, mu: &DVector<f64>) -> Result<f64, ModelError> {
        min_theta_bound(self.alpha_ref, &eval_thetas(&self.theta_a, mu), &self.theta_a_ref)
    }

    /// Upper bound for the continuity constant of `k_μ`.
    pub fn k_continuity_bound(&self, mu: &DVector<f64>) -> f64 {
        eval_thetas(&self.theta_k, mu)
            .iter()
            .zip(&self.gamma_k)
            .map(|(t, g)| t.abs() * g)
            .sum()
    }

    /// Error bounds for the reduced states and objective:
    ///
    /// * `delta_pr = ‖r^pr‖ / α_LB(μ)`
    /// * `delta_du = (2 γ_k(μ) delta_pr + ‖r^du‖) / α_LB(μ)`
    /// * `delta_j = delta_pr ‖r^du‖ + delta_pr² γ_k(μ)`
    pub fn estimate(&self, mu: &DVector<f64>, u_r: &DVector<f64>, p_r: &DVector<f64>) -> Result<ErrorEstimates, RomError> {
        let alpha = self.coercivity_lower_bound(mu)?;
        let r_pr = self.primal_residual_norm(mu, u_r);
        let r_du = self.dual_residual_norm(mu, u_r, p_r);
        let gamma = self.k_continuity_bound(mu);
        let delta_pr = r_pr / alpha;
        Ok(ErrorEstimates {
            delta_pr,
            delta_du: (2.0 * gamma * delta_pr + r_du) / alpha,
            delta_j: delta_pr * r_du + delta_pr * delta_pr * gamma,
        })
    }

    /// Solves both systems and reports value plus error estimates in one go.
    pub fn evaluate(&self, mu: &DVector<f64>) -> Result<ReducedEvaluation, RomError> {
        let (primal, dual) = self.solve_pair(mu)?;
        let value = self.objective(mu, &primal.coeffs, &dual.coeffs);
        let estimates = self.estimate(mu, &primal.coeffs, &dual.coeffs)?;
        Ok(ReducedEvaluation { primal, dual, value, estimates })
    }
}
