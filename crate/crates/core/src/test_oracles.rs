//! Dense brute-force oracles shared by the unit tests.
//!
//! These deliberately use a different computational path than the library
//! code (dense factorizations, full eigendecompositions, finite differences)
//! so that agreement is meaningful.

use crate::sparse::CsrMatrix;
use nalgebra::DVector;

/// All generalized eigenvalues of `A v = λ B v` for symmetric `A`, SPD `B`,
/// via the Cholesky reduction `C = L⁻¹ A L⁻ᵀ`.
pub fn dense_generalized_eigenvalues(a: &CsrMatrix, b: &CsrMatrix) -> Vec<f64> {
    let ad = a.to_dense();
    let bd = b.to_dense();
    let chol = bd.cholesky().expect("oracle requires an SPD right-hand matrix");
    let l = chol.l();
    let li_a = l.solve_lower_triangular(&ad).expect("triangular solve");
    let c = l
        .solve_lower_triangular(&li_a.transpose())
        .expect("triangular solve")
        .transpose();
    let sym = 0.5 * (&c + c.transpose());
    sym.symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// Dense LU solve of `A x = b`.
pub fn dense_solve(a: &CsrMatrix, b: &DVector<f64>) -> DVector<f64> {
    a.to_dense().lu().solve(b).expect("oracle matrix must be invertible")
}

/// Central finite-difference gradient of a scalar function.
pub fn fd_gradient<F: FnMut(&DVector<f64>) -> f64>(mut f: F, mu: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(mu.len(), |i, _| {
        let mut plus = mu.clone();
        let mut minus = mu.clone();
        plus[i] += h;
        minus[i] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    })
}

