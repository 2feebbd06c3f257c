//! Product-orthonormal snapshot bases.
//!
//! A [`ReducedBasis`] is an ordered set of full-order vectors kept
//! orthonormal with respect to a fixed symmetric positive definite
//! inner-product matrix. Bases grow only through [`ReducedBasis::extended`],
//! which orthogonalizes the candidate and rejects it when it is numerically
//! dependent on the current span, so every constructed basis satisfies the
//! orthonormality invariant by construction.

use crate::sparse::CsrMatrix;
use nalgebra::{DMatrix, DVector};

/// A candidate is rejected when Gram-Schmidt shrinks its norm below this
/// fraction of the original: the direction is already represented to roughly
/// ten digits and appending it would poison the basis conditioning.
const KEEP_RATIO: f64 = 1e-10;

/// An ordered, product-orthonormal set of full-order vectors.
#[derive(Debug, Clone)]
pub struct ReducedBasis {
    dim: usize,
    columns: Vec<DVector<f64>>,
}

impl ReducedBasis {
    /// An empty basis over a full-order space with `dim` degrees of freedom.
    pub fn empty(dim: usize) -> Self {
        ReducedBasis { dim, columns: Vec::new() }
    }

    /// Number of basis vectors.
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Dimension of the underlying full-order space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, j: usize) -> &DVector<f64> {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[DVector<f64>] {
        &self.columns
    }

    /// The basis as a dense `dim x len` matrix (column-major snapshots).
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.len());
        for (j, c) in self.columns.iter().enumerate() {
            m.column_mut(j).copy_from(c);
        }
        m
    }

    /// Linear combination `Σ_j coeffs[j] · v_j` lifted to the full-order
    /// space.
    pub fn lift(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        assert_eq!(coeffs.len(), self.len(), "coefficient count must match the basis size");
        let mut out = DVector::zeros(self.dim);
        for (j, c) in self.columns.iter().enumerate() {
            out.axpy(coeffs[j], c, 1.0);
        }
        out
    }

    /// Coefficients of the product-orthogonal projection of `v` onto the
    /// span: `c_j = ⟨v_j, v⟩_X`.
    pub fn coefficients(&self, product: &CsrMatrix, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.len(), |j, _| product.bilinear(&self.columns[j], v))
    }

    /// The basis restricted to its first `n` vectors.
    pub fn truncated(&self, n: usize) -> Self {
        assert!(n <= self.len(), "cannot truncate {} vectors to {n}", self.len());
        ReducedBasis { dim: self.dim, columns: self.columns[..n].to_vec() }
    }

    /// Returns a basis extended by `snapshot`, plus a flag telling whether
    /// the snapshot was accepted.
    ///
    /// The candidate is orthogonalized against the current columns twice
    /// (classical Gram-Schmidt with full reorthogonalization) and appended
    /// only if the remainder keeps more than `1e-10` of the candidate's
    /// product norm; otherwise the basis is returned unchanged. A zero
    /// snapshot is always rejected. The receiver is never mutated, so
    /// earlier generations stay valid.
    pub fn extended(&self, snapshot: &DVector<f64>, product: &CsrMatrix) -> (Self, bool) {
        assert_eq!(snapshot.len(), self.dim, "snapshot dimension must match the basis");
        let pre = product.energy_norm(snapshot);
        if !(pre > 0.0) {
            return (self.clone(), false);
        }
        let mut w = snapshot.clone();
        for _ in 0..2 {
            for v in &self.columns {
                let c = product.bilinear(v, &w);
                w.axpy(-c, v, 1.0);
            }
        }
        let post = product.energy_norm(&w);
        if post <= KEEP_RATIO * pre {
            return (self.clone(), false);
        }
        w /= post;
        let mut columns = self.columns.clone();
        columns.push(w);
        (ReducedBasis { dim: self.dim, columns }, true)
    }

    /// Largest deviation of the product Gram matrix from the identity;
    /// diagnostic for the orthonormality invariant.
    pub fn gram_defect(&self, product: &CsrMatrix) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let g = product.bilinear(&self.columns[i], &self.columns[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_vector(rng: &mut StdRng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn zero_and_dependent_snapshots_are_rejected() {
        let fom = samples::two_parameter_unit_square(5, 5);
        let x = fom.product();
        let n = fom.n_dofs();
        let mut rng = StdRng::seed_from_u64(7);

        let empty = ReducedBasis::empty(n);
        let (still_empty, accepted) = empty.extended(&DVector::zeros(n), x);
        assert!(!accepted);
        assert_eq!(still_empty.len(), 0);

        let s = random_vector(&mut rng, n);
        let (basis, accepted) = empty.extended(&s, x);
        assert!(accepted);
        assert_eq!(basis.len(), 1);

        // The same direction, rescaled, lies in the span and must be refused.
        let (unchanged, accepted) = basis.extended(&(3.5 * &s), x);
        assert!(!accepted);
        assert_eq!(unchanged.len(), 1);

        // A combination of existing columns is also dependent.
        let dependent = basis.lift(&DVector::from_vec(vec![2.0]));
        assert!(!basis.extended(&dependent, x).1);
    }

    #[test]
    fn random_extensions_stay_orthonormal_and_reproduce_members() {
        let fom = samples::two_parameter_unit_square(5, 5);
        let x = fom.product();
        let n = fom.n_dofs();
        let mut rng = StdRng::seed_from_u64(8);

        let mut basis = ReducedBasis::empty(n);
        let mut snapshots = Vec::new();
        for _ in 0..5 {
            let s = random_vector(&mut rng, n);
            let (next, accepted) = basis.extended(&s, x);
            assert!(accepted, "independent random snapshots must be accepted");
            basis = next;
            snapshots.push(s);
        }
        assert_eq!(basis.len(), 5);
        assert!(basis.gram_defect(x) <= 1e-10, "gram defect {}", basis.gram_defect(x));

        // Each accepted snapshot lies in the span: its orthogonal projection
        // reproduces it.
        for s in &snapshots {
            let projected = basis.lift(&basis.coefficients(x, s));
            let err = x.energy_norm(&(&projected - s));
            assert!(err <= 1e-9 * x.energy_norm(s), "projection error {err}");
        }
    }

    #[test]
    fn truncation_keeps_the_leading_columns() {
        let fom = samples::two_parameter_unit_square(4, 4);
        let x = fom.product();
        let mut rng = StdRng::seed_from_u64(9);
        let mut basis = ReducedBasis::empty(fom.n_dofs());
        for _ in 0..4 {
            basis = basis.extended(&random_vector(&mut rng, fom.n_dofs()), x).0;
        }
        let head = basis.truncated(2);
        assert_eq!(head.len(), 2);
        assert_eq!(head.column(0), basis.column(0));
        assert_eq!(head.column(1), basis.column(1));
        assert!(head.gram_defect(x) <= 1e-10);
        assert_eq!(basis.truncated(0).len(), 0);
    }

    #[test]
    fn lift_matches_the_dense_matrix_product() {
        let fom = samples::two_parameter_unit_square(4, 4);
        let x = fom.product();
        let mut rng = StdRng::seed_from_u64(10);
        let mut basis = ReducedBasis::empty(fom.n_dofs());
        for _ in 0..3 {
            basis = basis.extended(&random_vector(&mut rng, fom.n_dofs()), x).0;
        }
        let coeffs = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        let dense = basis.to_matrix() * &coeffs;
        assert!((basis.lift(&coeffs) - dense).norm() <= 1e-14);
    }
}
