//! Compressed sparse row matrices and a banded Cholesky factorization.
//!
//! The discrete operators produced by assembly on structured meshes are
//! symmetric with small bandwidth (neighboring nodes differ by at most
//! `nx + 2` in row-major numbering), so a banded Cholesky factorization is
//! the natural direct solver: O(n·bw²) to factor, O(n·bw) per solve.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Errors from factorizing a matrix that is not symmetric positive definite.
#[derive(Debug, Error)]
pub enum FactorError {
    /// A nonpositive pivot was encountered; the matrix is not SPD.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
}

/// A sparse matrix in compressed sparse row format.
///
/// Duplicate entries passed to [`CsrMatrix::from_triplets`] are summed in
/// insertion order, which keeps symmetric assembly bitwise symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        for &(i, j, _) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        // Stable sort: duplicates keep insertion order, so sums are
        // reproducible and mirror entries accumulate identically.
        order.sort_by_key(|&e| (triplets[e].0, triplets[e].1));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &e in &order {
            let (i, j, v) = triplets[e];
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { nrows, ncols, row_ptr, col_idx, values }
    }

    /// A matrix with no stored entries.
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Number of stored entries (including explicit zeros).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored columns and values of one row.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// Entry `(i, j)`, zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Matrix-vector product `A x`.
    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols, "dimension mismatch in matrix-vector product");
        let mut y = DVector::zeros(self.nrows);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Bilinear form `uᵀ A v` without allocating the intermediate product.
    pub fn bilinear(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        assert_eq!(u.len(), self.nrows, "dimension mismatch in bilinear form");
        assert_eq!(v.len(), self.ncols, "dimension mismatch in bilinear form");
        let mut acc = 0.0;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut row_acc = 0.0;
            for (&j, &w) in cols.iter().zip(vals) {
                row_acc += w * v[j];
            }
            acc += u[i] * row_acc;
        }
        acc
    }

    /// Energy norm `sqrt(vᵀ A v)` induced by an SPD matrix.
    ///
    /// The quadratic form is clamped at zero before the square root so that
    /// roundoff on near-null vectors cannot produce NaN.
    pub fn energy_norm(&self, v: &DVector<f64>) -> f64 {
        self.bilinear(v, v).max(0.0).sqrt()
    }

    /// Dense copy, for small oracles and tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Half bandwidth: the largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for i in 0..self.nrows {
            let (cols, _) = self.row(i);
            for &j in cols {
                bw = bw.max(i.abs_diff(j));
            }
        }
        bw
    }

    /// Rewrites a family of same-shape matrices onto the union of their
    /// sparsity patterns, so linear combinations become value-array axpys.
    pub fn unify_patterns(mats: &[CsrMatrix]) -> Vec<CsrMatrix> {
        if mats.is_empty() {
            return Vec::new();
        }
        let (nrows, ncols) = (mats[0].nrows, mats[0].ncols);
        for m in mats {
            assert!(m.nrows == nrows && m.ncols == ncols, "cannot unify patterns of different shapes");
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::new();
        for i in 0..nrows {
            let mut merged: Vec<usize> = Vec::new();
            for m in mats {
                merged.extend_from_slice(m.row(i).0);
            }
            merged.sort_unstable();
            merged.dedup();
            row_ptr[i + 1] = row_ptr[i] + merged.len();
            col_idx.extend_from_slice(&merged);
        }
        mats.iter()
            .map(|m| {
                let mut values = vec![0.0; col_idx.len()];
                for i in 0..nrows {
                    let span = row_ptr[i]..row_ptr[i + 1];
                    let union_cols = &col_idx[span.clone()];
                    let (cols, vals) = m.row(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        let k = union_cols.binary_search(&j).expect("union pattern misses an entry");
                        values[row_ptr[i] + k] = v;
                    }
                }
                CsrMatrix { nrows, ncols, row_ptr: row_ptr.clone(), col_idx: col_idx.clone(), values }
            })
            .collect()
    }

    /// Returns whether `other` has the identical sparsity pattern.
    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// Weighted sum `Σ wᵢ Aᵢ` of matrices sharing one sparsity pattern.
    pub fn linear_combination(weights: &[f64], mats: &[&CsrMatrix]) -> CsrMatrix {
        assert_eq!(weights.len(), mats.len(), "one weight per matrix");
        assert!(!mats.is_empty(), "empty linear combination");
        for m in mats {
            assert!(mats[0].same_pattern(m), "linear combination requires a shared sparsity pattern");
        }
        let mut out = mats[0].clone();
        for v in out.values.iter_mut() {
            *v = 0.0;
        }
        for (&w, m) in weights.iter().zip(mats) {
            for (o, &v) in out.values.iter_mut().zip(&m.values) {
                *o += w * v;
            }
        }
        out
    }

    /// Entry-wise difference `self - other` on the union pattern.
    pub fn sub(&self, other: &CsrMatrix) -> CsrMatrix {
        let unified = CsrMatrix::unify_patterns(&[self.clone(), other.clone()]);
        CsrMatrix::linear_combination(&[1.0, -1.0], &[&unified[0], &unified[1]])
    }

    /// Entry-wise sum `self + other` on the union pattern.
    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        let unified = CsrMatrix::unify_patterns(&[self.clone(), other.clone()]);
        CsrMatrix::linear_combination(&[1.0, 1.0], &[&unified[0], &unified[1]])
    }

    /// Scales all stored values.
    pub fn scaled(&self, w: f64) -> CsrMatrix {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= w;
        }
        out
    }
}

/// Cholesky factorization `A = L Lᵀ` of an SPD matrix in band storage.
///
/// Row `i` of `L` is stored at `l[i·(bw+1) + d]` for `d = i - j`, so the
/// diagonal sits at offset 0 and the band runs backwards in `j`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    /// Factors a symmetric positive definite matrix.
    ///
    /// Only the lower triangle of `a` is read; symmetry is the caller's
    /// contract. Fails on a nonpositive pivot.
    pub fn factor(a: &CsrMatrix) -> Result<Self, FactorError> {
        assert_eq!(a.nrows(), a.ncols(), "banded Cholesky needs a square matrix");
        let n = a.nrows();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0f64; n * w];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    l[i * w + (i - j)] = v;
                }
            }
        }
        for i in 0..n {
            let k0 = i.saturating_sub(bw);
            for j in k0..=i {
                let mut v = l[i * w + (i - j)];
                if j > k0 {
                    // Σₘ L[i, j-m]·L[j, j-m]; both bands are contiguous in m.
                    let m_max = j - k0;
                    if j == i {
                        let r = &l[i * w..i * w + w];
                        for m in 1..=m_max {
                            v -= r[m] * r[m];
                        }
                    } else {
                        let off = i - j;
                        let (before, from_i) = l.split_at(i * w);
                        let row_j = &before[j * w..j * w + w];
                        let row_i = &from_i[..w];
                        for m in 1..=m_max {
                            v -= row_i[off + m] * row_j[m];
                        }
                    }
                }
                if j == i {
                    if v <= 0.0 {
                        return Err(FactorError::NotPositiveDefinite { row: i, pivot: v });
                    }
                    l[i * w] = v.sqrt();
                } else {
                    l[i * w + (i - j)] = v / l[j * w];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut DVector<f64>) {
        assert_eq!(b.len(), self.n, "dimension mismatch in banded solve");
        let w = self.bw + 1;
        // Forward substitution L y = b.
        for i in 0..self.n {
            let k0 = i.saturating_sub(self.bw);
            let row = &self.l[i * w..(i + 1) * w];
            let mut acc = b[i];
            for k in k0..i {
                acc -= row[i - k] * b[k];
            }
            b[i] = acc / row[0];
        }
        // Backward substitution Lᵀ x = y.
        for i in (0..self.n).rev() {
            let k1 = (i + self.bw).min(self.n - 1);
            let mut acc = b[i];
            for k in (i + 1)..=k1 {
                acc -= self.l[k * w + (k - i)] * b[k];
            }
            b[i] = acc / self.l[i * w];
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves `A x = b` with one step of iterative refinement against the
    /// original matrix, tightening the residual toward machine precision.
    pub fn solve_refined(&self, a: &CsrMatrix, b: &DVector<f64>) -> DVector<f64> {
        let mut x = self.solve(b);
        let mut r = b - a.mul_vec(&x);
        self.solve_in_place(&mut r);
        x += r;
        x
    }
}
