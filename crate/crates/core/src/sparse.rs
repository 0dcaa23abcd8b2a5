//! Row-compressed complex matrices.
//!
//! Every operator in the exact engine (Hamiltonians, number operators,
//! observables) is stored here. Matrices are immutable once built.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
    /// Copy of `vals` when every entry is real, for the faster product.
    real_vals: Option<Vec<f64>>,
    hermitian: bool,
}

fn real_copy(vals: &[Complex64]) -> Option<Vec<f64>> {
    vals.iter()
        .all(|v| v.im == 0.0)
        .then(|| vals.iter().map(|v| v.re).collect())
}

impl SparseOperator {
    /// Assemble from `(row, col, value)` triplets. Duplicates are summed.
    /// Entries with `|value| <= drop_tol` are discarded after summation; a
    /// tolerance of `0.0` keeps every structural entry, including exact zeros.
    pub fn from_triplets(
        dim: usize,
        mut triplets: Vec<(usize, usize, Complex64)>,
        hermitian: bool,
        drop_tol: f64,
    ) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < dim && c < dim);
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c as u32 {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c as u32);
            vals.push(v);
        }
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if drop_tol > 0.0 && v.norm() <= drop_tol {
                continue;
            }
            keep_rows.push(r);
            keep_cols.push(c);
            keep_vals.push(v);
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            cols: keep_cols,
            real_vals: real_copy(&keep_vals),
            vals: keep_vals,
            hermitian,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        Self {
            dim,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim as u32).collect(),
            vals: diag.iter().map(|&d| Complex64::new(d, 0.0)).collect(),
            real_vals: Some(diag.to_vec()),
            hermitian: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => ZERO,
        }
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        if let Some(re) = &self.real_vals {
            for (i, yi) in y.iter_mut().enumerate() {
                let (mut ar, mut ai) = (0.0, 0.0);
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let x = x[self.cols[k] as usize];
                    ar += re[k] * x.re;
                    ai += re[k] * x.im;
                }
                *yi = Complex64::new(ar, ai);
            }
            return;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *yi = acc;
        }
    }

    pub fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.dim];
        self.apply(x, &mut y);
        y
    }

    /// `⟨x|A|y⟩`.
    pub fn sandwich(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let mut acc = ZERO;
        for (i, xi) in x.iter().enumerate() {
            let mut row = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.vals[k] * y[self.cols[k] as usize];
            }
            acc += xi.conj() * row;
        }
        acc
    }

    /// Largest `|A_ij − conj(A_ji)|` over the stored pattern.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.entry(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn require_hermitian(&self, tol: f64, what: &str) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > tol {
            return Err(Error::NonHermitian(format!(
                "{what}: max |A - A†| = {defect:e}"
            )));
        }
        Ok(())
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, _)| j == i))
    }

    /// Diagonal entries (real parts) when the operator is diagonal.
    pub fn diagonal_values(&self) -> Option<Vec<f64>> {
        if !self.is_diagonal() {
            return None;
        }
        Some((0..self.dim).map(|i| self.entry(i, i).re).collect())
    }

    /// Maximum `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.dim)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// For a real symmetric tridiagonal operator, its diagonal and
    /// sub-diagonal.
    pub fn as_real_tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if !self.is_real() || self.bandwidth() > 1 || self.hermiticity_defect() != 0.0 {
            return None;
        }
        let diag = (0..self.dim).map(|i| self.entry(i, i).re).collect();
        let off = (1..self.dim).map(|i| self.entry(i, i - 1).re).collect();
        Some((diag, off))
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_estimate(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: Complex64, other: &Self, b: Complex64) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.dim {
            trip.extend(self.row(i).map(|(j, v)| (i, j, a * v)));
            trip.extend(other.row(i).map(|(j, v)| (i, j, b * v)));
        }
        let herm = self.hermitian && other.hermitian && a.im == 0.0 && b.im == 0.0;
        Self::from_triplets(self.dim, trip, herm, 0.0)
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= a);
        out.real_vals = real_copy(&out.vals);
        out
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut trip = Vec::new();
        for i in 0..self.dim {
            for (k, a) in self.row(i) {
                trip.extend(other.row(k).map(|(j, b)| (i, j, a * b)));
            }
        }
        Self::from_triplets(self.dim, trip, false, 0.0)
    }

    /// `[self, other]`, keeping structural zeros.
    pub fn commutator(&self, other: &Self) -> Self {
        let ab = self.matmul(other);
        let ba = other.matmul(self);
        ab.linear_combination(Complex64::new(1.0, 0.0), &ba, Complex64::new(-1.0, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn triplets_are_summed_and_sorted() {
        let a = SparseOperator::from_triplets(
            2,
            vec![
                (1, 0, c(1.0)),
                (0, 1, c(2.0)),
                (0, 1, c(3.0)),
                (0, 0, c(0.0)),
            ],
            false,
            0.0,
        );
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.entry(0, 1), c(5.0));
        assert_eq!(a.entry(0, 0), c(0.0));
        let dropped = SparseOperator::from_triplets(2, vec![(0, 0, c(1e-20))], false, 1e-15);
        assert_eq!(dropped.nnz(), 0);
    }

    #[test]
    fn commutator_of_diagonals_vanishes() {
        let a = SparseOperator::from_diagonal(&[1.0, 2.0, 3.0]);
        let b = SparseOperator::from_diagonal(&[4.0, -1.0, 0.5]);
        assert_eq!(a.commutator(&b).max_abs(), 0.0);
    }

    #[test]
    fn tridiagonal_detection() {
        let t = SparseOperator::from_triplets(
            3,
            vec![
                (0, 0, c(1.0)),
                (0, 1, c(-1.0)),
                (1, 0, c(-1.0)),
                (1, 2, c(-2.0)),
                (2, 1, c(-2.0)),
            ],
            true,
            0.0,
        );
        let (d, e) = t.as_real_tridiagonal().unwrap();
        assert_eq!(d, vec![1.0, 0.0, 0.0]);
        assert_eq!(e, vec![-1.0, -2.0]);
    }
}
