//! Restarted Lanczos with full reorthogonalization and locking.
//!
//! Each outer pass finds the lowest eigenpair in the orthogonal complement of
//! the vectors already locked, so degenerate multiplets are recovered one
//! vector at a time.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

use super::linalg::{axpy, dot, norm, normalize, orthogonalize, random_vector, Vector};

#[derive(Clone, Debug)]
pub struct EigenConfig {
    /// Residual target relative to the Gershgorin norm estimate.
    pub relative_tolerance: f64,
    pub max_basis: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-10,
            max_basis: 120,
            max_restarts: 400,
            seed: 0x5eed,
        }
    }
}

/// One Lanczos cycle from `start`; returns the lowest Ritz pair and its
/// residual estimate.
fn cycle(
    h: &SparseOperator,
    locked: &[Vector],
    start: Vector,
    max_basis: usize,
) -> (f64, Vector, f64) {
    let mut basis: Vec<Vector> = Vec::with_capacity(max_basis);
    let mut alpha = Vec::with_capacity(max_basis);
    let mut beta: Vec<f64> = Vec::with_capacity(max_basis);
    let mut v = start;
    orthogonalize(&mut v, locked.iter());
    normalize(&mut v);
    basis.push(v);
    let mut w = vec![Complex64::new(0.0, 0.0); h.dim()];
    let last_beta;
    loop {
        let j = basis.len() - 1;
        h.apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        orthogonalize(&mut w, basis.iter().chain(locked.iter()));
        let b = norm(&w);
        if basis.len() == max_basis || b <= 1e-14 * (a.abs() + 1.0) {
            last_beta = b;
            break;
        }
        beta.push(b);
        let mut next = w.clone();
        next.iter_mut().for_each(|x| *x /= b);
        basis.push(next);
    }
    let k = basis.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (imin, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let s = eig.eigenvectors.column(imin);
    let mut x = vec![Complex64::new(0.0, 0.0); h.dim()];
    for (bj, &sj) in basis.iter().zip(s.iter()) {
        axpy(Complex64::new(sj, 0.0), bj, &mut x);
    }
    let residual = last_beta * s[k - 1].abs();
    (theta, x, residual)
}

pub fn lowest_lanczos(
    h: &SparseOperator,
    m: usize,
    cfg: &EigenConfig,
) -> Result<(Vec<f64>, Vec<Vector>, Vec<f64>)> {
    let dim = h.dim();
    let tol = cfg.relative_tolerance * h.norm_estimate().max(1.0);
    let max_basis = cfg.max_basis.min(dim).max(2);
    let mut values = Vec::with_capacity(m);
    let mut vectors: Vec<Vector> = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    let mut iterations = 0;
    for found in 0..m.min(dim) {
        let mut start = random_vector(dim, cfg.seed.wrapping_add(found as u64));
        let mut history = Vec::new();
        let mut converged = None;
        let room = (dim - found).min(max_basis).max(1);
        for _ in 0..cfg.max_restarts {
            iterations += 1;
            let (_theta, mut x, _estimate) = cycle(h, &vectors, start, room);
            orthogonalize(&mut x, vectors.iter());
            normalize(&mut x);
            let hx = h.apply_vec(&x);
            let rq = dot(&x, &hx).re;
            let mut r = hx;
            axpy(Complex64::new(-rq, 0.0), &x, &mut r);
            let true_residual = norm(&r);
            history.push(true_residual);
            if true_residual <= tol {
                converged = Some((rq, x, true_residual));
                break;
            }
            start = x;
        }
        match converged {
            Some((value, x, res)) => {
                values.push(value);
                vectors.push(x);
                residuals.push(res);
            }
            None => {
                return Err(Error::NoConvergence {
                    found,
                    requested: m,
                    iterations,
                    residuals: history.iter().rev().take(5).copied().collect(),
                })
            }
        }
    }
    // Passes run lowest-first, but ties broken by rounding may leave tiny
    // inversions.
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok((
        order.iter().map(|&i| values[i]).collect(),
        order.iter().map(|&i| vectors[i].clone()).collect(),
        order.iter().map(|&i| residuals[i]).collect(),
    ))
}
