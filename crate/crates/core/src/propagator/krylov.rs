//! Adaptive Lanczos propagation of `e^{−iHτ}` for Hermitian `H`.
//!
//! Each step builds an orthonormal Krylov basis of the current state, then
//! picks the largest step whose a-posteriori error estimate
//! `β_m |e_mᵀ exp(−iτT_m) e_1|` stays below the tolerance. The small
//! exponential is evaluated through the eigendecomposition of `T_m`, so
//! trying several step lengths costs no extra matrix-vector products.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

use super::linalg::{axpy, dot, norm, Vector};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KrylovConfig {
    pub max_subspace: usize,
    /// Local error target per step, relative to the state norm.
    pub step_tolerance: f64,
    pub max_dt: f64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            max_subspace: 30,
            step_tolerance: 1e-10,
            max_dt: f64::INFINITY,
        }
    }
}

impl KrylovConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_subspace < 4 {
            return Err(Error::InvalidParameter(format!(
                "max_subspace must be at least 4, got {}",
                self.max_subspace
            )));
        }
        if !(self.step_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step_tolerance must be positive, got {}",
                self.step_tolerance
            )));
        }
        if !(self.max_dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "max_dt must be positive, got {}",
                self.max_dt
            )));
        }
        Ok(())
    }
}

/// Bookkeeping for one propagation leg.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub steps: usize,
    pub matvecs: usize,
    /// Sum of the local error estimates.
    pub error_estimate: f64,
    /// Sum of `|1 − ‖ψ‖|` removed by renormalization.
    pub norm_drift: f64,
}

impl std::ops::AddAssign for StepStats {
    fn add_assign(&mut self, rhs: Self) {
        self.steps += rhs.steps;
        self.matvecs += rhs.matvecs;
        self.error_estimate += rhs.error_estimate;
        self.norm_drift += rhs.norm_drift;
    }
}

struct KrylovSpace {
    basis: Vec<Vector>,
    ritz: Vec<f64>,
    /// Eigenvectors of the projected matrix, column-major `k × k`.
    vecs: DMatrix<f64>,
    /// `β_m`; zero on happy breakdown.
    beta_next: f64,
}

impl KrylovSpace {
    fn build(h: &SparseOperator, v: &[Complex64], m: usize) -> Self {
        let dim = h.dim();
        let m = m.min(dim);
        let mut basis: Vec<Vector> = Vec::with_capacity(m);
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let n0 = norm(v);
        basis.push(v.iter().map(|x| x / n0).collect());
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        let beta_next;
        loop {
            let j = basis.len() - 1;
            h.apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // Hermitian three-term recurrence, then one local correction
            // pass against the last two vectors.
            axpy(Complex64::new(-a, 0.0), &basis[j], &mut w);
            if j > 0 {
                axpy(Complex64::new(-beta[j - 1], 0.0), &basis[j - 1], &mut w);
            }
            for b in basis[j.saturating_sub(1)..].iter() {
                let c = dot(b, &w);
                axpy(-c, b, &mut w);
            }
            let b = norm(&w);
            let scale = a.abs() + beta.last().copied().unwrap_or(0.0) + 1.0;
            if b <= 1e-15 * scale {
                beta_next = 0.0;
                break;
            }
            if basis.len() == m {
                beta_next = b;
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
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
        Self {
            basis,
            ritz: eig.eigenvalues.iter().copied().collect(),
            vecs: eig.eigenvectors,
            beta_next,
        }
    }

    /// Coefficients of `exp(−iτT) e_1` in the Krylov basis.
    fn coefficients(&self, tau: f64) -> Vec<Complex64> {
        let k = self.basis.len();
        let weights: Vec<Complex64> = (0..k)
            .map(|j| Complex64::from_polar(self.vecs[(0, j)], -tau * self.ritz[j]))
            .collect();
        (0..k)
            .map(|i| (0..k).map(|j| weights[j] * self.vecs[(i, j)]).sum())
            .collect()
    }

    fn error(&self, coeffs: &[Complex64]) -> f64 {
        self.beta_next * coeffs.last().map(|c| c.norm()).unwrap_or(0.0)
    }
}

/// Propagates `v` by `e^{−iHτ}` (τ may be negative). The result keeps the
/// norm of `v`.
pub fn propagate(
    h: &SparseOperator,
    v: &[Complex64],
    tau: f64,
    cfg: &KrylovConfig,
) -> Result<(Vector, StepStats)> {
    let mut stats = StepStats::default();
    let mut state = v.to_vec();
    let n0 = norm(v);
    if tau == 0.0 || n0 == 0.0 {
        return Ok((state, stats));
    }
    let sign = tau.signum();
    let mut remaining = tau.abs();
    let mut suggestion = remaining.min(cfg.max_dt);
    let mut elapsed = 0.0;
    while remaining > 0.0 {
        let space = KrylovSpace::build(h, &state, cfg.max_subspace);
        stats.matvecs += space.basis.len();
        let cap = remaining.min(cfg.max_dt);
        let mut dt = if space.beta_next == 0.0 {
            cap
        } else {
            suggestion.min(cap)
        };
        let mut coeffs = space.coefficients(sign * dt);
        let mut err = space.error(&coeffs);
        // Grow while comfortably inside the tolerance.
        while err < 0.1 * cfg.step_tolerance && dt < cap {
            let trial = (dt * 1.5).min(cap);
            let c = space.coefficients(sign * trial);
            let e = space.error(&c);
            if e > cfg.step_tolerance {
                break;
            }
            dt = trial;
            coeffs = c;
            err = e;
        }
        while err > cfg.step_tolerance {
            dt *= 0.5;
            if dt < 1e-14 * (1.0 + elapsed) {
                return Err(Error::StepUnderflow {
                    t: elapsed,
                    dt,
                    estimate: err,
                });
            }
            coeffs = space.coefficients(sign * dt);
            err = space.error(&coeffs);
        }
        let mut next = vec![Complex64::new(0.0, 0.0); state.len()];
        for (b, c) in space.basis.iter().zip(&coeffs) {
            axpy(*c * n0, b, &mut next);
        }
        let n1 = norm(&next);
        stats.norm_drift += (1.0 - n1 / n0).abs();
        next.iter_mut().for_each(|x| *x *= n0 / n1);
        state = next;
        stats.steps += 1;
        stats.error_estimate += err;
        suggestion = dt;
        remaining -= dt;
        elapsed += dt;
        if remaining < 1e-15 * (1.0 + tau.abs()) {
            remaining = 0.0;
        }
    }
    Ok((state, stats))
}
