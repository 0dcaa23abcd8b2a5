//! Unstable manifold of the dimer's hyperbolic fixed point.
//!
//! A point on the manifold is `W(ε) = Σ_k W_k ε^k` with the flow acting as
//! `ε ↦ ε e^{λt}`. Invariance `λ ε W'(ε) = X(W(ε))` fixes `W_k` order by
//! order: `(kλ − DX) W_k = [X_nl(W_{<k})]_k`, which is solvable for `k ≥ 2`
//! because `DX` has eigenvalues `±λ`. The linear coordinate is normalized so
//! that `ε = √ħ_eff e^{λt} b₊`, i.e. `W_1 = (1/√(2λ), √(λ/2))`; then an
//! observable `A(z, φ)` evaluated on the manifold gives the dominant
//! coefficients `C_k` as its Taylor coefficients in `ε`.

use crate::error::{Error, Result};

use super::{dimer_rate, taylor_v, TaylorSeries};

/// Polynomial `Σ c_ij z^i φ^j` in double precision.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseSpacePolynomial {
    pub terms: Vec<((u32, u32), f64)>,
}

impl PhaseSpacePolynomial {
    /// `Σ_i coeffs[i] z^i`.
    pub fn in_z(coeffs: &[f64]) -> Self {
        Self {
            terms: coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, &c)| ((i as u32, 0), c))
                .collect(),
        }
    }

    pub fn from_taylor(t: &TaylorSeries) -> Self {
        Self { terms: t.to_f64() }
    }

    pub fn eval(&self, z: f64, phi: f64) -> f64 {
        self.terms
            .iter()
            .map(|&((i, j), c)| c * z.powi(i as i32) * phi.powi(j as i32))
            .sum()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|((i, j), _)| i + j)
            .max()
            .unwrap_or(0)
    }

    pub fn d_dz(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|((i, _), _)| *i > 0)
                .map(|&((i, j), c)| ((i - 1, j), c * i as f64))
                .collect(),
        }
    }

    pub fn d_dphi(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|((_, j), _)| *j > 0)
                .map(|&((i, j), c)| ((i, j - 1), c * j as f64))
                .collect(),
        }
    }

    /// Truncated composition with power series `z(ε)`, `φ(ε)` (both without
    /// constant term), returning coefficients `0..=order`.
    pub fn compose(&self, z: &[f64], phi: &[f64], order: usize) -> Vec<f64> {
        let deg = self.degree() as usize;
        let zp = powers(z, deg, order);
        let pp = powers(phi, deg, order);
        let mut out = vec![0.0; order + 1];
        for &((i, j), c) in &self.terms {
            let prod = mul_trunc(&zp[i as usize], &pp[j as usize], order);
            for (o, p) in out.iter_mut().zip(prod) {
                *o += c * p;
            }
        }
        out
    }
}

fn mul_trunc(a: &[f64], b: &[f64], order: usize) -> Vec<f64> {
    let mut out = vec![0.0; order + 1];
    for (i, &x) in a.iter().enumerate().take(order + 1) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn powers(s: &[f64], max_power: usize, order: usize) -> Vec<Vec<f64>> {
    let mut one = vec![0.0; order + 1];
    one[0] = 1.0;
    let mut out = vec![one];
    for p in 1..=max_power {
        // ε^p is the lowest power of s^p, so higher powers vanish entirely.
        if p > order {
            out.push(vec![0.0; order + 1]);
        } else {
            let next = mul_trunc(&out[p - 1], s, order);
            out.push(next);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnstableManifold {
    pub lambda: f64,
    /// `z_k`, index 0 unused (zero).
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
}

impl UnstableManifold {
    pub fn order(&self) -> usize {
        self.z.len() - 1
    }

    /// Taylor coefficients in `ε` of `A(W(ε))`.
    pub fn coefficients(&self, a: &PhaseSpacePolynomial) -> Vec<f64> {
        a.compose(&self.z, &self.phi, self.order())
    }
}

/// Manifold of the dimer after a quench to `α > 1`, through order `order`.
pub fn unstable_manifold(alpha: f64, order: usize) -> Result<UnstableManifold> {
    let lambda = dimer_rate(alpha)?;
    let v = taylor_v(alpha, (order + 1).max(3))?;
    manifold_for(&PhaseSpacePolynomial::from_taylor(&v), lambda, order)
}

/// Manifold for `h = φ²/2 − λ²z²/2 + v` with `v` at least cubic.
pub fn manifold_for(
    v: &PhaseSpacePolynomial,
    lambda: f64,
    order: usize,
) -> Result<UnstableManifold> {
    if !(lambda > 0.0) {
        return Err(Error::StableQuench(lambda));
    }
    if order < 1 {
        return Err(Error::InvalidParameter(
            "manifold order must be at least 1".into(),
        ));
    }
    if v.terms.iter().any(|((i, j), c)| i + j < 3 && *c != 0.0) {
        return Err(Error::InvalidParameter(
            "anharmonic part must start at cubic order".into(),
        ));
    }
    let vz = v.d_dz();
    let vp = v.d_dphi();
    let mut z = vec![0.0; order + 1];
    let mut phi = vec![0.0; order + 1];
    z[1] = 1.0 / (2.0 * lambda).sqrt();
    phi[1] = (lambda / 2.0).sqrt();
    for k in 2..=order {
        let fz = vp.compose(&z, &phi, k)[k];
        let fp = -vz.compose(&z, &phi, k)[k];
        // [[kλ, −1], [−λ², kλ]] (z_k, φ_k) = (fz, fp)
        let kl = k as f64 * lambda;
        let det = kl * kl - lambda * lambda;
        z[k] = (kl * fz + fp) / det;
        phi[k] = (lambda * lambda * fz + kl * fp) / det;
    }
    Ok(UnstableManifold { lambda, z, phi })
}
