//! Classical mean-field limit: the Josephson Hamiltonian of the dimer, the
//! Bogoliubov spectrum of the uniform ring state, and the Ehrenfest time.
//!
//! Two coupling conventions are in use. The dimer is parametrized by
//! `α = −UÑ/2J`, rings of any length by `u = UN/J`.

mod manifold;

pub use manifold::{unstable_manifold, PhaseSpacePolynomial, UnstableManifold};

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this magnitude of `ω²` a mode counts as marginal.
pub const MARGINAL_THRESHOLD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `α = −UÑ/2J`.
    Alpha(f64),
    /// `u = UN/J`.
    Scaled(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldModel {
    pub sites: usize,
    pub particles: u32,
    pub coupling: Coupling,
    pub j: f64,
}

impl MeanFieldModel {
    fn ratio(&self) -> f64 {
        (self.particles as f64 + 1.0) / self.particles as f64
    }

    /// `α = −u·(Ñ/N)/2`.
    pub fn alpha(&self) -> f64 {
        match self.coupling {
            Coupling::Alpha(a) => a,
            Coupling::Scaled(u) => -0.5 * u * self.ratio(),
        }
    }

    pub fn scaled_coupling(&self) -> f64 {
        match self.coupling {
            Coupling::Alpha(a) => -2.0 * a / self.ratio(),
            Coupling::Scaled(u) => u,
        }
    }

    /// On-site interaction `U` in units of energy.
    pub fn interaction(&self) -> f64 {
        self.scaled_coupling() * self.j / self.particles as f64
    }

    pub fn from_interaction(sites: usize, particles: u32, u: f64, j: f64) -> Self {
        Self {
            sites,
            particles,
            coupling: Coupling::Scaled(u * particles as f64 / j),
            j,
        }
    }
}

/// `h(z, φ) = 1 − √(1−4z²) cos φ − 2αz²`, energy per particle in units of `J`.
pub fn josephson_energy(z: f64, phi: f64, alpha: f64) -> Result<f64> {
    if !(z.abs() <= 0.5) {
        return Err(Error::Domain(format!(
            "imbalance |z| = {} exceeds 1/2",
            z.abs()
        )));
    }
    Ok(1.0 - (1.0 - 4.0 * z * z).sqrt() * phi.cos() - 2.0 * alpha * z * z)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum ModeKind {
    Stable(f64),
    Unstable(f64),
    Marginal(f64),
}

impl ModeKind {
    fn from_omega_sq(w2: f64) -> Self {
        if w2.abs() < MARGINAL_THRESHOLD {
            ModeKind::Marginal(w2)
        } else if w2 > 0.0 {
            ModeKind::Stable(w2.sqrt())
        } else {
            ModeKind::Unstable((-w2).sqrt())
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModeKind::Stable(_) => "stable",
            ModeKind::Unstable(_) => "unstable",
            ModeKind::Marginal(_) => "marginal",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            ModeKind::Stable(v) | ModeKind::Unstable(v) | ModeKind::Marginal(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Quasi-momentum of the mode (`π` for the dimer).
    pub k: f64,
    pub omega_sq: f64,
    pub kind: ModeKind,
    pub degeneracy: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySpectrum {
    /// Condensate amplitudes `ψ_j` of the fixed point (for the dimer
    /// `(z, φ) = (0, 0)`).
    pub fixed_point: Vec<f64>,
    /// One entry per distinct `ω²`, sorted by `ω²`.
    pub modes: Vec<Mode>,
}

impl StabilitySpectrum {
    pub fn stable_freqs(&self) -> Vec<f64> {
        self.expand(|m| matches!(m.kind, ModeKind::Stable(_)))
    }

    pub fn unstable_rates(&self) -> Vec<f64> {
        self.expand(|m| matches!(m.kind, ModeKind::Unstable(_)))
    }

    pub fn marginal_count(&self) -> usize {
        self.modes
            .iter()
            .filter(|m| matches!(m.kind, ModeKind::Marginal(_)))
            .map(|m| m.degeneracy)
            .sum()
    }

    pub fn mode_count(&self) -> usize {
        self.modes.iter().map(|m| m.degeneracy).sum()
    }

    /// Largest divergence rate, if any mode is unstable.
    pub fn leading_rate(&self) -> Option<f64> {
        self.unstable_rates().into_iter().reduce(f64::max)
    }

    fn expand(&self, keep: impl Fn(&Mode) -> bool) -> Vec<f64> {
        self.modes
            .iter()
            .filter(|m| keep(m))
            .flat_map(|m| std::iter::repeat(m.kind.value()).take(m.degeneracy))
            .collect()
    }

    /// `mode_k, type, value, degeneracy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode_k, type, value, degeneracy\n");
        for m in &self.modes {
            out.push_str(&format!(
                "{:.17e}, {}, {:.17e}, {}\n",
                m.k,
                m.kind.label(),
                m.kind.value(),
                m.degeneracy
            ));
        }
        out
    }

    /// True when no mode is unstable, i.e. the uniform state is a minimum.
    pub fn is_stable(&self) -> bool {
        self.unstable_rates().is_empty() && self.marginal_count() == 0
    }
}

/// `ω = 2√(1−α)` for `α < 1`, `λ = 2√(α−1)` for `α > 1`.
pub fn dimer_frequencies(alpha: f64) -> StabilitySpectrum {
    let w2 = 4.0 * (1.0 - alpha);
    StabilitySpectrum {
        fixed_point: vec![0.0, 0.0],
        modes: vec![Mode {
            k: PI,
            omega_sq: w2,
            kind: ModeKind::from_omega_sq(w2),
            degeneracy: 1,
        }],
    }
}

/// Kinetic energy `ε_k` of a ring mode; two sites share a single bond.
fn dispersion(sites: usize, m: usize) -> f64 {
    let s = (PI * m as f64 / sites as f64).sin();
    let eps = 4.0 * s * s;
    if sites == 2 {
        0.5 * eps
    } else {
        eps
    }
}

/// Bogoliubov spectrum of the uniform state `ψ_j = 1/√L` on a ring
/// (a single bond for `L = 2`): `ω_k² = ε_k(ε_k + 2u/L)`.
pub fn gp_stability(u: f64, sites: usize) -> Result<StabilitySpectrum> {
    if sites < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two sites, got {sites}"
        )));
    }
    if !u.is_finite() {
        return Err(Error::InvalidParameter("coupling must be finite".into()));
    }
    let l = sites as f64;
    let mut raw: Vec<(f64, f64)> = (1..sites)
        .map(|m| {
            let eps = dispersion(sites, m);
            let k = 2.0 * PI * m as f64 / l;
            (k, eps * (eps + 2.0 * u / l))
        })
        .collect();
    raw.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let mut modes: Vec<Mode> = Vec::new();
    for (k, w2) in raw {
        match modes.last_mut() {
            Some(last) if (last.omega_sq - w2).abs() < MARGINAL_THRESHOLD => last.degeneracy += 1,
            _ => modes.push(Mode {
                k,
                omega_sq: w2,
                kind: ModeKind::from_omega_sq(w2),
                degeneracy: 1,
            }),
        }
    }
    Ok(StabilitySpectrum {
        fixed_point: vec![1.0 / l.sqrt(); sites],
        modes,
    })
}

/// Real linearization of the discrete Gross-Pitaevskii flow about the
/// uniform state in the rotating frame, after removing the norm and global
/// phase directions: a `2(L−1) × 2(L−1)` matrix acting on `(δp, δq)`.
pub fn gp_linearization(u: f64, sites: usize) -> Result<DMatrix<f64>> {
    if sites < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two sites, got {sites}"
        )));
    }
    let l = sites;
    // Graph Laplacian of the bonds.
    let mut lap = DMatrix::<f64>::zeros(l, l);
    let bonds: Vec<(usize, usize)> = if l == 2 {
        vec![(0, 1)]
    } else {
        (0..l).map(|j| (j, (j + 1) % l)).collect()
    };
    for (a, b) in bonds {
        lap[(a, a)] += 1.0;
        lap[(b, b)] += 1.0;
        lap[(a, b)] -= 1.0;
        lap[(b, a)] -= 1.0;
    }
    // Orthonormal complement of the uniform vector, by Gram-Schmidt on the
    // unit vectors.
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (l as f64).sqrt(); l]];
    for e in 0..l {
        let mut v = vec![0.0; l];
        v[e] = 1.0;
        for b in &basis {
            let c: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 && basis.len() < l {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    let b = DMatrix::from_fn(l, l - 1, |i, j| basis[j + 1][i]);
    let kr = b.transpose() * lap * &b;
    let r = l - 1;
    let shift = 2.0 * u / l as f64;
    let mut m = DMatrix::<f64>::zeros(2 * r, 2 * r);
    for i in 0..r {
        for j in 0..r {
            m[(i, r + j)] = kr[(i, j)];
            m[(r + i, j)] = -kr[(i, j)] - if i == j { shift } else { 0.0 };
        }
    }
    Ok(m)
}

/// `t_E = ln(Ñ)/(2λ)`.
pub fn ehrenfest_time(particles: u32, lambda: f64) -> Result<f64> {
    if particles < 2 {
        return Err(Error::InvalidParameter(format!(
            "Ehrenfest time needs N ≥ 2, got {particles}"
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::StableQuench(lambda));
    }
    Ok((particles as f64 + 1.0).ln() / (2.0 * lambda))
}

/// Exact Taylor coefficients of a function of `(z, φ)`: key `(i, j)` holds
/// the coefficient of `z^i φ^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorSeries {
    pub order: usize,
    pub terms: BTreeMap<(u32, u32), BigRational>,
}

impl TaylorSeries {
    pub fn coefficient(&self, i: u32, j: u32) -> BigRational {
        self.terms
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn to_f64(&self) -> Vec<((u32, u32), f64)> {
        self.terms
            .iter()
            .map(|(&k, c)| (k, c.to_f64().expect("finite rational")))
            .collect()
    }

    /// Evaluates the truncated series.
    pub fn eval(&self, z: f64, phi: f64) -> f64 {
        self.to_f64()
            .iter()
            .map(|&((i, j), c)| c * z.powi(i as i32) * phi.powi(j as i32))
            .sum()
    }
}

fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Coefficients of `√(1−4x²)` in powers of `x²`.
fn sqrt_series(terms: usize) -> Vec<BigRational> {
    // binom(1/2, a)·(−4)^a, built by the ratio of consecutive terms.
    let mut out = vec![BigRational::one()];
    for a in 1..terms {
        let prev = out[a - 1].clone();
        let ratio = rational(3 - 2 * a as i64, 2 * a as i64) * rational(-4, 1);
        out.push(prev * ratio);
    }
    out
}

/// Coefficients of `cos φ` in powers of `φ²`.
fn cos_series(terms: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::one()];
    for b in 1..terms {
        let prev = out[b - 1].clone();
        out.push(prev * rational(-1, ((2 * b - 1) * (2 * b)) as i64));
    }
    out
}

/// Taylor expansion of `h(z, φ)` about the fixed point through total degree
/// `order`. `α` enters as the exact rational value of the given double.
pub fn josephson_taylor(alpha: f64, order: usize) -> Result<TaylorSeries> {
    let a = BigRational::from_float(alpha)
        .ok_or_else(|| Error::InvalidParameter(format!("coupling α = {alpha} is not finite")))?;
    let half = order / 2 + 1;
    let s = sqrt_series(half);
    let c = cos_series(half);
    let mut terms = BTreeMap::new();
    terms.insert((0, 0), BigRational::one());
    for (ia, sa) in s.iter().enumerate() {
        for (ib, cb) in c.iter().enumerate() {
            let deg = 2 * (ia + ib);
            if deg > order {
                continue;
            }
            let key = (2 * ia as u32, 2 * ib as u32);
            let e = terms.entry(key).or_insert_with(BigRational::zero);
            *e -= sa * cb;
        }
    }
    if order >= 2 {
        *terms.entry((2, 0)).or_insert_with(BigRational::zero) -= rational(2, 1) * a;
    }
    terms.retain(|_, v| !v.is_zero());
    Ok(TaylorSeries { order, terms })
}

/// `v(z, φ) = h − h(0,0) − (quadratic part)`: the anharmonic remainder,
/// starting at degree four. It does not depend on `α`, which only enters `h`
/// quadratically; the argument is kept so callers state the model they mean.
pub fn taylor_v(alpha: f64, order: usize) -> Result<TaylorSeries> {
    if order < 3 {
        return Err(Error::InvalidParameter(format!(
            "taylor_v needs order ≥ 3, got {order}"
        )));
    }
    let mut t = josephson_taylor(alpha, order)?;
    t.terms.retain(|&(i, j), _| i + j >= 3);
    Ok(t)
}

/// Parameters of the quadratic part of the dimer after the quench:
/// `φ²/2 − λ²z²/2` with `λ = 2√(α−1)`.
pub fn dimer_rate(alpha: f64) -> Result<f64> {
    match dimer_frequencies(alpha).modes[0].kind {
        ModeKind::Unstable(l) => Ok(l),
        _ => Err(Error::StableQuench(alpha)),
    }
}

/// Largest magnitude among the rational coefficients, for diagnostics.
pub fn max_coefficient(t: &TaylorSeries) -> f64 {
    t.terms
        .values()
        .map(|c| c.abs().to_f64().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn josephson_values() {
        assert_eq!(josephson_energy(0.0, 0.0, 3.7).unwrap(), 0.0);
        assert!((josephson_energy(0.0, PI, 0.0).unwrap() - 2.0).abs() < 1e-15);
        let direct = 1.0 - 0.96f64.sqrt() * 0.2f64.cos() - 0.05;
        assert!((josephson_energy(0.1, 0.2, 2.5).unwrap() - direct).abs() < 1e-15);
        // The closed form evaluates to −0.010265, not the +0.00962 sometimes
        // quoted for this point.
        assert!((direct + 0.010265).abs() < 1e-6);
        assert!(josephson_energy(0.6, 0.0, 1.0).is_err());
    }

    #[test]
    fn dimer_modes() {
        let s = dimer_frequencies(0.0);
        assert_eq!(s.stable_freqs(), vec![2.0]);
        let s = dimer_frequencies(2.5);
        assert!((s.unstable_rates()[0] - 2.0 * 1.5f64.sqrt()).abs() < 1e-15);
        assert!((s.unstable_rates()[0] - 2.449490).abs() < 1e-6);
        assert_eq!(dimer_frequencies(1.0).marginal_count(), 1);
    }

    #[test]
    fn taylor_low_orders() {
        let v = taylor_v(2.5, 8).unwrap();
        for (&(i, j), _) in &v.terms {
            assert!(i % 2 == 0 && j % 2 == 0 && i + j >= 4);
        }
        assert_eq!(v.coefficient(4, 0), rational(2, 1));
        assert_eq!(v.coefficient(2, 2), rational(-1, 1));
        assert_eq!(v.coefficient(0, 4), rational(-1, 24));
        assert_eq!(v.coefficient(6, 0), rational(4, 1));
        let h = josephson_taylor(2.5, 4).unwrap();
        assert!(h.coefficient(1, 0).is_zero() && h.coefficient(0, 1).is_zero());
        assert_eq!(h.coefficient(2, 0), rational(-3, 1));
        assert_eq!(h.coefficient(0, 2), rational(1, 2));
    }

    #[test]
    fn gp_trimer_examples() {
        let s = gp_stability(-4.5, 3).unwrap();
        assert_eq!(s.marginal_count(), 2);
        assert_eq!(s.mode_count(), 2);
        let s = gp_stability(-20.0, 3).unwrap();
        let rates = s.unstable_rates();
        assert_eq!(rates.len(), 2);
        for r in rates {
            assert!((r - 31f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn gp_dimer_matches_josephson() {
        for alpha in [0.0, 0.5, 1.7, 2.5] {
            let n = 1000u32;
            let model = MeanFieldModel {
                sites: 2,
                particles: n,
                coupling: Coupling::Alpha(alpha),
                j: 1.0,
            };
            // The N → ∞ convention u = −2α.
            let g = gp_stability(-2.0 * alpha, 2).unwrap();
            let d = dimer_frequencies(alpha);
            assert!((g.modes[0].omega_sq - d.modes[0].omega_sq).abs() < 1e-12);
            let back = MeanFieldModel {
                coupling: Coupling::Scaled(model.scaled_coupling()),
                ..model
            };
            assert!((back.alpha() - alpha).abs() < 1e-14);
        }
    }

    #[test]
    fn linearization_spectrum() {
        let m = gp_linearization(-20.0, 3).unwrap();
        let ev = m.complex_eigenvalues();
        let sum: f64 = ev.iter().map(|c| c.re).sum();
        assert!(sum.abs() < 1e-12);
        let mut re: Vec<f64> = ev.iter().map(|c| c.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[3] - 31f64.sqrt()).abs() < 1e-10);
        assert!((re[0] + 31f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn ehrenfest() {
        let t = ehrenfest_time(100_000, 2.0 * 1.5f64.sqrt()).unwrap();
        assert!((t - 2.3501).abs() < 1e-4);
        let t = ehrenfest_time(300, 31f64.sqrt()).unwrap();
        assert!((t - 301f64.ln() / (2.0 * 31f64.sqrt())).abs() < 1e-15);
        assert!((t - 0.5125).abs() < 1e-4);
        assert!(matches!(
            ehrenfest_time(10, 0.0),
            Err(Error::StableQuench(_))
        ));
    }
}
