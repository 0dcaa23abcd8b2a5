//! Analytic predictions built on the dominant coefficients `C_k`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::{
    dimer_frequencies, dimer_rate, unstable_manifold, ModeKind, PhaseSpacePolynomial,
};

use super::exppoly::ExpPoly;
use super::gaussian::{
    pairing_count, quench_angle, thermal_covariance, thermal_factor, wick_expectation, Covariance,
};
use super::symbol::{Monomial, WeylPolynomial};

/// `⟨k| b₊ⁿ |l⟩` with `b₊ = (e^{−iφ} a + e^{iφ} a†)/√(2 sin 2φ)`, by walking
/// the oscillator ladder `n` times from `|l⟩`. Levels out of reach of `n`
/// steps are never touched, so the selection rule holds exactly.
pub fn bplus_matrix_element(k: usize, l: usize, n: usize, phi: f64) -> Complex64 {
    let top = l + n + 1;
    let down = Complex64::from_polar(1.0, -phi);
    let up = Complex64::from_polar(1.0, phi);
    let mut v = vec![Complex64::new(0.0, 0.0); top + 1];
    v[l] = Complex64::new(1.0, 0.0);
    let mut lo = l;
    let mut hi = l;
    for _ in 0..n {
        let mut w = vec![Complex64::new(0.0, 0.0); top + 1];
        for j in lo..=hi {
            if v[j] == Complex64::new(0.0, 0.0) {
                continue;
            }
            if j > 0 {
                w[j - 1] += down * (j as f64).sqrt() * v[j];
            }
            w[j + 1] += up * ((j + 1) as f64).sqrt() * v[j];
        }
        v = w;
        lo = lo.saturating_sub(1);
        hi += 1;
    }
    if k > top {
        return Complex64::new(0.0, 0.0);
    }
    v[k] / (2.0 * (2.0 * phi).sin()).powf(n as f64 / 2.0)
}

/// `c_kl = C_{|k−l|} ⟨k| b₊^{|k−l|} |l⟩`.
pub fn predict_ckl(c: &[f64], k: usize, l: usize, phi: f64) -> Result<Complex64> {
    let n = k.abs_diff(l);
    let cn = *c.get(n).ok_or(Error::OrderMissing(n))?;
    Ok(bplus_matrix_element(k, l, n, phi) * cn)
}

/// Combinatorial factor multiplying `C_{2m}` in the expectation series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WickFactor {
    /// Number of Wick pairings of `2m` factors.
    Pairings,
    /// `(2m−1)!`, kept only to test it against numerics.
    PrintedFactorial,
}

impl WickFactor {
    pub fn factor(&self, m: u32) -> f64 {
        match self {
            WickFactor::Pairings => pairing_count(m),
            WickFactor::PrintedFactorial => {
                if m == 0 {
                    1.0
                } else {
                    (1..2 * m).map(|i| i as f64).product()
                }
            }
        }
    }
}

/// Coefficients `a_m` of `⟨Â(t)⟩ ≈ Σ_m a_m x^m`, `x = ħ e^{2λt} ⟨b₊²⟩`.
pub fn expectation_series(c: &[f64], factor: WickFactor) -> Vec<f64> {
    (0..c.len().div_ceil(2))
        .map(|m| factor.factor(m as u32) * c[2 * m])
        .collect()
}

pub fn eval_series(a: &[f64], x: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Coefficient of the linear `b₋` term (half-power 1) in `b`'s symbol.
pub fn linear_x_coefficient(b: &WeylPolynomial) -> f64 {
    b.coefficient(&Monomial::single(0, 1, 0))
        .terms()
        .filter(|(k, _)| k.s == 1 && k.p == 0)
        .map(|(_, v)| v.re)
        .sum()
}

/// Dominant OTOC coefficients: `C(t) ≈ (ħ e^{λt})² Σ_m c_m x^m` with
/// `c_m = β_B² · pairings(2m) · Σ_{k+k'=2m+2} k k' C_k C_k'`.
pub fn otoc_coefficients(c: &[f64], beta_b: f64, max_m: usize) -> Result<Vec<f64>> {
    if c.len() < 2 * max_m + 2 {
        return Err(Error::OrderMissing(2 * max_m + 1));
    }
    Ok((0..=max_m)
        .map(|m| {
            let total = 2 * m + 2;
            let conv: f64 = (1..total)
                .map(|k| (k * (total - k)) as f64 * c[k] * c[total - k])
                .sum();
            beta_b * beta_b * pairing_count(m as u32) * conv
        })
        .collect())
}

/// Finite-time OTOC `−⟨[Â_H(t), B̂]²⟩` from a Dyson-expanded symbol,
/// keeping only ħ orders that are complete in the product.
pub fn otoc_finite_t(
    ah: &WeylPolynomial,
    b: &WeylPolynomial,
    covs: &[Covariance],
) -> Result<ExpPoly> {
    let k = ah.commutator(b);
    let lo = k.terms().filter_map(|(_, c)| c.min_s()).min();
    let hi = k.terms().filter_map(|(_, c)| c.max_s()).max();
    let (lo, hi) = match (lo, hi) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Ok(ExpPoly::zero()),
    };
    let sq = k
        .star(&k)
        .scale(Complex64::new(-1.0, 0.0))
        .truncate_hbar(lo + hi);
    wick_expectation(&sq, covs)
}

/// Leading cumulant prediction for the variable `Σ_k C_k sᵏ gᵏ`, `g` a unit
/// Gaussian: `κ_n = d_n s^{2(n−1)} + …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantPrediction {
    pub n: usize,
    pub d: f64,
    /// Coefficients of `s^{2(n−1)}, s^{2n}, …`.
    pub series: Vec<f64>,
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x)
        .ok_or_else(|| Error::InvalidParameter(format!("non-finite coefficient {x}")))
}

fn poly_mul(a: &[BigRational], b: &[BigRational], deg: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); deg + 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(deg + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact moments `E[Pʲ]`, `j = 0..=n`, of `P = Σ_k C_k sᵏ gᵏ` as polynomials in
/// `s` through degree `deg`.
pub fn formal_moments(c: &[f64], n: usize, deg: usize) -> Result<Vec<Vec<BigRational>>> {
    let mut p = vec![BigRational::zero(); deg + 1];
    for (k, &ck) in c.iter().enumerate().take(deg + 1) {
        p[k] = exact(ck)?;
    }
    // g moments: E[g^K] = (K−1)!! for even K.
    let mut gm = vec![BigRational::zero(); deg + 1];
    let mut df = BigInt::one();
    for kk in (0..=deg).step_by(2) {
        if kk > 0 {
            df *= BigInt::from(kk as i64 - 1);
        }
        gm[kk] = BigRational::from_integer(df.clone());
    }
    let mut power = vec![BigRational::zero(); deg + 1];
    power[0] = BigRational::one();
    let mut out = Vec::with_capacity(n + 1);
    for j in 0..=n {
        if j > 0 {
            power = poly_mul(&power, &p, deg);
        }
        out.push(power.iter().zip(&gm).map(|(a, g)| a * g).collect());
    }
    Ok(out)
}

fn binom(n: usize, k: usize) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from((n - i) as i64) / BigInt::from((i + 1) as i64);
    }
    r
}

/// Exact `κ_n` from moments by `κ_j = μ_j − Σ_{i<j} C(j−1, i−1) κ_i μ_{j−i}`.
pub fn formal_cumulants(moments: &[Vec<BigRational>], deg: usize) -> Vec<Vec<BigRational>> {
    let n = moments.len() - 1;
    let mut kappa: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); deg + 1]; n + 1];
    for j in 1..=n {
        let mut kj = moments[j].clone();
        for i in 1..j {
            let b = BigRational::from_integer(binom(j - 1, i - 1));
            let prod = poly_mul(&kappa[i], &moments[j - i], deg);
            for (a, x) in kj.iter_mut().zip(prod) {
                *a -= &b * x;
            }
        }
        kappa[j] = kj;
    }
    kappa
}

/// Leading coefficient `d_n` and `extra` further orders in `s²`; checks that
/// all powers below `s^{2(n−1)}` cancel exactly.
pub fn cumulant_prediction(c: &[f64], n: usize, extra: usize) -> Result<CumulantPrediction> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("cumulant order {n} < 2")));
    }
    let lead = 2 * (n - 1);
    let deg = lead + 2 * extra;
    let need = deg + 1 - n;
    if c.len() < need + 1 {
        return Err(Error::OrderMissing(need));
    }
    let moments = formal_moments(c, n, deg)?;
    let kappa = &formal_cumulants(&moments, deg)[n];
    if let Some(found) = kappa.iter().position(|x| !x.is_zero()) {
        if found < lead {
            return Err(Error::Cancellation {
                n,
                expected: lead,
                found,
            });
        }
    }
    let series: Vec<f64> = kappa[lead..]
        .iter()
        .step_by(2)
        .map(|x| x.to_f64().unwrap_or(f64::NAN))
        .collect();
    // Odd powers carry odd numbers of g's and vanish.
    debug_assert!(kappa[lead..]
        .iter()
        .skip(1)
        .step_by(2)
        .all(|x| x.abs().is_zero()));
    Ok(CumulantPrediction {
        n,
        d: series[0],
        series,
    })
}

/// Dimer quench `α_pre → α_post` for `N` particles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimerQuench {
    pub alpha_pre: f64,
    pub alpha_post: f64,
    pub particles: u32,
}

impl DimerQuench {
    pub fn lambda(&self) -> Result<f64> {
        dimer_rate(self.alpha_post)
    }

    /// Prequench harmonic frequency `ω` (also the level spacing `Δ` in `J`).
    pub fn omega(&self) -> Result<f64> {
        match dimer_frequencies(self.alpha_pre).modes[0].kind {
            ModeKind::Stable(w) => Ok(w),
            _ => Err(Error::InvalidParameter(format!(
                "prequench coupling α = {} is not stable",
                self.alpha_pre
            ))),
        }
    }

    pub fn phi(&self) -> Result<f64> {
        Ok(quench_angle(self.omega()?, self.lambda()?))
    }

    pub fn hbar(&self) -> f64 {
        1.0 / (self.particles as f64 + 1.0)
    }
}

/// Dominant-scaling data for one observable and quench.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingPrediction {
    pub quench: DimerQuench,
    pub lambda: f64,
    pub omega: f64,
    pub phi: f64,
    pub hbar: f64,
    /// `C_k`, `k = 0..`.
    pub c: Vec<f64>,
}

impl ScalingPrediction {
    /// `C_k` through `order` from the unstable manifold of the classical flow.
    pub fn dimer(
        quench: DimerQuench,
        observable: &PhaseSpacePolynomial,
        order: usize,
    ) -> Result<Self> {
        let lambda = quench.lambda()?;
        let omega = quench.omega()?;
        let manifold = unstable_manifold(quench.alpha_post, order.max(1))?;
        let c = manifold.coefficients(observable);
        Ok(Self {
            quench,
            lambda,
            omega,
            phi: quench_angle(omega, lambda),
            hbar: quench.hbar(),
            c,
        })
    }

    pub fn covariance(&self, beta: f64) -> Result<Covariance> {
        thermal_covariance(beta, self.omega, self.phi)
    }

    pub fn bplus_variance(&self, beta: f64) -> Result<f64> {
        Ok(self.covariance(beta)?.yy)
    }

    /// `ħ e^{2λt} ⟨b₊²⟩`.
    pub fn renorm_param(&self, t: f64, beta: f64) -> Result<f64> {
        Ok(self.hbar * (2.0 * self.lambda * t).exp() * self.bplus_variance(beta)?)
    }

    pub fn ckl(&self, k: usize, l: usize) -> Result<Complex64> {
        predict_ckl(&self.c, k, l, self.phi)
    }

    pub fn expectation(&self, t: f64, beta: f64, factor: WickFactor) -> Result<f64> {
        Ok(eval_series(
            &expectation_series(&self.c, factor),
            self.renorm_param(t, beta)?,
        ))
    }

    pub fn otoc_coefficients(&self, beta_b: f64, max_m: usize) -> Result<Vec<f64>> {
        otoc_coefficients(&self.c, beta_b, max_m)
    }

    /// `(ħ e^{λt})² Σ_{m ≤ max_m} c_m x^m`.
    pub fn otoc(&self, coeffs: &[f64], t: f64, beta: f64) -> Result<f64> {
        let pre = self.hbar * (self.lambda * t).exp();
        Ok(pre * pre * eval_series(coeffs, self.renorm_param(t, beta)?))
    }

    pub fn cumulant(&self, n: usize) -> Result<CumulantPrediction> {
        cumulant_prediction(&self.c, n, 0)
    }

    /// `d_n (ħ e^{2λt}⟨b₊²⟩)^{n−1}`.
    pub fn cumulant_at(&self, d: &CumulantPrediction, t: f64, beta: f64) -> Result<f64> {
        Ok(d.d * self.renorm_param(t, beta)?.powi(d.n as i32 - 1))
    }

    /// `coth(βΔ/2)` for this quench.
    pub fn thermal_factor(&self, beta: f64) -> Result<f64> {
        thermal_factor(beta, self.omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_and_diagonal() {
        let phi: f64 = 0.6;
        let s = (2.0 * (2.0 * phi).sin()).sqrt();
        for l in 0..5 {
            let m = bplus_matrix_element(l + 1, l, 1, phi);
            let want = Complex64::from_polar(((l + 1) as f64).sqrt() / s, phi);
            assert!((m - want).norm() < 1e-14);
            let d = bplus_matrix_element(l, l, 2, phi);
            assert!((d - Complex64::new((2 * l + 1) as f64 / (s * s), 0.0)).norm() < 1e-13);
        }
        assert_eq!(bplus_matrix_element(7, 2, 4, phi), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn ckl_follows_c() {
        let c = [0.3, 0.0, 1.2];
        assert_eq!(
            predict_ckl(&c, 0, 0, 0.4).unwrap(),
            Complex64::new(0.3, 0.0)
        );
        assert_eq!(
            predict_ckl(&c, 5, 4, 0.4).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        assert!(matches!(
            predict_ckl(&c, 9, 4, 0.4),
            Err(Error::OrderMissing(5))
        ));
    }

    #[test]
    fn wick_factors() {
        assert_eq!(WickFactor::Pairings.factor(3), 15.0);
        assert_eq!(WickFactor::PrintedFactorial.factor(3), 120.0);
        let a = expectation_series(&[0.5, 9.0, 2.0, 9.0, 1.0], WickFactor::Pairings);
        assert_eq!(a, vec![0.5, 2.0, 3.0]);
    }

    #[test]
    fn leading_otoc_coefficient() {
        let q = DimerQuench {
            alpha_pre: 0.0,
            alpha_post: 2.5,
            particles: 10_000,
        };
        let p = ScalingPrediction::dimer(q, &PhaseSpacePolynomial::in_z(&[0.0, 1.0]), 5).unwrap();
        let beta_b = 1.0 / (2.0 * p.lambda).sqrt();
        let c = p.otoc_coefficients(beta_b, 1).unwrap();
        assert!((c[0] - 1.0 / (4.0 * p.lambda * p.lambda)).abs() < 1e-15);
    }

    #[test]
    fn variance_cumulant() {
        let c = [0.0, 0.8, 0.3, -0.2];
        let k2 = cumulant_prediction(&c, 2, 1).unwrap();
        assert!((k2.d - 0.64).abs() < 1e-15);
    }
}
