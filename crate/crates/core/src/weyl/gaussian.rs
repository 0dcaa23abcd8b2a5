//! Gaussian (thermal or ground) prequench states in the `(b₋, b₊)` frame.
//!
//! The Wigner function of a Gaussian state is Gaussian, so the expectation
//! of a symmetric-ordered monomial is the corresponding moment of that
//! distribution, given by Isserlis pairings over the symmetrized covariance.

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::exppoly::ExpPoly;
use super::symbol::WeylPolynomial;

/// Symmetrized second moments of one `(b₋, b₊)` pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Covariance {
    /// `⟨b₋²⟩`
    pub xx: f64,
    /// `⟨{b₋, b₊}/2⟩`
    pub xy: f64,
    /// `⟨b₊²⟩`
    pub yy: f64,
}

/// `coth(βΔ/2)`, with `β = ∞` giving the ground state.
pub fn thermal_factor(beta: f64, delta: f64) -> Result<f64> {
    if beta.is_infinite() && beta > 0.0 {
        return Ok(1.0);
    }
    if !(beta > 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need β > 0 and Δ > 0, got β = {beta}, Δ = {delta}"
        )));
    }
    Ok(1.0 / (beta * delta / 2.0).tanh())
}

/// Angle `φ = arctan(ω/λ)` relating prequench ladder operators to `b₊`:
/// `b₊ = (e^{−iφ} a + e^{iφ} a†)/√(2 sin 2φ)`.
pub fn quench_angle(omega: f64, lambda: f64) -> f64 {
    (omega / lambda).atan()
}

pub fn thermal_covariance(beta: f64, delta: f64, phi: f64) -> Result<Covariance> {
    if !(phi > 0.0 && phi < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Angle(phi));
    }
    let c = thermal_factor(beta, delta)?;
    let s2 = (2.0 * phi).sin();
    Ok(Covariance {
        xx: c / (2.0 * s2),
        xy: c * (2.0 * phi).cos() / (2.0 * s2),
        yy: c / (2.0 * s2),
    })
}

fn double_factorial_odd(n: i64) -> f64 {
    // (n)!! for odd n, with (−1)!! = 1
    let mut out = 1.0;
    let mut k = n;
    while k > 1 {
        out *= k as f64;
        k -= 2;
    }
    out
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `E[x^μ y^ν]` for a centred Gaussian with the given covariance: pair
/// `j` of the `x`'s with `y`'s, the rest among themselves.
pub fn gaussian_moment(mu: u32, nu: u32, cov: &Covariance) -> f64 {
    let mut total = 0.0;
    for j in 0..=mu.min(nu) {
        if (mu - j) % 2 != 0 || (nu - j) % 2 != 0 {
            continue;
        }
        let cross = binomial(mu, j) * binomial(nu, j) * (1..=j).map(|i| i as f64).product::<f64>();
        let pxx = double_factorial_odd((mu - j) as i64 - 1) * cov.xx.powi(((mu - j) / 2) as i32);
        let pyy = double_factorial_odd((nu - j) as i64 - 1) * cov.yy.powi(((nu - j) / 2) as i32);
        total += cross * cov.xy.powi(j as i32) * pxx * pyy;
    }
    total
}

/// Number of perfect pairings of `2m` identical Gaussian factors, read off
/// the moment routine at unit variance.
pub fn pairing_count(m: u32) -> f64 {
    gaussian_moment(
        0,
        2 * m,
        &Covariance {
            xx: 1.0,
            xy: 0.0,
            yy: 1.0,
        },
    )
}

/// `⟨poly⟩` with one covariance per mode (modes uncorrelated).
pub fn wick_expectation(poly: &WeylPolynomial, covs: &[Covariance]) -> Result<ExpPoly> {
    if covs.len() < poly.modes() {
        return Err(Error::InvalidParameter(format!(
            "{} covariances for a {}-mode polynomial",
            covs.len(),
            poly.modes()
        )));
    }
    let mut out = ExpPoly::zero();
    for (m, c) in poly.terms() {
        let w: f64 = (0..poly.modes())
            .map(|i| gaussian_moment(m.x(i) as u32, m.y(i) as u32, &covs[i]))
            .product();
        if w != 0.0 {
            out.add_scaled(c, Complex64::new(w, 0.0));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_state_at_quarter_pi() {
        let c = thermal_covariance(f64::INFINITY, 2.0, std::f64::consts::FRAC_PI_4).unwrap();
        assert!((c.yy - 0.5).abs() < 1e-15);
        assert!(c.xy.abs() < 1e-15);
    }

    #[test]
    fn dimer_thermal_value() {
        let lambda = 6f64.sqrt();
        let phi = quench_angle(2.0, lambda);
        let c = thermal_covariance(0.25, 2.0, phi).unwrap();
        let want = (1.0 / 0.25f64.tanh()) / (2.0 * (2.0 * 2.0 * 6f64.sqrt() / 10.0));
        assert!((c.yy - want).abs() < 1e-14);
        assert!((c.yy - 2.084).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_angles() {
        assert!(matches!(
            thermal_covariance(1.0, 1.0, 0.0),
            Err(Error::Angle(_))
        ));
        assert!(matches!(
            thermal_covariance(1.0, 1.0, 2.0),
            Err(Error::Angle(_))
        ));
    }

    #[test]
    fn moments() {
        let c = Covariance {
            xx: 0.7,
            xy: 0.2,
            yy: 1.3,
        };
        assert!((gaussian_moment(0, 2, &c) - 1.3).abs() < 1e-15);
        assert!((gaussian_moment(0, 4, &c) - 3.0 * 1.3 * 1.3).abs() < 1e-14);
        assert!((gaussian_moment(1, 1, &c) - 0.2).abs() < 1e-15);
        // E[x²y²] = xx·yy + 2 xy²
        assert!((gaussian_moment(2, 2, &c) - (0.7 * 1.3 + 2.0 * 0.04)).abs() < 1e-15);
        assert_eq!(gaussian_moment(1, 2, &c), 0.0);
        let counts: Vec<f64> = (0..6).map(pairing_count).collect();
        assert_eq!(counts, vec![1.0, 1.0, 3.0, 15.0, 105.0, 945.0]);
    }
}
