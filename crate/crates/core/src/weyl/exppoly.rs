//! Exponential polynomials `Σ c · t^p · e^{(q·λ) t} · ħ^{s/2}`.
//!
//! `q` is a vector of integer multiples of the per-mode rates `λ_i`; the
//! rates themselves are supplied by the caller whenever a closed form needs
//! them (integration, differentiation, evaluation).

use std::collections::BTreeMap;

use num_complex::Complex64;

pub const MAX_MODES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermKey {
    pub p: u16,
    pub q: [i16; MAX_MODES],
    pub s: u16,
}

impl TermKey {
    pub fn new(p: u16, q: [i16; MAX_MODES], s: u16) -> Self {
        Self { p, q, s }
    }

    pub fn rate(&self, rates: &[f64]) -> f64 {
        self.q.iter().zip(rates).map(|(&q, &l)| q as f64 * l).sum()
    }
}

pub fn add_q(a: [i16; MAX_MODES], b: [i16; MAX_MODES]) -> [i16; MAX_MODES] {
    let mut out = [0; MAX_MODES];
    for i in 0..MAX_MODES {
        out[i] = a[i] + b[i];
    }
    out
}

pub fn neg_q(a: [i16; MAX_MODES]) -> [i16; MAX_MODES] {
    let mut out = a;
    out.iter_mut().for_each(|x| *x = -*x);
    out
}

/// Relative cut below which products are pruned.
const PRUNE: f64 = 1e-15;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpPoly {
    terms: BTreeMap<TermKey, Complex64>,
}

impl ExpPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::term(c, 0, [0; MAX_MODES], 0)
    }

    pub fn real(c: f64) -> Self {
        Self::constant(Complex64::new(c, 0.0))
    }

    pub fn term(c: Complex64, p: u16, q: [i16; MAX_MODES], s: u16) -> Self {
        let mut e = Self::zero();
        e.add_term(TermKey::new(p, q, s), c);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &Complex64)> {
        self.terms.iter()
    }

    pub fn get(&self, key: &TermKey) -> Complex64 {
        self.terms.get(key).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, key: TermKey, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let e = self.terms.entry(key).or_default();
        *e += c;
        if *e == Complex64::new(0.0, 0.0) {
            self.terms.remove(&key);
        }
    }

    pub fn add_assign(&mut self, other: &ExpPoly) {
        for (k, c) in &other.terms {
            self.add_term(*k, *c);
        }
    }

    pub fn add_scaled(&mut self, other: &ExpPoly, a: Complex64) {
        for (k, c) in &other.terms {
            self.add_term(*k, *c * a);
        }
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|c| *c *= a);
        out.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        out
    }

    pub fn mul(&self, other: &ExpPoly) -> Self {
        let mut out = Self::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let key = TermKey::new(ka.p + kb.p, add_q(ka.q, kb.q), ka.s + kb.s);
                out.add_term(key, ca * cb);
            }
        }
        out.prune();
        out
    }

    /// Drops terms smaller than `1e−15` of the largest one.
    pub fn prune(&mut self) {
        let max = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        self.terms.retain(|_, c| c.norm() > PRUNE * max);
    }

    /// Multiplies every term by `e^{(q·λ)t}`.
    pub fn shift_exponent(&self, q: [i16; MAX_MODES]) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (TermKey::new(k.p, add_q(k.q, q), k.s), *c))
                .collect(),
        }
    }

    /// Changes every half-power `s` by `ds`; panics if one would go negative.
    pub fn shift_hbar(&self, ds: i32) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| {
                    let s = k.s as i32 + ds;
                    assert!(s >= 0, "negative ħ power");
                    (TermKey::new(k.p, k.q, s as u16), *c)
                })
                .collect(),
        }
    }

    /// Keeps only terms with half-power `s` satisfying `keep`.
    pub fn filter_s(&self, keep: impl Fn(u16) -> bool) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| keep(k.s))
                .map(|(k, c)| (*k, *c))
                .collect(),
        }
    }

    pub fn min_s(&self) -> Option<u16> {
        self.terms.keys().map(|k| k.s).min()
    }

    pub fn max_s(&self) -> Option<u16> {
        self.terms.keys().map(|k| k.s).max()
    }

    /// `∫₀ᵗ dτ` in closed form. Terms whose total rate vanishes integrate as
    /// polynomials.
    pub fn integrate(&self, rates: &[f64]) -> Self {
        let scale = rates.iter().map(|r| r.abs()).fold(0.0, f64::max).max(1.0);
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            let a = k.rate(rates);
            if a.abs() <= 1e-12 * scale {
                out.add_term(TermKey::new(k.p + 1, k.q, k.s), c / (k.p as f64 + 1.0));
                continue;
            }
            // ∫₀ᵗ τ^p e^{aτ} = e^{at} Σ_j (−1)^j p!/(p−j)! t^{p−j}/a^{j+1} − (−1)^p p!/a^{p+1}
            let p = k.p as i32;
            let mut falling = 1.0;
            for j in 0..=p {
                if j > 0 {
                    falling *= (p - j + 1) as f64;
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                out.add_term(
                    TermKey::new((p - j) as u16, k.q, k.s),
                    c * (sign * falling / a.powi(j + 1)),
                );
            }
            // After the loop `falling` is p!.
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            out.add_term(
                TermKey::new(0, [0; MAX_MODES], k.s),
                -c * (sign * falling / a.powi(p + 1)),
            );
        }
        out.prune();
        out
    }

    pub fn derivative(&self, rates: &[f64]) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            let a = k.rate(rates);
            if k.p > 0 {
                out.add_term(TermKey::new(k.p - 1, k.q, k.s), c * k.p as f64);
            }
            if a != 0.0 {
                out.add_term(*k, c * a);
            }
        }
        out
    }

    pub fn eval(&self, t: f64, rates: &[f64], hbar: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                c * t.powi(k.p as i32) * (k.rate(rates) * t).exp() * hbar.powf(k.s as f64 / 2.0)
            })
            .sum()
    }

    /// Value at `t = 0` with the ħ bookkeeping kept.
    pub fn at_time_zero(&self) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            if k.p == 0 {
                out.add_term(TermKey::new(0, [0; MAX_MODES], k.s), *c);
            }
        }
        out
    }

    /// Largest imaginary part relative to the largest coefficient.
    pub fn imaginary_defect(&self) -> f64 {
        let max = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max) / max
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q1(q: i16) -> [i16; MAX_MODES] {
        [q, 0, 0, 0]
    }

    #[test]
    fn integral_against_quadrature() {
        let rates = [1.3];
        let mut e = ExpPoly::term(Complex64::new(0.7, 0.1), 2, q1(3), 1);
        e.add_term(TermKey::new(1, q1(-2), 0), Complex64::new(-1.1, 0.0));
        e.add_term(TermKey::new(3, q1(0), 2), Complex64::new(0.4, 0.0));
        let ie = e.integrate(&rates);
        let t = 0.9;
        let n = 20000;
        let h = t / n as f64;
        let mut simpson = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            simpson += e.eval(i as f64 * h, &rates, 0.5) * w;
        }
        simpson *= h / 3.0;
        assert!((ie.eval(t, &rates, 0.5) - simpson).norm() < 1e-12);
        assert!(ie.eval(0.0, &rates, 0.5).norm() < 1e-14);
    }

    #[test]
    fn derivative_inverts_integral() {
        let rates = [0.8, 2.0];
        let mut e = ExpPoly::term(Complex64::new(1.0, 0.0), 4, [1, -1, 0, 0], 3);
        e.add_term(TermKey::new(0, [2, 1, 0, 0], 0), Complex64::new(0.0, 2.0));
        let back = e.integrate(&rates).derivative(&rates);
        for t in [0.0, 0.3, 1.7] {
            assert!((back.eval(t, &rates, 0.1) - e.eval(t, &rates, 0.1)).norm() < 1e-12);
        }
    }
}
