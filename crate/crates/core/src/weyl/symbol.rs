//! Weyl symbols of polynomials in commuting quadrature pairs
//! `(x_i, y_i) = (b₋⁽ⁱ⁾, b₊⁽ⁱ⁾)` with `[x_i, y_i] = i`.
//!
//! A plain monomial symbol stands for the symmetric-ordered operator, and
//! operator products become Moyal products
//! `f ⋆ g = f exp[(i/2) Σ_i (∂←_{x_i} ∂→_{y_i} − ∂←_{y_i} ∂→_{x_i})] g`,
//! a finite sum for polynomials.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::exppoly::{ExpPoly, MAX_MODES};

/// Powers `[x_1, y_1, x_2, y_2, …]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(pub [u8; 2 * MAX_MODES]);

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    /// `x^mu y^nu` on mode `mode`.
    pub fn single(mode: usize, mu: u8, nu: u8) -> Self {
        let mut m = Self::default();
        m.0[2 * mode] = mu;
        m.0[2 * mode + 1] = nu;
        m
    }

    pub fn x(&self, mode: usize) -> u8 {
        self.0[2 * mode]
    }

    pub fn y(&self, mode: usize) -> u8 {
        self.0[2 * mode + 1]
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(other.0) {
            *a += b;
        }
        out
    }

    /// Free growth exponent `ν_i − μ_i` per mode.
    pub fn growth(&self) -> [i16; MAX_MODES] {
        let mut q = [0i16; MAX_MODES];
        for (i, qi) in q.iter_mut().enumerate() {
            *qi = self.y(i) as i16 - self.x(i) as i16;
        }
        q
    }
}

fn falling(n: u8, r: u8) -> f64 {
    (0..r).map(|i| (n - i) as f64).product()
}

fn factorial(n: u8) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeylPolynomial {
    modes: usize,
    terms: BTreeMap<Monomial, ExpPoly>,
}

impl WeylPolynomial {
    pub fn zero(modes: usize) -> Self {
        assert!(
            (1..=MAX_MODES).contains(&modes),
            "between 1 and {MAX_MODES} modes"
        );
        Self {
            modes,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(modes: usize, c: ExpPoly) -> Self {
        Self::monomial(modes, Monomial::one(), c)
    }

    pub fn monomial(modes: usize, m: Monomial, c: ExpPoly) -> Self {
        let mut p = Self::zero(modes);
        p.add_monomial(m, &c);
        p
    }

    /// Symbol of `b₋` on `mode`.
    pub fn x(modes: usize, mode: usize) -> Self {
        Self::monomial(modes, Monomial::single(mode, 1, 0), ExpPoly::real(1.0))
    }

    /// Symbol of `b₊` on `mode`.
    pub fn y(modes: usize, mode: usize) -> Self {
        Self::monomial(modes, Monomial::single(mode, 0, 1), ExpPoly::real(1.0))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &ExpPoly)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> ExpPoly {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn add_monomial(&mut self, m: Monomial, c: &ExpPoly) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m).or_default();
        e.add_assign(c);
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_monomial(*m, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map_coefficients(|c| c.scaled(a))
    }

    pub fn map_coefficients(&self, f: impl Fn(&ExpPoly) -> ExpPoly) -> Self {
        let mut out = Self::zero(self.modes);
        for (m, c) in &self.terms {
            out.add_monomial(*m, &f(c));
        }
        out
    }

    pub fn mul_coefficient(&self, c: &ExpPoly) -> Self {
        self.map_coefficients(|e| e.mul(c))
    }

    /// Pointwise product of symbols (not an operator product).
    pub fn pointwise(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.modes.max(other.modes));
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_monomial(ma.mul(mb), &ca.mul(cb));
            }
        }
        out
    }

    pub fn pow_pointwise(&self, k: u32) -> Self {
        let mut out = Self::constant(self.modes, ExpPoly::real(1.0));
        for _ in 0..k {
            out = out.pointwise(self);
        }
        out
    }

    /// Moyal product `self ⋆ other`.
    pub fn star(&self, other: &Self) -> Self {
        self.star_filtered(other, |_| true)
    }

    /// Moyal product keeping only orders `n = Σ (j_i + k_i)` accepted by
    /// `keep_order`.
    fn star_filtered(&self, other: &Self, keep_order: impl Fn(u32) -> bool) -> Self {
        let modes = self.modes.max(other.modes);
        let mut out = Self::zero(modes);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let coeff = ca.mul(cb);
                if coeff.is_zero() {
                    continue;
                }
                let mut contributions: Vec<(Monomial, Complex64, u32)> =
                    vec![(Monomial::one(), Complex64::new(1.0, 0.0), 0)];
                for mode in 0..modes {
                    let (a1, a2) = (ma.x(mode), ma.y(mode));
                    let (b1, b2) = (mb.x(mode), mb.y(mode));
                    let mut next = Vec::new();
                    for (mono, f, order) in &contributions {
                        // j pairs ∂_x f with ∂_y g, k pairs ∂_y f with ∂_x g.
                        for j in 0..=a1.min(b2) {
                            for k in 0..=a2.min(b1) {
                                let n = (j + k) as i32;
                                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                                let mag = sign
                                    * falling(a1, j)
                                    * falling(a2, k)
                                    * falling(b2, j)
                                    * falling(b1, k)
                                    / (factorial(j) * factorial(k));
                                let factor = Complex64::new(0.0, 0.5).powi(n) * mag;
                                let mut m = *mono;
                                m.0[2 * mode] = a1 - j + b1 - k;
                                m.0[2 * mode + 1] = a2 - k + b2 - j;
                                next.push((m, f * factor, order + n as u32));
                            }
                        }
                    }
                    contributions = next;
                }
                for (m, f, order) in contributions {
                    if keep_order(order) {
                        out.add_monomial(m, &coeff.scaled(f));
                    }
                }
            }
        }
        out
    }

    /// `[self, other]` through the Moyal product; only odd orders survive.
    pub fn commutator(&self, other: &Self) -> Self {
        let ab = self.star_filtered(other, |n| n % 2 == 1);
        let ba = other.star_filtered(self, |n| n % 2 == 1);
        ab.sub(&ba)
    }

    /// Poisson bracket `Σ_i (∂_{x_i} f ∂_{y_i} g − ∂_{y_i} f ∂_{x_i} g)`.
    pub fn poisson(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.modes.max(other.modes));
        for i in 0..out.modes {
            out = out
                .add(&self.d_dx(i).pointwise(&other.d_dy(i)))
                .sub(&self.d_dy(i).pointwise(&other.d_dx(i)));
        }
        out
    }

    pub fn d_dx(&self, mode: usize) -> Self {
        self.differentiate(2 * mode)
    }

    pub fn d_dy(&self, mode: usize) -> Self {
        self.differentiate(2 * mode + 1)
    }

    fn differentiate(&self, slot: usize) -> Self {
        let mut out = Self::zero(self.modes);
        for (m, c) in &self.terms {
            let e = m.0[slot];
            if e == 0 {
                continue;
            }
            let mut d = *m;
            d.0[slot] -= 1;
            out.add_monomial(d, &c.scaled(Complex64::new(e as f64, 0.0)));
        }
        out
    }

    /// Keeps terms with ħ half-power at most `max_s`.
    pub fn truncate_hbar(&self, max_s: u16) -> Self {
        self.map_coefficients(|c| c.filter_s(|s| s <= max_s))
    }

    pub fn shift_hbar(&self, ds: i32) -> Self {
        self.map_coefficients(|c| c.shift_hbar(ds))
    }

    /// Largest relative imaginary part over all coefficients; zero for the
    /// symbol of a Hermitian operator.
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        self.terms
            .values()
            .flat_map(|c| c.terms().map(|(_, v)| v.im.abs()))
            .fold(0.0, f64::max)
            / scale
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    /// Evaluates the symbol at a phase-space point and time.
    pub fn eval(&self, point: &[f64], t: f64, rates: &[f64], hbar: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut v = 1.0;
                for (slot, &e) in m.0.iter().enumerate().take(2 * self.modes) {
                    v *= point[slot].powi(e as i32);
                }
                c.eval(t, rates, hbar) * v
            })
            .sum()
    }

    /// Distance to another polynomial: largest coefficient difference.
    pub fn max_difference(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }
}
