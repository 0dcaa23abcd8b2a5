//! Heisenberg operators of the post-quench dimer as Weyl symbols.
//!
//! With `h = −λħ x y + v` the symbol of `Â_H(t)` obeys
//! `∂_t a = λ(y∂_y − x∂_x) a + (i/ħ)(v ⋆ a − a ⋆ v)`.
//! Every insertion of a degree-`d` monomial of `v` raises the ħ half-power
//! by `d − 2`, so the equation is solved order by order in `s`; each order is
//! a free evolution driven by lower orders and is integrated in closed form
//! (variation of constants, one monomial at a time). This is the Dyson series
//! with the time-ordered integrals nested innermost first.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::meanfield::{PhaseSpacePolynomial, TaylorSeries};

use super::exppoly::{neg_q, ExpPoly, TermKey, MAX_MODES};
use super::symbol::{Monomial, WeylPolynomial};

/// `v̂(t)` in the interaction picture, plus the data needed to use it.
#[derive(Clone, Debug)]
pub struct QuantizedV {
    /// Monomials `x^μ y^ν` carry `ħ^{(μ+ν)/2} e^{(ν−μ)λt}`.
    pub symbol: WeylPolynomial,
    /// Total degree of the Taylor expansion behind `symbol`.
    pub order: usize,
    pub rates: Vec<f64>,
}

impl QuantizedV {
    /// Schrödinger-picture symbol (the interaction picture at `t = 0`).
    pub fn at_time_zero(&self) -> WeylPolynomial {
        self.symbol.map_coefficients(|c| c.at_time_zero())
    }
}

/// `z = √(ħ/2λ)(y + x)`, `φ = √(λħ/2)(y − x)` substituted into a polynomial
/// in `(z, φ)`. Returns the symbol with ħ tags but without time dependence.
fn substitute(terms: &[((u32, u32), f64)], lambda: f64) -> WeylPolynomial {
    let cz = 1.0 / (2.0 * lambda).sqrt();
    let cp = (lambda / 2.0).sqrt();
    let x = WeylPolynomial::x(1, 0);
    let y = WeylPolynomial::y(1, 0);
    let z = y.add(&x).scale(Complex64::new(cz, 0.0));
    let phi = y.sub(&x).scale(Complex64::new(cp, 0.0));
    let mut out = WeylPolynomial::zero(1);
    for &((i, j), c) in terms {
        if c == 0.0 {
            continue;
        }
        let mono = z.pow_pointwise(i).pointwise(&phi.pow_pointwise(j));
        let s = (i + j) as i32;
        out = out.add(&mono.scale(Complex64::new(c, 0.0)).shift_hbar(s));
    }
    out
}

fn attach_growth(p: &WeylPolynomial) -> WeylPolynomial {
    let mut out = WeylPolynomial::zero(p.modes());
    for (m, c) in p.terms() {
        out.add_monomial(*m, &c.shift_exponent(m.growth()));
    }
    out
}

/// Symbol of `v̂(t)` from the exact Taylor coefficients of `v(z, φ)`.
pub fn quantize_v(v: &TaylorSeries, lambda: f64) -> Result<QuantizedV> {
    if !(lambda > 0.0) {
        return Err(Error::StableQuench(lambda));
    }
    let terms: Vec<_> = v
        .to_f64()
        .into_iter()
        .filter(|((i, j), _)| i + j >= 3)
        .collect();
    Ok(QuantizedV {
        symbol: attach_growth(&substitute(&terms, lambda)),
        order: v.order,
        rates: vec![lambda],
    })
}

/// Symbol at `t = 0` of an observable given as a polynomial in `(z, φ)`.
pub fn quantize_observable(a: &PhaseSpacePolynomial, lambda: f64) -> Result<WeylPolynomial> {
    if !(lambda > 0.0) {
        return Err(Error::StableQuench(lambda));
    }
    Ok(substitute(&a.terms, lambda))
}

/// Free evolution only: `x^μ y^ν ↦ e^{(ν−μ)λt} x^μ y^ν`.
pub fn free_evolution(a: &WeylPolynomial) -> WeylPolynomial {
    attach_growth(&a.map_coefficients(|c| c.at_time_zero()))
}

/// Heisenberg symbol of `a` through ħ half-power `max_half_order`.
pub fn dyson_expand(
    a: &WeylPolynomial,
    v: &QuantizedV,
    max_half_order: usize,
) -> Result<WeylPolynomial> {
    let a0 = a.map_coefficients(|c| c.at_time_zero());
    let s_min = match a0.terms().filter_map(|(_, c)| c.min_s()).min() {
        Some(s) => s as usize,
        None => return Ok(WeylPolynomial::zero(a.modes())),
    };
    let top = max_half_order;
    if top < s_min {
        return Ok(WeylPolynomial::zero(a.modes()));
    }
    let needed = top - s_min + 2;
    if top >= s_min + 1 && needed > v.order {
        return Err(Error::OrderStarvation {
            requested: top,
            needed,
            available: v.order,
        });
    }
    let rates = &v.rates;
    let v0 = v.at_time_zero();
    let modes = a.modes().max(v0.modes());

    // sources[s]: accumulated right-hand side landing at half-power s.
    let mut sources = vec![WeylPolynomial::zero(modes); top + 1];
    let mut total = WeylPolynomial::zero(modes);
    for s in s_min..=top {
        let init = a0.map_coefficients(|c| c.filter_s(|k| k as usize == s));
        let mut sol = WeylPolynomial::zero(modes);
        let mut monomials: Vec<Monomial> = init.terms().map(|(m, _)| *m).collect();
        monomials.extend(sources[s].terms().map(|(m, _)| *m));
        monomials.sort();
        monomials.dedup();
        for m in monomials {
            let q = m.growth();
            let c0 = init.coefficient(&m);
            let f = sources[s].coefficient(&m);
            let mut c = c0.shift_exponent(q);
            if !f.is_zero() {
                c.add_assign(
                    &f.shift_exponent(neg_q(q))
                        .integrate(rates)
                        .shift_exponent(q),
                );
            }
            sol.add_monomial(m, &c);
        }
        if sol.is_zero() {
            continue;
        }
        // Feed the higher orders: (i/ħ)[v_d, sol] lands at s + d − 2.
        if s + 1 <= top {
            let vd =
                v0.map_coefficients(|c| c.filter_s(|d| (s + d as usize).saturating_sub(2) <= top));
            if !vd.is_zero() {
                let drive = vd
                    .commutator(&sol)
                    .scale(Complex64::new(0.0, 1.0))
                    .shift_hbar(-2);
                for (m, c) in drive.terms() {
                    for (key, val) in c.terms() {
                        let k = key.s as usize;
                        debug_assert!(k > s);
                        if k <= top {
                            let e = ExpPoly::term(*val, key.p, key.q, key.s);
                            sources[k].add_monomial(*m, &e);
                        }
                    }
                }
            }
        }
        total = total.add(&sol);
    }
    Ok(total)
}

/// Coefficients `C_k` of the pure-growth terms `ħ^{k/2} e^{kλt} y^k` (mode 0)
/// for `k = 0..=max_k`, together with the remainder of slower terms.
pub fn dominant_scaling(ah: &WeylPolynomial, max_k: usize) -> (Vec<f64>, WeylPolynomial) {
    let mut c = vec![0.0; max_k + 1];
    let mut remainder = ah.clone();
    for (k, ck) in c.iter_mut().enumerate() {
        let m = Monomial::single(0, 0, k as u8);
        let mut q = [0i16; MAX_MODES];
        q[0] = k as i16;
        let key = TermKey::new(0, q, k as u16);
        let val = ah.coefficient(&m).get(&key);
        *ck = val.re;
        remainder.add_monomial(m, &ExpPoly::term(-val, 0, q, k as u16));
    }
    (c, remainder)
}

/// Checks that every term has `s ≥ degree` with equal parity, the structure
/// of a Heisenberg symbol built from an observable and `v` of matching kind.
pub fn check_order_bookkeeping(ah: &WeylPolynomial) -> bool {
    ah.terms().all(|(m, c)| {
        let d = m.degree();
        c.terms()
            .all(|(k, _)| k.s as u32 >= d && (k.s as u32 - d) % 2 == 0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::{dimer_rate, taylor_v, unstable_manifold};

    #[test]
    fn quantized_v_structure() {
        let lambda = dimer_rate(2.5).unwrap();
        let qv = quantize_v(&taylor_v(2.5, 8).unwrap(), lambda).unwrap();
        for (m, c) in qv.symbol.terms() {
            assert_eq!(m.degree() % 2, 0);
            for (k, _) in c.terms() {
                assert_eq!(k.s as u32, m.degree());
                assert_eq!(k.q, m.growth());
            }
        }
        assert!(qv.symbol.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn free_growth_without_v() {
        let lambda = 1.7;
        let empty = TaylorSeries {
            order: 8,
            terms: Default::default(),
        };
        let qv = quantize_v(&empty, lambda).unwrap();
        assert!(qv.symbol.is_zero());
        let a = quantize_observable(&PhaseSpacePolynomial::in_z(&[0.0, 1.0, 1.0]), lambda).unwrap();
        let ah = dyson_expand(&a, &qv, 6).unwrap();
        assert!(ah.max_difference(&free_evolution(&a)) < 1e-15);
    }

    #[test]
    fn starvation_is_reported() {
        let lambda = dimer_rate(2.5).unwrap();
        let qv = quantize_v(&taylor_v(2.5, 4).unwrap(), lambda).unwrap();
        let a = quantize_observable(&PhaseSpacePolynomial::in_z(&[0.0, 1.0]), lambda).unwrap();
        assert!(matches!(
            dyson_expand(&a, &qv, 4),
            Err(Error::OrderStarvation { .. })
        ));
        assert!(dyson_expand(&a, &qv, 3).is_ok());
    }

    #[test]
    fn dominant_coefficients_match_the_manifold() {
        let alpha = 2.5;
        let lambda = dimer_rate(alpha).unwrap();
        let qv = quantize_v(&taylor_v(alpha, 8).unwrap(), lambda).unwrap();
        let obs = PhaseSpacePolynomial::in_z(&[0.0, 1.0, 1.0]);
        let a = quantize_observable(&obs, lambda).unwrap();
        let ah = dyson_expand(&a, &qv, 6).unwrap();
        assert!(check_order_bookkeeping(&ah));
        assert!(ah.hermiticity_defect() < 1e-12);
        let (c, _) = dominant_scaling(&ah, 6);
        let m = unstable_manifold(alpha, 6).unwrap().coefficients(&obs);
        for k in 0..=6 {
            assert!(
                (c[k] - m[k]).abs() < 1e-11 * (1.0 + m[k].abs()),
                "k={k}: {} vs {}",
                c[k],
                m[k]
            );
        }
    }
}
