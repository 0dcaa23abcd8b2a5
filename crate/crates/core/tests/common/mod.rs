//! Independent oracles and generators shared by the integration suites.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use quenchlab_core::propagator::Vector;
use quenchlab_core::sparse::SparseOperator;
use quenchlab_core::weyl::{ExpPoly, Monomial, WeylPolynomial, MAX_MODES};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `e^{−iHt} v` through a dense Hermitian eigendecomposition.
pub fn dense_evolve(h: &SparseOperator, v: &[Complex64], t: f64) -> Vector {
    let eig = h.to_dense().symmetric_eigen();
    let u = &eig.eigenvectors;
    let x = DMatrix::from_column_slice(v.len(), 1, v);
    let mut y = u.adjoint() * x;
    for (i, e) in eig.eigenvalues.iter().enumerate() {
        y[i] *= Complex64::from_polar(1.0, -t * e);
    }
    (u * y).iter().copied().collect()
}

/// Random sparse Hermitian matrix with about `per_row` entries per row.
pub fn random_hermitian(dim: usize, per_row: usize, seed: u64) -> SparseOperator {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    for i in 0..dim {
        t.push((i, i, c(rng.gen_range(-2.0..2.0), 0.0)));
        for _ in 0..per_row {
            let j = rng.gen_range(0..dim);
            if j == i {
                continue;
            }
            let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            t.push((i, j, v));
            t.push((j, i, v.conj()));
        }
    }
    SparseOperator::from_triplets(dim, t, true, 0.0)
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Ladder operator `a` on levels `0..dim`.
pub fn lowering(dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            c((j as f64).sqrt(), 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// `(b₋, b₊)` built from `a` on a truncated oscillator.
pub fn quadratures(dim: usize, phi: f64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let a = lowering(dim);
    let ad = a.adjoint();
    let norm = 1.0 / (2.0 * (2.0 * phi).sin()).sqrt();
    let e = Complex64::from_polar(1.0, phi);
    let bm = (&a * e + &ad * e.conj()) * c(norm, 0.0);
    let bp = (&a * e.conj() + &ad * e) * c(norm, 0.0);
    (bm, bp)
}

/// `Tr[ρ (α b₋ + β b₊)ⁿ]` for `ρ ∝ e^{−βΔ a†a}`. Levels at or above
/// `occupied` carry no weight; `dim` must exceed `occupied + n`, so that the
/// truncation never reaches a populated term.
pub fn oscillator_moment(
    alpha: f64,
    beta: f64,
    n: u32,
    phi: f64,
    beta_delta: f64,
    occupied: usize,
    dim: usize,
) -> f64 {
    assert!(dim > occupied + n as usize);
    let (bm, bp) = quadratures(dim, phi);
    let l = bm * c(alpha, 0.0) + bp * c(beta, 0.0);
    let mut p = DMatrix::<Complex64>::identity(dim, dim);
    for _ in 0..n {
        p = &p * &l;
    }
    let w: Vec<f64> = (0..occupied)
        .map(|m| (-beta_delta * m as f64).exp())
        .collect();
    let z: f64 = w.iter().sum();
    (0..occupied).map(|m| w[m] * p[(m, m)].re).sum::<f64>() / z
}

/// `⟨k| b₊ⁿ |l⟩` from a truncated dense matrix power.
pub fn dense_bplus(k: usize, l: usize, n: usize, phi: f64) -> Complex64 {
    let dim = k.max(l) + n + 2;
    let (_, bp) = quadratures(dim, phi);
    let mut p = DMatrix::<Complex64>::identity(dim, dim);
    for _ in 0..n {
        p = &p * &bp;
    }
    p[(k, l)]
}

/// Weyl symbols on `modes ≤ 2` modes: a few monomials of degree ≤ 2 per
/// variable with exponential-polynomial coefficients.
pub fn symbol(modes: usize) -> impl Strategy<Value = WeylPolynomial> {
    let term = (
        prop::array::uniform4(0u8..3),
        -2.0..2.0f64,
        -2.0..2.0f64,
        0u16..2,
        prop::array::uniform2(-1i16..2),
        0u16..3,
    );
    prop::collection::vec(term, 1..4).prop_map(move |terms| {
        let mut p = WeylPolynomial::zero(modes);
        for (e, re, im, tp, q, s) in terms {
            let mut m = [0u8; 2 * MAX_MODES];
            m[..2 * modes].copy_from_slice(&e[..2 * modes]);
            let mut qq = [0i16; MAX_MODES];
            qq[..modes].copy_from_slice(&q[..modes]);
            p.add_monomial(Monomial(m), &ExpPoly::term(c(re, im), tp, qq, s));
        }
        p
    })
}

/// Exponential polynomials over two rates.
pub fn exp_poly() -> impl Strategy<Value = ExpPoly> {
    let term = (
        -3.0..3.0f64,
        -3.0..3.0f64,
        0u16..4,
        prop::array::uniform2(-2i16..3),
        0u16..3,
    );
    prop::collection::vec(term, 1..6).prop_map(|terms| {
        let mut e = ExpPoly::zero();
        for (re, im, p, q, s) in terms {
            let mut qq = [0i16; MAX_MODES];
            qq[..2].copy_from_slice(&q);
            e.add_assign(&ExpPoly::term(c(re, im), p, qq, s));
        }
        e
    })
}

/// `max|a − b|` relative to the larger of the two.
pub fn relative_difference(a: &WeylPolynomial, b: &WeylPolynomial) -> f64 {
    a.max_difference(b) / a.max_abs().max(b.max_abs()).max(1.0)
}
