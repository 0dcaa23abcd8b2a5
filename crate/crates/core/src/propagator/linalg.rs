//! Dense complex vector kernels shared by the Krylov routines.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Vector = Vec<Complex64>;

pub fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(a: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

pub fn scale(a: f64, x: &mut [Complex64]) {
    x.iter_mut().for_each(|v| *v *= a);
}

/// Normalizes in place and returns the previous norm.
pub fn normalize(x: &mut [Complex64]) -> f64 {
    let n = norm(x);
    if n > 0.0 {
        scale(1.0 / n, x);
    }
    n
}

/// Classical Gram-Schmidt against an orthonormal set, applied twice.
pub fn orthogonalize<'a>(x: &mut [Complex64], basis: impl Iterator<Item = &'a Vector> + Clone) {
    for _ in 0..2 {
        for b in basis.clone() {
            let c = dot(b, x);
            axpy(-c, b, x);
        }
    }
}

/// Reproducible pseudo-random complex vector.
pub fn random_vector(dim: usize, seed: u64) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect()
}
