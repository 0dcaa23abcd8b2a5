//! Lowest eigenpairs of a real symmetric tridiagonal matrix: Sturm-sequence
//! bisection for the eigenvalues, inverse iteration for the vectors.

use super::linalg::{axpy, dot, normalize, random_vector, Vector};

/// Number of eigenvalues strictly below `x`.
pub(super) fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let prev = if q.abs() < tiny { tiny.copysign(q) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin interval containing the spectrum.
pub(super) fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r =
            if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// `k`-th smallest eigenvalue (0-based) by bisection to full precision.
pub fn kth_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let (lo, hi) = gershgorin(diag, off);
    kth_eigenvalue_in(diag, off, k, lo, hi)
}

/// As [`kth_eigenvalue`], starting from a bracket known to contain it.
pub(super) fn kth_eigenvalue_in(
    diag: &[f64],
    off: &[f64],
    k: usize,
    mut lo: f64,
    mut hi: f64,
) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `(T − σ) y = b` by Gaussian elimination with partial pivoting.
pub(super) fn shifted_solve<T>(diag: &[f64], off: &[f64], sigma: f64, b: &[T]) -> Vec<T>
where
    T: Copy
        + Default
        + std::ops::Mul<f64, Output = T>
        + std::ops::Div<f64, Output = T>
        + std::ops::SubAssign,
{
    let n = diag.len();
    let scale = diag.iter().map(|d| d.abs()).fold(0.0, f64::max).max(1.0);
    let guard = f64::EPSILON * scale;
    // Row i holds (l, d, u, u2) after pivoting: entries at columns i-1.., i, i+1, i+2.
    let mut d: Vec<f64> = diag.iter().map(|x| x - sigma).collect();
    let mut u: Vec<f64> = off.to_vec();
    u.push(0.0);
    let mut u2 = vec![0.0; n];
    let mut rhs = b.to_vec();
    let mut sub: Vec<f64> = off.to_vec();
    for i in 0..n - 1 {
        // Candidate pivot rows i and i+1 for column i.
        if sub[i].abs() > d[i].abs() {
            // Swap rows i and i+1.
            let (di, ui, u2i) = (d[i], u[i], u2[i]);
            d[i] = sub[i];
            u[i] = d[i + 1];
            u2[i] = u[i + 1];
            sub[i] = di;
            d[i + 1] = ui;
            u[i + 1] = u2i;
            rhs.swap(i, i + 1);
        }
        if d[i].abs() < guard {
            d[i] = guard;
        }
        let m = sub[i] / d[i];
        d[i + 1] -= m * u[i];
        u[i + 1] -= m * u2[i];
        let ri = rhs[i];
        rhs[i + 1] -= ri * m;
    }
    if d[n - 1].abs() < guard {
        d[n - 1] = guard;
    }
    let mut y = vec![T::default(); n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        if i + 1 < n {
            acc -= y[i + 1] * u[i];
        }
        if i + 2 < n {
            acc -= y[i + 2] * u2[i];
        }
        y[i] = acc / d[i];
    }
    y
}

/// The `m` lowest eigenpairs, vectors orthonormalized against each other.
pub fn lowest_tridiagonal(
    diag: &[f64],
    off: &[f64],
    m: usize,
    seed: u64,
) -> (Vec<f64>, Vec<Vector>) {
    let n = diag.len();
    let mut values = Vec::with_capacity(m);
    let mut vectors: Vec<Vector> = Vec::with_capacity(m);
    for k in 0..m.min(n) {
        let lambda = kth_eigenvalue(diag, off, k);
        let mut v = random_vector(n, seed.wrapping_add(k as u64));
        // Real start vector: the eigenvectors of a real tridiagonal are real.
        v.iter_mut().for_each(|c| c.im = 0.0);
        normalize(&mut v);
        for _ in 0..3 {
            v = shifted_solve(diag, off, lambda, &v);
            for prev in &vectors {
                let c = dot(prev, &v);
                axpy(-c, prev, &mut v);
            }
            normalize(&mut v);
        }
        values.push(lambda);
        vectors.push(v);
    }
    (values, vectors)
}
