//! Complete eigendecomposition of real tridiagonal operators that commute
//! with the index reversal `i ↔ d−1−i`. The dimer Hamiltonian is one: the
//! site swap reverses the Fock ordering. Splitting into the symmetric and
//! antisymmetric sectors removes the exponentially close doublets that
//! inverse iteration cannot separate.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

use super::linalg::Vector;
use super::tridiag::{gershgorin, kth_eigenvalue_in, shifted_solve, sturm_count};

/// Eigenpairs of one parity sector, vectors as columns in the sector's
/// half basis.
#[derive(Clone, Debug)]
pub struct Sector {
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Split real and imaginary parts, so products run through real GEMM.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitMatrix {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl SplitMatrix {
    fn left_mul(&self, m: &DMatrix<f64>) -> Self {
        Self {
            re: m * &self.re,
            im: m * &self.im,
        }
    }

    fn add(&mut self, other: &Self) {
        self.re += &other.re;
        self.im += &other.im;
    }

    /// Multiplies row `j` by `e^{−i e_j t}`.
    fn rotate(&mut self, energies: &[f64], t: f64) {
        for (j, &e) in energies.iter().enumerate() {
            let (s, c) = (-e * t).sin_cos();
            for k in 0..self.re.ncols() {
                let (a, b) = (self.re[(j, k)], self.im[(j, k)]);
                self.re[(j, k)] = c * a - s * b;
                self.im[(j, k)] = s * a + c * b;
            }
        }
    }

    fn column_norms_sq(&self) -> Vec<f64> {
        (0..self.re.ncols())
            .map(|k| self.re.column(k).norm_squared() + self.im.column(k).norm_squared())
            .collect()
    }

    fn sub(&self, other: &Self) -> Self {
        Self {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }
}

/// Vectors in eigen coordinates, one column per vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorPair {
    pub even: SplitMatrix,
    pub odd: SplitMatrix,
}

impl SectorPair {
    fn column_norms_sq(&self) -> Vec<f64> {
        self.even
            .column_norms_sq()
            .iter()
            .zip(self.odd.column_norms_sq())
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            even: self.even.sub(&other.even),
            odd: self.odd.sub(&other.odd),
        }
    }
}

/// Diagonal Fock-space operator expressed in the eigenbasis, as blocks
/// between the sectors. Vanishing blocks are dropped.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    ee: Option<DMatrix<f64>>,
    oo: Option<DMatrix<f64>>,
    /// Odd → even.
    eo: Option<DMatrix<f64>>,
    /// Even → odd.
    oe: Option<DMatrix<f64>>,
}

impl BlockOperator {
    pub fn apply(&self, x: &SectorPair) -> SectorPair {
        let zero = |like: &SplitMatrix, rows: usize| SplitMatrix {
            re: DMatrix::zeros(rows, like.re.ncols()),
            im: DMatrix::zeros(rows, like.re.ncols()),
        };
        let mut even = zero(&x.even, x.even.re.nrows());
        let mut odd = zero(&x.odd, x.odd.re.nrows());
        if let Some(m) = &self.ee {
            even.add(&x.even.left_mul(m));
        }
        if let Some(m) = &self.eo {
            even.add(&x.odd.left_mul(m));
        }
        if let Some(m) = &self.oo {
            odd.add(&x.odd.left_mul(m));
        }
        if let Some(m) = &self.oe {
            odd.add(&x.even.left_mul(m));
        }
        SectorPair { even, odd }
    }
}

#[derive(Clone, Debug)]
pub struct MirrorSpectrum {
    dim: usize,
    /// Number of mirror pairs `(i, d−1−i)`, `i < d−1−i`.
    pairs: usize,
    pub even: Sector,
    pub odd: Sector,
    /// Largest `|VᵀV − 1|` over both sectors.
    pub orthogonality_defect: f64,
}

/// Eigenpairs with indices in `range` (ascending energy).
fn solve_sector(diag: &[f64], off: &[f64], seed: u64, range: std::ops::Range<usize>) -> Sector {
    let n = diag.len();
    if n == 0 || range.is_empty() {
        return Sector {
            energies: Vec::new(),
            vectors: DMatrix::zeros(n, 0),
        };
    }
    let (lo, hi) = gershgorin(diag, off);
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let energies: Vec<f64> = range
        .into_par_iter()
        .map(|k| kth_eigenvalue_in(diag, off, k, lo, hi))
        .collect();
    let mut columns: Vec<Vec<f64>> = energies
        .par_iter()
        .enumerate()
        .map(|(k, &e)| {
            let mut v: Vec<f64> = (0..n)
                .map(|i| {
                    let x = (i as u64 + 1)
                        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                        .wrapping_add(seed ^ k as u64);
                    ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
                })
                .collect();
            for _ in 0..3 {
                v = shifted_solve(diag, off, e, &v);
                let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x /= nv);
            }
            v
        })
        .collect();
    // Reorthogonalize inside clusters that inverse iteration may not
    // resolve.
    let cluster = 1e-10 * scale;
    let m = energies.len();
    let mut start = 0;
    for k in 1..=m {
        if k == m || energies[k] - energies[k - 1] > cluster {
            for a in start..k {
                for b in start..a {
                    let c: f64 = columns[a].iter().zip(&columns[b]).map(|(x, y)| x * y).sum();
                    let (head, tail) = columns.split_at_mut(a);
                    tail[0]
                        .iter_mut()
                        .zip(&head[b])
                        .for_each(|(x, y)| *x -= c * y);
                }
                let nv = columns[a].iter().map(|x| x * x).sum::<f64>().sqrt();
                columns[a].iter_mut().for_each(|x| *x /= nv);
            }
            start = k;
        }
    }
    debug_assert_eq!(sturm_count(diag, off, hi + 1.0), n);
    Sector {
        energies,
        vectors: DMatrix::from_fn(n, m, |i, k| columns[k][i]),
    }
}

fn defect(v: &DMatrix<f64>) -> f64 {
    let g = v.transpose() * v;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - want).abs());
        }
    }
    worst
}

impl MirrorSpectrum {
    /// Fails unless `h` is real, tridiagonal and mirror symmetric.
    pub fn new(h: &SparseOperator) -> Result<Self> {
        Self::build(h, None)
    }

    /// Only the eigenpairs with energy in `[lo, hi]`. Evolution is exact for
    /// states supported there, see [`MirrorSpectrum::missing_weight`].
    pub fn windowed(h: &SparseOperator, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidParameter(format!(
                "empty energy window [{lo}, {hi}]"
            )));
        }
        Self::build(h, Some((lo, hi)))
    }

    /// A window, grown in steps of 1.5 from `⟨H⟩ ± 6σ` of each state, whose
    /// outer quarter on either side holds at most a weight `missing` of every
    /// state. The overlaps decay fast in energy, so that edge weight bounds
    /// what lies outside.
    pub fn covering(h: &SparseOperator, states: &[Vector], missing: f64) -> Result<Self> {
        if states.is_empty() || !(missing > 0.0) {
            return Err(Error::InvalidParameter(
                "covering window needs states and a positive tolerance".into(),
            ));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut width = 0.0f64;
        for s in states {
            let hs = h.apply_vec(s);
            let norm = super::linalg::dot(s, s).re;
            let mean = super::linalg::dot(s, &hs).re / norm;
            let var = (super::linalg::dot(&hs, &hs).re / norm - mean * mean).max(0.0);
            lo = lo.min(mean);
            hi = hi.max(mean);
            width = width.max(var.sqrt());
        }
        let mut pad = 6.0 * width.max(1e-8 * h.max_abs().max(1.0));
        loop {
            let s = Self::windowed(h, lo - pad, hi + pad)?;
            if s.is_complete() {
                return Ok(s);
            }
            let x = s.to_eigen(states)?;
            let (inner_lo, inner_hi) = (lo - 0.75 * pad, hi + 0.75 * pad);
            let edge = |e: f64| e < inner_lo || e > inner_hi;
            let fits = states.iter().enumerate().all(|(k, st)| {
                let mut w = 0.0;
                for (sector, m) in [(&s.even, &x.even), (&s.odd, &x.odd)] {
                    for (j, &e) in sector.energies.iter().enumerate() {
                        if edge(e) {
                            w += m.re[(j, k)].powi(2) + m.im[(j, k)].powi(2);
                        }
                    }
                }
                w <= missing * super::linalg::dot(st, st).re
            });
            if fits {
                return Ok(s);
            }
            pad *= 1.5;
        }
    }

    fn build(h: &SparseOperator, window: Option<(f64, f64)>) -> Result<Self> {
        let (diag, off) = h.as_real_tridiagonal().ok_or_else(|| {
            Error::InvalidParameter(
                "spectral decomposition needs a real tridiagonal operator".into(),
            )
        })?;
        let d = diag.len();
        let tol = 1e-12 * h.max_abs().max(1.0);
        let mirrored = (0..d).all(|i| (diag[i] - diag[d - 1 - i]).abs() <= tol)
            && (0..d.saturating_sub(1)).all(|i| (off[i] - off[d - 2 - i]).abs() <= tol);
        if !mirrored {
            return Err(Error::InvalidParameter(
                "operator does not commute with the index reversal".into(),
            ));
        }
        let pairs = d / 2;
        let middle = d % 2 == 1;
        let s2 = std::f64::consts::SQRT_2;
        let mut de: Vec<f64> = diag[..pairs].to_vec();
        let mut oe: Vec<f64> = off[..pairs.saturating_sub(1)].to_vec();
        let mut dodd = de.clone();
        let oodd = oe.clone();
        if middle {
            if pairs > 0 {
                oe.push(s2 * off[pairs - 1]);
            }
            de.push(diag[pairs]);
        } else if pairs > 0 {
            de[pairs - 1] += off[pairs - 1];
            dodd[pairs - 1] -= off[pairs - 1];
        }
        let range = |d: &[f64], o: &[f64]| match window {
            Some((lo, hi)) => sturm_count(d, o, lo)..sturm_count(d, o, hi),
            None => 0..d.len(),
        };
        let even = solve_sector(&de, &oe, 11, range(&de, &oe));
        let odd = solve_sector(&dodd, &oodd, 13, range(&dodd, &oodd));
        let orthogonality_defect = defect(&even.vectors).max(defect(&odd.vectors));
        Ok(Self {
            dim: d,
            pairs,
            even,
            odd,
            orthogonality_defect,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of eigenpairs kept.
    pub fn len(&self) -> usize {
        self.even.energies.len() + self.odd.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complete(&self) -> bool {
        self.len() == self.dim
    }

    /// `1 − ‖Pψ‖²/‖ψ‖²` for each state, `P` the projector on the kept
    /// eigenvectors.
    pub fn missing_weight(&self, states: &[Vector]) -> Result<Vec<f64>> {
        let x = self.to_eigen(states)?;
        Ok(x.column_norms_sq()
            .iter()
            .zip(states)
            .map(|(p, s)| 1.0 - p / super::linalg::dot(s, s).re)
            .collect())
    }

    fn to_half(&self, psi: &[Complex64]) -> (Vector, Vector) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let d = self.dim;
        let mut e: Vector = (0..self.pairs)
            .map(|i| (psi[i] + psi[d - 1 - i]) * s)
            .collect();
        if d % 2 == 1 {
            e.push(psi[self.pairs]);
        }
        let o = (0..self.pairs)
            .map(|i| (psi[i] - psi[d - 1 - i]) * s)
            .collect();
        (e, o)
    }

    fn from_half(&self, e: &[Complex64], o: &[Complex64]) -> Vector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let d = self.dim;
        let mut psi = vec![Complex64::new(0.0, 0.0); d];
        for i in 0..self.pairs {
            psi[i] = (e[i] + o[i]) * s;
            psi[d - 1 - i] = (e[i] - o[i]) * s;
        }
        if d % 2 == 1 {
            psi[self.pairs] = e[self.pairs];
        }
        psi
    }

    fn split(half: &[Vector], rows: usize) -> SplitMatrix {
        SplitMatrix {
            re: DMatrix::from_fn(rows, half.len(), |i, k| half[k][i].re),
            im: DMatrix::from_fn(rows, half.len(), |i, k| half[k][i].im),
        }
    }

    /// Eigen coordinates of every state, one column each.
    pub fn to_eigen(&self, states: &[Vector]) -> Result<SectorPair> {
        if let Some(bad) = states.iter().find(|s| s.len() != self.dim) {
            return Err(Error::InvalidParameter(format!(
                "state of length {} in a {}-dimensional space",
                bad.len(),
                self.dim
            )));
        }
        let (e, o): (Vec<Vector>, Vec<Vector>) = states.iter().map(|s| self.to_half(s)).unzip();
        let ve = &self.even.vectors;
        let vo = &self.odd.vectors;
        let e = Self::split(&e, ve.nrows());
        let o = Self::split(&o, vo.nrows());
        Ok(SectorPair {
            even: e.left_mul(&ve.transpose()),
            odd: o.left_mul(&vo.transpose()),
        })
    }

    pub fn from_eigen(&self, x: &SectorPair) -> Vec<Vector> {
        let e = x.even.left_mul(&self.even.vectors);
        let o = x.odd.left_mul(&self.odd.vectors);
        (0..e.re.ncols())
            .map(|k| {
                let ce: Vector = (0..e.re.nrows())
                    .map(|i| Complex64::new(e.re[(i, k)], e.im[(i, k)]))
                    .collect();
                let co: Vector = (0..o.re.nrows())
                    .map(|i| Complex64::new(o.re[(i, k)], o.im[(i, k)]))
                    .collect();
                self.from_half(&ce, &co)
            })
            .collect()
    }

    /// Applies `e^{−iHt}` in eigen coordinates.
    pub fn rotate(&self, x: &mut SectorPair, t: f64) {
        x.even.rotate(&self.even.energies, t);
        x.odd.rotate(&self.odd.energies, t);
    }

    /// `e^{−iHt} ψ` for each state.
    pub fn evolve(&self, states: &[Vector], t: f64) -> Result<Vec<Vector>> {
        let mut x = self.to_eigen(states)?;
        self.rotate(&mut x, t);
        Ok(self.from_eigen(&x))
    }

    /// The diagonal Fock operator `diag(a)` in eigen coordinates.
    pub fn diagonal_operator(&self, a: &[f64]) -> Result<BlockOperator> {
        if a.len() != self.dim {
            return Err(Error::InvalidParameter(
                "diagonal operator has the wrong length".into(),
            ));
        }
        let d = self.dim;
        let sym: Vec<f64> = (0..self.pairs)
            .map(|i| 0.5 * (a[i] + a[d - 1 - i]))
            .collect();
        let anti: Vec<f64> = (0..self.pairs)
            .map(|i| 0.5 * (a[i] - a[d - 1 - i]))
            .collect();
        let scale = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let negligible = |v: &[f64]| v.iter().all(|x| x.abs() <= 1e-15 * scale);
        let ve = &self.even.vectors;
        let vo = &self.odd.vectors;
        let sandwich = |left: &DMatrix<f64>, w: &[f64], right: &DMatrix<f64>| {
            // leftᵀ · diag(w) · right, with w padded by zeros.
            let mut scaled = right.clone();
            for i in 0..scaled.nrows() {
                let f = w.get(i).copied().unwrap_or(0.0);
                scaled.row_mut(i).iter_mut().for_each(|x| *x *= f);
            }
            left.transpose() * scaled
        };
        let mut even_diag = sym.clone();
        if d % 2 == 1 {
            even_diag.push(a[self.pairs]);
        }
        let ee = (!negligible(&even_diag)).then(|| sandwich(ve, &even_diag, ve));
        let oo = (!negligible(&sym)).then(|| sandwich(vo, &sym, vo));
        let eo = (!negligible(&anti)).then(|| {
            // Rows of the even half basis beyond the pairs (the middle) see
            // no odd partner.
            let mut padded = DMatrix::zeros(ve.nrows(), vo.ncols());
            padded.rows_mut(0, self.pairs).copy_from(&DMatrix::from_fn(
                self.pairs,
                vo.ncols(),
                |i, k| anti[i] * vo[(i, k)],
            ));
            ve.transpose() * padded
        });
        let oe = eo.as_ref().map(|m| m.transpose());
        Ok(BlockOperator { ee, oo, eo, oe })
    }

    /// `Σ_k w_k ‖[e^{iHt}Ae^{−iHt}, B] ψ_k‖²` for every `t`, with `A`, `B`
    /// diagonal in the Fock basis.
    pub fn otoc(
        &self,
        a: &BlockOperator,
        b: &BlockOperator,
        x: &SectorPair,
        weights: &[f64],
        grid: &[f64],
    ) -> Vec<f64> {
        let y = b.apply(x);
        grid.par_iter()
            .map(|&t| {
                // ‖Ã D B̃ c − D B̃ D† Ã D c‖ with D = e^{−iEt}.
                let mut dy = y.clone();
                self.rotate(&mut dy, t);
                let p = a.apply(&dy);
                let mut dx = x.clone();
                self.rotate(&mut dx, t);
                let mut q = a.apply(&dx);
                self.rotate(&mut q, -t);
                let mut q = b.apply(&q);
                self.rotate(&mut q, t);
                p.sub(&q)
                    .column_norms_sq()
                    .iter()
                    .zip(weights)
                    .map(|(n, w)| n * w)
                    .sum()
            })
            .collect()
    }
}
