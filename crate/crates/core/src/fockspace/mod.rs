//! Bosonic occupation-number bases for `L` sites and `N` particles, and the
//! sparse operators built on them.
//!
//! States are ordered lexicographically descending in the occupations, so for
//! a dimer with three particles the order is `(3,0), (2,1), (1,2), (0,3)`.
//! The rank of a state is computed combinatorially; no lookup table is kept.

mod expr;
mod prequench;

pub use expr::{operator_polynomial, OperatorExpr};
pub use prequench::{
    prequench_eigenbasis, prequench_eigenbasis_with, PrequenchBasis, PrequenchConfig,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

/// Default cap on the number of basis states.
pub const DEFAULT_DIMENSION_CAP: usize = 2_000_000;

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of ways to put `particles` bosons on `sites` sites.
pub fn fock_dimension(sites: usize, particles: u32) -> u128 {
    binomial(particles as u128 + sites as u128 - 1, sites as u128 - 1)
}

#[derive(Clone, Debug)]
pub struct FockBasis {
    sites: usize,
    particles: u32,
    /// Flat `dim × sites` occupation table.
    occupations: Vec<u32>,
}

impl FockBasis {
    pub fn new(sites: usize, particles: u32) -> Result<Self> {
        Self::with_cap(sites, particles, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(sites: usize, particles: u32, cap: usize) -> Result<Self> {
        if sites < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least two sites, got {sites}"
            )));
        }
        if particles < 1 {
            return Err(Error::InvalidParameter("need at least one particle".into()));
        }
        let dim = fock_dimension(sites, particles);
        if dim > cap as u128 {
            return Err(Error::DimensionCap { dim, cap });
        }
        let mut occupations = Vec::with_capacity(dim as usize * sites);
        let mut current = vec![0u32; sites];
        enumerate(&mut current, 0, particles, &mut occupations);
        debug_assert_eq!(occupations.len(), dim as usize * sites);
        Ok(Self {
            sites,
            particles,
            occupations,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> u32 {
        self.particles
    }

    /// `Ñ = N + 1`; the effective Planck constant is `1/Ñ`.
    pub fn n_tilde(&self) -> f64 {
        self.particles as f64 + 1.0
    }

    pub fn dim(&self) -> usize {
        self.occupations.len() / self.sites
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.occupations[i * self.sites..(i + 1) * self.sites]
    }

    pub fn states(&self) -> impl Iterator<Item = &[u32]> {
        self.occupations.chunks_exact(self.sites)
    }

    /// Dense index of an occupation vector, `None` if it does not belong to
    /// this basis.
    pub fn index(&self, occ: &[u32]) -> Option<usize> {
        if occ.len() != self.sites
            || occ.iter().map(|&n| n as u64).sum::<u64>() != self.particles as u64
        {
            return None;
        }
        let mut rem = self.particles as u128;
        let mut idx = 0u128;
        for (j, &n) in occ[..self.sites - 1].iter().enumerate() {
            let n = n as u128;
            // States sharing the prefix but with a larger occupation here.
            let free = (self.sites - j - 1) as u128;
            idx += binomial(rem - n + free - 1, free);
            rem -= n;
        }
        Some(idx as usize)
    }

    /// Diagnostic dump: `index, n_1, …, n_L`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index");
        for j in 1..=self.sites {
            out.push_str(&format!(", n{j}"));
        }
        out.push('\n');
        for (i, s) in self.states().enumerate() {
            out.push_str(&i.to_string());
            for n in s {
                out.push_str(&format!(", {n}"));
            }
            out.push('\n');
        }
        out
    }

    fn check_site(&self, site: usize) -> Result<usize> {
        if site == 0 || site > self.sites {
            return Err(Error::SiteOutOfRange {
                site,
                sites: self.sites,
            });
        }
        Ok(site - 1)
    }

    fn bonds(&self, periodic: bool) -> Vec<(usize, usize)> {
        if self.sites == 2 {
            return vec![(0, 1)];
        }
        let mut bonds: Vec<_> = (0..self.sites - 1).map(|j| (j, j + 1)).collect();
        if periodic {
            bonds.push((self.sites - 1, 0));
        }
        bonds
    }
}

fn enumerate(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<u32>) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.extend_from_slice(current);
        return;
    }
    for n in (0..=remaining).rev() {
        current[pos] = n;
        enumerate(current, pos + 1, remaining - n, out);
    }
}

/// Bose-Hubbard Hamiltonian
/// `−J Σ_bonds (a†_i a_j + h.c.) + (U/2) Σ_j a†_j a†_j a_j a_j`.
/// For two sites there is a single bond and `periodic` is ignored.
pub fn build_hamiltonian(basis: &FockBasis, j: f64, u: f64, periodic: bool) -> SparseOperator {
    let dim = basis.dim();
    let bonds = basis.bonds(periodic);
    let mut trip = Vec::with_capacity(dim * (1 + 2 * bonds.len()));
    let mut target = vec![0u32; basis.sites()];
    for (i, occ) in basis.states().enumerate() {
        let interaction: f64 = occ
            .iter()
            .map(|&n| {
                let n = n as f64;
                n * (n - 1.0)
            })
            .sum::<f64>()
            * 0.5
            * u;
        trip.push((i, i, Complex64::new(interaction, 0.0)));
        for &(a, b) in &bonds {
            // a†_a a_b and its conjugate a†_b a_a.
            for (to, from) in [(a, b), (b, a)] {
                if occ[from] == 0 {
                    continue;
                }
                target.copy_from_slice(occ);
                target[from] -= 1;
                target[to] += 1;
                let amp = -j * ((occ[from] as f64) * (occ[to] as f64 + 1.0)).sqrt();
                let k = basis.index(&target).expect("hop stays inside the basis");
                trip.push((k, i, Complex64::new(amp, 0.0)));
            }
        }
    }
    SparseOperator::from_triplets(dim, trip, true, 0.0)
}

/// Dimer imbalance `ẑ = (n̂_1 − n̂_2)/(2Ñ)` with `Ñ = N + 1`.
pub fn z_operator(basis: &FockBasis) -> Result<SparseOperator> {
    if basis.sites() != 2 {
        return Err(Error::UnsupportedGeometry(format!(
            "ẑ is defined for the dimer only, basis has {} sites",
            basis.sites()
        )));
    }
    let scale = 1.0 / (2.0 * basis.n_tilde());
    let diag: Vec<f64> = basis
        .states()
        .map(|s| (s[0] as f64 - s[1] as f64) * scale)
        .collect();
    Ok(SparseOperator::from_diagonal(&diag))
}

/// `n̂_j` (1-based site), or `n̂_j/N` when `scaled`.
pub fn site_number_operator(
    basis: &FockBasis,
    site: usize,
    scaled: bool,
) -> Result<SparseOperator> {
    let j = basis.check_site(site)?;
    let scale = if scaled {
        1.0 / basis.particles() as f64
    } else {
        1.0
    };
    let diag: Vec<f64> = basis.states().map(|s| s[j] as f64 * scale).collect();
    Ok(SparseOperator::from_diagonal(&diag))
}

/// One-body operator `Σ_ij M_ij a†_i a_j` for a site-space matrix `M`
/// given row-major (`M[i*L + j]`).
pub fn one_body_operator(basis: &FockBasis, m: &[Complex64]) -> Result<SparseOperator> {
    let l = basis.sites();
    if m.len() != l * l {
        return Err(Error::InvalidParameter(format!(
            "one-body matrix has {} entries, expected {}",
            m.len(),
            l * l
        )));
    }
    let hermitian =
        (0..l).all(|i| (0..l).all(|j| (m[i * l + j] - m[j * l + i].conj()).norm() == 0.0));
    let mut trip = Vec::new();
    let mut target = vec![0u32; l];
    for (col, occ) in basis.states().enumerate() {
        for i in 0..l {
            for j in 0..l {
                let mij = m[i * l + j];
                if mij == Complex64::new(0.0, 0.0) || occ[j] == 0 {
                    continue;
                }
                let amp = if i == j {
                    occ[j] as f64
                } else {
                    ((occ[j] as f64) * (occ[i] as f64 + 1.0)).sqrt()
                };
                target.copy_from_slice(occ);
                target[j] -= 1;
                target[i] += 1;
                let row = basis
                    .index(&target)
                    .expect("one-body move stays inside the basis");
                trip.push((row, col, mij * amp));
            }
        }
    }
    Ok(SparseOperator::from_triplets(
        basis.dim(),
        trip,
        hermitian,
        0.0,
    ))
}

/// Cyclic site shift `T: (n_1, …, n_L) ↦ (n_L, n_1, …, n_{L−1})`.
pub fn cyclic_shift_operator(basis: &FockBasis) -> SparseOperator {
    let l = basis.sites();
    let mut target = vec![0u32; l];
    let trip = basis
        .states()
        .enumerate()
        .map(|(i, occ)| {
            for j in 0..l {
                target[(j + 1) % l] = occ[j];
            }
            (basis.index(&target).unwrap(), i, Complex64::new(1.0, 0.0))
        })
        .collect();
    SparseOperator::from_triplets(basis.dim(), trip, false, 0.0)
}

/// Projector weights for plane-wave modes on a ring: returns the one-body
/// matrix `|k⟩⟨k|` with `⟨j|k⟩ = e^{ikj}/√L`.
pub fn momentum_projector(sites: usize, k: f64) -> Vec<Complex64> {
    let l = sites;
    let mut m = vec![Complex64::new(0.0, 0.0); l * l];
    for i in 0..l {
        for j in 0..l {
            m[i * l + j] = Complex64::from_polar(1.0 / l as f64, k * (i as f64 - j as f64));
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn spectrum(h: &SparseOperator) -> Vec<f64> {
        let dense = h.to_dense();
        let real = DMatrix::from_fn(dense.nrows(), dense.ncols(), |i, j| dense[(i, j)].re);
        let mut ev: Vec<f64> = real.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn dimer_three_particles_order() {
        let b = FockBasis::new(2, 3).unwrap();
        let states: Vec<Vec<u32>> = b.states().map(|s| s.to_vec()).collect();
        assert_eq!(states, vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]);
    }

    #[test]
    fn dimensions() {
        assert_eq!(FockBasis::new(3, 300).unwrap().dim(), 45451);
        assert_eq!(fock_dimension(2, 100_000), 100_001);
        assert_eq!(fock_dimension(3, 300), 302 * 301 / 2);
    }

    #[test]
    fn dimension_cap_is_reported() {
        match FockBasis::with_cap(3, 300, 1000) {
            Err(Error::DimensionCap { dim, cap }) => {
                assert_eq!(dim, 45451);
                assert_eq!(cap, 1000);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(FockBasis::new(1, 3).is_err());
        assert!(FockBasis::new(2, 0).is_err());
    }

    #[test]
    fn index_round_trip_and_conservation() {
        for (l, n) in [(2, 7), (3, 9), (4, 5)] {
            let b = FockBasis::new(l, n).unwrap();
            assert_eq!(b.dim() as u128, fock_dimension(l, n));
            for (i, s) in b.states().enumerate() {
                assert_eq!(s.iter().sum::<u32>(), n);
                assert_eq!(b.index(s), Some(i));
            }
        }
    }

    #[test]
    fn small_spectra() {
        let b1 = FockBasis::new(2, 1).unwrap();
        let ev = spectrum(&build_hamiltonian(&b1, 1.0, 3.7, false));
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);

        let b2 = FockBasis::new(2, 2).unwrap();
        let ev = spectrum(&build_hamiltonian(&b2, 1.0, 0.0, false));
        for (e, want) in ev.iter().zip([-2.0, 0.0, 2.0]) {
            assert!((e - want).abs() < 1e-13, "{ev:?}");
        }
    }

    #[test]
    fn trimer_ground_energy_matches_independent_dense_build() {
        // Oracle: assemble the 10×10 matrix directly from ladder-operator
        // matrices on the truncated single-site spaces (dimension 4^3) and
        // diagonalize the N=3 block.
        let n = 3usize;
        let d = n + 1;
        let a = DMatrix::from_fn(
            d,
            d,
            |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 },
        );
        let id = DMatrix::<f64>::identity(d, d);
        let kron3 =
            |x: &DMatrix<f64>, y: &DMatrix<f64>, z: &DMatrix<f64>| x.kronecker(y).kronecker(z);
        let ops = [
            kron3(&a, &id, &id),
            kron3(&id, &a, &id),
            kron3(&id, &id, &a),
        ];
        let mut h = DMatrix::<f64>::zeros(d * d * d, d * d * d);
        for j in 0..3 {
            let k = (j + 1) % 3;
            h -= ops[j].transpose() * &ops[k] + ops[k].transpose() * &ops[j];
            let ad = ops[j].transpose();
            h += (&ad * &ad * &ops[j] * &ops[j]) * (-0.5);
        }
        // Restrict to total particle number 3.
        let keep: Vec<usize> = (0..d * d * d)
            .filter(|&idx| idx / (d * d) + (idx / d) % d + idx % d == n)
            .collect();
        let block = DMatrix::from_fn(keep.len(), keep.len(), |i, j| h[(keep[i], keep[j])]);
        let oracle = block.symmetric_eigenvalues().min();

        let b = FockBasis::new(3, 3).unwrap();
        let ev = spectrum(&build_hamiltonian(&b, 1.0, -1.0, true));
        assert_eq!(b.dim(), 10);
        assert!((ev[0] - oracle).abs() < 1e-12, "{} vs {oracle}", ev[0]);
    }

    #[test]
    fn hamiltonian_structure() {
        let b = FockBasis::new(2, 40).unwrap();
        let h = build_hamiltonian(&b, 1.0, -0.3, true);
        assert_eq!(h.hermiticity_defect(), 0.0);
        assert_eq!(h.bandwidth(), 1);

        let b3 = FockBasis::new(3, 8).unwrap();
        let h3 = build_hamiltonian(&b3, 1.0, -0.7, true);
        assert_eq!(h3.hermiticity_defect(), 0.0);
        let mut ntot = site_number_operator(&b3, 1, false).unwrap();
        for j in 2..=3 {
            ntot = ntot.linear_combination(
                Complex64::new(1.0, 0.0),
                &site_number_operator(&b3, j, false).unwrap(),
                Complex64::new(1.0, 0.0),
            );
        }
        assert_eq!(h3.commutator(&ntot).max_abs(), 0.0);
        assert!(ntot.diagonal_values().unwrap().iter().all(|&v| v == 8.0));

        let shift = cyclic_shift_operator(&b3);
        assert!(h3.commutator(&shift).max_abs() < 1e-13);
    }

    #[test]
    fn z_and_site_operators() {
        let n = 6u32;
        let b = FockBasis::new(2, n).unwrap();
        let z = z_operator(&b).unwrap();
        let d = z.diagonal_values().unwrap();
        assert_eq!(d[0], n as f64 / (2.0 * (n as f64 + 1.0)));
        for (k, s) in b.states().enumerate() {
            let want = (2.0 * s[0] as f64 - n as f64) / (2.0 * (n as f64 + 1.0));
            assert_eq!(d[k], want);
        }
        let mut sorted = d.clone();
        sorted.sort_by(f64::total_cmp);
        for (x, y) in sorted.iter().zip(sorted.iter().rev()) {
            assert_eq!(*x, -*y);
        }
        assert!(z_operator(&FockBasis::new(3, 2).unwrap()).is_err());

        let b3 = FockBasis::new(2, 3).unwrap();
        let n1 = site_number_operator(&b3, 1, false).unwrap();
        assert_eq!(n1.entry(0, 0).re, 3.0);
        let n2 = site_number_operator(&b3, 2, true).unwrap();
        let i = b3.index(&[1, 2]).unwrap();
        assert!((n2.entry(i, i).re - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            site_number_operator(&b3, 3, false),
            Err(Error::SiteOutOfRange { site: 3, sites: 2 })
        ));
    }

    #[test]
    fn momentum_occupations_commute_with_free_hamiltonian() {
        let b = FockBasis::new(3, 5).unwrap();
        let h0 = build_hamiltonian(&b, 1.0, 0.0, true);
        let k = 2.0 * std::f64::consts::PI / 3.0;
        let nplus = one_body_operator(&b, &momentum_projector(3, k)).unwrap();
        assert!(nplus.is_hermitian());
        assert!(h0.commutator(&nplus).max_abs() < 1e-12);
    }
}
