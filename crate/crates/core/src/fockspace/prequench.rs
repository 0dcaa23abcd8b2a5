//! Low-lying eigenstates of the non-interacting (`U = 0`) Hamiltonian with
//! deterministic labels.
//!
//! Degenerate multiplets are resolved by an infinitesimal interaction: the
//! on-site term is projected into each multiplet and diagonalized. Whatever
//! degeneracy survives (on the three-site ring the modes `±2π/3` stay
//! paired) is lifted by the chirality `n̂_+ − n̂_−`, and after that by
//! `⟨n̂_1⟩`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::propagator::{linalg, lowest_eigenpairs_with, EigenConfig, Vector};
use crate::sparse::SparseOperator;

use super::{
    build_hamiltonian, momentum_projector, one_body_operator, site_number_operator, z_operator,
    FockBasis,
};

#[derive(Clone, Debug)]
pub struct PrequenchConfig {
    pub j: f64,
    /// Energies closer than `degeneracy_epsilon·|J|` form one multiplet.
    pub degeneracy_epsilon: f64,
    pub eigen: EigenConfig,
}

impl Default for PrequenchConfig {
    fn default() -> Self {
        Self {
            j: 1.0,
            degeneracy_epsilon: 1e-6,
            eigen: EigenConfig {
                relative_tolerance: 1e-11,
                ..EigenConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct PrequenchBasis {
    pub energies: Vec<f64>,
    pub states: Vec<Vector>,
    /// `[k]` for the dimer, `[k₁, k₂]` (occupations of the `+2π/3` and
    /// `−2π/3` modes) for the trimer, `[index]` otherwise.
    pub labels: Vec<Vec<u32>>,
    /// Multiplet index of every state.
    pub multiplet: Vec<usize>,
}

impl PrequenchBasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Position of the state carrying `label`.
    pub fn find(&self, label: &[u32]) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// The `m` lowest eigenstates of the `U = 0` Hamiltonian with hopping `j`.
pub fn prequench_eigenbasis(
    basis: &FockBasis,
    j: f64,
    m: usize,
    degeneracy_epsilon: f64,
) -> Result<PrequenchBasis> {
    let cfg = PrequenchConfig {
        j,
        degeneracy_epsilon,
        ..PrequenchConfig::default()
    };
    prequench_eigenbasis_with(basis, m, &cfg)
}

pub fn prequench_eigenbasis_with(
    basis: &FockBasis,
    m: usize,
    cfg: &PrequenchConfig,
) -> Result<PrequenchBasis> {
    if m == 0 || m > basis.dim() {
        return Err(Error::InvalidParameter(format!(
            "requested {m} prequench states from a {}-dimensional basis",
            basis.dim()
        )));
    }
    if !(cfg.degeneracy_epsilon > 0.0) {
        return Err(Error::InvalidParameter(
            "degeneracy_epsilon must be positive".into(),
        ));
    }
    let h0 = build_hamiltonian(basis, cfg.j, 0.0, true);
    let eps = cfg.degeneracy_epsilon * cfg.j.abs();

    // Grow the request until the m-th state closes its multiplet.
    let mut n = (m + 1).min(basis.dim());
    let pairs = loop {
        let p = lowest_eigenpairs_with(&h0, n, &cfg.eigen)?;
        let closed = n == basis.dim() || (p.energies[n - 1] - p.energies[m - 1]).abs() > eps;
        if closed {
            break p;
        }
        n = (n + basis.sites() + 1).min(basis.dim());
    };

    let interaction = build_hamiltonian(basis, 0.0, 1.0, true);
    let chirality = if basis.sites() >= 3 {
        let k = 2.0 * std::f64::consts::PI / basis.sites() as f64;
        let plus = momentum_projector(basis.sites(), k);
        let minus = momentum_projector(basis.sites(), -k);
        let diff: Vec<Complex64> = plus.iter().zip(&minus).map(|(a, b)| a - b).collect();
        Some(one_body_operator(basis, &diff)?)
    } else {
        None
    };
    let n1 = site_number_operator(basis, 1, false)?;

    let mut energies = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut multiplet = Vec::with_capacity(n);
    let mut start = 0;
    let mut group_id = 0;
    while start < pairs.energies.len() {
        let mut end = start + 1;
        while end < pairs.energies.len()
            && (pairs.energies[end] - pairs.energies[start]).abs() <= eps
        {
            end += 1;
        }
        let block: Vec<Vector> = pairs.states[start..end].to_vec();
        let resolved = resolve_multiplet(block, &interaction, chirality.as_ref(), &n1);
        let mean_e = pairs.energies[start..end].iter().sum::<f64>() / (end - start) as f64;
        for s in resolved {
            energies.push(mean_e);
            states.push(s);
            multiplet.push(group_id);
        }
        group_id += 1;
        start = end;
    }
    energies.truncate(m);
    states.truncate(m);
    multiplet.truncate(m);

    fix_phases(basis, &mut states)?;
    let labels = label_states(basis, &states)?;
    Ok(PrequenchBasis {
        energies,
        states,
        labels,
        multiplet,
    })
}

/// Matrix of `op` restricted to the span of `block`.
fn projected(op: &SparseOperator, block: &[Vector]) -> DMatrix<Complex64> {
    let images: Vec<Vector> = block.iter().map(|v| op.apply_vec(v)).collect();
    let g = block.len();
    let mut m = DMatrix::from_fn(g, g, |i, j| linalg::dot(&block[i], &images[j]));
    // Symmetrize away rounding so the Hermitian solver sees exact input.
    let mt = m.adjoint();
    m = (m + mt) * Complex64::new(0.5, 0.0);
    m
}

fn rotate(block: &[Vector], coeffs: &DMatrix<Complex64>, col: usize) -> Vector {
    let mut out = vec![Complex64::new(0.0, 0.0); block[0].len()];
    for (i, b) in block.iter().enumerate() {
        linalg::axpy(coeffs[(i, col)], b, &mut out);
    }
    out
}

/// Diagonalizes `op` inside the span of `block`; returns the rotated
/// vectors sorted by eigenvalue (ascending, or descending when `descending`)
/// together with the eigenvalues.
fn diagonalize_in(
    block: Vec<Vector>,
    op: &SparseOperator,
    descending: bool,
) -> (Vec<Vector>, Vec<f64>) {
    if block.len() == 1 {
        let v = op.sandwich(&block[0], &block[0]).re;
        return (block, vec![v]);
    }
    let m = projected(op, &block);
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..block.len()).collect();
    order.sort_by(|&a, &b| {
        let c = eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]);
        if descending {
            c.reverse()
        } else {
            c
        }
    });
    let vecs = order
        .iter()
        .map(|&c| rotate(&block, &eig.eigenvectors, c))
        .collect();
    let vals = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    (vecs, vals)
}

/// Splits a sorted list into runs of values within `tol`.
fn runs(values: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut s = 0;
    for i in 1..=values.len() {
        if i == values.len() || (values[i] - values[s]).abs() > tol {
            out.push((s, i));
            s = i;
        }
    }
    out
}

fn resolve_multiplet(
    block: Vec<Vector>,
    interaction: &SparseOperator,
    chirality: Option<&SparseOperator>,
    n1: &SparseOperator,
) -> Vec<Vector> {
    if block.len() == 1 {
        return block;
    }
    let (vecs, vals) = diagonalize_in(block, interaction, false);
    let scale = vals.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut out = Vec::with_capacity(vecs.len());
    for (s, e) in runs(&vals, 1e-9 * scale) {
        let sub = vecs[s..e].to_vec();
        if sub.len() == 1 {
            out.extend(sub);
            continue;
        }
        let (sub, chir) = match chirality {
            Some(c) => diagonalize_in(sub, c, true),
            None => {
                let l = sub.len();
                (sub, vec![0.0; l])
            }
        };
        for (cs, ce) in runs(&chir, 1e-9) {
            let tied = sub[cs..ce].to_vec();
            if tied.len() == 1 {
                out.extend(tied);
            } else {
                out.extend(diagonalize_in(tied, n1, false).0);
            }
        }
    }
    out
}

/// Dimer: real vectors with a positive ground-state sum and
/// `⟨k|ẑ|k−1⟩ > 0`. Otherwise the largest component is made real positive.
fn fix_phases(basis: &FockBasis, states: &mut [Vector]) -> Result<()> {
    for s in states.iter_mut() {
        let (imax, _) = s
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        let ph = s[imax].conj() / s[imax].norm();
        s.iter_mut().for_each(|c| *c *= ph);
    }
    if basis.sites() == 2 {
        let sum: f64 = states[0].iter().map(|c| c.re).sum();
        if sum < 0.0 {
            states[0].iter_mut().for_each(|c| *c = -*c);
        }
        let z = z_operator(basis)?;
        for k in 1..states.len() {
            if z.sandwich(&states[k], &states[k - 1]).re < 0.0 {
                states[k].iter_mut().for_each(|c| *c = -*c);
            }
        }
    }
    Ok(())
}

fn label_states(basis: &FockBasis, states: &[Vector]) -> Result<Vec<Vec<u32>>> {
    match basis.sites() {
        2 => Ok((0..states.len() as u32).map(|k| vec![k]).collect()),
        3 => {
            let k = 2.0 * std::f64::consts::PI / 3.0;
            let plus = one_body_operator(basis, &momentum_projector(3, k))?;
            let minus = one_body_operator(basis, &momentum_projector(3, -k))?;
            Ok(states
                .iter()
                .map(|s| {
                    let a = plus.sandwich(s, s).re.round().max(0.0) as u32;
                    let b = minus.sandwich(s, s).re.round().max(0.0) as u32;
                    vec![a, b]
                })
                .collect())
        }
        _ => Ok((0..states.len() as u32).map(|k| vec![k]).collect()),
    }
}
