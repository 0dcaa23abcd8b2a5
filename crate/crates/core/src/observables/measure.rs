use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propagator::{propagate, KrylovConfig, MirrorSpectrum, Vector};
use crate::sparse::SparseOperator;

use super::{ThermalEnsemble, TimeSeries};

/// Orders above this lose all digits to cancellation in double precision.
pub const MAX_CUMULANT_ORDER: usize = 12;

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty()
        || grid[0] < 0.0
        || grid.iter().any(|t| !t.is_finite())
        || grid.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(Error::InvalidParameter(
            "time grid must be finite, nonnegative and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// How states are carried to later times.
#[derive(Clone, Copy, Debug)]
pub enum Evolution<'a> {
    /// Adaptive Krylov steps under `h`.
    Krylov {
        h: &'a SparseOperator,
        cfg: &'a KrylovConfig,
    },
    /// Exact phases in the eigenbasis of a mirror-symmetric tridiagonal `H`.
    /// A windowed spectrum evolves the projection of each vector.
    Spectral(&'a MirrorSpectrum),
}

impl Evolution<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Evolution::Krylov { h, .. } => h.dim(),
            Evolution::Spectral(s) => s.dim(),
        }
    }
}

/// Propagates all `vectors` in lockstep along the grid and hands every
/// snapshot (plus the accumulated error estimates) to `visit`.
fn evolve_together<F>(
    evo: &Evolution,
    vectors: Vec<Vector>,
    grid: &[f64],
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &[Vector], f64) -> Result<()>,
{
    check_grid(grid)?;
    if let Some(bad) = vectors.iter().find(|v| v.len() != evo.dim()) {
        return Err(Error::InvalidParameter(format!(
            "vector of length {} for a {}-dimensional evolution",
            bad.len(),
            evo.dim()
        )));
    }
    match *evo {
        Evolution::Krylov { h, cfg } => {
            cfg.validate()?;
            let mut states: Vec<(Vector, f64)> = vectors.into_iter().map(|v| (v, 0.0)).collect();
            let mut t = 0.0;
            for (i, &target) in grid.iter().enumerate() {
                let dt = target - t;
                if dt > 0.0 {
                    states = states
                        .into_par_iter()
                        .map(|(v, err)| {
                            let (w, stats) = propagate(h, &v, dt, cfg)?;
                            Ok((w, err + stats.error_estimate))
                        })
                        .collect::<Result<Vec<_>>>()?;
                }
                t = target;
                let vecs: Vec<Vector> = states.iter().map(|(v, _)| v.clone()).collect();
                let err = states.iter().map(|(_, e)| *e).fold(0.0, f64::max);
                visit(i, &vecs, err)?;
            }
        }
        Evolution::Spectral(s) => {
            let x = s.to_eigen(&vectors)?;
            // Rounding of the eigenbasis and the weight outside a window.
            let missing = s.missing_weight(&vectors)?.into_iter().fold(0.0, f64::max);
            let err = s
                .orthogonality_defect
                .max(missing.abs().sqrt())
                .max(f64::EPSILON);
            for (i, &t) in grid.iter().enumerate() {
                let mut xt = x.clone();
                s.rotate(&mut xt, t);
                visit(i, &s.from_eigen(&xt), err)?;
            }
        }
    }
    Ok(())
}

/// `⟨v_i(t)| A |v_j(t)⟩` for each requested pair, every vector propagated
/// once.
pub fn sandwich_scan(
    evo: &Evolution,
    a: &SparseOperator,
    vectors: Vec<Vector>,
    pairs: &[(usize, usize)],
    grid: &[f64],
) -> Result<Vec<TimeSeries>> {
    if let Some(&(i, j)) = pairs
        .iter()
        .find(|(i, j)| *i >= vectors.len() || *j >= vectors.len())
    {
        return Err(Error::InvalidParameter(format!(
            "pair ({i}, {j}) out of range"
        )));
    }
    let mut values = vec![Vec::with_capacity(grid.len()); pairs.len()];
    evolve_together(evo, vectors, grid, |_, vecs, _| {
        let images: Vec<Option<Vector>> = (0..vecs.len())
            .map(|j| {
                pairs
                    .iter()
                    .any(|p| p.1 == j)
                    .then(|| a.apply_vec(&vecs[j]))
            })
            .collect();
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let aj = images[j].as_ref().expect("image computed");
            values[p].push(crate::propagator::linalg::dot(&vecs[i], aj));
        }
        Ok(())
    })?;
    values
        .into_iter()
        .map(|v| TimeSeries::complex(grid.to_vec(), v))
        .collect()
}

/// `⟨k|Â(t)|l⟩` for `k` in `ks`, with states given by index into `states`.
pub fn matrix_element_scan(
    evo: &Evolution,
    a: &SparseOperator,
    states: &[Vector],
    ks: &[usize],
    l: usize,
    grid: &[f64],
) -> Result<Vec<TimeSeries>> {
    let mut used: Vec<usize> = ks.iter().copied().chain([l]).collect();
    used.sort_unstable();
    used.dedup();
    if let Some(&bad) = used.iter().find(|&&i| i >= states.len()) {
        return Err(Error::InvalidParameter(format!(
            "state index {bad} out of range"
        )));
    }
    let pos = |i: usize| used.iter().position(|&u| u == i).unwrap();
    let pairs: Vec<(usize, usize)> = ks.iter().map(|&k| (pos(k), pos(l))).collect();
    let vectors = used.iter().map(|&i| states[i].clone()).collect();
    sandwich_scan(evo, a, vectors, &pairs, grid)
}

/// Ensemble average `Σ_ψ w_ψ ⟨ψ(t)|Â|ψ(t)⟩` of a diagonal observable.
pub fn expectation_scan(
    evo: &Evolution,
    a_diag: &[f64],
    ensemble: &ThermalEnsemble,
    grid: &[f64],
) -> Result<TimeSeries> {
    if a_diag.len() != evo.dim() {
        return Err(Error::InvalidParameter(
            "observable and Hamiltonian dimensions differ".into(),
        ));
    }
    let mut out = Vec::with_capacity(grid.len());
    evolve_together(evo, ensemble.states.clone(), grid, |_, vecs, _| {
        let mut acc = Compensated::default();
        for (v, &w) in vecs.iter().zip(&ensemble.weights) {
            for (c, a) in v.iter().zip(a_diag) {
                acc.add(w * a * c.norm_sqr());
            }
        }
        out.push(acc.value());
        Ok(())
    })?;
    TimeSeries::real(grid.to_vec(), out)
}

/// `C(t) = −⟨[Â(t), B̂]²⟩ = Σ_ψ w_ψ ‖[Â(t), B̂]ψ‖²`.
///
/// With Krylov evolution, `ψ(t)` and `(B̂ψ)(t)` are checkpointed on the grid
/// by one forward sweep; at every grid point `Â` is applied and both
/// results are carried back to `t = 0` by a backward leg, giving `Â(t)B̂ψ`
/// and `Â(t)ψ`. The backward legs make the cost quadratic in the grid
/// length. The spectral path needs diagonal `Â`, `B̂` and batches the
/// ensemble into matrix products at every grid point.
pub fn otoc_numeric(
    evo: &Evolution,
    a: &SparseOperator,
    b: &SparseOperator,
    ensemble: &ThermalEnsemble,
    grid: &[f64],
) -> Result<TimeSeries> {
    a.require_hermitian(1e-12, "OTOC operator A")?;
    b.require_hermitian(1e-12, "OTOC operator B")?;
    check_grid(grid)?;
    let (h, cfg) = match *evo {
        Evolution::Krylov { h, cfg } => (h, cfg),
        Evolution::Spectral(s) => {
            if !s.is_complete() {
                return Err(Error::InvalidParameter(
                    "the spectral OTOC needs the complete spectrum".into(),
                ));
            }
            let (ad, bd) = match (a.diagonal_values(), b.diagonal_values()) {
                (Some(ad), Some(bd)) => (ad, bd),
                _ => {
                    return Err(Error::InvalidParameter(
                        "the spectral OTOC needs operators diagonal in the Fock basis".into(),
                    ))
                }
            };
            let x = s.to_eigen(&ensemble.states)?;
            let values = s.otoc(
                &s.diagonal_operator(&ad)?,
                &s.diagonal_operator(&bd)?,
                &x,
                &ensemble.weights,
                grid,
            );
            return TimeSeries::real(grid.to_vec(), values);
        }
    };
    let mut total = vec![0.0; grid.len()];
    for (psi, &w) in ensemble.states.iter().zip(&ensemble.weights) {
        let bpsi = b.apply_vec(psi);
        let mut snaps: Vec<(Vector, Vector)> = Vec::with_capacity(grid.len());
        evolve_together(evo, vec![psi.clone(), bpsi], grid, |_, v, _| {
            snaps.push((v[0].clone(), v[1].clone()));
            Ok(())
        })?;
        let contrib: Vec<f64> = snaps
            .par_iter()
            .zip(grid.par_iter())
            .map(|((p, bp), &t)| {
                let (abp, _) = propagate(h, &a.apply_vec(bp), -t, cfg)?;
                let (ap, _) = propagate(h, &a.apply_vec(p), -t, cfg)?;
                let bap = b.apply_vec(&ap);
                Ok(abp
                    .iter()
                    .zip(&bap)
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>())
            })
            .collect::<Result<_>>()?;
        for (acc, c) in total.iter_mut().zip(contrib) {
            *acc += w * c;
        }
    }
    TimeSeries::real(grid.to_vec(), total)
}

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Raw moments `μ_0 = 1, μ_1, …` to cumulants `κ_1, …` (index 0 unused).
pub fn cumulants_from_moments(mu: &[f64]) -> Vec<f64> {
    let n = mu.len() - 1;
    let mut k = vec![0.0; n + 1];
    for j in 1..=n {
        let mut acc = mu[j];
        for i in 1..j {
            acc -= binomial(j - 1, i - 1) * k[i] * mu[j - i];
        }
        k[j] = acc;
    }
    k
}

/// Inverse of [`cumulants_from_moments`].
pub fn moments_from_cumulants(kappa: &[f64]) -> Vec<f64> {
    let n = kappa.len() - 1;
    let mut mu = vec![0.0; n + 1];
    mu[0] = 1.0;
    for j in 1..=n {
        mu[j] = (1..=j)
            .map(|i| binomial(j - 1, i - 1) * kappa[i] * mu[j - i])
            .sum();
    }
    mu
}

fn bell_numbers(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    let mut out = vec![1.0];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let v = *next.last().unwrap() + x;
            next.push(v);
        }
        out.push(next[0]);
        row = next;
    }
    out
}

/// Cumulants `κ_n(t)` of a diagonal observable, `n = 1..=n_max`.
#[derive(Clone, Debug)]
pub struct CumulantTable {
    pub grid: Vec<f64>,
    /// `kappa[n][i]`; index 0 unused.
    pub kappa: Vec<Vec<f64>>,
    /// Rounding and propagation floor below which `|κ_n|` carries no digits.
    pub floor: Vec<Vec<f64>>,
}

impl CumulantTable {
    pub fn precision_limited(&self, n: usize, i: usize) -> bool {
        self.kappa[n][i].abs() <= self.floor[n][i]
    }

    pub fn series(&self, n: usize) -> Result<TimeSeries> {
        let flagged = (0..self.grid.len())
            .filter(|&i| self.precision_limited(n, i))
            .count();
        Ok(TimeSeries::real(self.grid.clone(), self.kappa[n].clone())?
            .with_meta("cumulant", n)
            .with_meta("precision_limited_points", flagged))
    }
}

/// Cumulants of the outcome distribution of a diagonal observable with
/// entries `a_diag`, mixed over the ensemble.
pub fn cumulants_numeric(
    evo: &Evolution,
    a_diag: &[f64],
    ensemble: &ThermalEnsemble,
    grid: &[f64],
    n_max: usize,
) -> Result<CumulantTable> {
    if n_max > MAX_CUMULANT_ORDER || n_max < 1 {
        return Err(Error::InvalidParameter(format!(
            "cumulant order {n_max} outside 1..={MAX_CUMULANT_ORDER}; higher orders cancel below double precision"
        )));
    }
    if a_diag.len() != evo.dim() {
        return Err(Error::InvalidParameter(
            "observable and Hamiltonian dimensions differ".into(),
        ));
    }
    let bell = bell_numbers(n_max);
    let mut kappa = vec![Vec::with_capacity(grid.len()); n_max + 1];
    let mut floor = vec![Vec::with_capacity(grid.len()); n_max + 1];
    evolve_together(evo, ensemble.states.clone(), grid, |_, vecs, err| {
        let mut p = vec![0.0; a_diag.len()];
        for (v, &w) in vecs.iter().zip(&ensemble.weights) {
            for (pi, c) in p.iter_mut().zip(v) {
                *pi += w * c.norm_sqr();
            }
        }
        let mut mean = Compensated::default();
        for (pi, a) in p.iter().zip(a_diag) {
            mean.add(pi * a);
        }
        let mean = mean.value();
        let mut central = vec![Compensated::default(); n_max + 1];
        let mut absolute = vec![0.0; n_max + 1];
        for (pi, a) in p.iter().zip(a_diag) {
            if *pi == 0.0 {
                continue;
            }
            let d = a - mean;
            let mut pw = *pi;
            for j in 1..=n_max {
                pw *= d;
                central[j].add(pw);
                absolute[j] += pw.abs();
            }
        }
        let mut mu = vec![0.0; n_max + 1];
        mu[0] = 1.0;
        for j in 2..=n_max {
            mu[j] = central[j].value();
        }
        let mut k = cumulants_from_moments(&mu);
        k[1] = mean;
        let delta = 4.0 * err + 1e-15;
        for n in 1..=n_max {
            kappa[n].push(k[n]);
            floor[n].push(if n == 1 {
                0.0
            } else {
                delta * bell[n] * absolute[n]
            });
        }
        Ok(())
    })?;
    Ok(CumulantTable {
        grid: grid.to_vec(),
        kappa,
        floor,
    })
}
