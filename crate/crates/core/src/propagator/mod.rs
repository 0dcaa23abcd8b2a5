//! Low-lying eigenpairs and unitary time evolution for sparse Hermitian
//! operators (units `ħ = 1`, time in `1/J`).

mod krylov;
mod lanczos;
pub mod linalg;
mod spectral;
mod tridiag;

pub use krylov::{propagate, KrylovConfig, StepStats};
pub use lanczos::EigenConfig;
pub use linalg::Vector;
pub use spectral::{BlockOperator, MirrorSpectrum, Sector, SectorPair, SplitMatrix};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub energies: Vec<f64>,
    pub states: Vec<Vector>,
    /// `‖Hψ − Eψ‖` for every returned pair.
    pub residuals: Vec<f64>,
}

/// The `m` lowest eigenpairs with default solver settings.
pub fn lowest_eigenpairs(h: &SparseOperator, m: usize) -> Result<Eigenpairs> {
    lowest_eigenpairs_with(h, m, &EigenConfig::default())
}

/// Real tridiagonal operators (every dimer Hamiltonian) go through Sturm
/// bisection and inverse iteration; anything else through restarted Lanczos.
pub fn lowest_eigenpairs_with(
    h: &SparseOperator,
    m: usize,
    cfg: &EigenConfig,
) -> Result<Eigenpairs> {
    if m == 0 || m > h.dim() {
        return Err(Error::InvalidParameter(format!(
            "requested {m} eigenpairs of a {}-dimensional operator",
            h.dim()
        )));
    }
    h.require_hermitian(1e-14 * h.max_abs().max(1.0), "eigensolver input")?;
    let (energies, states) = match h.as_real_tridiagonal() {
        Some((diag, off)) if h.dim() > 1 => tridiag::lowest_tridiagonal(&diag, &off, m, cfg.seed),
        _ => {
            let (e, s, _) = lanczos::lowest_lanczos(h, m, cfg)?;
            (e, s)
        }
    };
    let residuals: Vec<f64> = energies
        .iter()
        .zip(&states)
        .map(|(&e, s)| {
            let mut r = h.apply_vec(s);
            linalg::axpy(Complex64::new(-e, 0.0), s, &mut r);
            linalg::norm(&r)
        })
        .collect();
    let tol = cfg.relative_tolerance * h.norm_estimate().max(1.0);
    if let Some(found) = residuals.iter().position(|&r| r > tol) {
        return Err(Error::NoConvergence {
            found,
            requested: m,
            iterations: 0,
            residuals: residuals[found..].iter().take(5).copied().collect(),
        });
    }
    Ok(Eigenpairs {
        energies,
        states,
        residuals,
    })
}

/// State carried through a propagation.
#[derive(Clone, Debug)]
pub struct EvolvedState {
    pub coefficients: Vector,
    pub t: f64,
    /// Accumulated `|1 − ‖ψ‖|` removed by renormalization; never reset.
    pub norm_drift: f64,
    /// Accumulated local Krylov error estimates.
    pub error_estimate: f64,
}

impl EvolvedState {
    pub fn new(coefficients: Vector) -> Self {
        Self {
            coefficients,
            t: 0.0,
            norm_drift: 0.0,
            error_estimate: 0.0,
        }
    }
}

/// `ψ(t_target) = e^{−iH(t_target − ψ.t)} ψ`.
pub fn evolve(
    h: &SparseOperator,
    psi: &EvolvedState,
    t_target: f64,
    cfg: &KrylovConfig,
) -> Result<EvolvedState> {
    cfg.validate()?;
    if t_target < psi.t {
        return Err(Error::InvalidParameter(format!(
            "cannot evolve backwards from t = {} to {t_target}",
            psi.t
        )));
    }
    let n = linalg::norm(&psi.coefficients);
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("input state has norm {n}")));
    }
    let (coefficients, stats) = propagate(h, &psi.coefficients, t_target - psi.t, cfg)?;
    Ok(EvolvedState {
        coefficients,
        t: t_target,
        norm_drift: psi.norm_drift + stats.norm_drift,
        error_estimate: psi.error_estimate + stats.error_estimate,
    })
}

/// Walks `ψ` along a nondecreasing grid (starting from `ψ.t`) and hands the
/// state at every grid point to `visit`.
pub fn evolve_on_grid<F>(
    h: &SparseOperator,
    psi: EvolvedState,
    grid: &[f64],
    cfg: &KrylovConfig,
    mut visit: F,
) -> Result<EvolvedState>
where
    F: FnMut(usize, &EvolvedState),
{
    check_grid(grid)?;
    let mut psi = psi;
    for (i, &t) in grid.iter().enumerate() {
        psi = evolve(h, &psi, t, cfg)?;
        visit(i, &psi);
    }
    Ok(psi)
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "time grid must be finite and nondecreasing".into(),
        ));
    }
    Ok(())
}

/// `⟨ψ_k|e^{iHt} A e^{−iHt}|ψ_l⟩` on the grid, by co-evolving both states.
pub fn heisenberg_matrix_element(
    h: &SparseOperator,
    a: &SparseOperator,
    psi_k: &[Complex64],
    psi_l: &[Complex64],
    grid: &[f64],
    cfg: &KrylovConfig,
) -> Result<Vec<Complex64>> {
    check_grid(grid)?;
    let mut left = EvolvedState::new(psi_k.to_vec());
    let mut right = EvolvedState::new(psi_l.to_vec());
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        left = evolve(h, &left, t, cfg)?;
        right = evolve(h, &right, t, cfg)?;
        out.push(a.sandwich(&left.coefficients, &right.coefficients));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{build_hamiltonian, operator_polynomial, z_operator, FockBasis};
    use linalg::{dot, norm, random_vector};
    use nalgebra::DMatrix;

    fn dense_expm_apply(h: &SparseOperator, v: &[Complex64], t: f64) -> Vector {
        let d = h.to_dense();
        let real = DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)].re);
        let eig = real.symmetric_eigen();
        let n = v.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let col = eig.eigenvectors.column(k);
            let proj: Complex64 = (0..n).map(|i| v[i] * col[i]).sum();
            let ph = Complex64::from_polar(1.0, -t * eig.eigenvalues[k]) * proj;
            for i in 0..n {
                out[i] += ph * col[i];
            }
        }
        out
    }

    #[test]
    fn dimer_spectra() {
        let b = FockBasis::new(2, 2).unwrap();
        let h = build_hamiltonian(&b, 1.0, 0.0, false);
        let ep = lowest_eigenpairs(&h, 3).unwrap();
        for (e, want) in ep.energies.iter().zip([-2.0, 0.0, 2.0]) {
            assert!((e - want).abs() < 1e-12);
        }

        let b = FockBasis::new(2, 1000).unwrap();
        let h = build_hamiltonian(&b, 1.0, 0.0, false);
        let ep = lowest_eigenpairs(&h, 6).unwrap();
        let gap = ep.energies[1] - ep.energies[0];
        assert!((gap - 2.0).abs() < 0.02, "{gap}");
        for i in 0..6 {
            for j in 0..6 {
                let g = dot(&ep.states[i], &ep.states[j]).norm();
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lanczos_path_on_degenerate_trimer() {
        let b = FockBasis::new(3, 6).unwrap();
        let h = build_hamiltonian(&b, 1.0, 0.0, true);
        let ep = lowest_eigenpairs(&h, 6).unwrap();
        // −2N + 3(n₊ + n₋): multiplets of size 1, 2, 3.
        let want = [-12.0, -9.0, -9.0, -6.0, -6.0, -6.0];
        for (e, w) in ep.energies.iter().zip(want) {
            assert!((e - w).abs() < 1e-8, "{:?}", ep.energies);
        }
        for i in 0..6 {
            for j in 0..6 {
                let g = dot(&ep.states[i], &ep.states[j]).norm();
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn evolve_zero_time_is_identity() {
        let b = FockBasis::new(2, 10).unwrap();
        let h = build_hamiltonian(&b, 1.0, -0.2, false);
        let mut v = random_vector(b.dim(), 1);
        linalg::normalize(&mut v);
        let out = evolve(
            &h,
            &EvolvedState::new(v.clone()),
            0.0,
            &KrylovConfig::default(),
        )
        .unwrap();
        assert_eq!(out.coefficients, v);
    }

    #[test]
    fn eigenstate_picks_up_phase() {
        let b = FockBasis::new(2, 30).unwrap();
        let h = build_hamiltonian(&b, 1.0, -0.1, false);
        let ep = lowest_eigenpairs(&h, 2).unwrap();
        let t = 2.7;
        let out = evolve(
            &h,
            &EvolvedState::new(ep.states[1].clone()),
            t,
            &KrylovConfig::default(),
        )
        .unwrap();
        let phase = Complex64::from_polar(1.0, -ep.energies[1] * t);
        let worst = out
            .coefficients
            .iter()
            .zip(&ep.states[1])
            .map(|(a, b)| (a - phase * b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn krylov_matches_dense_exponential() {
        let b = FockBasis::new(2, 50).unwrap();
        let h = build_hamiltonian(&b, 1.0, -5.0 / 51.0, false);
        let mut v = random_vector(b.dim(), 7);
        linalg::normalize(&mut v);
        let out = evolve(
            &h,
            &EvolvedState::new(v.clone()),
            3.0,
            &KrylovConfig::default(),
        )
        .unwrap();
        let oracle = dense_expm_apply(&h, &v, 3.0);
        let worst = out
            .coefficients
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn time_reversal_and_energy() {
        let b = FockBasis::new(3, 8).unwrap();
        let h = build_hamiltonian(&b, 1.0, -0.9, true);
        let mut v = random_vector(b.dim(), 11);
        linalg::normalize(&mut v);
        let cfg = KrylovConfig::default();
        let e0 = h.sandwich(&v, &v).re;
        let fwd = evolve(&h, &EvolvedState::new(v.clone()), 1.7, &cfg).unwrap();
        let e1 = h.sandwich(&fwd.coefficients, &fwd.coefficients).re;
        assert!(((e1 - e0) / e0).abs() < 1e-8);
        let (back, _) = propagate(&h, &fwd.coefficients, -1.7, &cfg).unwrap();
        let diff: Vec<Complex64> = back.iter().zip(&v).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) < 1e-8);
        assert!(fwd.norm_drift < 1e-10);
    }

    #[test]
    fn identity_matrix_element_is_constant() {
        let b = FockBasis::new(2, 40).unwrap();
        let h0 = build_hamiltonian(&b, 1.0, 0.0, false);
        let h = build_hamiltonian(&b, 1.0, -5.0 / 41.0, false);
        let ep = lowest_eigenpairs(&h0, 3).unwrap();
        let grid = [0.0, 0.5, 1.0, 1.5];
        let id = SparseOperator::identity(b.dim());
        let cfg = KrylovConfig::default();
        let diag =
            heisenberg_matrix_element(&h, &id, &ep.states[1], &ep.states[1], &grid, &cfg).unwrap();
        let off =
            heisenberg_matrix_element(&h, &id, &ep.states[2], &ep.states[1], &grid, &cfg).unwrap();
        for (d, o) in diag.iter().zip(&off) {
            assert!((d - 1.0).norm() < 1e-10 && o.norm() < 1e-10);
        }
        let a = operator_polynomial(&b, "z + z^2").unwrap();
        let at0 =
            heisenberg_matrix_element(&h, &a, &ep.states[2], &ep.states[1], &[0.0], &cfg).unwrap();
        let direct = a.sandwich(&ep.states[2], &ep.states[1]);
        assert!((at0[0] - direct).norm() < 1e-12);
        let _ = z_operator(&b).unwrap();
    }

    #[test]
    fn rejects_bad_config_and_grid() {
        let cfg = KrylovConfig {
            max_subspace: 3,
            ..KrylovConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(check_grid(&[0.0, 1.0, 0.5]).is_err());
    }
}
