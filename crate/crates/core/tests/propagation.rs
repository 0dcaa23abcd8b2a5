mod common;

use common::{c, dense_evolve, max_diff, random_hermitian};
use proptest::prelude::*;
use quenchlab_core::fockspace::{
    build_hamiltonian, prequench_eigenbasis_with, z_operator, FockBasis, PrequenchConfig,
};
use quenchlab_core::observables::{otoc_numeric, sandwich_scan, Evolution, ThermalEnsemble};
use quenchlab_core::propagator::{
    linalg::{normalize, random_vector},
    propagate, KrylovConfig, MirrorSpectrum,
};
use quenchlab_core::sparse::SparseOperator;

fn dimer(n: u32, alpha: f64) -> (FockBasis, SparseOperator) {
    let b = FockBasis::new(2, n).unwrap();
    let h = build_hamiltonian(&b, 1.0, -2.0 * alpha / b.n_tilde(), false);
    (b, h)
}

#[test]
fn krylov_matches_dense_exponential() {
    let trimer = {
        let b = FockBasis::new(3, 12).unwrap();
        build_hamiltonian(&b, 1.0, -20.0 / 12.0, true)
    };
    let cases = [
        dimer(99, 2.5).1,
        trimer,
        random_hermitian(100, 3, 7),
        random_hermitian(37, 6, 11),
    ];
    let cfg = KrylovConfig::default();
    for (i, h) in cases.iter().enumerate() {
        assert!(h.dim() <= 100);
        let v = random_vector(h.dim(), 3 + i as u64);
        for t in [0.1, 1.3, 7.5, -2.0] {
            let (got, _) = propagate(h, &v, t, &cfg).unwrap();
            let want = dense_evolve(h, &v, t);
            let d = max_diff(&got, &want);
            assert!(d < 1e-10, "case {i}, t={t}: {d:e}");
        }
    }
}

#[test]
fn spectral_evolution_matches_dense() {
    let (_, h) = dimer(80, 2.5);
    let s = MirrorSpectrum::new(&h).unwrap();
    assert!(s.is_complete());
    let v = random_vector(h.dim(), 5);
    for t in [0.0, 0.4, 3.0] {
        let got = s.evolve(std::slice::from_ref(&v), t).unwrap().remove(0);
        assert!(max_diff(&got, &dense_evolve(&h, &v, t)) < 1e-11);
    }
}

#[test]
fn spectral_otoc_matches_krylov() {
    let (b, h) = dimer(120, 2.5);
    let z = z_operator(&b).unwrap();
    let ens = ThermalEnsemble::thermal(&b, 0.25, 1e-12, &PrequenchConfig::default()).unwrap();
    let grid: Vec<f64> = (0..8).map(|i| 0.3 * i as f64).collect();
    let cfg = KrylovConfig::default();
    let kry = otoc_numeric(&Evolution::Krylov { h: &h, cfg: &cfg }, &z, &z, &ens, &grid).unwrap();
    let s = MirrorSpectrum::new(&h).unwrap();
    let spec = otoc_numeric(&Evolution::Spectral(&s), &z, &z, &ens, &grid).unwrap();
    for (a, b) in kry.values.iter().zip(&spec.values) {
        assert!((a - b).norm() <= 1e-9 * a.norm().max(1e-6), "{a} vs {b}");
    }
    // A windowed spectrum cannot resolve the commutator.
    let states = vec![ens.states[0].clone()];
    let w = MirrorSpectrum::covering(&h, &states, 1e-14).unwrap();
    if !w.is_complete() {
        assert!(otoc_numeric(&Evolution::Spectral(&w), &z, &z, &ens, &grid).is_err());
    }
}

#[test]
fn windowed_matrix_elements_match_the_full_spectrum() {
    let (b, h) = dimer(3000, 2.5);
    let pre = prequench_eigenbasis_with(&b, 12, &PrequenchConfig::default()).unwrap();
    let a = z_operator(&b).unwrap();
    let a = a.linear_combination(c(1.0, 0.0), &a.matmul(&a), c(1.0, 0.0));
    let states: Vec<_> = pre.states[4..12].to_vec();
    let pairs: Vec<(usize, usize)> = (0..states.len()).map(|k| (k, 3)).collect();
    let grid: Vec<f64> = (0..6).map(|i| 0.35 * i as f64).collect();
    let w = MirrorSpectrum::covering(&h, &states, 1e-14).unwrap();
    assert!(
        !w.is_complete() && w.len() < h.dim() / 2,
        "kept {} of {}",
        w.len(),
        h.dim()
    );
    assert!(w
        .missing_weight(&states)
        .unwrap()
        .iter()
        .all(|m| *m < 1e-12));
    let full = MirrorSpectrum::new(&h).unwrap();
    let got = sandwich_scan(&Evolution::Spectral(&w), &a, states.clone(), &pairs, &grid).unwrap();
    let want = sandwich_scan(&Evolution::Spectral(&full), &a, states, &pairs, &grid).unwrap();
    for (g, w) in got.iter().zip(&want) {
        assert!(max_diff(&g.values, &w.values) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn propagation_is_unitary_and_reversible(seed in 0u64..1000, t in -6.0..6.0f64) {
        let h = random_hermitian(60, 4, seed);
        let mut v = random_vector(60, seed + 1);
        normalize(&mut v);
        let cfg = KrylovConfig::default();
        let (w, _) = propagate(&h, &v, t, &cfg).unwrap();
        let n: f64 = w.iter().map(|x| x.norm_sqr()).sum();
        prop_assert!((n - 1.0).abs() < 1e-12);
        let (back, _) = propagate(&h, &w, -t, &cfg).unwrap();
        prop_assert!(max_diff(&back, &v) < 1e-9);
        // Energy is conserved.
        let e0 = h.sandwich(&v, &v).re;
        let e1 = h.sandwich(&w, &w).re;
        prop_assert!((e0 - e1).abs() < 1e-9 * (1.0 + e0.abs()));
    }

    #[test]
    fn steps_compose(seed in 0u64..1000, t1 in 0.0..3.0f64, t2 in 0.0..3.0f64) {
        let h = random_hermitian(40, 3, seed);
        let v = random_vector(40, seed);
        let cfg = KrylovConfig::default();
        let (a, _) = propagate(&h, &v, t1 + t2, &cfg).unwrap();
        let (mid, _) = propagate(&h, &v, t1, &cfg).unwrap();
        let (b, _) = propagate(&h, &mid, t2, &cfg).unwrap();
        prop_assert!(max_diff(&a, &b) < 1e-9);
    }
}
