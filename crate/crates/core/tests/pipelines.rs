use quenchlab_core::pipeline::*;
use quenchlab_core::weyl::{linear_x_coefficient, quantize_observable};

fn small_matrix_elements(method: Method) -> MatrixElementConfig {
    let mut cfg = MatrixElementConfig::figure(2000);
    cfg.k = vec![6, 8, 9, 12];
    cfg.grid = GridSpec::new(TimePoint::Time(0.0), TimePoint::Ehrenfest(1.0), 61);
    cfg.method = method;
    cfg
}

#[test]
fn matrix_element_methods_agree() {
    let runs: Vec<_> = [Method::Krylov, Method::Spectral, Method::Windowed]
        .into_iter()
        .map(|m| run_matrix_elements(&small_matrix_elements(m), "test").unwrap())
        .collect();
    let base = &runs[0].report;
    assert!((base.lambda - 6f64.sqrt()).abs() < 1e-14);
    for other in &runs[1..] {
        for (a, b) in base.rows.iter().zip(&other.report.rows) {
            assert_eq!((a.k, a.forbidden), (b.k, b.forbidden));
            assert!((a.rate.unwrap() - b.rate.unwrap()).abs() < 1e-6 * a.rate.unwrap());
        }
    }
    for row in &base.rows {
        assert!((row.predicted_rate - 2.0 * base.lambda * row.k.abs_diff(10) as f64).abs() < 1e-12);
    }
    // Every curve of the collapse has a spread entry on the window.
    let (lo, hi) = base.window;
    assert!(base
        .collapse_spread_curve
        .iter()
        .all(|&(t, s)| t >= lo && t <= hi && s >= 0.0));
}

#[test]
fn otoc_coefficients_and_small_run() {
    let mut cfg = OtocConfig::figure(300);
    cfg.grid.points = 31;
    cfg.finite_time = None;
    let o = run_otoc(&cfg, "test").unwrap();
    let r = &o.report;
    // c₀ = 1/(4λ²) and β_B = 1/√(2λ) for B = ẑ.
    assert!((r.coefficients[0] - 1.0 / 24.0).abs() < 1e-12);
    assert!((r.beta_b - 1.0 / (2.0 * r.lambda).sqrt()).abs() < 1e-12);
    assert!(r.ensemble_size > 10 && r.truncation_mass < 1e-10);
    assert!(o.bundle.file("otoc_leading.csv").is_some());
}

#[test]
fn linear_coefficient_of_z() {
    let sys = DimerSystem::new(&OtocConfig::figure(10_000).model).unwrap();
    let (_, z) = sys.observable("z").unwrap();
    let beta_b = linear_x_coefficient(&quantize_observable(&z, sys.lambda).unwrap());
    assert!((beta_b - 0.4518).abs() < 1e-4);
}

#[test]
fn cumulants_small_run() {
    let mut cfg = CumulantConfig::figure(400);
    cfg.grid.points = 121;
    let o = run_cumulants(&cfg, "test").unwrap();
    let r = &o.report;
    assert!(r.rows.iter().any(|row| row.n == 2));
    for row in &r.rows {
        assert!((row.predicted_rate - 2.0 * r.lambda * (row.n - 1) as f64).abs() < 1e-12);
    }
    let w = r.wick.as_ref().unwrap();
    assert!(w.numeric.is_finite() && w.pairings.is_finite() && w.factorial.is_finite());
}

#[test]
fn trimer_momentum_selection_rule() {
    let mut cfg = TrimerConfig::figure();
    cfg.particles = 15;
    cfg.max_excitation = 3;
    cfg.grid.points = 41;
    let r = run_trimer(&cfg, "test").unwrap().report;
    assert!((r.lambda - 31f64.sqrt()).abs() < 1e-12);
    // The uniform part of n̂₁ is N̂/3, so n̂₁(t) cannot reach a state whose
    // quasimomentum k₁ − k₂ vanishes mod 3.
    for row in &r.rows {
        let (k1, k2) = row.label;
        let zero_momentum = (k1 + 2 * k2) % 3 == 0;
        match row.observable {
            TrimerObservable::Occupation => {
                assert_eq!(row.forbidden, zero_momentum, "{:?}", row.label)
            }
            TrimerObservable::Commutator => assert!(!row.forbidden, "{:?}", row.label),
        }
    }
}

#[test]
fn stability_rates() {
    let r = run_stability(&StabilityConfig::trimer(), "test")
        .unwrap()
        .report;
    let at = |u: f64| r.rows.iter().find(|row| row.u == u).unwrap();
    assert_eq!(at(-4.5).marginal, 2);
    assert!(at(-4.5).unstable_rates.is_empty());
    // ε(ε + 2u/3) with ε = 3 gives −31.
    let rates = &at(-20.0).unstable_rates;
    assert_eq!(rates.len(), 2);
    for l in rates {
        assert!((l - 31f64.sqrt()).abs() < 1e-12);
    }
    assert!((at(-20.0).linearization_rate - 31f64.sqrt()).abs() < 1e-9);
}

#[test]
fn prediction_tables() {
    let o = run_predict(&PredictConfig::figure(10_000), "test").unwrap();
    let r = &o.report;
    assert!((r.otoc_coefficients[0] - 1.0 / 24.0).abs() < 1e-12);
    assert!((r.t_ehrenfest - (10_001f64).ln() / (2.0 * r.lambda)).abs() < 1e-12);
    assert_eq!(r.c_kl.len(), 12);
    assert!(o.bundle.file("c_kl.csv").is_some());
}
