//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test --release --test acceptance -- 1 8` runs a subset. Failing
//! criteria are reported, not fatal; a criterion whose computation errors
//! out is reported as FAIL with the error.

mod common;

use std::time::Instant;

use common::{
    c, dense_bplus, dense_evolve, max_diff, oscillator_moment, random_hermitian,
    relative_difference, symbol,
};
use proptest::test_runner::{Config, TestRunner};
use quenchlab_core::fockspace::{build_hamiltonian, FockBasis};
use quenchlab_core::meanfield::{gp_stability, ModeKind};
use quenchlab_core::pipeline::*;
use quenchlab_core::propagator::{linalg::random_vector, propagate, KrylovConfig};
use quenchlab_core::weyl::{
    bplus_matrix_element, thermal_covariance, wick_expectation, ExpPoly, WeylPolynomial,
};

type Verdict = Result<(bool, String), String>;

struct Gate {
    only: Vec<usize>,
    passed: usize,
    run: usize,
}

impl Gate {
    fn wants(&self, ids: &[usize]) -> bool {
        self.only.is_empty() || ids.iter().any(|i| self.only.contains(i))
    }

    fn report(&mut self, id: usize, title: &str, v: Verdict) {
        if !self.only.is_empty() && !self.only.contains(&id) {
            return;
        }
        self.run += 1;
        let (ok, msg) = v.unwrap_or_else(|e| (false, format!("error: {e}")));
        if ok {
            self.passed += 1;
        }
        println!(
            "criterion {id:>2} {}  {title}: {msg}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn main() {
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut gate = Gate {
        only,
        passed: 0,
        run: 0,
    };
    let start = Instant::now();

    if gate.wants(&[1, 2, 3]) {
        let t = Instant::now();
        let run =
            run_matrix_elements(&MatrixElementConfig::figure(100_000), "acceptance").map_err(err);
        eprintln!(
            "matrix elements at N = 1e5: {:.0} s",
            t.elapsed().as_secs_f64()
        );
        gate.report(
            1,
            "matrix-element growth rates",
            run.as_ref().map_err(Clone::clone).map(|o| {
                let r = &o.report;
                let worst = r
                    .rows
                    .iter()
                    .filter(|row| row.rate_error.is_some())
                    .max_by(|a, b| a.rate_error.partial_cmp(&b.rate_error).unwrap());
                let worst = worst.map(|w| format!("k={}", w.k)).unwrap_or_default();
                (
                    r.max_rate_error < 0.10,
                    format!(
                        "max relative error {:.3} ({worst}), N=1e5, tolerance 0.10",
                        r.max_rate_error
                    ),
                )
            }),
        );
        gate.report(
            2,
            "collapse of c_kl-normalized curves",
            run.as_ref().map_err(Clone::clone).and_then(|o| {
                let r = &o.report;
                let spread = r.collapse_spread.ok_or("no collapse spread")?;
                // Longest stretch of the window where the curves agree.
                let curve = &r.collapse_spread_curve;
                let (mut best, mut run_start) = ((0.0, 0.0), None);
                for (i, &(t, s)) in curve.iter().enumerate() {
                    if s <= 0.15 {
                        let t0 = *run_start.get_or_insert(t);
                        let last = curve.get(i + 1).map_or(true, |&(_, s)| s > 0.15);
                        if last && t - t0 > best.1 - best.0 {
                            best = (t0, t);
                        }
                    } else {
                        run_start = None;
                    }
                }
                let (t_max, _) = curve
                    .iter()
                    .copied()
                    .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
                let te = r.t_ehrenfest;
                let detail = format!(
                    " at {:.2} t_E; within 0.15 on [{:.3}, {:.3}] t_E of the window [{:.3}, {:.3}] t_E",
                    t_max / te,
                    best.0 / te,
                    best.1 / te,
                    r.window.0 / te,
                    r.window.1 / te
                );
                Ok((
                    spread <= 0.15,
                    format!("max pointwise spread {spread:.3}{detail}, tolerance 0.15"),
                ))
            }),
        );
        gate.report(
            3,
            "phase prediction",
            run.as_ref().map_err(Clone::clone).and_then(|o| {
                let p = o.report.max_phase_residual.ok_or("no phase residual")?;
                Ok((
                    p < 0.3,
                    format!("max |Δφ mod π| {p:.3} rad for |k−l| ≤ 4, tolerance 0.3"),
                ))
            }),
        );
    }

    if gate.wants(&[4, 5]) {
        let t = Instant::now();
        let run = run_otoc(&OtocConfig::figure(10_000), "acceptance").map_err(err);
        eprintln!("OTOC at N = 1e4: {:.0} s", t.elapsed().as_secs_f64());
        gate.report(4, "OTOC leading order", run.as_ref().map_err(Clone::clone).map(|o| {
            let r = &o.report;
            (
                r.leading_max_deviation < 0.15,
                format!(
                    "max |C/c₀(ħe^{{λt}})² − 1| {:.3} with c₀ = {:.6}, growth-rate error {:.3}, tolerance 0.15",
                    r.leading_max_deviation, r.coefficients[0], r.growth_rate_error
                ),
            )
        }));
        gate.report(
            5,
            "OTOC series breakdown",
            run.as_ref().map_err(Clone::clone).map(|o| {
                let r = &o.report;
                match r.departure_fraction {
                    Some(f) => (
                        (0.7..=0.9).contains(&f),
                        format!("first 2× deviation at {f:.3} t_E, required [0.7, 0.9]"),
                    ),
                    None => (false, "the series never departs by 2× on the grid".into()),
                }
            }),
        );
    }

    if gate.wants(&[6, 7]) {
        let t = Instant::now();
        let run = run_cumulants(&CumulantConfig::figure(10_000), "acceptance").map_err(err);
        eprintln!("cumulants at N = 1e4: {:.0} s", t.elapsed().as_secs_f64());
        gate.report(
            6,
            "cumulant growth rates",
            run.as_ref().map_err(Clone::clone).map(|o| {
                let mut ok = true;
                let mut parts = Vec::new();
                for row in &o.report.rows {
                    match (row.n, row.rate_error) {
                        (2 | 4 | 6 | 8, Some(e)) => {
                            ok &= e < 0.10;
                            parts.push(format!("n={} {:.3}", row.n, e));
                        }
                        (2 | 4 | 6 | 8, None) => {
                            ok = false;
                            parts.push(format!("n={} no fit", row.n));
                        }
                        (n, e) => parts.push(format!(
                            "n={n} {} ({} precision-limited points)",
                            e.map(|e| format!("{e:.3}")).unwrap_or("no fit".into()),
                            row.precision_limited_points
                        )),
                    }
                }
                (
                    ok,
                    format!("rate errors {}, tolerance 0.10 for n ≤ 8", parts.join(", ")),
                )
            }),
        );
        gate.report(
            7,
            "Wick-factor adjudication",
            run.as_ref().map_err(Clone::clone).and_then(|o| {
                let w = o.report.wick.as_ref().ok_or("no Wick check configured")?;
                let msg = format!(
                    "winner {:?}: pairings error {:.4}, (2m−1)! error {:.3} at t = {:.3}",
                    w.winner, w.pairings_error, w.factorial_error, w.t
                );
                Ok((w.winner.is_some(), msg))
            }),
        );
    }

    if gate.wants(&[8]) {
        gate.report(8, "trimer Bogoliubov stability", stability());
    }

    if gate.wants(&[9]) {
        let t = Instant::now();
        let run = run_trimer(&TrimerConfig::figure(), "acceptance").map_err(err);
        eprintln!("trimer at N = 300: {:.0} s", t.elapsed().as_secs_f64());
        gate.report(9, "trimer collapse", run.map(|o| trimer_verdict(&o.report)));
    }

    if gate.wants(&[10]) {
        gate.report(10, "oracle equivalence", oracles());
    }
    if gate.wants(&[11]) {
        gate.report(11, "ladder selection rule", selection_rule());
    }

    println!(
        "{} of {} criteria pass ({:.0} s)",
        gate.passed,
        gate.run,
        start.elapsed().as_secs_f64()
    );
}

fn stability() -> Verdict {
    let marginal = gp_stability(-4.5, 3).map_err(err)?;
    let worst = marginal
        .modes
        .iter()
        .filter(|m| matches!(m.kind, ModeKind::Marginal(_)))
        .map(|m| m.omega_sq.abs())
        .fold(0.0, f64::max);
    let n_marginal = marginal.marginal_count();
    let unstable = gp_stability(-20.0, 3).map_err(err)?;
    let eps: f64 = 3.0;
    let want = (-(eps * (eps + 2.0 * -20.0 / 3.0))).sqrt();
    let rates = unstable.unstable_rates();
    let dev = rates.iter().map(|r| (r - want).abs()).fold(0.0, f64::max);
    let ok = n_marginal == 2 && worst <= 1e-9 && rates.len() == 2 && dev <= 1e-12;
    Ok((
        ok,
        format!(
            "u=−4.5: {n_marginal} marginal modes, |ω²| ≤ {worst:.1e}; u=−20: {} unstable rates, max |λ − √31| {dev:.1e}",
            rates.len()
        ),
    ))
}

fn trimer_verdict(r: &TrimerReport) -> (bool, String) {
    let mut rate_ok = true;
    let mut worst_rate = 0.0f64;
    let mut worst_label = String::new();
    let mut forbidden = Vec::new();
    for row in &r.rows {
        if row.forbidden {
            forbidden.push(format!("{:?}", row.label));
            continue;
        }
        let e = row.rate_error.unwrap_or(f64::INFINITY);
        rate_ok &= e < 0.15;
        if e > worst_rate {
            worst_rate = e;
            worst_label = format!("{:?} {:?}", row.observable, row.label);
        }
    }
    let mut spread_ok = true;
    let mut worst_spread = 0.0f64;
    let mut worst_group = String::new();
    for g in &r.groups {
        if let Some(s) = g.spread {
            spread_ok &= s <= 0.20;
            if s > worst_spread {
                worst_spread = s;
                worst_group = format!("{:?} K={}", g.observable, g.excitation);
            }
        }
    }
    (
        rate_ok && spread_ok,
        format!(
            "max rate error {worst_rate:.3} ({worst_label}), tolerance 0.15; max level spread {worst_spread:.3} ({worst_group}), tolerance 0.20; occupation elements forbidden by momentum: {}",
            forbidden.join(" ")
        ),
    )
}

fn oracles() -> Verdict {
    // Krylov against dense exponentials.
    let cfg = KrylovConfig::default();
    let b = FockBasis::new(2, 99).map_err(err)?;
    let cases = [
        build_hamiltonian(&b, 1.0, -5.0 / b.n_tilde(), false),
        random_hermitian(100, 3, 7),
    ];
    let mut krylov = 0.0f64;
    for (i, h) in cases.iter().enumerate() {
        let v = random_vector(h.dim(), 3 + i as u64);
        for t in [0.1, 1.3, 7.5] {
            let (got, _) = propagate(h, &v, t, &cfg).map_err(err)?;
            krylov = krylov.max(max_diff(&got, &dense_evolve(h, &v, t)));
        }
    }

    // Gaussian moments against thermal oscillator traces.
    let mut wick = 0.0f64;
    for &(alpha, beta, phi) in &[(0.3, 1.0, 0.6), (1.0, -0.4, 0.9), (-1.3, 0.2, 0.35)] {
        let cov = thermal_covariance(0.25, 2.0, phi).map_err(err)?;
        let lin = WeylPolynomial::x(1, 0)
            .scale(c(alpha, 0.0))
            .add(&WeylPolynomial::y(1, 0).scale(c(beta, 0.0)));
        for n in (0..=10u32).step_by(2) {
            let got = wick_expectation(&lin.pow_pointwise(n), &[cov])
                .map_err(err)?
                .eval(0.0, &[1.0], 1.0);
            let want = oscillator_moment(alpha, beta, n, phi, 0.5, 140, 160);
            wick = wick.max((got.re - want).abs() / want.abs());
        }
    }

    // Star-product property suites.
    let mut runner = TestRunner::new(Config {
        cases: 128,
        failure_persistence: None,
        ..Config::default()
    });
    let assoc = runner
        .run(&(symbol(2), symbol(2), symbol(2)), |(a, b, d)| {
            let diff = relative_difference(&a.star(&b).star(&d), &a.star(&b.star(&d)));
            proptest::prop_assert!(diff < 1e-12, "{diff:e}");
            Ok(())
        })
        .map_err(|e| format!("associativity: {e}"));
    assoc?;
    runner
        .run(&(0usize..2, 0usize..2), |(i, j)| {
            let x = WeylPolynomial::x(2, i);
            let y = WeylPolynomial::y(2, j);
            let want = if i == j {
                WeylPolynomial::constant(2, ExpPoly::constant(c(0.0, 1.0)))
            } else {
                WeylPolynomial::zero(2)
            };
            proptest::prop_assert!(x.star(&y).sub(&y.star(&x)).max_difference(&want) < 1e-12);
            Ok(())
        })
        .map_err(|e| format!("[x, y] = i: {e}"))?;

    Ok((
        krylov < 1e-10 && wick < 1e-10,
        format!(
            "Krylov vs dense {krylov:.1e}, Wick vs trace {wick:.1e} (tolerance 1e-10); associativity and [x,y] = i hold on 128 random cases each"
        ),
    ))
}

fn selection_rule() -> Verdict {
    let phi = quenchlab_core::weyl::quench_angle(2.0, 6f64.sqrt());
    let mut violations = 0;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for k in 0..=20 {
        for l in 0..=20 {
            for n in 0..=10 {
                let v = bplus_matrix_element(k, l, n, phi);
                if n < k.abs_diff(l) {
                    checked += 1;
                    if v != c(0.0, 0.0) {
                        violations += 1;
                    }
                } else {
                    let want = dense_bplus(k, l, n, phi);
                    worst = worst.max((v - want).norm() / want.norm().max(1.0));
                }
            }
        }
    }
    Ok((
        violations == 0 && worst < 1e-12,
        format!("{violations} nonzero of {checked} forbidden elements; allowed ones match a truncated ladder to {worst:.1e}"),
    ))
}
