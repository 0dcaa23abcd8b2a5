//! Experiments without time evolution: Bogoliubov spectra and the
//! analytic prediction tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::{gp_linearization, gp_stability};
use crate::observables::Manifest;
use crate::weyl::{expectation_series, linear_x_coefficient, quantize_observable, WickFactor};

use super::bundle::{Bundle, Outcome};
use super::dimer::{DimerModel, DimerSystem};
use super::settings::EnsembleSpec;

fn empty_manifest(
    model: String,
    quench: String,
    lambda: f64,
    config: serde_json::Value,
    build: &str,
) -> Manifest {
    Manifest {
        model,
        quench,
        hbar_eff: 0.0,
        lambda,
        t_ehrenfest: 0.0,
        window: (0.0, 0.0),
        build: build.to_string(),
        config,
        outputs: Vec::new(),
        results: BTreeMap::new(),
    }
}

// ---------------------------------------------------------------------------
// Stability

/// Bogoliubov spectra of the uniform state on an `L`-site ring for several
/// couplings `u = UN/J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub sites: usize,
    pub couplings: Vec<f64>,
}

impl StabilityConfig {
    /// The trimer at the bifurcation and after the quench.
    pub fn trimer() -> Self {
        Self {
            sites: 3,
            couplings: vec![-4.5, -20.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub u: f64,
    pub stable_freqs: Vec<f64>,
    pub unstable_rates: Vec<f64>,
    pub marginal: usize,
    /// Largest `|Re μ|` among the eigenvalues of the linearized flow, an
    /// independent check of the leading rate.
    pub linearization_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub sites: usize,
    pub rows: Vec<StabilityRow>,
}

pub fn run_stability(cfg: &StabilityConfig, build: &str) -> Result<Outcome<StabilityReport>> {
    if cfg.couplings.is_empty() {
        return Err(Error::Config("couplings: need at least one value".into()));
    }
    let mut rows = Vec::new();
    let mut files = Vec::new();
    for &u in &cfg.couplings {
        let s = gp_stability(u, cfg.sites)?;
        let eig = gp_linearization(u, cfg.sites)?.complex_eigenvalues();
        files.push((format!("stability_u{u}.csv"), s.to_csv()));
        rows.push(StabilityRow {
            u,
            stable_freqs: s.stable_freqs(),
            unstable_rates: s.unstable_rates(),
            marginal: s.marginal_count(),
            linearization_rate: eig.iter().map(|c| c.re.abs()).fold(0.0, f64::max),
        });
    }
    let lead = rows
        .iter()
        .flat_map(|r| r.unstable_rates.iter().copied())
        .fold(0.0, f64::max);
    let mut bundle = Bundle::new(empty_manifest(
        format!("ring L={}", cfg.sites),
        "none".into(),
        lead,
        serde_json::to_value(cfg)?,
        build,
    ));
    for (name, text) in files {
        bundle.add_text(&name, text);
    }
    Outcome::new(
        StabilityReport {
            sites: cfg.sites,
            rows,
        },
        bundle,
    )
}

// ---------------------------------------------------------------------------
// Prediction tables

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OtocTableSpec {
    pub b: String,
    pub series_order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    pub model: DimerModel,
    pub observable: String,
    pub expansion_order: usize,
    pub ensemble: EnsembleSpec,
    /// Level pairs `(k, l)` for the `c_kl` table.
    #[serde(default)]
    pub pairs: Vec<(usize, usize)>,
    #[serde(default)]
    pub otoc: Option<OtocTableSpec>,
    #[serde(default)]
    pub cumulant_orders: Vec<usize>,
}

impl PredictConfig {
    pub fn figure(particles: u32) -> Self {
        Self {
            model: DimerModel {
                particles,
                alpha_pre: 0.0,
                alpha_post: 2.5,
            },
            observable: "z".into(),
            expansion_order: 52,
            ensemble: EnsembleSpec::Thermal { beta_delta: 0.5 },
            pairs: (4..=16).filter(|&k| k != 10).map(|k| (k, 10)).collect(),
            otoc: Some(OtocTableSpec {
                b: "z".into(),
                series_order: 25,
            }),
            cumulant_orders: vec![2, 4, 6, 8, 10],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictReport {
    pub lambda: f64,
    pub omega: f64,
    pub phi: f64,
    pub hbar: f64,
    pub t_ehrenfest: f64,
    /// `⟨b₊²⟩` of the prequench ensemble.
    pub bplus_variance: f64,
    pub c: Vec<f64>,
    pub c_kl: Vec<(usize, usize, f64, f64)>,
    pub otoc_beta_b: Option<f64>,
    pub otoc_coefficients: Vec<f64>,
    pub cumulant_prefactors: Vec<(usize, f64)>,
    pub expectation_pairings: Vec<f64>,
    pub expectation_factorial: Vec<f64>,
}

pub fn run_predict(cfg: &PredictConfig, build: &str) -> Result<Outcome<PredictReport>> {
    let sys = DimerSystem::new(&cfg.model)?;
    let pred = sys.prediction(&cfg.observable, cfg.expansion_order)?;
    let beta = cfg.ensemble.beta(sys.delta)?;
    let c_kl = cfg
        .pairs
        .iter()
        .map(|&(k, l)| pred.ckl(k, l).map(|c| (k, l, c.re, c.im)))
        .collect::<Result<Vec<_>>>()?;
    let (otoc_beta_b, otoc_coefficients) = match &cfg.otoc {
        Some(o) => {
            let (_, b) = sys.observable(&o.b)?;
            let beta_b = linear_x_coefficient(&quantize_observable(&b, sys.lambda)?);
            (
                Some(beta_b),
                pred.otoc_coefficients(beta_b, o.series_order)?,
            )
        }
        None => (None, Vec::new()),
    };
    let cumulant_prefactors = cfg
        .cumulant_orders
        .iter()
        .map(|&n| pred.cumulant(n).map(|d| (n, d.d)))
        .collect::<Result<Vec<_>>>()?;
    let report = PredictReport {
        lambda: sys.lambda,
        omega: pred.omega,
        phi: pred.phi,
        hbar: sys.hbar,
        t_ehrenfest: sys.t_ehrenfest,
        bplus_variance: pred.bplus_variance(beta)?,
        expectation_pairings: expectation_series(&pred.c, WickFactor::Pairings),
        expectation_factorial: expectation_series(&pred.c, WickFactor::PrintedFactorial),
        c: pred.c.clone(),
        c_kl,
        otoc_beta_b,
        otoc_coefficients,
        cumulant_prefactors,
    };

    let mut bundle = Bundle::new(empty_manifest(
        format!("dimer N={}", cfg.model.particles),
        format!("alpha {} -> {}", cfg.model.alpha_pre, cfg.model.alpha_post),
        sys.lambda,
        serde_json::to_value(cfg)?,
        build,
    ));
    bundle.manifest.hbar_eff = sys.hbar;
    bundle.manifest.t_ehrenfest = sys.t_ehrenfest;
    bundle.add_text("c_k.csv", indexed("k, c_k", &report.c));
    let mut t = String::from("k, l, re, im\n");
    for (k, l, re, im) in &report.c_kl {
        let _ = writeln!(t, "{k}, {l}, {re:.17e}, {im:.17e}");
    }
    bundle.add_text("c_kl.csv", t);
    if !report.otoc_coefficients.is_empty() {
        bundle.add_text("otoc_c_m.csv", indexed("m, c_m", &report.otoc_coefficients));
    }
    let mut t = String::from("n, d_n\n");
    for (n, d) in &report.cumulant_prefactors {
        let _ = writeln!(t, "{n}, {d:.17e}");
    }
    bundle.add_text("cumulant_d_n.csv", t);
    let mut t = String::from("m, pairings, factorial\n");
    for (m, (a, b)) in report
        .expectation_pairings
        .iter()
        .zip(&report.expectation_factorial)
        .enumerate()
    {
        let _ = writeln!(t, "{m}, {a:.17e}, {b:.17e}");
    }
    bundle.add_text("expectation_a_m.csv", t);
    Outcome::new(report, bundle)
}

fn indexed(header: &str, values: &[f64]) -> String {
    let mut t = format!("{header}\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(t, "{i}, {v:.17e}");
    }
    t
}
