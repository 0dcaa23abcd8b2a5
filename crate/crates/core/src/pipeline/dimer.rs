//! Two-site experiments after a quench `α_pre → α_post`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{
    build_hamiltonian, prequench_eigenbasis_with, FockBasis, OperatorExpr, PrequenchConfig,
};
use crate::meanfield::{ehrenfest_time, taylor_v, PhaseSpacePolynomial};
use crate::observables::{
    collapse_statistic, cumulants_numeric, expectation_scan, find_plateau, fit_exponent,
    matrix_element_scan, otoc_numeric, phase_deviation, spread_curve, window_indices, Evolution,
    Fit, Manifest, Plateau, ThermalEnsemble, TimeSeries,
};
use crate::propagator::{KrylovConfig, MirrorSpectrum, Vector};
use crate::sparse::SparseOperator;
use crate::weyl::{
    dyson_expand, linear_x_coefficient, otoc_finite_t, quantize_observable, quantize_v,
    DimerQuench, ScalingPrediction, WickFactor,
};

use super::bundle::{Bundle, Outcome};
use super::settings::{EnsembleSpec, GridSpec, PropagationSpec, TimePoint, WindowSpec};

/// Two-site Bose-Hubbard model with the interaction switched from
/// `α_pre` to `α_post` (`α = −UÑ/2J`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimerModel {
    pub particles: u32,
    pub alpha_pre: f64,
    pub alpha_post: f64,
}

impl DimerModel {
    pub fn quench(&self) -> DimerQuench {
        DimerQuench {
            alpha_pre: self.alpha_pre,
            alpha_post: self.alpha_post,
            particles: self.particles,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::Config(format!(
                "model.particles: need N ≥ 2, got {}",
                self.particles
            )));
        }
        if !self.alpha_post.is_finite() {
            return Err(Error::Config("model.alpha_post: must be finite".into()));
        }
        // The prequench eigenbasis is that of the free Hamiltonian.
        if self.alpha_pre != 0.0 {
            return Err(Error::Config(format!(
                "model.alpha_pre: only the non-interacting prequench α = 0 is supported, got {}",
                self.alpha_pre
            )));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.alpha_post <= 1.0 {
            vec![format!(
                "α_post = {} does not cross the self-trapping transition at α = 1; no exponential growth is expected",
                self.alpha_post
            )]
        } else {
            Vec::new()
        }
    }

    fn describe(&self) -> String {
        format!("alpha {} -> {}", self.alpha_pre, self.alpha_post)
    }
}

/// How states are propagated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Krylov,
    /// Exact diagonalization in the two exchange-parity sectors.
    Spectral,
    /// As `Spectral`, keeping only the eigenpairs in the energy window that
    /// holds the measured states up to a weight of 1e-14.
    Windowed,
}

/// Basis, postquench Hamiltonian and the scales of one dimer quench.
#[derive(Clone, Debug)]
pub struct DimerSystem {
    pub model: DimerModel,
    pub basis: FockBasis,
    pub hamiltonian: SparseOperator,
    pub lambda: f64,
    pub t_ehrenfest: f64,
    pub hbar: f64,
    /// Prequench level spacing `Δ`.
    pub delta: f64,
    pub prequench: PrequenchConfig,
}

impl DimerSystem {
    pub fn new(model: &DimerModel) -> Result<Self> {
        model.validate()?;
        let basis = FockBasis::new(2, model.particles)?;
        let q = model.quench();
        let lambda = q.lambda()?;
        let hamiltonian = build_hamiltonian(
            &basis,
            1.0,
            -2.0 * model.alpha_post / basis.n_tilde(),
            false,
        );
        Ok(Self {
            model: *model,
            t_ehrenfest: ehrenfest_time(model.particles, lambda)?,
            hbar: q.hbar(),
            delta: q.omega()?,
            lambda,
            basis,
            hamiltonian,
            prequench: PrequenchConfig::default(),
        })
    }

    /// Diagonal operator and its classical polynomial in `z`.
    pub fn observable(&self, spec: &str) -> Result<(Vec<f64>, PhaseSpacePolynomial)> {
        let expr = OperatorExpr::parse(spec)?;
        Ok((
            expr.diagonal(&self.basis)?,
            PhaseSpacePolynomial::in_z(&expr.z_polynomial()?),
        ))
    }

    pub fn prediction(&self, spec: &str, order: usize) -> Result<ScalingPrediction> {
        let (_, poly) = self.observable(spec)?;
        ScalingPrediction::dimer(self.model.quench(), &poly, order)
    }

    pub fn ensemble(&self, spec: &EnsembleSpec, mass_tolerance: f64) -> Result<ThermalEnsemble> {
        match spec {
            EnsembleSpec::Ground => ThermalEnsemble::ground_state(&self.basis, &self.prequench),
            _ => ThermalEnsemble::thermal(
                &self.basis,
                spec.beta(self.delta)?,
                mass_tolerance,
                &self.prequench,
            ),
        }
    }

    pub fn grid(&self, spec: &GridSpec) -> Result<Vec<f64>> {
        spec.resolve(self.lambda, self.t_ehrenfest)
    }

    pub fn window(&self, spec: &WindowSpec) -> Result<(f64, f64)> {
        spec.resolve(self.lambda, self.t_ehrenfest)
    }

    pub fn time(&self, p: &TimePoint) -> f64 {
        p.resolve(self.lambda, self.t_ehrenfest)
    }

    fn manifest(&self, window: (f64, f64), config: serde_json::Value, build: &str) -> Manifest {
        Manifest {
            model: format!("dimer N={}", self.model.particles),
            quench: self.model.describe(),
            hbar_eff: self.hbar,
            lambda: self.lambda,
            t_ehrenfest: self.t_ehrenfest,
            window,
            build: build.to_string(),
            config,
            outputs: Vec::new(),
            results: BTreeMap::new(),
        }
    }
}

/// Owner of whatever a propagation method needs.
enum Engine<'a> {
    Krylov(&'a SparseOperator, KrylovConfig),
    Spectral(MirrorSpectrum),
}

impl<'a> Engine<'a> {
    /// `states` are the vectors that will be propagated.
    fn new(
        system: &'a DimerSystem,
        method: Method,
        propagation: &PropagationSpec,
        states: &[Vector],
    ) -> Result<Self> {
        Ok(match method {
            Method::Krylov => Engine::Krylov(&system.hamiltonian, propagation.krylov()?),
            Method::Spectral => Engine::Spectral(MirrorSpectrum::new(&system.hamiltonian)?),
            Method::Windowed => Engine::Spectral(MirrorSpectrum::covering(
                &system.hamiltonian,
                states,
                1e-14,
            )?),
        })
    }

    fn evolution(&self) -> Evolution<'_> {
        match self {
            Engine::Krylov(h, cfg) => Evolution::Krylov { h, cfg },
            Engine::Spectral(s) => Evolution::Spectral(s),
        }
    }
}

fn relative_error(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs()
}

fn default_mass_tolerance() -> f64 {
    1e-10
}

fn spectral() -> Method {
    Method::Spectral
}

// ---------------------------------------------------------------------------
// Matrix elements

/// `⟨k|Â(t)|l⟩` in the prequench eigenbasis for one `l` and several `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixElementConfig {
    pub model: DimerModel,
    pub observable: String,
    pub l: usize,
    pub k: Vec<usize>,
    pub grid: GridSpec,
    pub window: WindowSpec,
    /// Highest `C_k` computed.
    pub expansion_order: usize,
    /// Phases are checked for `|k − l|` up to this distance.
    pub phase_max_distance: usize,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub propagation: PropagationSpec,
}

impl MatrixElementConfig {
    /// `Â = ẑ + ẑ²`, `l = 10`, `k = 4..=16` after the quench `α: 0 → 2.5`.
    pub fn figure(particles: u32) -> Self {
        Self {
            model: DimerModel {
                particles,
                alpha_pre: 0.0,
                alpha_post: 2.5,
            },
            observable: "z + z^2".into(),
            l: 10,
            k: (4..=16).filter(|&k| k != 10).collect(),
            grid: GridSpec::new(TimePoint::Time(0.0), TimePoint::Ehrenfest(1.2), 241),
            window: WindowSpec::new(TimePoint::InverseRate(1.5), TimePoint::Ehrenfest(0.8)),
            expansion_order: 16,
            phase_max_distance: 4,
            method: Method::Windowed,
            propagation: PropagationSpec {
                max_subspace: 45,
                ..PropagationSpec::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixElementRow {
    pub k: usize,
    pub l: usize,
    /// Vanishes identically by exchange parity.
    pub forbidden: bool,
    pub rate: Option<f64>,
    pub predicted_rate: f64,
    pub rate_error: Option<f64>,
    pub c_kl: (f64, f64),
    pub plateau: Option<Plateau>,
    /// Largest phase residual in the window, where checked.
    pub max_phase_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixElementReport {
    pub lambda: f64,
    pub t_ehrenfest: f64,
    pub window: (f64, f64),
    pub rows: Vec<MatrixElementRow>,
    pub max_rate_error: f64,
    /// Relative spread of the collapse curves in the window.
    pub collapse_spread: Option<f64>,
    /// The spread at each window point, `(t, spread)`.
    pub collapse_spread_curve: Vec<(f64, f64)>,
    pub max_phase_residual: Option<f64>,
}

pub fn run_matrix_elements(
    cfg: &MatrixElementConfig,
    build: &str,
) -> Result<Outcome<MatrixElementReport>> {
    let sys = DimerSystem::new(&cfg.model)?;
    if cfg.k.is_empty() || cfg.k.contains(&cfg.l) {
        return Err(Error::Config(
            "k: need a nonempty list of levels different from l".into(),
        ));
    }
    let grid = sys.grid(&cfg.grid)?;
    let window = sys.window(&cfg.window)?;
    let (diag, _) = sys.observable(&cfg.observable)?;
    let pred = sys.prediction(&cfg.observable, cfg.expansion_order)?;
    let levels = cfg.k.iter().copied().max().unwrap().max(cfg.l) + 1;
    let pre = prequench_eigenbasis_with(&sys.basis, levels, &sys.prequench)?;
    let measured: Vec<Vector> = cfg
        .k
        .iter()
        .chain([&cfg.l])
        .map(|&i| pre.states[i].clone())
        .collect();
    let engine = Engine::new(&sys, cfg.method, &cfg.propagation, &measured)?;
    let a = SparseOperator::from_diagonal(&diag);
    let series = matrix_element_scan(&engine.evolution(), &a, &pre.states, &cfg.k, cfg.l, &grid)?;

    let mut bundle = Bundle::new(sys.manifest(window, serde_json::to_value(cfg)?, build));
    let scale = series
        .iter()
        .flat_map(|s| s.values.iter().map(|v| v.norm()))
        .fold(0.0, f64::max);
    let mut rows = Vec::new();
    let mut collapsed = Vec::new();
    for (s, &k) in series.iter().zip(&cfg.k) {
        let n = k.abs_diff(cfg.l);
        let name = format!("k{k}_l{}", cfg.l);
        let s = s.clone().with_meta("observable", &cfg.observable);
        bundle.add_series(&format!("matrix_element_{name}"), &s);
        let forbidden = s.values.iter().all(|v| v.norm() <= 1e-12 * scale);
        let c_kl = pred.ckl(k, cfg.l)?;
        let predicted_rate = 2.0 * sys.lambda * n as f64;
        let mut row = MatrixElementRow {
            k,
            l: cfg.l,
            forbidden,
            rate: None,
            predicted_rate,
            rate_error: None,
            c_kl: (c_kl.re, c_kl.im),
            plateau: None,
            max_phase_residual: None,
        };
        if !forbidden {
            let sq = s.map_real(|_, v| v.norm_sqr());
            let fit = fit_exponent(&sq, window)?;
            row.rate = Some(fit.rate);
            row.rate_error = Some(relative_error(fit.rate, predicted_rate));
            if c_kl.norm() > 0.0 {
                let f = collapse_statistic(&s, n, sys.lambda, sys.hbar, Some(c_kl))?;
                row.plateau = find_plateau(&f, window, 0.1);
                bundle.add_series(&format!("collapse_{name}"), &f);
                collapsed.push(f);
            }
            if n <= cfg.phase_max_distance {
                let r = phase_deviation(&s, k, cfg.l, pred.phi)?;
                row.max_phase_residual = Some(max_abs_in(&r.series, window));
                bundle.add_series(&format!("phase_{name}"), &r.series);
            }
        }
        rows.push(row);
    }
    let refs: Vec<&TimeSeries> = collapsed.iter().collect();
    let collapse_spread_curve = if refs.len() >= 2 {
        spread_curve(&refs, window)?
    } else {
        Vec::new()
    };
    let collapse_spread = collapse_spread_curve.iter().map(|p| p.1).reduce(f64::max);
    let report = MatrixElementReport {
        lambda: sys.lambda,
        t_ehrenfest: sys.t_ehrenfest,
        window,
        max_rate_error: rows.iter().filter_map(|r| r.rate_error).fold(0.0, f64::max),
        max_phase_residual: rows
            .iter()
            .filter_map(|r| r.max_phase_residual)
            .reduce(f64::max),
        collapse_spread,
        collapse_spread_curve,
        rows,
    };
    Outcome::new(report, bundle)
}

fn max_abs_in(s: &TimeSeries, window: (f64, f64)) -> f64 {
    window_indices(&s.grid, window)
        .into_iter()
        .map(|i| s.values[i].re.abs())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// OTOC

/// Optional finite-time prediction from the Dyson-expanded symbol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteTimeSpec {
    /// ħ half-order of the Heisenberg symbol of `Â`.
    pub half_order: usize,
    /// Taylor degree of `v`.
    pub v_order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OtocConfig {
    pub model: DimerModel,
    pub a: String,
    pub b: String,
    pub ensemble: EnsembleSpec,
    #[serde(default = "default_mass_tolerance")]
    pub mass_tolerance: f64,
    pub grid: GridSpec,
    /// Window of the leading-order comparison and the growth-rate fit.
    pub window: WindowSpec,
    /// Highest `m` kept in the series.
    pub series_order: usize,
    /// The search for the series breakdown starts here.
    pub departure_start: TimePoint,
    #[serde(default = "spectral")]
    pub method: Method,
    #[serde(default)]
    pub propagation: PropagationSpec,
    #[serde(default)]
    pub finite_time: Option<FiniteTimeSpec>,
}

impl OtocConfig {
    /// `Â = B̂ = ẑ` at `k_BT = 2Δ`, series through `m = 25`.
    pub fn figure(particles: u32) -> Self {
        Self {
            model: DimerModel {
                particles,
                alpha_pre: 0.0,
                alpha_post: 2.5,
            },
            a: "z".into(),
            b: "z".into(),
            ensemble: EnsembleSpec::Thermal { beta_delta: 0.5 },
            mass_tolerance: default_mass_tolerance(),
            grid: GridSpec::new(TimePoint::Ehrenfest(0.0), TimePoint::Ehrenfest(1.0), 101),
            window: WindowSpec::new(TimePoint::InverseRate(1.5), TimePoint::Ehrenfest(0.7)),
            series_order: 25,
            departure_start: TimePoint::InverseRate(1.5),
            method: Method::Spectral,
            propagation: PropagationSpec::default(),
            finite_time: Some(FiniteTimeSpec {
                half_order: 4,
                v_order: 8,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtocReport {
    pub lambda: f64,
    pub t_ehrenfest: f64,
    pub window: (f64, f64),
    pub beta: f64,
    pub ensemble_size: usize,
    pub truncation_mass: f64,
    /// Coefficient of the linear `b₋` term of `B̂`.
    pub beta_b: f64,
    /// Series coefficients `c_m`.
    pub coefficients: Vec<f64>,
    /// Largest `|numeric/leading − 1|` in the window.
    pub leading_max_deviation: f64,
    pub growth: Fit,
    pub growth_rate_error: f64,
    /// First time after `departure_start` where the series and the
    /// numerics differ by a factor 2 or more.
    pub departure_time: Option<f64>,
    pub departure_fraction: Option<f64>,
    /// Largest `|numeric/finite-t − 1|` in the window.
    pub finite_time_max_deviation: Option<f64>,
}

pub fn run_otoc(cfg: &OtocConfig, build: &str) -> Result<Outcome<OtocReport>> {
    let sys = DimerSystem::new(&cfg.model)?;
    let grid = sys.grid(&cfg.grid)?;
    let window = sys.window(&cfg.window)?;
    let (a_diag, a_poly) = sys.observable(&cfg.a)?;
    let (b_diag, b_poly) = sys.observable(&cfg.b)?;
    let ensemble = sys.ensemble(&cfg.ensemble, cfg.mass_tolerance)?;
    let beta = ensemble.beta.unwrap_or(f64::INFINITY);

    let pred = ScalingPrediction::dimer(sys.model.quench(), &a_poly, 2 * cfg.series_order + 2)?;
    let b_symbol = quantize_observable(&b_poly, sys.lambda)?;
    let beta_b = linear_x_coefficient(&b_symbol);
    let coefficients = pred.otoc_coefficients(beta_b, cfg.series_order)?;

    let engine = Engine::new(&sys, cfg.method, &cfg.propagation, &ensemble.states)?;
    let a = SparseOperator::from_diagonal(&a_diag);
    let b = SparseOperator::from_diagonal(&b_diag);
    let numeric = otoc_numeric(&engine.evolution(), &a, &b, &ensemble, &grid)?;
    let leading = curve(&grid, |t| pred.otoc(&coefficients[..1], t, beta))?;
    let series = curve(&grid, |t| pred.otoc(&coefficients, t, beta))?;

    let leading_max_deviation = window_indices(&grid, window)
        .into_iter()
        .map(|i| (numeric.values[i].re / leading.values[i].re - 1.0).abs())
        .fold(0.0, f64::max);
    let growth = fit_exponent(&numeric, window)?;
    let start = sys.time(&cfg.departure_start);
    let departure_time = grid
        .iter()
        .zip(numeric.values.iter().zip(&series.values))
        .filter(|(&t, _)| t >= start)
        .find(|(_, (n, s))| {
            let r = s.re / n.re;
            !(r > 0.5 && r < 2.0)
        })
        .map(|(&t, _)| t);

    let mut bundle = Bundle::new(sys.manifest(window, serde_json::to_value(cfg)?, build));
    bundle.add_series(
        "otoc_numeric",
        &numeric.clone().with_meta("ensemble_size", ensemble.len()),
    );
    bundle.add_series("otoc_leading", &leading);
    bundle.add_series(
        "otoc_series",
        &series.with_meta("series_order", cfg.series_order),
    );
    let mut finite_time_max_deviation = None;
    if let Some(ft) = cfg.finite_time {
        let qv = quantize_v(&taylor_v(sys.model.alpha_post, ft.v_order)?, sys.lambda)?;
        let ah = dyson_expand(
            &quantize_observable(&a_poly, sys.lambda)?,
            &qv,
            ft.half_order,
        )?;
        let poly = otoc_finite_t(&ah, &b_symbol, &[pred.covariance(beta)?])?;
        let fin = curve(&grid, |t| Ok(poly.eval(t, &[sys.lambda], sys.hbar).re))?;
        finite_time_max_deviation = Some(
            window_indices(&grid, window)
                .into_iter()
                .map(|i| (numeric.values[i].re / fin.values[i].re - 1.0).abs())
                .fold(0.0, f64::max),
        );
        bundle.add_series(
            "otoc_finite_time",
            &fin.with_meta("half_order", ft.half_order),
        );
    }
    let report = OtocReport {
        lambda: sys.lambda,
        t_ehrenfest: sys.t_ehrenfest,
        window,
        beta,
        ensemble_size: ensemble.len(),
        truncation_mass: ensemble.truncation_mass,
        beta_b,
        coefficients,
        leading_max_deviation,
        growth_rate_error: relative_error(growth.rate, 2.0 * sys.lambda),
        growth,
        departure_fraction: departure_time.map(|t| t / sys.t_ehrenfest),
        departure_time,
        finite_time_max_deviation,
    };
    Outcome::new(report, bundle)
}

fn curve(grid: &[f64], f: impl Fn(f64) -> Result<f64>) -> Result<TimeSeries> {
    TimeSeries::real(
        grid.to_vec(),
        grid.iter().map(|&t| f(t)).collect::<Result<_>>()?,
    )
}

// ---------------------------------------------------------------------------
// Cumulants and expectation values

/// Compares the expectation value of a diagonal observable at one time with
/// the resummed series under both combinatorial factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WickSpec {
    pub observable: String,
    pub time: TimePoint,
    /// Relative agreement that counts as a match.
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CumulantConfig {
    pub model: DimerModel,
    pub observable: String,
    pub ensemble: EnsembleSpec,
    #[serde(default = "default_mass_tolerance")]
    pub mass_tolerance: f64,
    pub grid: GridSpec,
    pub window: WindowSpec,
    pub n_max: usize,
    /// Orders whose growth rates are fitted.
    pub fit_orders: Vec<usize>,
    pub expansion_order: usize,
    #[serde(default = "spectral")]
    pub method: Method,
    #[serde(default)]
    pub propagation: PropagationSpec,
    #[serde(default)]
    pub wick: Option<WickSpec>,
}

impl CumulantConfig {
    /// Cumulants of `ẑ` through `n = 10` at `k_BT = 2Δ`, plus the
    /// expectation value of `ẑ + ẑ²` at `0.6 t_E`.
    pub fn figure(particles: u32) -> Self {
        Self {
            model: DimerModel {
                particles,
                alpha_pre: 0.0,
                alpha_post: 2.5,
            },
            observable: "z".into(),
            ensemble: EnsembleSpec::Thermal { beta_delta: 0.5 },
            mass_tolerance: default_mass_tolerance(),
            grid: GridSpec::new(TimePoint::Ehrenfest(0.0), TimePoint::Ehrenfest(1.0), 201),
            window: WindowSpec::new(TimePoint::InverseRate(1.5), TimePoint::Ehrenfest(0.6)),
            n_max: 10,
            fit_orders: vec![2, 4, 6, 8],
            expansion_order: 24,
            method: Method::Spectral,
            propagation: PropagationSpec::default(),
            wick: Some(WickSpec {
                observable: "z + z^2".into(),
                time: TimePoint::Ehrenfest(0.6),
                tolerance: 0.05,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantRow {
    pub n: usize,
    /// Leading prefactor `d_n`.
    pub d: f64,
    pub predicted_rate: f64,
    /// Fit over the reliable part of the window.
    pub fit: Option<Fit>,
    pub rate_error: Option<f64>,
    /// Grid points where `|κ_n|` is below its precision floor.
    pub precision_limited_points: usize,
    /// Last flagged time, if any.
    pub precision_limited_until: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WickReport {
    pub t: f64,
    pub renormalized_parameter: f64,
    pub numeric: f64,
    pub pairings: f64,
    pub factorial: f64,
    pub pairings_error: f64,
    pub factorial_error: f64,
    /// The variant that matches within tolerance while the other does not.
    pub winner: Option<WickFactor>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantReport {
    pub lambda: f64,
    pub t_ehrenfest: f64,
    pub window: (f64, f64),
    pub beta: f64,
    pub ensemble_size: usize,
    pub rows: Vec<CumulantRow>,
    pub wick: Option<WickReport>,
}

pub fn run_cumulants(cfg: &CumulantConfig, build: &str) -> Result<Outcome<CumulantReport>> {
    let sys = DimerSystem::new(&cfg.model)?;
    let grid = sys.grid(&cfg.grid)?;
    let window = sys.window(&cfg.window)?;
    if let Some(&n) = cfg.fit_orders.iter().find(|&&n| n < 2 || n > cfg.n_max) {
        return Err(Error::Config(format!(
            "fit_orders: order {n} outside 2..={}",
            cfg.n_max
        )));
    }
    let (a_diag, _) = sys.observable(&cfg.observable)?;
    let pred = sys.prediction(&cfg.observable, cfg.expansion_order)?;
    let ensemble = sys.ensemble(&cfg.ensemble, cfg.mass_tolerance)?;
    let beta = ensemble.beta.unwrap_or(f64::INFINITY);
    let engine = Engine::new(&sys, cfg.method, &cfg.propagation, &ensemble.states)?;
    let evo = engine.evolution();
    let table = cumulants_numeric(&evo, &a_diag, &ensemble, &grid, cfg.n_max)?;

    let mut bundle = Bundle::new(sys.manifest(window, serde_json::to_value(cfg)?, build));
    let mut rows = Vec::new();
    for n in 2..=cfg.n_max {
        let series = table.series(n)?;
        let d = pred.cumulant(n)?;
        let flagged: Vec<usize> = (0..grid.len())
            .filter(|&i| table.precision_limited(n, i))
            .collect();
        let until = flagged.last().map(|&i| grid[i]);
        let mut row = CumulantRow {
            n,
            d: d.d,
            predicted_rate: 2.0 * sys.lambda * (n - 1) as f64,
            fit: None,
            rate_error: None,
            precision_limited_points: flagged.len(),
            precision_limited_until: until,
        };
        if cfg.fit_orders.contains(&n) {
            // Flagged points carry no digits; start after the last one.
            let start = until.map_or(window.0, |t| window.0.max(t + 1e-12));
            let fit = fit_exponent(&series, (start, window.1))?;
            row.rate_error = Some(relative_error(fit.rate, row.predicted_rate));
            row.fit = Some(fit);
        }
        let predicted = curve(&grid, |t| pred.cumulant_at(&d, t, beta))?;
        bundle.add_series(&format!("cumulant_{n}"), &series);
        bundle.add_series(&format!("cumulant_{n}_leading"), &predicted);
        rows.push(row);
    }
    let wick = match &cfg.wick {
        Some(w) => {
            let report = wick_check(&sys, &evo, &ensemble, w, cfg.expansion_order)?;
            Some(report)
        }
        None => None,
    };
    let report = CumulantReport {
        lambda: sys.lambda,
        t_ehrenfest: sys.t_ehrenfest,
        window,
        beta,
        ensemble_size: ensemble.len(),
        rows,
        wick,
    };
    Outcome::new(report, bundle)
}

fn wick_check(
    sys: &DimerSystem,
    evo: &Evolution,
    ensemble: &ThermalEnsemble,
    w: &WickSpec,
    order: usize,
) -> Result<WickReport> {
    let t = sys.time(&w.time);
    let (diag, _) = sys.observable(&w.observable)?;
    let pred = sys.prediction(&w.observable, order)?;
    let beta = ensemble.beta.unwrap_or(f64::INFINITY);
    let numeric = expectation_scan(evo, &diag, ensemble, &[t])?.values[0].re;
    let pairings = pred.expectation(t, beta, WickFactor::Pairings)?;
    let factorial = pred.expectation(t, beta, WickFactor::PrintedFactorial)?;
    let (pe, fe) = (
        relative_error(pairings, numeric),
        relative_error(factorial, numeric),
    );
    let winner = match (pe < w.tolerance, fe < w.tolerance) {
        (true, false) => Some(WickFactor::Pairings),
        (false, true) => Some(WickFactor::PrintedFactorial),
        _ => None,
    };
    Ok(WickReport {
        t,
        renormalized_parameter: pred.renorm_param(t, beta)?,
        numeric,
        pairings,
        factorial,
        pairings_error: pe,
        factorial_error: fe,
        winner,
    })
}
