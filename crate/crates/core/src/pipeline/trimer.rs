//! Three-site ring after an interaction quench from `U = 0`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{
    build_hamiltonian, prequench_eigenbasis_with, site_number_operator, FockBasis, PrequenchConfig,
};
use crate::meanfield::{ehrenfest_time, gp_stability};
use crate::observables::{
    collapse_statistic, fit_exponent, sandwich_scan, window_indices, Evolution, Manifest,
    TimeSeries,
};
use crate::propagator::Vector;

use super::bundle::{Bundle, Outcome};
use super::settings::{GridSpec, PropagationSpec, TimePoint, WindowSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrimerConfig {
    pub particles: u32,
    /// Postquench `u = UN/J`.
    pub u_post: f64,
    /// All labels `(k₁, k₂)` with `k₁ + k₂ ≤ max_excitation` are measured.
    pub max_excitation: u32,
    pub grid: GridSpec,
    pub window: WindowSpec,
    #[serde(default)]
    pub propagation: PropagationSpec,
}

impl TrimerConfig {
    /// `N = 300`, `U: 0 → −20J/N`, `k₁ + k₂ ≤ 5`.
    pub fn figure() -> Self {
        Self {
            particles: 300,
            u_post: -20.0,
            max_excitation: 5,
            grid: GridSpec::new(TimePoint::Time(0.0), TimePoint::Ehrenfest(1.2), 121),
            window: WindowSpec::new(TimePoint::InverseRate(1.0), TimePoint::Ehrenfest(1.0)),
            propagation: PropagationSpec {
                max_subspace: 45,
                ..PropagationSpec::default()
            },
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.u_post > -4.5 {
            vec![format!(
                "u = {} is above the bifurcation at u = −4.5; no exponential growth is expected",
                self.u_post
            )]
        } else {
            Vec::new()
        }
    }
}

/// The two measured operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrimerObservable {
    /// `n̂₁(t)/N`.
    Occupation = 0,
    /// `[n̂₁(t), n̂₂(0)]/N^{3/2}`.
    Commutator = 1,
}

impl TrimerObservable {
    /// Power of `√ħ e^{λt}` that dominates `⟨k₁k₂|Â(t)|0⟩`. The commutator
    /// trades one `b₊` for a `b₋` contraction, so reaching level `K` takes
    /// one more power of the growing quadrature.
    pub fn order(&self, excitation: u32) -> usize {
        match self {
            TrimerObservable::Occupation => excitation as usize,
            TrimerObservable::Commutator => excitation as usize + 1,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            TrimerObservable::Occupation => "occupation",
            TrimerObservable::Commutator => "commutator",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrimerRow {
    pub observable: TrimerObservable,
    pub label: (u32, u32),
    pub forbidden: bool,
    pub rate: Option<f64>,
    pub predicted_rate: f64,
    pub rate_error: Option<f64>,
    /// Mean of the collapse curve in the window.
    pub level: Option<f64>,
    /// `(max − min)/mean` of the collapse curve in the window.
    pub flatness: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrimerGroup {
    pub observable: TrimerObservable,
    pub excitation: u32,
    pub members: usize,
    /// `(max − min)/mean` of the members' levels.
    pub spread: Option<f64>,
    /// Mean level of the members.
    pub level: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrimerReport {
    pub lambda: f64,
    pub t_ehrenfest: f64,
    pub hbar: f64,
    pub window: (f64, f64),
    pub rows: Vec<TrimerRow>,
    pub groups: Vec<TrimerGroup>,
    pub max_rate_error: f64,
    pub max_group_spread: f64,
}

pub fn run_trimer(cfg: &TrimerConfig, build: &str) -> Result<Outcome<TrimerReport>> {
    if cfg.particles < 2 || !cfg.u_post.is_finite() {
        return Err(Error::Config(
            "particles must be ≥ 2 and u_post finite".into(),
        ));
    }
    if cfg.max_excitation == 0 {
        return Err(Error::Config("max_excitation must be positive".into()));
    }
    let lambda = gp_stability(cfg.u_post, 3)?.leading_rate().ok_or_else(|| {
        Error::Config(format!(
            "u_post = {}: the uniform state is not unstable",
            cfg.u_post
        ))
    })?;
    let t_e = ehrenfest_time(cfg.particles, lambda)?;
    let basis = FockBasis::new(3, cfg.particles)?;
    let n = cfg.particles as f64;
    let hbar = 1.0 / basis.n_tilde();
    let h = build_hamiltonian(&basis, 1.0, cfg.u_post / n, true);
    let grid = cfg.grid.resolve(lambda, t_e)?;
    let window = cfg.window.resolve(lambda, t_e)?;

    let k = cfg.max_excitation;
    let count = ((k + 1) * (k + 2) / 2) as usize;
    let pre = prequench_eigenbasis_with(&basis, count, &PrequenchConfig::default())?;
    let ground = pre.find(&[0, 0]).ok_or_else(|| {
        Error::InvalidParameter("no condensate state among the prequench levels".into())
    })?;
    let labels: Vec<(usize, (u32, u32))> = pre
        .labels
        .iter()
        .enumerate()
        .filter(|(i, l)| *i != ground && l[0] + l[1] <= k)
        .map(|(i, l)| (i, (l[0], l[1])))
        .collect();

    // Vectors: prequench states, then n̂₂/√N applied to each of them.
    let n1 = site_number_operator(&basis, 1, true)?;
    let n2 = site_number_operator(&basis, 2, false)?.scaled(1.0 / n.sqrt());
    let m = pre.states.len();
    let mut vectors: Vec<Vector> = pre.states.clone();
    vectors.extend(pre.states.iter().map(|s| n2.apply_vec(s)));
    let mut pairs = Vec::new();
    for &(i, _) in &labels {
        pairs.push((i, ground));
        pairs.push((i, m + ground));
        pairs.push((m + i, ground));
    }
    let krylov = cfg.propagation.krylov()?;
    let evo = Evolution::Krylov {
        h: &h,
        cfg: &krylov,
    };
    let scans = sandwich_scan(&evo, &n1, vectors, &pairs, &grid)?;

    let manifest = Manifest {
        model: format!("trimer N={}", cfg.particles),
        quench: format!("u 0 -> {}", cfg.u_post),
        hbar_eff: hbar,
        lambda,
        t_ehrenfest: t_e,
        window,
        build: build.to_string(),
        config: serde_json::to_value(cfg)?,
        outputs: Vec::new(),
        results: BTreeMap::new(),
    };
    let mut bundle = Bundle::new(manifest);
    // Both observables for every label, each with the largest magnitude
    // over all labels as the scale for the selection rule.
    let mut series = Vec::new();
    for (j, &(_, (k1, k2))) in labels.iter().enumerate() {
        let comm = TimeSeries::complex(
            grid.clone(),
            scans[3 * j + 1]
                .values
                .iter()
                .zip(&scans[3 * j + 2].values)
                .map(|(a, b)| a - b)
                .collect(),
        )?;
        series.push((TrimerObservable::Occupation, (k1, k2), scans[3 * j].clone()));
        series.push((TrimerObservable::Commutator, (k1, k2), comm));
    }
    let scale = |obs: TrimerObservable| {
        series
            .iter()
            .filter(|s| s.0 == obs)
            .flat_map(|s| s.2.values.iter().map(|v| v.norm()))
            .fold(0.0, f64::max)
    };
    let scales = [
        scale(TrimerObservable::Occupation),
        scale(TrimerObservable::Commutator),
    ];

    let mut rows = Vec::new();
    let mut curves: BTreeMap<(u8, u32), Vec<f64>> = BTreeMap::new();
    for (obs, (k1, k2), s) in series {
        let tag = obs as u8;
        let exc = k1 + k2;
        let order = obs.order(exc);
        let name = format!("{}_k{k1}_{k2}", obs.name());
        let s = s.with_meta("k1", k1).with_meta("k2", k2);
        bundle.add_series(&format!("matrix_element_{name}"), &s);
        // Momentum conservation forbids some of them; what is left is
        // rounding.
        let forbidden = s
            .values
            .iter()
            .all(|v| v.norm() <= 1e-9 * scales[tag as usize]);
        let mut row = TrimerRow {
            observable: obs,
            label: (k1, k2),
            forbidden,
            rate: None,
            predicted_rate: 2.0 * lambda * order as f64,
            rate_error: None,
            level: None,
            flatness: None,
        };
        if !forbidden {
            let fit = fit_exponent(&s.map_real(|_, v| v.norm_sqr()), window)?;
            row.rate = Some(fit.rate);
            row.rate_error = Some((fit.rate - row.predicted_rate).abs() / row.predicted_rate);
            let f = collapse_statistic(&s, order, lambda, hbar, None)?;
            let (level, flat) = level_and_flatness(&f, window);
            row.level = Some(level);
            row.flatness = Some(flat);
            bundle.add_series(&format!("collapse_{name}"), &f);
            curves.entry((tag, exc)).or_default().push(level);
        }
        rows.push(row);
    }
    let mut groups = Vec::new();
    for ((tag, exc), levels) in curves {
        let mean = levels.iter().sum::<f64>() / levels.len() as f64;
        let (lo, hi) = levels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        groups.push(TrimerGroup {
            observable: if tag == 0 {
                TrimerObservable::Occupation
            } else {
                TrimerObservable::Commutator
            },
            excitation: exc,
            members: levels.len(),
            spread: (levels.len() >= 2).then(|| (hi - lo) / mean.abs()),
            level: mean,
        });
    }
    let report = TrimerReport {
        lambda,
        t_ehrenfest: t_e,
        hbar,
        window,
        max_rate_error: rows.iter().filter_map(|r| r.rate_error).fold(0.0, f64::max),
        max_group_spread: groups.iter().filter_map(|g| g.spread).fold(0.0, f64::max),
        rows,
        groups,
    };
    Outcome::new(report, bundle)
}

/// Mean of the collapse curve in the window and its `(max − min)/mean`.
fn level_and_flatness(f: &TimeSeries, window: (f64, f64)) -> (f64, f64) {
    let v: Vec<f64> = window_indices(&f.grid, window)
        .into_iter()
        .map(|i| f.values[i].re)
        .collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    (mean, (hi - lo) / mean.abs())
}
