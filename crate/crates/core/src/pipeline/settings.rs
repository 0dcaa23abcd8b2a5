use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::KrylovConfig;

/// A time given in one of the natural units of a quench.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimePoint {
    /// Absolute time in `1/J`.
    Time(f64),
    /// Multiple of `1/λ`.
    InverseRate(f64),
    /// Multiple of the Ehrenfest time.
    Ehrenfest(f64),
}

impl TimePoint {
    pub fn resolve(&self, lambda: f64, t_ehrenfest: f64) -> f64 {
        match *self {
            TimePoint::Time(t) => t,
            TimePoint::InverseRate(x) => x / lambda,
            TimePoint::Ehrenfest(x) => x * t_ehrenfest,
        }
    }
}

/// Uniform grid between two time points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: TimePoint,
    pub end: TimePoint,
    pub points: usize,
}

impl GridSpec {
    pub fn new(start: TimePoint, end: TimePoint, points: usize) -> Self {
        Self { start, end, points }
    }

    pub fn resolve(&self, lambda: f64, t_ehrenfest: f64) -> Result<Vec<f64>> {
        let (a, b) = (
            self.start.resolve(lambda, t_ehrenfest),
            self.end.resolve(lambda, t_ehrenfest),
        );
        if self.points < 2 || !(a >= 0.0) || !(b > a) || !b.is_finite() {
            return Err(Error::Config(format!(
                "grid: need at least 2 points on 0 ≤ start < end, got {} points on [{a}, {b}]",
                self.points
            )));
        }
        Ok(crate::observables::uniform_grid(a, b, self.points))
    }
}

/// Fit window `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub start: TimePoint,
    pub end: TimePoint,
}

impl WindowSpec {
    pub fn new(start: TimePoint, end: TimePoint) -> Self {
        Self { start, end }
    }

    pub fn resolve(&self, lambda: f64, t_ehrenfest: f64) -> Result<(f64, f64)> {
        let w = (
            self.start.resolve(lambda, t_ehrenfest),
            self.end.resolve(lambda, t_ehrenfest),
        );
        if !(w.1 > w.0) {
            return Err(Error::Config(format!(
                "window: empty interval [{}, {}]",
                w.0, w.1
            )));
        }
        Ok(w)
    }
}

/// Prequench ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleSpec {
    Ground,
    /// Boltzmann mixture at `β = beta_delta/Δ`.
    Thermal {
        beta_delta: f64,
    },
}

impl EnsembleSpec {
    /// Inverse temperature for a level spacing `delta`; `∞` for the ground
    /// state.
    pub fn beta(&self, delta: f64) -> Result<f64> {
        match *self {
            EnsembleSpec::Ground => Ok(f64::INFINITY),
            EnsembleSpec::Thermal { beta_delta } if beta_delta > 0.0 && beta_delta.is_finite() => {
                Ok(beta_delta / delta)
            }
            EnsembleSpec::Thermal { beta_delta } => Err(Error::Config(format!(
                "ensemble: beta_delta must be positive and finite, got {beta_delta}"
            ))),
        }
    }
}

/// Krylov settings as they appear in a config file. `max_dt` is optional
/// because JSON has no infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSpec {
    pub max_subspace: usize,
    pub step_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_dt: Option<f64>,
}

impl Default for PropagationSpec {
    fn default() -> Self {
        let k = KrylovConfig::default();
        Self {
            max_subspace: k.max_subspace,
            step_tolerance: k.step_tolerance,
            max_dt: None,
        }
    }
}

impl PropagationSpec {
    pub fn krylov(&self) -> Result<KrylovConfig> {
        let cfg = KrylovConfig {
            max_subspace: self.max_subspace,
            step_tolerance: self.step_tolerance,
            max_dt: self.max_dt.unwrap_or(f64::INFINITY),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
