//! Measurement layer: time series of matrix elements, OTOCs and cumulants
//! over thermal prequench ensembles, and the fits and collapse statistics
//! applied to them.

mod analysis;
mod ensemble;
mod measure;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analysis::{
    collapse_statistic, find_plateau, fit_exponent, phase_deviation, relative_spread, spread_curve,
    window_indices, Fit, PhaseResidual, Plateau,
};
pub use ensemble::ThermalEnsemble;
pub use measure::{
    cumulants_from_moments, cumulants_numeric, expectation_scan, matrix_element_scan,
    moments_from_cumulants, otoc_numeric, sandwich_scan, CumulantTable, Evolution,
    MAX_CUMULANT_ORDER,
};

/// Values on a strictly increasing time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Real series are written as `t, value`.
    pub real: bool,
    pub meta: BTreeMap<String, String>,
}

impl TimeSeries {
    pub fn complex(grid: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        Self::build(grid, values, false)
    }

    pub fn real(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::build(
            grid,
            values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            true,
        )
    }

    fn build(grid: Vec<f64>, values: Vec<Complex64>, real: bool) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "grid has {} points but there are {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(
                "time grid must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self {
            grid,
            values,
            real,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn abs_sq(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Applies `f` pointwise, producing a real series with the same meta.
    pub fn map_real(&self, f: impl Fn(f64, Complex64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self
                .grid
                .iter()
                .zip(&self.values)
                .map(|(&t, &v)| Complex64::new(f(t, v), 0.0))
                .collect(),
            real: true,
            meta: self.meta.clone(),
        }
    }

    /// CSV with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        if self.real {
            out.push_str("t, value\n");
            for (t, v) in self.grid.iter().zip(&self.values) {
                let _ = writeln!(out, "{t:.16e}, {:.16e}", v.re);
            }
        } else {
            out.push_str("t, re, im\n");
            for (t, v) in self.grid.iter().zip(&self.values) {
                let _ = writeln!(out, "{t:.16e}, {:.16e}, {:.16e}", v.re, v.im);
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parses the output of [`TimeSeries::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut grid = Vec::new();
        let mut values = Vec::new();
        let mut real = None;
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some((k, v)) = rest.split_once(": ") {
                    meta.insert(k.to_string(), v.to_string());
                }
                continue;
            }
            if real.is_none() {
                real = Some(match line.trim() {
                    "t, value" => true,
                    "t, re, im" => false,
                    other => return Err(Error::Parse(format!("unknown CSV header `{other}`"))),
                });
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{e} in `{line}`")))
                })
                .collect::<Result<_>>()?;
            match (real, fields.as_slice()) {
                (Some(true), [t, v]) => {
                    grid.push(*t);
                    values.push(Complex64::new(*v, 0.0));
                }
                (Some(false), [t, re, im]) => {
                    grid.push(*t);
                    values.push(Complex64::new(*re, *im));
                }
                _ => return Err(Error::Parse(format!("malformed CSV row `{line}`"))),
            }
        }
        let mut s = Self::build(grid, values, real.unwrap_or(true))?;
        s.meta = meta;
        Ok(s)
    }
}

/// Uniform grid of `points` times on `[t0, t1]`.
pub fn uniform_grid(t0: f64, t1: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![t0];
    }
    (0..points)
        .map(|i| t0 + (t1 - t0) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Run description written next to every CSV bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub model: String,
    pub quench: String,
    pub hbar_eff: f64,
    pub lambda: f64,
    pub t_ehrenfest: f64,
    pub window: (f64, f64),
    pub build: String,
    /// The configuration that produced the bundle, verbatim.
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    /// Free-form results (fitted rates, pass/fail summaries).
    #[serde(default)]
    pub results: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
