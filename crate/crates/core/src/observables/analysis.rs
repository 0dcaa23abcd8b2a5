use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::TimeSeries;

/// Least-squares line through `ln|y|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub rate: f64,
    pub intercept: f64,
    /// Root-mean-square residual of `ln|y|`.
    pub residual: f64,
    pub points: usize,
}

/// Indices of grid points inside `[t0, t1]`.
pub fn window_indices(grid: &[f64], window: (f64, f64)) -> Vec<usize> {
    grid.iter()
        .enumerate()
        .filter(|(_, &t)| t >= window.0 && t <= window.1)
        .map(|(i, _)| i)
        .collect()
}

/// Fits `ln|y(t)| = rate·t + intercept` over the window. Complex series are
/// fitted by modulus; real series must keep one sign.
pub fn fit_exponent(series: &TimeSeries, window: (f64, f64)) -> Result<Fit> {
    let idx = window_indices(&series.grid, window);
    if idx.len() < 5 {
        return Err(Error::Window(format!(
            "{} points in [{}, {}], need at least 5",
            idx.len(),
            window.0,
            window.1
        )));
    }
    let mut sign = 0.0;
    let mut xs = Vec::with_capacity(idx.len());
    let mut ys = Vec::with_capacity(idx.len());
    for &i in &idx {
        let v = series.values[i];
        let mag = if series.real { v.re.abs() } else { v.norm() };
        if mag == 0.0 || !mag.is_finite() {
            return Err(Error::Window(format!(
                "zero or non-finite value at t = {}",
                series.grid[i]
            )));
        }
        if series.real {
            let s = v.re.signum();
            if sign != 0.0 && s != sign {
                return Err(Error::Window(format!(
                    "sign change near t = {}",
                    series.grid[i]
                )));
            }
            sign = s;
        }
        xs.push(series.grid[i]);
        ys.push(mag.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - rate * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(Fit {
        rate,
        intercept,
        residual,
        points: xs.len(),
    })
}

/// `f(t) = |value/c|^{2/order} / (ħ e^{2λt})`; constant when the series is
/// exactly `c (√ħ e^{λt})^{order}`.
pub fn collapse_statistic(
    series: &TimeSeries,
    order: usize,
    lambda: f64,
    hbar: f64,
    c: Option<Complex64>,
) -> Result<TimeSeries> {
    if order == 0 {
        return Err(Error::InvalidParameter(
            "collapse needs a nonzero order".into(),
        ));
    }
    if series.values.iter().all(|v| v.norm() == 0.0) {
        return Err(Error::InvalidParameter(
            "all-zero series (forbidden by the selection rule); excluded from the collapse".into(),
        ));
    }
    let scale = c.map(|c| c.norm()).unwrap_or(1.0);
    if scale == 0.0 {
        return Err(Error::InvalidParameter(
            "prediction coefficient vanishes".into(),
        ));
    }
    Ok(series
        .map_real(|t, v| {
            (v.norm() / scale).powf(2.0 / order as f64) / (hbar * (2.0 * lambda * t).exp())
        })
        .with_meta("collapse_order", order))
}

/// Longest run of consecutive window points whose values stay within a
/// relative band `(max − min)/mean ≤ band`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub start: f64,
    pub end: f64,
    pub level: f64,
    pub points: usize,
}

pub fn find_plateau(series: &TimeSeries, window: (f64, f64), band: f64) -> Option<Plateau> {
    let idx = window_indices(&series.grid, window);
    let vals: Vec<f64> = idx.iter().map(|&i| series.values[i].re).collect();
    let mut best: Option<(usize, usize)> = None;
    for s in 0..vals.len() {
        let (mut lo, mut hi) = (vals[s], vals[s]);
        let mut e = s;
        while e + 1 < vals.len() {
            let v = vals[e + 1];
            let (nlo, nhi) = (lo.min(v), hi.max(v));
            let mean = vals[s..=e + 1].iter().sum::<f64>() / (e + 2 - s) as f64;
            if (nhi - nlo) > band * mean.abs() {
                break;
            }
            lo = nlo;
            hi = nhi;
            e += 1;
        }
        if best.map_or(true, |(bs, be)| e - s > be - bs) {
            best = Some((s, e));
        }
    }
    best.filter(|(s, e)| e > s).map(|(s, e)| Plateau {
        start: series.grid[idx[s]],
        end: series.grid[idx[e]],
        level: vals[s..=e].iter().sum::<f64>() / (e + 1 - s) as f64,
        points: e + 1 - s,
    })
}

/// `(max − min)/mean` across curves at every window point.
pub fn spread_curve(curves: &[&TimeSeries], window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidParameter("no curves".into()))?;
    if curves.iter().any(|c| c.grid != first.grid) {
        return Err(Error::InvalidParameter(
            "curves live on different grids".into(),
        ));
    }
    let idx = window_indices(&first.grid, window);
    if idx.is_empty() {
        return Err(Error::Window("no grid points in the window".into()));
    }
    Ok(idx
        .iter()
        .map(|&i| {
            let v: Vec<f64> = curves.iter().map(|c| c.values[i].re).collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let (lo, hi) = v
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                    (a.min(x), b.max(x))
                });
            (first.grid[i], (hi - lo) / mean.abs())
        })
        .collect())
}

/// Largest `(max − min)/mean` across curves at any common window point.
pub fn relative_spread(curves: &[&TimeSeries], window: (f64, f64)) -> Result<f64> {
    Ok(spread_curve(curves, window)?
        .into_iter()
        .map(|(_, s)| s)
        .fold(0.0, f64::max))
}

/// Phase residual `arg[e^{i(l−k)φ} ⟨k|Â(t)|l⟩]` folded into `(−π/2, π/2]`.
#[derive(Clone, Debug)]
pub struct PhaseResidual {
    pub series: TimeSeries,
    /// Grid indices where the magnitude is too small for a phase.
    pub undefined: Vec<usize>,
}

pub fn phase_deviation(series: &TimeSeries, k: usize, l: usize, phi: f64) -> Result<PhaseResidual> {
    if k == l {
        return Err(Error::InvalidParameter(
            "phase prediction needs k ≠ l".into(),
        ));
    }
    let max = series.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let rot = Complex64::from_polar(1.0, (l as f64 - k as f64) * phi);
    let mut undefined = Vec::new();
    let out = series
        .grid
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let v = series.values[i];
            if v.norm() <= 1e-12 * max || max == 0.0 {
                undefined.push(i);
                return f64::NAN;
            }
            fold_half_pi((rot * v).arg())
        })
        .collect();
    Ok(PhaseResidual {
        series: TimeSeries::real(series.grid.clone(), out)?
            .with_meta("k", k)
            .with_meta("l", l),
        undefined,
    })
}

fn fold_half_pi(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut x = a.rem_euclid(PI);
    if x > PI / 2.0 {
        x -= PI;
    }
    x
}
