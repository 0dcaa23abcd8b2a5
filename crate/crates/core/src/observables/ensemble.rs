use crate::error::{Error, Result};
use crate::fockspace::{prequench_eigenbasis_with, FockBasis, PrequenchConfig};
use crate::propagator::Vector;

/// Boltzmann mixture of prequench eigenstates.
#[derive(Clone, Debug)]
pub struct ThermalEnsemble {
    /// `None` for the ground state.
    pub beta: Option<f64>,
    pub energies: Vec<f64>,
    pub states: Vec<Vector>,
    pub labels: Vec<Vec<u32>>,
    /// Normalized over the kept states.
    pub weights: Vec<f64>,
    /// Estimated Boltzmann weight of the states left out.
    pub truncation_mass: f64,
}

impl ThermalEnsemble {
    pub fn ground_state(basis: &FockBasis, cfg: &PrequenchConfig) -> Result<Self> {
        let pre = prequench_eigenbasis_with(basis, 1, cfg)?;
        Ok(Self {
            beta: None,
            energies: pre.energies,
            states: pre.states,
            labels: pre.labels,
            weights: vec![1.0],
            truncation_mass: 0.0,
        })
    }

    /// Adds prequench states until the estimated discarded weight drops
    /// below `mass_tol`. The weight beyond the last kept level is bounded by
    /// a geometric tail with the last level spacing, which is exact for an
    /// equally spaced spectrum.
    pub fn thermal(
        basis: &FockBasis,
        beta: f64,
        mass_tol: f64,
        cfg: &PrequenchConfig,
    ) -> Result<Self> {
        if beta.is_infinite() && beta > 0.0 {
            return Self::ground_state(basis, cfg);
        }
        if !(beta > 0.0) || !(mass_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need β > 0 and a positive mass tolerance, got β = {beta}, tol = {mass_tol}"
            )));
        }
        let mut m = 8.min(basis.dim());
        loop {
            let pre = prequench_eigenbasis_with(basis, m, cfg)?;
            let e0 = pre.energies[0];
            let raw: Vec<f64> = pre
                .energies
                .iter()
                .map(|e| (-beta * (e - e0)).exp())
                .collect();
            let z: f64 = raw.iter().sum();
            let tail = if m == basis.dim() {
                0.0
            } else {
                let last = pre.energies[m - 1];
                let below = pre
                    .energies
                    .iter()
                    .rev()
                    .find(|&&e| last - e > 1e-9 * last.abs().max(1.0));
                let gap = below.map(|&e| last - e).unwrap_or(last - e0).max(1e-12);
                let r = (-beta * gap).exp();
                raw[m - 1] * r / (1.0 - r)
            };
            let total = z + tail;
            let mass = tail / total;
            if mass < mass_tol || m == basis.dim() {
                // Smallest prefix, ending on a complete multiplet, that still
                // meets the tolerance.
                let mut keep = m;
                let mut discarded = tail;
                for p in (1..m).rev() {
                    if pre.multiplet[p] == pre.multiplet[p - 1] {
                        continue;
                    }
                    let d: f64 = discarded + raw[p..keep].iter().sum::<f64>();
                    if d / total >= mass_tol {
                        break;
                    }
                    discarded = d;
                    keep = p;
                }
                let zk: f64 = raw[..keep].iter().sum();
                return Ok(Self {
                    beta: Some(beta),
                    energies: pre.energies[..keep].to_vec(),
                    states: pre.states[..keep].to_vec(),
                    labels: pre.labels[..keep].to_vec(),
                    weights: raw[..keep].iter().map(|w| w / zk).collect(),
                    truncation_mass: discarded / total,
                });
            }
            let grow = ((mass / mass_tol).ln()
                / (beta * (pre.energies[m - 1] - e0) / m as f64).max(1e-3))
            .ceil() as usize;
            m = (m + grow.clamp(1, 64)).min(basis.dim());
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}
