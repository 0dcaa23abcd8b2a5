//! Exact quench dynamics of few-site Bose-Hubbard models together with a
//! symbolic Weyl-algebra engine that predicts how Heisenberg operators grow
//! in the renormalized parameter `ħ_eff·e^{2λt}`.
//!
//! The crate is split along the data flow of an experiment:
//!
//! * [`fockspace`] enumerates occupation bases and assembles sparse operators,
//! * [`propagator`] finds low-lying eigenpairs and propagates states,
//! * [`meanfield`] holds the classical limit (fixed points, stability, `v`),
//! * [`weyl`] expands Heisenberg operators symbolically and extracts the
//!   scaling coefficients,
//! * [`observables`] measures matrix elements, OTOCs and cumulants,
//! * [`pipeline`] wires everything into the dimer/trimer experiments.

pub mod error;
pub mod fockspace;
pub mod meanfield;
pub mod observables;
pub mod pipeline;
pub mod propagator;
pub mod sparse;
pub mod weyl;

pub use error::{Error, Result};
pub use num_complex::Complex64;
