//! Experiments: configuration in, CSV bundle and summary out.

mod bundle;
mod dimer;
mod settings;
mod tables;
mod trimer;

pub use bundle::{Bundle, Outcome};
pub use dimer::*;
pub use settings::*;
pub use tables::*;
pub use trimer::*;
