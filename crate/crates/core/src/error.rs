use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis dimension {dim} exceeds the configured cap of {cap} states")]
    DimensionCap { dim: u128, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("site {site} out of range 1..={sites}")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("cannot parse operator expression: {0}")]
    Parse(String),

    #[error(
        "eigensolver found {found} of {requested} eigenpairs after {iterations} iterations \
         (last residuals: {residuals:?})"
    )]
    NoConvergence {
        found: usize,
        requested: usize,
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("time step underflow at t = {t}: dt = {dt:e} still misses the tolerance (error estimate {estimate:e})")]
    StepUnderflow { t: f64, dt: f64, estimate: f64 },

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("no Ehrenfest time for a stable quench (rate {0})")]
    StableQuench(f64),

    #[error("requested half-order {requested} needs v through degree {needed}, but only degree {available} is available; raise the taylor_v order")]
    OrderStarvation {
        requested: usize,
        needed: usize,
        available: usize,
    },

    #[error("coefficient C_{0} has not been computed; increase the expansion order")]
    OrderMissing(usize),

    #[error("angle {0} outside (0, π/2)")]
    Angle(f64),

    #[error("cumulant {n}: leading power s^{found}, expected s^{expected}")]
    Cancellation {
        n: usize,
        expected: usize,
        found: usize,
    },

    #[error("fit window rejected: {0}")]
    Window(String),

    #[error("operator is not Hermitian: {0}")]
    NonHermitian(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
