//! Symbolic Weyl-algebra engine: Moyal products on polynomial symbols with
//! exponential-polynomial time coefficients, the Dyson expansion of
//! Heisenberg operators, and the predictions derived from it.

pub mod dyson;
pub mod exppoly;
pub mod gaussian;
pub mod prediction;
pub mod symbol;

pub use dyson::{
    check_order_bookkeeping, dominant_scaling, dyson_expand, free_evolution, quantize_observable,
    quantize_v, QuantizedV,
};
pub use exppoly::{ExpPoly, TermKey, MAX_MODES};
pub use gaussian::{
    gaussian_moment, pairing_count, quench_angle, thermal_covariance, thermal_factor,
    wick_expectation, Covariance,
};
pub use prediction::{
    bplus_matrix_element, cumulant_prediction, eval_series, expectation_series,
    linear_x_coefficient, otoc_coefficients, otoc_finite_t, predict_ckl, CumulantPrediction,
    DimerQuench, ScalingPrediction, WickFactor,
};
pub use symbol::{Monomial, WeylPolynomial};
