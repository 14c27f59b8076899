//! Benchmark fixtures shared by the criterion targets.

use gaf_hole_core::coeff_models::CoefficientModel;
use gaf_hole_core::sampling::{draw_coeffs, Distribution};
use gaf_hole_core::zeros::TruncatedSeries;

/// A complex Gaussian draw of the given degree, truncated GEF.
pub fn gef_series(degree: usize, seed: u64) -> TruncatedSeries {
    let draw =
        draw_coeffs(Distribution::ComplexGaussian, degree + 1, seed).expect("positive count");
    TruncatedSeries::new(&CoefficientModel::gef(), &draw).expect("nonzero draw")
}
