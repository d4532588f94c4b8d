#![allow(dead_code)]

use dualdiv::{LevyModel, PhaseTypeDist, ScaleBasis};
use nalgebra::DMatrix;

pub const Q: f64 = 0.05;

pub fn weibull_t() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        6,
        6,
        &[
            -5.6546, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, //
            0.6066, -5.6847, 0.0000, 0.0166, 0.0089, 5.0526, //
            0.2156, 4.3616, -5.6485, 0.9162, 0.1424, 0.0126, //
            5.6247, 0.0000, 0.0000, -5.6786, 0.0000, 0.0000, //
            0.0107, 0.0000, 0.0000, 5.7247, -5.7420, 0.0000, //
            0.0136, 0.0000, 0.0000, 0.0024, 5.7022, -5.7183,
        ],
    )
}

pub fn weibull_alpha() -> Vec<f64> {
    vec![0.0000, 0.0007, 0.9961, 0.0000, 0.0001, 0.0031]
}

pub fn weibull_model(drift_d: f64, sigma: f64, lambda: f64) -> LevyModel {
    let jumps = PhaseTypeDist::new(weibull_alpha(), weibull_t()).unwrap();
    LevyModel::new(drift_d, sigma, lambda, jumps, Q).unwrap()
}

pub fn exp_model() -> LevyModel {
    LevyModel::new(2.0, 0.0, 1.0, PhaseTypeDist::exponential(1.0).unwrap(), Q).unwrap()
}

pub fn basis(m: &LevyModel) -> ScaleBasis {
    ScaleBasis::find_roots(m).unwrap()
}

/// Roots of `psi(s) = q` for the exponential model: `psi(s) = 2s - s / (s + 1)`
/// clears to `2 s^2 + (1 - q) s - q = 0`.
pub fn exp_model_roots() -> (f64, f64) {
    let (a, b, c) = (2.0, 1.0 - Q, -Q);
    let disc = (b * b - 4.0 * a * c).sqrt();
    ((-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a))
}
