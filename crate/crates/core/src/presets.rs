//! Reference configurations used throughout the tests and benches.

use crate::model::ModelParams;

/// K = 1, alpha = 0.5, delta = 1, rho = 0.5.
pub fn single_group() -> ModelParams {
    ModelParams::single_group(0.5, 1.0, 0.5).expect("valid preset")
}

/// K = 2, uniform pi, rho = [[0.9, 0.9], [0.45, 0.45]], alpha = 0.5, delta = 1.
pub fn two_groups() -> ModelParams {
    ModelParams::new(0.5, 1.0, vec![0.5, 0.5], vec![vec![0.9, 0.9], vec![0.45, 0.45]]).expect("valid preset")
}
