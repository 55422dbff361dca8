//! Shared fixtures for the benchmarks.

use hetrecip_core::equilibrium::{solve_equilibrium, EquilibriumSolution, SolverOptions};
use hetrecip_core::model::ModelParams;
use hetrecip_core::presets;

/// Reference models with their solved equilibria.
pub fn fixtures() -> Vec<(&'static str, ModelParams, EquilibriumSolution)> {
    [("k1", presets::single_group()), ("k2", presets::two_groups()), ("k4", four_groups())]
        .into_iter()
        .map(|(name, p)| {
            let sol = solve_equilibrium(&p, &SolverOptions::default()).expect("fixture solves");
            (name, p, sol)
        })
        .collect()
}

/// A denser matrix, for solver and sampler cost growth with `K`.
pub fn four_groups() -> ModelParams {
    ModelParams::new(
        0.45,
        1.5,
        vec![0.1, 0.2, 0.3, 0.4],
        vec![vec![0.9, 0.7, 0.5, 0.3], vec![0.6, 0.8, 0.4, 0.2], vec![0.5, 0.3, 0.7, 0.6], vec![0.2, 0.4, 0.6, 0.8]],
    )
    .expect("valid fixture")
}
