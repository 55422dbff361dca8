//! Limiting edge fractions and the quantities that certify them.
//!
//! The fractions `x_m` (edges pointing into group `m`, per step) and `y_m`
//! (edges leaving group `m`, per step) solve a 2K-dimensional fixed-point
//! system. The map is a contraction whenever `delta > ||J*||_1 - 1`, which
//! [`build_jstar`] checks; [`solve_equilibrium`] iterates it.

use serde::Serialize;
use std::f64::consts::LN_2;
use thiserror::Error;

use crate::linalg::{norm_frobenius, norm_one, power_iteration};
use crate::model::{branching_eigenvalues, group_rates, order_by_lambda, GroupRates, ModelParams, DEFAULT_TIE_TOL};

/// Block matrix `J*` bounding the Jacobian of the fixed-point map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub jstar: Vec<Vec<f64>>,
    /// Maximum column sum of `J*`.
    pub norm1: f64,
    pub frobenius: f64,
    /// `max(||J*||_1 - 1, 0)`.
    pub delta_min: f64,
    /// `delta > delta_min`.
    pub satisfied: bool,
}

pub fn build_jstar(params: &ModelParams) -> ContractionReport {
    let k = params.groups();
    let (alpha, gamma) = (params.alpha(), params.gamma());
    let pi = params.pi();
    let rates = group_rates(params);
    let mut j = vec![vec![0.0; 2 * k]; 2 * k];
    for m in 0..k {
        for r in 0..k {
            let eye = if m == r { 1.0 } else { 0.0 };
            j[m][r] = alpha * (eye + pi[m] * params.rho(r, m));
            j[m][k + r] = gamma * rates.rho_col[m];
            j[k + m][r] = alpha * rates.rho_row[m];
            j[k + m][k + r] = gamma * (eye + pi[m] * params.rho(m, r));
        }
    }
    let norm1 = norm_one(&j);
    let delta_min = (norm1 - 1.0).max(0.0);
    ContractionReport {
        frobenius: norm_frobenius(&j),
        jstar: j,
        norm1,
        delta_min,
        satisfied: params.delta() > delta_min,
    }
}

/// Right-hand side of the edge-fraction system, evaluated at `z = (x, y)`.
pub fn fixed_point_map(params: &ModelParams, rates: &GroupRates, z: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; z.len()];
    apply_map(params, rates, z, &mut out);
    out
}

fn apply_map(params: &ModelParams, rates: &GroupRates, z: &[f64], out: &mut [f64]) {
    let k = params.groups();
    let (alpha, gamma, delta) = (params.alpha(), params.gamma(), params.delta());
    let pi = params.pi();
    let (x, y) = z.split_at(k);
    let sx: f64 = x.iter().sum::<f64>() + delta;
    let sy: f64 = y.iter().sum::<f64>() + delta;
    // attachment shares of each group under in- and out-preferential sampling
    let px: Vec<f64> = (0..k).map(|m| (x[m] + delta * pi[m]) / sx).collect();
    let py: Vec<f64> = (0..k).map(|m| (y[m] + delta * pi[m]) / sy).collect();
    for m in 0..k {
        let back_in: f64 = (0..k).map(|r| params.rho(r, m) * px[r]).sum();
        let back_out: f64 = (0..k).map(|r| params.rho(m, r) * py[r]).sum();
        out[m] = alpha * px[m] + gamma * rates.rho_col[m] * py[m] + gamma * pi[m] + alpha * pi[m] * back_in;
        out[k + m] = gamma * py[m] + alpha * rates.rho_row[m] * px[m] + alpha * pi[m] + gamma * pi[m] * back_out;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation weight used only when the contraction condition fails.
    pub damping: f64,
    pub tie_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-12, max_iter: 10_000, damping: 0.5, tie_tol: DEFAULT_TIE_TOL }
    }
}

/// `C_delta`, the matrix `H` and its Perron root.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HReport {
    pub c_delta: f64,
    pub h: [[f64; 3]; 3],
    pub lambda_h: f64,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub alpha_gamma_positive: bool,
    pub delta_condition: bool,
    pub max_row_rate_positive: bool,
    pub max_col_rate_positive: bool,
    pub lambda_h_lt_1: bool,
    pub mrv_condition: bool,
    pub hrv_condition: bool,
    pub distinct_eigenvalues: bool,
    pub star: bool,
    pub margins: RegularityMargins,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityMargins {
    /// `delta - delta_min`.
    pub delta: f64,
    /// `1 - lambda_H`.
    pub lambda_h: f64,
    /// `lambda_(1) - ln 2`.
    pub mrv: f64,
    /// `lambda_(2) - lambda_(1) / 2`, when there are two groups or more.
    pub hrv_half: Option<f64>,
    /// `lambda_(2) - ln 2`.
    pub hrv_log2: Option<f64>,
}

/// Raw numbers the regularity flags are computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityInputs {
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    pub delta_min: f64,
    pub max_row_rate: f64,
    pub max_col_rate: f64,
    pub lambda_h: f64,
    /// Group eigenvalues in any order.
    pub lambdas: Vec<f64>,
    pub tie_tol: f64,
}

impl RegularityReport {
    pub fn evaluate(inp: &RegularityInputs) -> Self {
        let order = order_by_lambda(&inp.lambdas, inp.tie_tol);
        let sorted: Vec<f64> = order.permutation.iter().map(|&i| inp.lambdas[i]).collect();
        let l1 = sorted.first().copied().unwrap_or(f64::NAN);
        let l2 = sorted.get(1).copied();
        let alpha_gamma_positive = inp.alpha > 0.0 && inp.gamma > 0.0;
        let delta_condition = inp.delta > inp.delta_min;
        let max_row_rate_positive = inp.max_row_rate > 0.0;
        let max_col_rate_positive = inp.max_col_rate > 0.0;
        let lambda_h_lt_1 = inp.lambda_h < 1.0;
        let hrv_condition = l2.is_some_and(|l2| l2 > l1 / 2.0 && l2 >= LN_2);
        RegularityReport {
            alpha_gamma_positive,
            delta_condition,
            max_row_rate_positive,
            max_col_rate_positive,
            lambda_h_lt_1,
            mrv_condition: l1 >= LN_2,
            hrv_condition,
            distinct_eigenvalues: !order.non_distinct,
            star: alpha_gamma_positive
                && delta_condition
                && max_row_rate_positive
                && max_col_rate_positive
                && lambda_h_lt_1,
            margins: RegularityMargins {
                delta: inp.delta - inp.delta_min,
                lambda_h: 1.0 - inp.lambda_h,
                mrv: l1 - LN_2,
                hrv_half: l2.map(|l2| l2 - l1 / 2.0),
                hrv_log2: l2.map(|l2| l2 - LN_2),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Sup-norm of `f(z) - z` at the returned point.
    pub residual: f64,
    pub iterations: usize,
    /// Whether the contraction condition guaranteed convergence.
    pub guaranteed: bool,
    pub rho_star: f64,
    pub c_star: f64,
    pub c_delta: f64,
    pub h: [[f64; 3]; 3],
    pub lambda_h: f64,
    pub h_positive: bool,
    pub contraction: ContractionReport,
    pub regular: RegularityReport,
}

impl EquilibriumSolution {
    pub fn total_edge_rate(&self) -> f64 {
        self.x.iter().sum()
    }

    /// Predicted tail index `c* / lambda` for a group eigenvalue.
    pub fn tail_index(&self, lambda: f64) -> f64 {
        self.c_star / lambda
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("NoConvergence: residual {residual:e} after {iterations} iterations")]
    NoConvergence { x: Vec<f64>, y: Vec<f64>, residual: f64, iterations: usize },
    #[error("NonPositiveH: H has a zero entry (C_delta = {}), Perron argument unavailable", .0.c_delta)]
    NonPositiveH(HReport),
}

pub fn h_and_lambda(
    params: &ModelParams,
    rates: &GroupRates,
    x: &[f64],
    y: &[f64],
) -> Result<HReport, EquilibriumError> {
    let report = h_report(params, rates, x, y);
    if report.positive {
        Ok(report)
    } else {
        Err(EquilibriumError::NonPositiveH(report))
    }
}

fn h_report(params: &ModelParams, rates: &GroupRates, x: &[f64], y: &[f64]) -> HReport {
    let (alpha, gamma, delta) = (params.alpha(), params.gamma(), params.delta());
    let pi = params.pi();
    let sx = x.iter().sum::<f64>() + delta;
    let sy = y.iter().sum::<f64>() + delta;
    let c_delta: f64 = (0..params.groups())
        .map(|m| {
            alpha * rates.rho_row[m] * (x[m] + delta * pi[m]) / sx
                + gamma * rates.rho_col[m] * (y[m] + delta * pi[m]) / sy
        })
        .sum();
    let s = rates.max_row();
    let c = rates.max_col();
    let w = 1.0 / (1.0 + delta);
    let h = [
        [w * alpha * (1.0 + s), w * gamma * c, w * (alpha + c_delta)],
        [w * alpha * s, w * gamma * (1.0 + c), w * (gamma + c_delta)],
        [w * alpha * s, w * gamma * c, w * c_delta],
    ];
    let lambda_h = power_iteration(&h, [1.0; 3], 1e-12, 10_000).value;
    HReport { c_delta, h, lambda_h, positive: h.iter().flatten().all(|&e| e > 0.0) }
}

/// Largest eigenvalue of every group's mean matrix, degenerate groups included.
pub fn group_lambdas(params: &ModelParams, rates: &GroupRates) -> Vec<f64> {
    (0..params.groups()).map(|m| branching_eigenvalues(params.alpha(), rates.rho_row[m], rates.rho_col[m]).0).collect()
}

pub fn check_regularity(
    params: &ModelParams,
    contraction: &ContractionReport,
    lambda_h: f64,
    lambdas: &[f64],
    tie_tol: f64,
) -> RegularityReport {
    let rates = group_rates(params);
    RegularityReport::evaluate(&RegularityInputs {
        alpha: params.alpha(),
        gamma: params.gamma(),
        delta: params.delta(),
        delta_min: contraction.delta_min,
        max_row_rate: rates.max_row(),
        max_col_rate: rates.max_col(),
        lambda_h,
        lambdas: lambdas.to_vec(),
        tie_tol,
    })
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

pub fn solve_equilibrium(params: &ModelParams, opts: &SolverOptions) -> Result<EquilibriumSolution, EquilibriumError> {
    let k = params.groups();
    let rates = group_rates(params);
    let contraction = build_jstar(params);
    let guaranteed = contraction.satisfied;
    let relax = if guaranteed { 1.0 } else { opts.damping };

    let mut z: Vec<f64> = params.pi().iter().chain(params.pi()).map(|p| p * (1.0 + rates.rho0)).collect();
    let mut fz = vec![0.0; 2 * k];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        apply_map(params, &rates, &z, &mut fz);
        residual = sup_distance(&fz, &z);
        if residual <= opts.tol {
            break;
        }
        for (zi, fi) in z.iter_mut().zip(&fz) {
            *zi += relax * (fi - *zi);
        }
        iterations += 1;
    }
    if residual > opts.tol {
        apply_map(params, &rates, &z, &mut fz);
        let (x, y) = z.split_at(k);
        return Err(EquilibriumError::NoConvergence {
            x: x.to_vec(),
            y: y.to_vec(),
            residual: sup_distance(&fz, &z),
            iterations,
        });
    }

    let (x, y) = z.split_at(k);
    let hr = h_report(params, &rates, x, y);
    let lambdas = group_lambdas(params, &rates);
    let regular = check_regularity(params, &contraction, hr.lambda_h, &lambdas, opts.tie_tol);
    let rho_star = x.iter().sum::<f64>() - 1.0;
    Ok(EquilibriumSolution {
        x: x.to_vec(),
        y: y.to_vec(),
        residual,
        iterations,
        guaranteed,
        rho_star,
        c_star: 1.0 + rho_star + params.delta(),
        c_delta: hr.c_delta,
        h: hr.h,
        lambda_h: hr.lambda_h,
        h_positive: hr.positive,
        contraction,
        regular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_two_groups() -> ModelParams {
        ModelParams::new(0.5, 1.0, vec![0.5, 0.5], vec![vec![0.9, 0.9], vec![0.45, 0.45]]).unwrap()
    }

    #[test]
    fn jstar_single_group() {
        let p = ModelParams::single_group(0.5, 1.0, 0.5).unwrap();
        let c = build_jstar(&p);
        assert_eq!(c.jstar, vec![vec![0.75, 0.25], vec![0.25, 0.75]]);
        assert_eq!(c.norm1, 1.0);
        assert_eq!(c.delta_min, 0.0);
        assert!(c.satisfied);
    }

    #[test]
    fn jstar_without_reciprocity_is_block_diagonal() {
        let p = ModelParams::new(0.3, 0.5, vec![0.2, 0.8], vec![vec![0.0; 2]; 2]).unwrap();
        let c = build_jstar(&p);
        let k = 2;
        for i in 0..2 * k {
            for j in 0..2 * k {
                let expect = match (i == j, i < k) {
                    (true, true) => 0.3,
                    (true, false) => 0.7,
                    _ => 0.0,
                };
                assert!((c.jstar[i][j] - expect).abs() < 1e-15);
            }
        }
        assert!((c.norm1 - 0.7).abs() < 1e-15);
        assert_eq!(c.delta_min, 0.0);
    }

    #[test]
    fn jstar_reference_two_groups() {
        let c = build_jstar(&reference_two_groups());
        // column sums by hand: 1.625, 1.4, 1.5125, 1.5125
        assert!((c.norm1 - 1.625).abs() < 1e-12);
        assert!((c.delta_min - 0.625).abs() < 1e-12);
        assert!(c.satisfied);
    }

    #[test]
    fn single_group_solution() {
        let p = ModelParams::single_group(0.5, 1.0, 0.5).unwrap();
        let s = solve_equilibrium(&p, &SolverOptions::default()).unwrap();
        assert!((s.x[0] - 1.5).abs() < 1e-12);
        assert!((s.y[0] - 1.5).abs() < 1e-12);
        assert!((s.rho_star - 0.5).abs() < 1e-12);
        assert!((s.c_star - 2.5).abs() < 1e-12);
        assert_eq!(s.c_star, 1.0 + s.rho_star + p.delta());
    }

    #[test]
    fn symmetric_two_groups_split_evenly() {
        let p = ModelParams::new(0.5, 1.0, vec![0.5, 0.5], vec![vec![0.5; 2]; 2]).unwrap();
        let s = solve_equilibrium(&p, &SolverOptions::default()).unwrap();
        for v in s.x.iter().chain(&s.y) {
            assert!((v - 0.75).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn reference_two_groups_is_fixed() {
        let p = reference_two_groups();
        let s = solve_equilibrium(&p, &SolverOptions::default()).unwrap();
        assert!(s.residual <= 1e-12);
        let rates = group_rates(&p);
        let z: Vec<f64> = s.x.iter().chain(&s.y).copied().collect();
        let fz = fixed_point_map(&p, &rates, &z);
        assert!(sup_distance(&fz, &z) <= 1e-12);
        let sx: f64 = s.x.iter().sum();
        let sy: f64 = s.y.iter().sum();
        assert!((sx - sy).abs() <= 1e-11);
        assert!(sx >= 1.0);
    }

    #[test]
    fn h_single_group() {
        let p = ModelParams::single_group(0.5, 1.0, 0.5).unwrap();
        let rates = group_rates(&p);
        let h = h_and_lambda(&p, &rates, &[1.5], &[1.5]).unwrap();
        assert!((h.c_delta - 0.5).abs() < 1e-15);
        let expect = [[0.375, 0.125, 0.5], [0.125, 0.375, 0.5], [0.125, 0.125, 0.25]];
        for (row, want) in h.h.iter().zip(&expect) {
            for (a, b) in row.iter().zip(want) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        assert!((h.lambda_h - 0.75).abs() < 1e-10);
    }

    #[test]
    fn h_without_reciprocity_is_not_positive() {
        let p = ModelParams::single_group(0.5, 1.0, 0.0).unwrap();
        let rates = group_rates(&p);
        let err = h_and_lambda(&p, &rates, &[1.0], &[1.0]).unwrap_err();
        match err {
            EquilibriumError::NonPositiveH(r) => {
                assert_eq!(r.c_delta, 0.0);
                assert_eq!(r.h[2][2], 0.0);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn regularity_single_group() {
        let p = ModelParams::single_group(0.5, 1.0, 0.5).unwrap();
        let s = solve_equilibrium(&p, &SolverOptions::default()).unwrap();
        assert!(s.regular.star);
        assert!(s.regular.mrv_condition);
        assert!(!s.regular.hrv_condition);
        assert!((s.regular.margins.mrv - (0.75 - LN_2)).abs() < 1e-12);
    }

    #[test]
    fn regularity_flags_alpha_one() {
        let r = RegularityReport::evaluate(&RegularityInputs {
            alpha: 1.0,
            gamma: 0.0,
            delta: 1.0,
            delta_min: 0.0,
            max_row_rate: 0.5,
            max_col_rate: 0.5,
            lambda_h: 0.5,
            lambdas: vec![1.0],
            tie_tol: DEFAULT_TIE_TOL,
        });
        assert!(!r.alpha_gamma_positive);
        assert!(!r.star);
        assert!(r.delta_condition && r.lambda_h_lt_1);
    }

    #[test]
    fn regularity_reference_two_groups() {
        let s = solve_equilibrium(&reference_two_groups(), &SolverOptions::default()).unwrap();
        let r = &s.regular;
        assert!(r.star && r.mrv_condition && r.hrv_condition && r.distinct_eigenvalues);
        let l2 = (1.0 + (4.0f64 * 0.25 * 0.45 * 0.675).sqrt()) / 2.0;
        assert!((r.margins.hrv_log2.unwrap() - (l2 - LN_2)).abs() < 1e-12);
    }

    #[test]
    fn no_convergence_carries_iterate() {
        let p = reference_two_groups();
        let opts = SolverOptions { max_iter: 2, ..SolverOptions::default() };
        match solve_equilibrium(&p, &opts) {
            Err(EquilibriumError::NoConvergence { x, residual, iterations, .. }) => {
                assert_eq!(x.len(), 2);
                assert!(residual > 1e-12);
                assert_eq!(iterations, 2);
            }
            other => panic!("{other:?}"),
        }
    }
}
