//! Model parameters and the closed-form per-group quantities derived from them.
//!
//! Groups are indexed from 0 internally. Everything user facing (CSV columns,
//! reports) prints them 1-based.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `sum(pi) == 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Default tolerance under which two group eigenvalues count as tied.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

/// Parameter bundle as it appears in a config file, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub alpha: f64,
    pub delta: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub pi: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("NonProbability: {field} = {value} is outside {domain}")]
    NonProbability { field: String, value: f64, domain: &'static str },
    #[error("BadSimplex: pi sums to {sum} with smallest entry {min}")]
    BadSimplex { sum: f64, min: f64 },
    #[error("NonPositiveDelta: delta = {0} must be > 0")]
    NonPositiveDelta(f64),
    #[error("BadDimensions: {what} has length {found}, expected {expected}")]
    BadDimensions { what: String, expected: usize, found: usize },
}

impl ParamError {
    /// Stable machine-readable name of the violated constraint.
    pub fn kind(&self) -> &'static str {
        match self {
            ParamError::NonProbability { .. } => "NonProbability",
            ParamError::BadSimplex { .. } => "BadSimplex",
            ParamError::NonPositiveDelta(_) => "NonPositiveDelta",
            ParamError::BadDimensions { .. } => "BadDimensions",
        }
    }
}

/// Validated generator parameters `(alpha, gamma, delta, K, pi, rho)`.
///
/// `gamma` is never supplied; it is always `1 - alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    alpha: f64,
    gamma: f64,
    delta: f64,
    pi: Vec<f64>,
    pi_cdf: Vec<f64>,
    // row-major K x K, entry (m, r) is the probability that a group-m node
    // reciprocates an edge coming from a group-r node
    rho: Vec<f64>,
}

impl ModelParams {
    pub fn new(alpha: f64, delta: f64, pi: Vec<f64>, rho: Vec<Vec<f64>>) -> Result<Self, ParamError> {
        let k = pi.len();
        RawParams { alpha, delta, k, pi, rho }.validate()
    }

    /// Single group with reciprocation probability `rho`.
    pub fn single_group(alpha: f64, delta: f64, rho: f64) -> Result<Self, ParamError> {
        Self::new(alpha, delta, vec![1.0], vec![vec![rho]])
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of groups `K`.
    pub fn groups(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// `rho_{m,r}`: probability that a group-`m` node returns an edge to a group-`r` node.
    #[inline]
    pub fn rho(&self, m: usize, r: usize) -> f64 {
        self.rho[m * self.pi.len() + r]
    }

    pub fn rho_rows(&self) -> Vec<Vec<f64>> {
        self.rho.chunks(self.groups()).map(<[f64]>::to_vec).collect()
    }

    /// Maps a uniform draw in `[0, 1)` to a group label distributed as `pi`.
    #[inline]
    pub fn group_from_uniform(&self, u: f64) -> usize {
        let k = self.pi_cdf.len();
        self.pi_cdf.iter().position(|&c| u < c).unwrap_or(k - 1)
    }

    pub fn to_raw(&self) -> RawParams {
        RawParams { alpha: self.alpha, delta: self.delta, k: self.groups(), pi: self.pi.clone(), rho: self.rho_rows() }
    }

    /// Same model with groups relabelled: new group `i` is old group `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, ParamError> {
        let pi = perm.iter().map(|&p| self.pi[p]).collect();
        let rho = perm.iter().map(|&m| perm.iter().map(|&r| self.rho(m, r)).collect()).collect();
        Self::new(self.alpha, self.delta, pi, rho)
    }
}

impl RawParams {
    // written so that NaN fails every check
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(self) -> Result<ModelParams, ParamError> {
        let RawParams { alpha, delta, k, pi, rho } = self;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ParamError::NonProbability { field: "alpha".into(), value: alpha, domain: "(0, 1)" });
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(ParamError::NonPositiveDelta(delta));
        }
        if k == 0 {
            return Err(ParamError::BadDimensions { what: "K".into(), expected: 1, found: 0 });
        }
        if pi.len() != k {
            return Err(ParamError::BadDimensions { what: "pi".into(), expected: k, found: pi.len() });
        }
        if rho.len() != k {
            return Err(ParamError::BadDimensions { what: "rho".into(), expected: k, found: rho.len() });
        }
        for (m, row) in rho.iter().enumerate() {
            if row.len() != k {
                return Err(ParamError::BadDimensions {
                    what: format!("rho row {}", m + 1),
                    expected: k,
                    found: row.len(),
                });
            }
        }
        let sum: f64 = pi.iter().sum();
        let min = pi.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min >= 0.0) || !((sum - 1.0).abs() <= SIMPLEX_TOL) {
            return Err(ParamError::BadSimplex { sum, min });
        }
        for (m, row) in rho.iter().enumerate() {
            for (r, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(ParamError::NonProbability {
                        field: format!("rho[{}][{}]", m + 1, r + 1),
                        value: p,
                        domain: "[0, 1]",
                    });
                }
            }
        }

        let mut acc = 0.0;
        let mut pi_cdf: Vec<f64> = pi
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // guarantee u < 1 always lands on the last group with positive mass
        if let Some(last) = pi_cdf.last_mut() {
            *last = f64::INFINITY;
        }
        Ok(ModelParams { alpha, gamma: 1.0 - alpha, delta, pi, pi_cdf, rho: rho.into_iter().flatten().collect() })
    }
}

impl TryFrom<RawParams> for ModelParams {
    type Error = ParamError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        raw.validate()
    }
}

/// Per-group reciprocation rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRates {
    /// `rho_{m.}`: probability that a group-`m` node sends a reciprocal edge.
    pub rho_row: Vec<f64>,
    /// `rho_{.m}`: probability that a group-`m` node receives a reciprocal edge.
    pub rho_col: Vec<f64>,
    /// Overall reciprocation probability of a fresh edge.
    pub rho0: f64,
}

impl GroupRates {
    pub fn max_row(&self) -> f64 {
        self.rho_row.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_col(&self) -> f64 {
        self.rho_col.iter().copied().fold(0.0, f64::max)
    }
}

pub fn group_rates(params: &ModelParams) -> GroupRates {
    let k = params.groups();
    let pi = params.pi();
    let rho_row: Vec<f64> = (0..k).map(|m| (0..k).map(|r| params.rho(m, r) * pi[r]).sum()).collect();
    let rho_col: Vec<f64> = (0..k).map(|m| (0..k).map(|r| params.rho(r, m) * pi[r]).sum()).collect();
    let rho0 = pi.iter().zip(&rho_row).map(|(p, s)| p * s).sum();
    GroupRates { rho_row, rho_col, rho0 }
}

/// Eigenvalues of `[[alpha, alpha*send], [gamma*recv, gamma]]`:
/// returns `(lambda, lambda_prime, discriminant)`.
pub fn branching_eigenvalues(alpha: f64, send: f64, recv: f64) -> (f64, f64, f64) {
    let gamma = 1.0 - alpha;
    let d0 = (alpha - gamma).powi(2) + 4.0 * alpha * gamma * send * recv;
    let root = d0.sqrt();
    (0.5 * (1.0 + root), 0.5 * (1.0 - root), d0)
}

/// Eigenstructure of the mean matrix `A_m` of the group-`m` branching process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSpectral {
    pub group: usize,
    pub matrix: [[f64; 2]; 2],
    pub lambda: f64,
    pub lambda_prime: f64,
    /// Growth direction: `v^T A = lambda v^T`, scaled so that `u . v = 1`.
    pub v: [f64; 2],
    /// `A u = lambda u`, scaled so that `u . 1 = 1`.
    pub u: [f64; 2],
    /// Ray slope `v[1] / v[0]`.
    pub slope: f64,
    pub discriminant: f64,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[error("DegenerateGroup: group {} has rho_row = {send}, rho_col = {recv}; lambda = {lambda}, lambda' = {lambda_prime}", group + 1)]
pub struct DegenerateGroup {
    pub group: usize,
    pub send: f64,
    pub recv: f64,
    pub lambda: f64,
    pub lambda_prime: f64,
}

impl GroupSpectral {
    /// Closed-form ray slope `(gamma - alpha + sqrt(D0)) / (2 gamma rho_{.m})`.
    pub fn slope_formula(alpha: f64, recv: f64, discriminant: f64) -> f64 {
        let gamma = 1.0 - alpha;
        (gamma - alpha + discriminant.sqrt()) / (2.0 * gamma * recv)
    }

    pub fn matrix_times(&self, x: [f64; 2]) -> [f64; 2] {
        let a = &self.matrix;
        [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
    }

    pub fn times_matrix(&self, x: [f64; 2]) -> [f64; 2] {
        let a = &self.matrix;
        [x[0] * a[0][0] + x[1] * a[1][0], x[0] * a[0][1] + x[1] * a[1][1]]
    }

    /// Angular coordinate `a / (1 + a)` of the ray in the `y / (x + y)` chart.
    pub fn ray_angle(&self) -> f64 {
        self.slope / (1.0 + self.slope)
    }
}

pub fn spectral(params: &ModelParams, rates: &GroupRates, m: usize) -> Result<GroupSpectral, DegenerateGroup> {
    let alpha = params.alpha();
    let gamma = params.gamma();
    let send = rates.rho_row[m];
    let recv = rates.rho_col[m];
    let (lambda, lambda_prime, d0) = branching_eigenvalues(alpha, send, recv);
    if send <= 0.0 || recv <= 0.0 {
        return Err(DegenerateGroup { group: m, send, recv, lambda, lambda_prime });
    }
    let root = d0.sqrt();
    // lambda - alpha and lambda - gamma, written without cancellation
    let over_alpha = 0.5 * (gamma - alpha + root);
    let over_gamma = 0.5 * (alpha - gamma + root);
    let (mut u, mut v) = if alpha >= gamma {
        ([over_gamma, gamma * recv], [over_gamma, alpha * send])
    } else {
        ([alpha * send, over_alpha], [gamma * recv, over_alpha])
    };
    let us = u[0] + u[1];
    u = [u[0] / us, u[1] / us];
    let uv = u[0] * v[0] + u[1] * v[1];
    v = [v[0] / uv, v[1] / uv];
    Ok(GroupSpectral {
        group: m,
        matrix: [[alpha, alpha * send], [gamma * recv, gamma]],
        lambda,
        lambda_prime,
        v,
        u,
        slope: v[1] / v[0],
        discriminant: d0,
    })
}

/// Spectral data for every group; degenerate groups come back as `Err`.
pub fn all_spectra(params: &ModelParams, rates: &GroupRates) -> Vec<Result<GroupSpectral, DegenerateGroup>> {
    (0..params.groups()).map(|m| spectral(params, rates, m)).collect()
}

/// Groups sorted by decreasing `lambda`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupOrder {
    /// `permutation[i]` is the group with the `i`-th largest eigenvalue.
    pub permutation: Vec<usize>,
    pub non_distinct: bool,
}

pub fn order_groups(spectra: &[GroupSpectral], tie_tol: f64) -> GroupOrder {
    let lambdas: Vec<f64> = spectra.iter().map(|s| s.lambda).collect();
    let mut order = order_by_lambda(&lambdas, tie_tol);
    for p in &mut order.permutation {
        *p = spectra[*p].group;
    }
    order
}

/// Sorts positions of `lambdas` in decreasing order (stable on ties).
pub fn order_by_lambda(lambdas: &[f64], tie_tol: f64) -> GroupOrder {
    let mut permutation: Vec<usize> = (0..lambdas.len()).collect();
    permutation.sort_by(|&i, &j| lambdas[j].total_cmp(&lambdas[i]));
    let non_distinct = permutation.windows(2).any(|w| (lambdas[w[0]] - lambdas[w[1]]).abs() < tie_tol);
    GroupOrder { permutation, non_distinct }
}
