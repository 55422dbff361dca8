//! Extreme-value diagnostics for joint degree samples.
//!
//! Everything here is a deterministic function of the data; no randomness.

use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::{EquilibriumSolution, RegularityReport};
use crate::model::GroupSpectral;
use crate::pmf::{CountGrid, JointPmfEstimate};
use crate::sim::GraphState;

pub const DEFAULT_RADIUS_QUANTILE: f64 = 0.999;
pub const DEFAULT_DISTANCE_FRACTION: f64 = 0.001;
pub const HISTOGRAM_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TailError {
    #[error("InsufficientData: need at least {needed} values, have {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("NonPositiveValues: need {needed} positive values, only {positive} are positive")]
    NonPositiveValues { needed: usize, positive: usize },
    #[error("DegenerateTail: the top order statistics carry no variation")]
    DegenerateTail,
    #[error("EmptySelection: no pair exceeds threshold {threshold}")]
    EmptySelection { threshold: f64 },
    #[error("ConditionsUnmet: {}", .0.join("; "))]
    ConditionsUnmet(Vec<String>),
    #[error("GridMismatch: {0:?} vs {1:?}")]
    GridMismatch((usize, usize), (usize, usize)),
    #[error("EmptyDataset")]
    EmptyDataset,
    #[error("BadDimensions: {pairs} pairs but {groups} group labels")]
    BadDimensions { pairs: usize, groups: usize },
}

/// Joint `(in, out)` observations with optional group labels (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDataset {
    pairs: Vec<(u64, u64)>,
    groups: Option<Vec<u32>>,
}

impl DegreeDataset {
    pub fn new(pairs: Vec<(u64, u64)>, groups: Option<Vec<u32>>) -> Result<Self, TailError> {
        if pairs.is_empty() {
            return Err(TailError::EmptyDataset);
        }
        if let Some(g) = &groups {
            if g.len() != pairs.len() {
                return Err(TailError::BadDimensions { pairs: pairs.len(), groups: g.len() });
            }
        }
        Ok(DegreeDataset { pairs, groups })
    }

    pub fn from_state(state: &GraphState) -> Self {
        let pairs = state.in_degrees().iter().zip(state.out_degrees()).map(|(&a, &b)| (a as u64, b as u64)).collect();
        DegreeDataset { pairs, groups: Some(state.node_groups().to_vec()) }
    }

    /// One pair per counted sample; overflow is dropped since its cells are unknown.
    pub fn from_counts(grid: &CountGrid) -> Result<Self, TailError> {
        let mut pairs = Vec::new();
        for k in 0..=grid.kmax {
            for l in 0..=grid.lmax {
                let c = grid.get(k, l);
                pairs.extend(std::iter::repeat_n((k as u64, l as u64), c as usize));
            }
        }
        Self::new(pairs, None)
    }

    /// Concatenation; labels survive only if every part has them.
    pub fn pooled(parts: &[DegreeDataset]) -> Result<Self, TailError> {
        let pairs: Vec<_> = parts.iter().flat_map(|d| d.pairs.iter().copied()).collect();
        let groups = parts.iter().map(|d| d.groups.clone()).collect::<Option<Vec<_>>>().map(|g| g.concat());
        Self::new(pairs, groups)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(u64, u64)] {
        &self.pairs
    }

    pub fn groups(&self) -> Option<&[u32]> {
        self.groups.as_deref()
    }

    pub fn in_values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.0 as f64).collect()
    }

    pub fn out_values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.1 as f64).collect()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| (p.0 + p.1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HillReport {
    pub k: usize,
    pub index_estimate: f64,
    pub inverse_index: f64,
    /// `index / sqrt(k)`
    pub se: f64,
    pub k_sweep: Option<Vec<(usize, f64)>>,
}

/// `floor(sqrt(n))`, at least 1.
pub fn default_k(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(1)
}

fn positive_descending(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|&x| x > 0.0).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn hill_sorted(desc: &[f64], k: usize) -> Result<HillReport, TailError> {
    if k == 0 || desc.len() < k + 1 {
        return Err(TailError::NonPositiveValues { needed: k + 1, positive: desc.len() });
    }
    let base = desc[k];
    let inverse_index = desc[..k].iter().map(|x| (x / base).ln()).sum::<f64>() / k as f64;
    if inverse_index <= 0.0 {
        return Err(TailError::DegenerateTail);
    }
    let index = 1.0 / inverse_index;
    Ok(HillReport { k, index_estimate: index, inverse_index, se: index / (k as f64).sqrt(), k_sweep: None })
}

/// Hill estimate of the tail index from the `k` largest positive values.
pub fn hill_estimator(values: &[f64], k: usize) -> Result<HillReport, TailError> {
    if k == 0 || values.len() < k + 1 {
        return Err(TailError::InsufficientData { needed: k.max(1) + 1, available: values.len() });
    }
    hill_sorted(&positive_descending(values), k)
}

/// Hill estimate at `k` plus a sweep over `ks`; sweep points that fail are skipped.
pub fn hill_with_sweep(values: &[f64], k: usize, ks: &[usize]) -> Result<HillReport, TailError> {
    if k == 0 || values.len() < k + 1 {
        return Err(TailError::InsufficientData { needed: k.max(1) + 1, available: values.len() });
    }
    let desc = positive_descending(values);
    let mut rep = hill_sorted(&desc, k)?;
    rep.k_sweep = Some(ks.iter().filter_map(|&j| hill_sorted(&desc, j).ok().map(|r| (j, r.index_estimate))).collect());
    Ok(rep)
}

/// About 20 log-spaced values of k from 10 up to n/10.
pub fn sweep_grid(n: usize) -> Vec<usize> {
    let hi = (n / 10).max(10) as f64;
    let mut ks: Vec<usize> = (0..20).map(|i| (10.0 * (hi / 10.0).powf(i as f64 / 19.0)).round() as usize).collect();
    ks.dedup();
    ks
}

/// `y / (x + y)`; undefined at the origin.
#[inline]
pub fn angle(x: u64, y: u64) -> f64 {
    y as f64 / (x + y) as f64
}

/// Angles of the pairs whose `x + y` exceeds `threshold`.
pub fn angular_transform(pairs: &[(u64, u64)], threshold: f64) -> Result<Vec<f64>, TailError> {
    let out: Vec<f64> = pairs.iter().filter(|p| (p.0 + p.1) as f64 > threshold).map(|&(x, y)| angle(x, y)).collect();
    if out.is_empty() {
        return Err(TailError::EmptySelection { threshold });
    }
    Ok(out)
}

/// `|y - a x|`
#[inline]
pub fn ray_distance(pair: (f64, f64), a: f64) -> f64 {
    (pair.1 - a * pair.0).abs()
}

/// Empirical quantile, lower order statistic at `floor(q (n - 1))`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let i = ((q * (v.len() - 1) as f64).floor() as usize).min(v.len() - 1);
    v[i]
}

/// Median; the mean of the two middle values for even length.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Counts over `bins` equal cells of `[0, 1]`; 1 falls in the last cell.
pub fn angular_histogram(thetas: &[f64], bins: usize) -> Vec<u64> {
    let bins = bins.max(1);
    let mut h = vec![0u64; bins];
    for &t in thetas {
        let b = ((t * bins as f64) as usize).min(bins - 1);
        h[b] += 1;
    }
    h
}

/// A ray to look for, with its predicted tail index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayTarget {
    pub slope: f64,
    pub predicted_index: f64,
    /// Whether the hidden-regular-variation hypotheses hold for this ray
    /// relative to the previous one; always true for the first.
    pub conditions_met: bool,
}

impl RayTarget {
    pub fn predicted_theta(&self) -> f64 {
        self.slope / (1.0 + self.slope)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HrvOptions {
    pub radius_quantile: f64,
    /// Share of all pairs, by largest distance, kept at each peel stage.
    pub distance_fraction: f64,
    /// Rays to examine; 2 covers the first hidden layer.
    pub max_rays: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailOptions {
    pub hrv: HrvOptions,
    pub bins: usize,
    /// Hill order statistic; `floor(sqrt(n))` when absent.
    pub hill_k: Option<usize>,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions { hrv: HrvOptions::default(), bins: HISTOGRAM_BINS, hill_k: None }
    }
}

impl Default for HrvOptions {
    fn default() -> Self {
        HrvOptions {
            radius_quantile: DEFAULT_RADIUS_QUANTILE,
            distance_fraction: DEFAULT_DISTANCE_FRACTION,
            max_rays: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayStage {
    /// 1-based position in the peel order.
    pub ray: usize,
    pub predicted_index: f64,
    pub predicted_theta: f64,
    pub estimated_index: f64,
    pub hill_k: usize,
    pub theta_median: f64,
    /// Pairs used for this stage.
    pub selected: usize,
    /// Pairs left out at this stage.
    pub removed: usize,
    pub threshold: f64,
    pub conditions_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HrvReport {
    pub a1_used: f64,
    pub removal_rule: String,
    pub first_index: f64,
    pub second_index: f64,
    pub first_ray_theta: f64,
    pub second_ray_estimate: f64,
    /// `(c*/lambda_(1), a(1), c*/lambda_(2), a(2))`
    pub predicted: (f64, f64, f64, f64),
    pub stages: Vec<RayStage>,
    pub total: usize,
    /// Some hypothesis failed; estimates are reported without guarantees.
    pub degraded: bool,
}

/// Peels rays off a dataset in order.
///
/// Stage 1 takes pairs with radius above the `radius_quantile` quantile, runs
/// Hill on those radii and takes the median angle. Each later stage measures
/// every pair's distance to the nearest ray found so far, keeps the largest
/// `distance_fraction` share, and runs Hill on those distances and the median
/// angle on those pairs.
pub fn hrv_peel_rays(data: &DegreeDataset, rays: &[RayTarget], opts: &HrvOptions) -> Result<HrvReport, TailError> {
    if rays.len() < 2 {
        return Err(TailError::ConditionsUnmet(vec![
            "at least two non-degenerate groups with distinct eigenvalues are needed".into(),
        ]));
    }
    let n = data.len();
    let radii = data.radii();
    let threshold = quantile(&radii, opts.radius_quantile);
    let selected: Vec<usize> = (0..n).filter(|&i| radii[i] > threshold).collect();
    if selected.is_empty() {
        return Err(TailError::EmptySelection { threshold });
    }
    let thetas: Vec<f64> = selected.iter().map(|&i| angle(data.pairs[i].0, data.pairs[i].1)).collect();
    let k1 = selected.len().min(n - 1);
    let first = hill_estimator(&radii, k1)?;
    let mut stages = vec![RayStage {
        ray: 1,
        predicted_index: rays[0].predicted_index,
        predicted_theta: rays[0].predicted_theta(),
        estimated_index: first.index_estimate,
        hill_k: k1,
        theta_median: median(&thetas),
        selected: selected.len(),
        removed: n - selected.len(),
        threshold,
        conditions_met: true,
    }];

    let k = ((opts.distance_fraction * n as f64).floor() as usize).max(1);
    let mut dist = vec![f64::INFINITY; n];
    let last = rays.len().min(opts.max_rays.max(2));
    for j in 1..last {
        if j >= 2 && !rays[j].conditions_met {
            break;
        }
        let a = rays[j - 1].slope;
        for (d, &(x, y)) in dist.iter_mut().zip(&data.pairs) {
            *d = d.min(ray_distance((x as f64, y as f64), a));
        }
        if dist.iter().all(|&d| d == 0.0) {
            return Err(TailError::DegenerateTail);
        }
        let hill = hill_estimator(&dist, k)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&p, &q| dist[q].total_cmp(&dist[p]));
        let top = &order[..k];
        let th: Vec<f64> = top
            .iter()
            .filter(|&&i| data.pairs[i].0 + data.pairs[i].1 > 0)
            .map(|&i| angle(data.pairs[i].0, data.pairs[i].1))
            .collect();
        stages.push(RayStage {
            ray: j + 1,
            predicted_index: rays[j].predicted_index,
            predicted_theta: rays[j].predicted_theta(),
            estimated_index: hill.index_estimate,
            hill_k: k,
            theta_median: if th.is_empty() { f64::NAN } else { median(&th) },
            selected: k,
            removed: n - k,
            threshold: dist[order[k.min(n - 1)]],
            conditions_met: rays[j].conditions_met,
        });
    }
    Ok(HrvReport {
        a1_used: rays[0].slope,
        removal_rule: format!(
            "stage 1: radius above the {} quantile; stage j > 1: top {} share of min_i |y - a(i) x| over earlier rays",
            opts.radius_quantile, opts.distance_fraction
        ),
        first_index: stages[0].estimated_index,
        second_index: stages[1].estimated_index,
        first_ray_theta: stages[0].theta_median,
        second_ray_estimate: stages[1].theta_median,
        predicted: (rays[0].predicted_index, rays[0].slope, rays[1].predicted_index, rays[1].slope),
        degraded: stages.iter().any(|s| !s.conditions_met),
        stages,
        total: n,
    })
}

/// Rays of the model's groups in descending eigenvalue order.
///
/// `spectra_sorted` must already be in that order. The condition for ray `j`
/// is `lambda_j > lambda_{j-1} / 2` and `lambda_j >= ln 2`.
pub fn model_rays(spectra_sorted: &[GroupSpectral], c_star: f64) -> Vec<RayTarget> {
    spectra_sorted
        .iter()
        .enumerate()
        .map(|(j, s)| RayTarget {
            slope: s.slope,
            predicted_index: c_star / s.lambda,
            conditions_met: j == 0
                || (s.lambda > spectra_sorted[j - 1].lambda / 2.0 && s.lambda >= std::f64::consts::LN_2),
        })
        .collect()
}

pub fn hrv_peel(
    data: &DegreeDataset,
    spectra_sorted: &[GroupSpectral],
    sol: &EquilibriumSolution,
    opts: &HrvOptions,
) -> Result<HrvReport, TailError> {
    let rays = model_rays(spectra_sorted, sol.c_star);
    let unmet = unmet_conditions(&sol.regular, spectra_sorted.len());
    if spectra_sorted.len() < 2 || !sol.regular.distinct_eigenvalues {
        return Err(TailError::ConditionsUnmet(unmet));
    }
    let mut rep = hrv_peel_rays(data, &rays, opts)?;
    rep.degraded |= !sol.regular.hrv_condition;
    Ok(rep)
}

fn unmet_conditions(r: &RegularityReport, groups: usize) -> Vec<String> {
    let mut out = Vec::new();
    if groups < 2 {
        out.push(format!("{groups} non-degenerate group(s); at least two are needed"));
    }
    if !r.distinct_eigenvalues {
        out.push("group eigenvalues are not distinct".into());
    }
    if !r.hrv_condition {
        out.push("lambda_(2) > lambda_(1)/2 and lambda_(2) >= ln 2 do not both hold".into());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRow {
    pub quantity: String,
    pub predicted: f64,
    pub estimated: f64,
    pub rel_error: f64,
}

impl PredictionRow {
    fn new(quantity: impl Into<String>, predicted: f64, estimated: f64) -> Self {
        PredictionRow {
            quantity: quantity.into(),
            predicted,
            estimated,
            rel_error: (estimated - predicted).abs() / predicted.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub n: usize,
    pub hill_k: usize,
    pub hill_in: Option<HillReport>,
    pub hill_out: Option<HillReport>,
    pub radius_threshold: f64,
    pub theta_median: f64,
    pub selected: usize,
    /// Counts over equal bins of `[0, 1]`.
    pub angular_histogram: Vec<u64>,
    pub hrv: Option<HrvReport>,
    pub hrv_error: Option<String>,
    pub predictions: Vec<PredictionRow>,
    pub warnings: Vec<String>,
}

/// Marginal Hill estimates, the angular picture above the radius quantile,
/// and the peel, each set against its prediction.
pub fn tail_report(
    data: &DegreeDataset,
    spectra_sorted: &[GroupSpectral],
    sol: &EquilibriumSolution,
    opts: &TailOptions,
) -> Result<TailReport, TailError> {
    let n = data.len();
    let k = opts.hill_k.unwrap_or_else(|| default_k(n));
    let ks = sweep_grid(n);
    let mut warnings = Vec::new();
    let mut hill = |vals: Vec<f64>, name: &str| match hill_with_sweep(&vals, k, &ks) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("{name} Hill estimate unavailable: {e}"));
            None
        }
    };
    let hill_in = hill(data.in_values(), "in-degree");
    let hill_out = hill(data.out_values(), "out-degree");
    let radii = data.radii();
    let threshold = quantile(&radii, opts.hrv.radius_quantile);
    let thetas = angular_transform(data.pairs(), threshold)?;
    let theta_median = median(&thetas);

    let mut predictions = Vec::new();
    if let Some(top) = spectra_sorted.first() {
        let idx = sol.c_star / top.lambda;
        if let Some(h) = &hill_in {
            predictions.push(PredictionRow::new("in-degree index", idx, h.index_estimate));
        }
        if let Some(h) = &hill_out {
            predictions.push(PredictionRow::new("out-degree index", idx, h.index_estimate));
        }
        predictions.push(PredictionRow::new("first ray theta", top.slope / (1.0 + top.slope), theta_median));
    }
    if !sol.regular.star {
        warnings.push("regularity condition fails; predictions are not guaranteed".into());
    }
    let (hrv, hrv_error) = match hrv_peel(data, spectra_sorted, sol, &opts.hrv) {
        Ok(r) => {
            predictions.push(PredictionRow::new("first index (radius)", r.predicted.0, r.first_index));
            predictions.push(PredictionRow::new("second index (distance)", r.predicted.2, r.second_index));
            predictions.push(PredictionRow::new(
                "second ray theta",
                r.predicted.3 / (1.0 + r.predicted.3),
                r.second_ray_estimate,
            ));
            if r.degraded {
                warnings.push("hidden regular variation hypotheses fail; peel run in degraded mode".into());
            }
            (Some(r), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(TailReport {
        n,
        hill_k: k,
        hill_in,
        hill_out,
        radius_threshold: threshold,
        theta_median,
        selected: thetas.len(),
        angular_histogram: angular_histogram(&thetas, opts.bins),
        hrv,
        hrv_error,
        predictions,
        warnings,
    })
}

/// Total variation distance on a shared grid, overflow treated as one cell.
pub fn compare_pmf(p: &JointPmfEstimate, q: &JointPmfEstimate) -> Result<f64, TailError> {
    if (p.kmax, p.lmax) != (q.kmax, q.lmax) {
        return Err(TailError::GridMismatch((p.kmax, p.lmax), (q.kmax, q.lmax)));
    }
    let cells: f64 = p.grid.iter().zip(&q.grid).map(|(a, b)| (a - b).abs()).sum();
    Ok(0.5 * cells + 0.5 * (p.overflow_mass - q.overflow_mass).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hill_hand_example() {
        let r = hill_estimator(&[100.0, 10.0, 1.0], 2).unwrap();
        assert!((r.inverse_index - (100f64.ln() + 10f64.ln()) / 2.0).abs() < 1e-12);
        assert!((r.index_estimate - 0.28954).abs() < 5e-5);
    }

    #[test]
    fn hill_errors() {
        assert!(matches!(hill_estimator(&[1.0, 2.0], 2), Err(TailError::InsufficientData { .. })));
        assert!(matches!(hill_estimator(&[0.0, 0.0, 5.0, 1.0], 2), Err(TailError::NonPositiveValues { .. })));
        assert_eq!(hill_estimator(&[3.0; 10], 4), Err(TailError::DegenerateTail));
    }

    #[test]
    fn hill_on_pareto_grid() {
        let n = 100_000;
        let vals: Vec<f64> = (1..=n).map(|i| (i as f64 / (n + 1) as f64).powf(-0.5)).collect();
        let r = hill_estimator(&vals, default_k(n)).unwrap();
        assert!((r.index_estimate - 2.0).abs() < 0.1, "{}", r.index_estimate);
    }

    #[test]
    fn angular_examples() {
        assert_eq!(angular_transform(&[(3, 1)], 2.0).unwrap(), vec![0.25]);
        assert_eq!(angular_transform(&[(0, 5)], 2.0).unwrap(), vec![1.0]);
        assert!(matches!(angular_transform(&[(1, 0)], 2.0), Err(TailError::EmptySelection { .. })));
        let ray: Vec<(u64, u64)> = (1..50).map(|x| (x, 3 * x)).collect();
        assert!(angular_transform(&ray, 0.0).unwrap().iter().all(|&t| t == 0.75));
    }

    #[test]
    fn ray_distance_examples() {
        assert_eq!(ray_distance((3.0, 5.0), 1.0), 2.0);
        assert_eq!(ray_distance((4.0, 8.0), 2.0), 0.0);
        assert!((ray_distance((100.0, 115.0), 1.154_700_538_4) - 0.470_053_84).abs() < 1e-6);
    }

    #[test]
    fn single_ray_data_has_no_hidden_tail() {
        let pairs: Vec<(u64, u64)> = (1..=5_000).map(|x| (x, 2 * x)).collect();
        let d = DegreeDataset::new(pairs, None).unwrap();
        let rays = [
            RayTarget { slope: 2.0, predicted_index: 1.0, conditions_met: true },
            RayTarget { slope: 0.5, predicted_index: 2.0, conditions_met: true },
        ];
        assert_eq!(hrv_peel_rays(&d, &rays, &HrvOptions::default()), Err(TailError::DegenerateTail));
        assert!(matches!(hrv_peel_rays(&d, &rays[..1], &HrvOptions::default()), Err(TailError::ConditionsUnmet(_))));
    }

    #[test]
    fn tv_examples() {
        let mut a = CountGrid::new(1, 0);
        a.add(0, 0);
        let mut b = CountGrid::new(1, 0);
        b.add(1, 0);
        let mut u = CountGrid::new(1, 0);
        u.add(0, 0);
        u.add(1, 0);
        let est = |g: &CountGrid| JointPmfEstimate::from_counts(g.clone(), vec![], g.total(), 0);
        assert_eq!(compare_pmf(&est(&a), &est(&a)).unwrap(), 0.0);
        assert_eq!(compare_pmf(&est(&a), &est(&b)).unwrap(), 1.0);
        assert_eq!(compare_pmf(&est(&u), &est(&a)).unwrap(), 0.5);
        let other = JointPmfEstimate::from_counts(CountGrid::new(2, 2), vec![], 0, 0);
        assert!(matches!(compare_pmf(&est(&a), &other), Err(TailError::GridMismatch(..))));
    }

    #[test]
    fn histogram_and_quantiles() {
        let h = angular_histogram(&[0.0, 0.5, 1.0, 0.999], HISTOGRAM_BINS);
        assert_eq!((h[0], h[25], h[49]), (1, 1, 2));
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(quantile(&[5.0, 1.0, 3.0], 0.5), 3.0);
    }

    #[test]
    fn dataset_checks() {
        assert_eq!(DegreeDataset::new(vec![], None), Err(TailError::EmptyDataset));
        assert!(matches!(DegreeDataset::new(vec![(1, 1)], Some(vec![])), Err(TailError::BadDimensions { .. })));
        let mut g = CountGrid::new(2, 2);
        g.add_n(1, 2, 3);
        g.add(9, 9);
        let d = DegreeDataset::from_counts(&g).unwrap();
        assert_eq!(d.pairs(), &[(1, 2); 3]);
    }
}
