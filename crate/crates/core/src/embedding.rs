//! The graph as a linked family of delayed branching processes.
//!
//! Process `k` tracks node `k`: type I particles are its in-degree, type II
//! its out-degree. Whenever some process jumps, the next process starts with
//! an initial state and label determined by how it jumped. After `n` jumps
//! the counts have the same law as the degree sequence of the graph after `n`
//! steps; [`verify_equivalence`] checks this against an exact enumeration of
//! the graph's transition law.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::model::{group_rates, GroupRates, ModelParams};
use crate::rng::{stream_rng, SimRng};

pub const MAX_CHAIN_STEPS: usize = 10_000;
pub const MAX_ENUMERATION_STEPS: usize = 3;
/// Cells with fewer expected counts are pooled before the chi-square test.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmbeddingError {
    #[error("ChainTooLong: {0} jumps requested, the harness allows at most {MAX_CHAIN_STEPS}")]
    ChainTooLong(usize),
    #[error("EnumerationTooLarge: exact enumeration supports n <= {MAX_ENUMERATION_STEPS}, got {0}")]
    EnumerationTooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddedProcess {
    pub n1: u64,
    pub n2: u64,
    pub label: usize,
    pub birth: f64,
}

/// How the jumping process moved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum JumpKind {
    /// `(1,0)`, new process starts at `(0,1)`.
    InOnly,
    /// `(0,1)`, new process starts at `(1,0)`.
    OutOnly,
    /// `(1,1)` driven by the type I clock.
    ReciprocatedIn,
    /// `(1,1)` driven by the type II clock.
    ReciprocatedOut,
}

impl JumpKind {
    pub fn reciprocated(self) -> bool {
        matches!(self, JumpKind::ReciprocatedIn | JumpKind::ReciprocatedOut)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingChainState {
    pub processes: Vec<EmbeddedProcess>,
    /// `R_k`: whether jump `k` added `(1,1)` to the jumping process.
    pub reciprocations: Vec<bool>,
    /// Index of the jumping process at each jump, 0-based.
    pub jumpers: Vec<usize>,
    /// Jump times `T_1, T_2, ...`.
    pub times: Vec<f64>,
    pub delta: f64,
}

impl EmbeddingChainState {
    /// One process at `(1,1)` with a label drawn from `pi`.
    pub fn start(params: &ModelParams, rng: &mut SimRng) -> Self {
        let label = params.group_from_uniform(rng.random());
        EmbeddingChainState {
            processes: vec![EmbeddedProcess { n1: 1, n2: 1, label, birth: 0.0 }],
            reciprocations: Vec::new(),
            jumpers: Vec::new(),
            times: Vec::new(),
            delta: params.delta(),
        }
    }

    pub fn now(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// `sum n1 = sum n2 = (#processes) + sum R`.
    pub fn check_identity(&self) -> bool {
        let s1: u64 = self.processes.iter().map(|p| p.n1).sum();
        let s2: u64 = self.processes.iter().map(|p| p.n2).sum();
        let target = self.processes.len() as u64 + self.reciprocations.iter().filter(|&&r| r).count() as u64;
        s1 == target && s2 == target
    }

    /// Edge count of the matching graph.
    pub fn edges(&self) -> u64 {
        self.processes.iter().map(|p| p.n1).sum()
    }

    /// Advances to the next jump time.
    ///
    /// Process `k` of label `m` jumps through four clocks:
    /// `alpha (1-rho_{m.}) (n1+delta)`, `gamma (1-rho_{.m}) (n2+delta)`,
    /// `alpha rho_{m.} (n1+delta)` and `gamma rho_{.m} (n2+delta)`. Immigrant
    /// `(1,1)` arrivals are split between the last two in proportion to their
    /// rates, which keeps the new label law tied to the clock that fired.
    ///
    /// Draws: `Exp(1)` holding time, one uniform for the clock, one for the
    /// new label.
    pub fn jump(&mut self, params: &ModelParams, rates: &GroupRates, rng: &mut SimRng) -> JumpKind {
        let (a, g, d) = (params.alpha(), params.gamma(), self.delta);
        let total: f64 = self.processes.iter().map(|p| a * (p.n1 as f64 + d) + g * (p.n2 as f64 + d)).sum();
        let e: f64 = rng.sample(Exp1);
        let t = self.now() + e / total;
        let mut x = rng.random::<f64>() * total;

        let mut chosen = (self.processes.len() - 1, JumpKind::ReciprocatedOut);
        'scan: for (k, p) in self.processes.iter().enumerate() {
            let (s, c) = (rates.rho_row[p.label], rates.rho_col[p.label]);
            let w1 = a * (p.n1 as f64 + d);
            let w2 = g * (p.n2 as f64 + d);
            for (w, kind) in [
                (w1 * (1.0 - s), JumpKind::InOnly),
                (w2 * (1.0 - c), JumpKind::OutOnly),
                (w1 * s, JumpKind::ReciprocatedIn),
                (w2 * c, JumpKind::ReciprocatedOut),
            ] {
                if x < w {
                    chosen = (k, kind);
                    break 'scan;
                }
                x -= w;
            }
        }
        let (k, kind) = chosen;
        let m = self.processes[k].label;
        let label_weight = |r: usize| -> f64 {
            let pi = params.pi()[r];
            match kind {
                JumpKind::InOnly => pi * (1.0 - params.rho(m, r)),
                JumpKind::OutOnly => pi * (1.0 - params.rho(r, m)),
                JumpKind::ReciprocatedIn => pi * params.rho(m, r),
                JumpKind::ReciprocatedOut => pi * params.rho(r, m),
            }
        };
        let kk = params.groups();
        let norm: f64 = (0..kk).map(label_weight).sum();
        let mut y = rng.random::<f64>() * norm;
        let mut label = kk - 1;
        for r in 0..kk {
            let w = label_weight(r);
            if y < w {
                label = r;
                break;
            }
            y -= w;
        }

        let (inc, init) = match kind {
            JumpKind::InOnly => ((1, 0), (0, 1)),
            JumpKind::OutOnly => ((0, 1), (1, 0)),
            _ => ((1, 1), (1, 1)),
        };
        let p = &mut self.processes[k];
        p.n1 += inc.0;
        p.n2 += inc.1;
        self.processes.push(EmbeddedProcess { n1: init.0, n2: init.1, label, birth: t });
        self.reciprocations.push(kind.reciprocated());
        self.jumpers.push(k);
        self.times.push(t);
        debug_assert!(self.check_identity());
        kind
    }

    pub fn observable(&self) -> Observable {
        let mut nodes: Vec<(u32, u32, u32)> =
            self.processes.iter().map(|p| (p.label as u32, p.n1 as u32, p.n2 as u32)).collect();
        nodes.sort_unstable();
        Observable { edges: self.edges(), nodes }
    }
}

/// Runs the linked construction for `n_steps` jumps.
pub fn embedding_chain(
    params: &ModelParams,
    n_steps: usize,
    rng: &mut SimRng,
) -> Result<EmbeddingChainState, EmbeddingError> {
    if n_steps > MAX_CHAIN_STEPS {
        return Err(EmbeddingError::ChainTooLong(n_steps));
    }
    let rates = group_rates(params);
    let mut state = EmbeddingChainState::start(params, rng);
    for _ in 0..n_steps {
        state.jump(params, &rates, rng);
    }
    Ok(state)
}

/// Edge count plus the sorted multiset of `(group, in, out)` over nodes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Observable {
    pub edges: u64,
    pub nodes: Vec<(u32, u32, u32)>,
}

#[derive(Clone)]
struct Node {
    group: usize,
    d_in: u32,
    d_out: u32,
}

fn enumerate(
    params: &ModelParams,
    nodes: &mut Vec<Node>,
    edges: u64,
    left: usize,
    prob: f64,
    out: &mut BTreeMap<Observable, f64>,
) {
    if prob == 0.0 {
        return;
    }
    if left == 0 {
        let mut key: Vec<(u32, u32, u32)> = nodes.iter().map(|v| (v.group as u32, v.d_in, v.d_out)).collect();
        key.sort_unstable();
        *out.entry(Observable { edges, nodes: key }).or_insert(0.0) += prob;
        return;
    }
    let d = params.delta();
    let mass = edges as f64 + d * nodes.len() as f64;
    for new_source in [true, false] {
        let p_scen = if new_source { params.alpha() } else { params.gamma() };
        for v in 0..nodes.len() {
            let deg = if new_source { nodes[v].d_in } else { nodes[v].d_out };
            let p_v = (deg as f64 + d) / mass;
            for r in 0..params.groups() {
                let w = nodes[v].group;
                let back = if new_source { params.rho(w, r) } else { params.rho(r, w) };
                for recip in [false, true] {
                    let p_coin = if recip { back } else { 1.0 - back };
                    let p = prob * p_scen * p_v * params.pi()[r] * p_coin;
                    let (mut fresh_in, mut fresh_out) = (0, 0);
                    let saved = (nodes[v].d_in, nodes[v].d_out);
                    if new_source {
                        fresh_out += 1;
                        nodes[v].d_in += 1;
                    } else {
                        fresh_in += 1;
                        nodes[v].d_out += 1;
                    }
                    if recip {
                        if new_source {
                            fresh_in += 1;
                            nodes[v].d_out += 1;
                        } else {
                            fresh_out += 1;
                            nodes[v].d_in += 1;
                        }
                    }
                    nodes.push(Node { group: r, d_in: fresh_in, d_out: fresh_out });
                    enumerate(params, nodes, edges + 1 + recip as u64, left - 1, p, out);
                    nodes.pop();
                    (nodes[v].d_in, nodes[v].d_out) = saved;
                }
            }
        }
    }
}

/// Exact law of the observable after `n` graph steps.
pub fn exact_observable_law(params: &ModelParams, n: usize) -> Result<BTreeMap<Observable, f64>, EmbeddingError> {
    if n > MAX_ENUMERATION_STEPS {
        return Err(EmbeddingError::EnumerationTooLarge(n));
    }
    let mut out = BTreeMap::new();
    for g in 0..params.groups() {
        let mut nodes = vec![Node { group: g, d_in: 1, d_out: 1 }];
        enumerate(params, &mut nodes, 1, n, params.pi()[g], &mut out);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Cells after pooling.
    pub cells: usize,
}

/// Goodness of fit of observed counts against exact probabilities, pooling
/// every cell with expected count below [`MIN_EXPECTED`] together with any
/// observed outcome outside the support.
pub fn chi_square<K: Ord>(exact: &BTreeMap<K, f64>, observed: &BTreeMap<K, u64>, total: u64) -> ChiSquareResult {
    let n = total as f64;
    let mut terms = Vec::new();
    let (mut pool_e, mut pool_o) = (0.0, 0u64);
    for (key, &p) in exact {
        let e = p * n;
        let o = observed.get(key).copied().unwrap_or(0);
        if e < MIN_EXPECTED {
            pool_e += e;
            pool_o += o;
        } else {
            terms.push((o as f64, e));
        }
    }
    pool_o += observed.iter().filter(|(k, _)| !exact.contains_key(k)).map(|(_, &c)| c).sum::<u64>();
    if pool_e > 0.0 || pool_o > 0 {
        terms.push((pool_o as f64, pool_e));
    }
    let statistic: f64 = terms
        .iter()
        .map(|&(o, e)| {
            if e > 0.0 {
                (o - e).powi(2) / e
            } else if o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    let cells = terms.len();
    let dof = cells.saturating_sub(1);
    let p_value = if dof == 0 {
        if statistic.is_finite() {
            1.0
        } else {
            0.0
        }
    } else if statistic.is_finite() {
        ChiSquared::new(dof as f64).map(|d| 1.0 - d.cdf(statistic)).unwrap_or(f64::NAN)
    } else {
        0.0
    };
    ChiSquareResult { statistic, dof, p_value, cells }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub n: usize,
    pub replicates: u64,
    pub chi_square: ChiSquareResult,
    /// Largest `|frequency - exact probability|` over all outcomes.
    pub max_abs_deviation: f64,
    /// Exact support size before pooling.
    pub support: usize,
    pub exact_mass: f64,
    /// Fraction of chains whose first jump was reciprocated.
    pub first_reciprocation_rate: f64,
}

/// Compares the embedding chain after `n` jumps with the exact graph law.
///
/// Replicate `i` uses stream `i` of `seed`.
pub fn verify_equivalence(
    params: &ModelParams,
    n: usize,
    replicates: u64,
    seed: u64,
) -> Result<EquivalenceReport, EmbeddingError> {
    let exact = exact_observable_law(params, n)?;
    let rates = group_rates(params);
    let (observed, first_r) = (0..replicates)
        .into_par_iter()
        .fold(
            || (BTreeMap::<Observable, u64>::new(), 0u64),
            |(mut map, mut r1), i| {
                let mut rng = stream_rng(seed, i);
                let mut state = EmbeddingChainState::start(params, &mut rng);
                for _ in 0..n {
                    state.jump(params, &rates, &mut rng);
                }
                if state.reciprocations.first() == Some(&true) {
                    r1 += 1;
                }
                *map.entry(state.observable()).or_insert(0) += 1;
                (map, r1)
            },
        )
        .reduce(
            || (BTreeMap::new(), 0),
            |(mut a, ra), (b, rb)| {
                for (k, v) in b {
                    *a.entry(k).or_insert(0) += v;
                }
                (a, ra + rb)
            },
        );
    let total = replicates.max(1) as f64;
    let mut max_dev: f64 = 0.0;
    for (k, &p) in &exact {
        let f = observed.get(k).copied().unwrap_or(0) as f64 / total;
        max_dev = max_dev.max((f - p).abs());
    }
    for (k, &c) in &observed {
        if !exact.contains_key(k) {
            max_dev = max_dev.max(c as f64 / total);
        }
    }
    Ok(EquivalenceReport {
        n,
        replicates,
        chi_square: chi_square(&exact, &observed, replicates),
        max_abs_deviation: max_dev,
        support: exact.len(),
        exact_mass: exact.values().sum(),
        first_reciprocation_rate: first_r as f64 / total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_groups() -> ModelParams {
        ModelParams::new(0.4, 0.8, vec![0.35, 0.65], vec![vec![0.7, 0.2], vec![0.5, 0.9]]).unwrap()
    }

    #[test]
    fn zero_jumps_is_one_loop() {
        let p = two_groups();
        let s = embedding_chain(&p, 0, &mut stream_rng(1, 0)).unwrap();
        assert_eq!(s.processes.len(), 1);
        assert_eq!((s.processes[0].n1, s.processes[0].n2), (1, 1));
        assert!(s.check_identity());
    }

    #[test]
    fn identity_holds_along_the_chain() {
        let p = two_groups();
        let rates = group_rates(&p);
        let mut rng = stream_rng(9, 0);
        let mut s = EmbeddingChainState::start(&p, &mut rng);
        for _ in 0..500 {
            s.jump(&p, &rates, &mut rng);
            assert!(s.check_identity());
        }
        assert!(s.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cap_enforced() {
        let p = two_groups();
        assert_eq!(
            embedding_chain(&p, MAX_CHAIN_STEPS + 1, &mut stream_rng(0, 0)).unwrap_err(),
            EmbeddingError::ChainTooLong(MAX_CHAIN_STEPS + 1)
        );
    }

    #[test]
    fn exact_law_one_step_single_group() {
        let p = ModelParams::single_group(0.5, 1.0, 0.5).unwrap();
        let law = exact_observable_law(&p, 1).unwrap();
        let three: f64 = law.iter().filter(|(k, _)| k.edges == 3).map(|(_, v)| v).sum();
        assert!((three - 0.5).abs() < 1e-15);
        assert!((law.values().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(law.len(), 3);
    }

    #[test]
    fn exact_law_without_reciprocity() {
        let p = ModelParams::single_group(0.3, 2.0, 0.0).unwrap();
        for n in 1..=3 {
            let law = exact_observable_law(&p, n).unwrap();
            assert!(law.keys().all(|k| k.edges == n as u64 + 1));
            assert!((law.values().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(exact_observable_law(&p, 4).unwrap_err(), EmbeddingError::EnumerationTooLarge(4));
    }

    #[test]
    fn chi_square_pools_and_flags_unsupported_outcomes() {
        let exact: BTreeMap<u8, f64> = [(0, 0.5), (1, 0.5)].into_iter().collect();
        let obs: BTreeMap<u8, u64> = [(0, 50), (1, 50)].into_iter().collect();
        let r = chi_square(&exact, &obs, 100);
        assert_eq!((r.statistic, r.dof), (0.0, 1));
        assert!((r.p_value - 1.0).abs() < 1e-12);
        let bad: BTreeMap<u8, u64> = [(0, 50), (1, 49), (7, 1)].into_iter().collect();
        assert_eq!(chi_square(&exact, &bad, 100).p_value, 0.0);
    }

    #[test]
    fn small_run_matches_exact_law() {
        let p = two_groups();
        let r = verify_equivalence(&p, 2, 20_000, 4).unwrap();
        assert!(r.chi_square.p_value > 1e-4, "{r:?}");
        assert!((r.exact_mass - 1.0).abs() < 1e-12);
    }
}
