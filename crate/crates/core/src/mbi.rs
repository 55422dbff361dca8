//! Two-type Markov branching processes with immigration.
//!
//! A process of group `m` holds `n1` type I and `n2` type II particles. Type I
//! particles split at rate `alpha`, type II at rate `gamma`, and immigrants
//! arrive at rate `delta`. A type I split adds `(1,0)`, or `(1,1)` with
//! probability `rho_{m.}`; a type II split adds `(0,1)`, or `(1,1)` with
//! probability `rho_{.m}`.
//!
//! Only the aggregate counts are simulated, since the rates depend on nothing
//! else.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::EquilibriumSolution;
use crate::model::{group_rates, GroupRates, ModelParams};
use crate::pmf::{CountGrid, JointPmfEstimate};
use crate::rng::{stream_rng, SimRng};

pub const DEFAULT_EVENT_BUDGET: u64 = 10_000_000;

/// Rates of one group's branching process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MbiDynamics {
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    /// `rho_{m.}`
    pub send: f64,
    /// `rho_{.m}`
    pub recv: f64,
}

impl MbiDynamics {
    /// Unchecked constructor; `delta = 0` is allowed here.
    pub fn new(alpha: f64, delta: f64, send: f64, recv: f64) -> Self {
        MbiDynamics { alpha, gamma: 1.0 - alpha, delta, send, recv }
    }

    pub fn for_group(params: &ModelParams, rates: &GroupRates, m: usize) -> Self {
        Self::new(params.alpha(), params.delta(), rates.rho_row[m], rates.rho_col[m])
    }

    pub fn total_rate(&self, n1: u64, n2: u64) -> f64 {
        self.alpha * n1 as f64 + self.gamma * n2 as f64 + self.delta
    }

    /// Immigrant distribution over `(1,0)`, `(0,1)`, `(1,1)`.
    pub fn immigrant_law(&self) -> [f64; 3] {
        [
            self.alpha * (1.0 - self.send),
            self.gamma * (1.0 - self.recv),
            self.alpha * self.send + self.gamma * self.recv,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MbiState {
    pub n1: u64,
    pub n2: u64,
    pub t: f64,
    pub events: u64,
    pub immigrations: u64,
}

impl MbiState {
    pub fn start(init: (u64, u64)) -> Self {
        MbiState { n1: init.0, n2: init.1, t: 0.0, events: 0, immigrations: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MbiError {
    #[error("EventBudgetExceeded: more than {budget} events before t = {t_end} (reached t = {})", partial.t)]
    EventBudgetExceeded { budget: u64, t_end: f64, partial: MbiState },
    #[error("RegularityNotMet: the limiting degree law is only defined under the regularity condition")]
    RegularityNotMet,
}

/// Runs the process from `init` until `t_end`.
///
/// Per event: one `Exp(1)` for the holding time, one uniform to pick the
/// event class, one uniform for its outcome.
pub fn simulate_mbi(
    dynamics: &MbiDynamics,
    init: (u64, u64),
    t_end: f64,
    budget: u64,
    rng: &mut SimRng,
) -> Result<MbiState, MbiError> {
    let mut s = MbiState::start(init);
    advance(dynamics, &mut s, t_end, budget, rng)?;
    Ok(s)
}

fn advance(d: &MbiDynamics, s: &mut MbiState, t_end: f64, budget: u64, rng: &mut SimRng) -> Result<(), MbiError> {
    loop {
        let rate = d.total_rate(s.n1, s.n2);
        if rate <= 0.0 {
            s.t = t_end;
            return Ok(());
        }
        let e: f64 = rng.sample(Exp1);
        let next = s.t + e / rate;
        if next > t_end {
            s.t = t_end;
            return Ok(());
        }
        if s.events >= budget {
            return Err(MbiError::EventBudgetExceeded { budget, t_end, partial: *s });
        }
        s.t = next;
        s.events += 1;
        let pick = rng.random::<f64>() * rate;
        let coin: f64 = rng.random();
        let split1 = d.alpha * s.n1 as f64;
        let split2 = d.gamma * s.n2 as f64;
        if pick < split1 {
            s.n1 += 1;
            if coin < d.send {
                s.n2 += 1;
            }
        } else if pick < split1 + split2 {
            s.n2 += 1;
            if coin < d.recv {
                s.n1 += 1;
            }
        } else {
            s.immigrations += 1;
            let [p10, p01, _] = d.immigrant_law();
            if coin < p10 {
                s.n1 += 1;
            } else if coin < p10 + p01 {
                s.n2 += 1;
            } else {
                s.n1 += 1;
                s.n2 += 1;
            }
        }
    }
}

/// Draws `(I_m, O_m)`: a group-`m` process with the limiting initial law,
/// observed at an independent `Exp(c*)` time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitPairSampler {
    pub c_star: f64,
    /// Per group: probabilities of starting at `(0,1)`, `(1,0)`, `(1,1)`.
    pub init: Vec<[f64; 3]>,
    pub dynamics: Vec<MbiDynamics>,
    pub event_budget: u64,
    #[serde(skip)]
    params: ModelParams,
}

impl LimitPairSampler {
    pub fn new(params: &ModelParams, sol: &EquilibriumSolution) -> Self {
        let k = params.groups();
        let delta = params.delta();
        let sx: f64 = sol.x.iter().sum();
        let sy: f64 = sol.y.iter().sum();
        let pi = params.pi();
        let px: Vec<f64> = (0..k).map(|m| (sol.x[m] + delta * pi[m]) / (sx + delta)).collect();
        let py: Vec<f64> = (0..k).map(|m| (sol.y[m] + delta * pi[m]) / (sy + delta)).collect();
        let (a, g) = (params.alpha(), params.gamma());
        let init = (0..k)
            .map(|r| {
                let q_in: f64 = (0..k).map(|m| params.rho(m, r) * px[m]).sum();
                let q_out: f64 = (0..k).map(|m| params.rho(r, m) * py[m]).sum();
                [a * (1.0 - q_in), g * (1.0 - q_out), a * q_in + g * q_out]
            })
            .collect();
        let rates = group_rates(params);
        LimitPairSampler {
            c_star: sol.c_star,
            init,
            dynamics: (0..k).map(|m| MbiDynamics::for_group(params, &rates, m)).collect(),
            event_budget: DEFAULT_EVENT_BUDGET,
            params: params.clone(),
        }
    }

    pub fn init_distribution(&self, m: usize) -> [f64; 3] {
        self.init[m]
    }

    pub fn sample_init(&self, m: usize, u: f64) -> (u64, u64) {
        let [p01, p10, _] = self.init[m];
        if u < p01 {
            (0, 1)
        } else if u < p01 + p10 {
            (1, 0)
        } else {
            (1, 1)
        }
    }

    /// Group-`m` pair at a given time instead of a random one.
    pub fn sample_at(&self, m: usize, t: f64, rng: &mut SimRng) -> Result<(u64, u64), MbiError> {
        let init = self.sample_init(m, rng.random());
        let s = simulate_mbi(&self.dynamics[m], init, t, self.event_budget, rng)?;
        Ok((s.n1, s.n2))
    }

    /// Draws `T*` then the initial state, then runs to `T*`.
    pub fn sample_limit_pair(&self, m: usize, rng: &mut SimRng) -> Result<(u64, u64), MbiError> {
        let e: f64 = rng.sample(Exp1);
        self.sample_at(m, e / self.c_star, rng)
    }

    /// Label from `pi`, then a group pair.
    pub fn sample_mixed(&self, rng: &mut SimRng) -> (usize, Result<(u64, u64), MbiError>) {
        let m = self.params.group_from_uniform(rng.random());
        (m, self.sample_limit_pair(m, rng))
    }
}

#[derive(Clone)]
struct Tally {
    total: CountGrid,
    groups: Vec<CountGrid>,
    failed: u64,
}

impl Tally {
    fn new(kmax: usize, lmax: usize, k: usize) -> Self {
        Tally { total: CountGrid::new(kmax, lmax), groups: vec![CountGrid::new(kmax, lmax); k], failed: 0 }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.total.merge(&other.total);
        for (a, b) in self.groups.iter_mut().zip(&other.groups) {
            a.merge(b);
        }
        self.failed += other.failed;
        self
    }
}

/// Monte Carlo estimate of the limiting joint degree pmf.
///
/// Replicate `i` uses stream `i` of `seed`, so the result does not depend on
/// the thread count. Samples that exceed the event budget are counted in
/// `failed` and left out of the normalization.
pub fn estimate_pkl(
    params: &ModelParams,
    sol: &EquilibriumSolution,
    replicates: u64,
    kmax: usize,
    lmax: usize,
    seed: u64,
) -> Result<JointPmfEstimate, MbiError> {
    if !sol.regular.star {
        return Err(MbiError::RegularityNotMet);
    }
    let sampler = LimitPairSampler::new(params, sol);
    Ok(estimate_with(&sampler, replicates, kmax, lmax, seed))
}

pub fn estimate_with(
    sampler: &LimitPairSampler,
    replicates: u64,
    kmax: usize,
    lmax: usize,
    seed: u64,
) -> JointPmfEstimate {
    let k = sampler.init.len();
    let tally = (0..replicates)
        .into_par_iter()
        .fold(
            || Tally::new(kmax, lmax, k),
            |mut acc, i| {
                let mut rng = stream_rng(seed, i);
                match sampler.sample_mixed(&mut rng) {
                    (m, Ok((a, b))) => {
                        acc.total.add(a, b);
                        acc.groups[m].add(a, b);
                    }
                    (_, Err(_)) => acc.failed += 1,
                }
                acc
            },
        )
        .reduce(|| Tally::new(kmax, lmax, k), Tally::merge);
    JointPmfEstimate::from_counts(tally.total, tally.groups, replicates, tally.failed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{solve_equilibrium, SolverOptions};

    #[test]
    fn zero_horizon_returns_init() {
        let d = MbiDynamics::new(0.5, 1.0, 0.5, 0.5);
        let s = simulate_mbi(&d, (3, 4), 0.0, 10, &mut stream_rng(0, 0)).unwrap();
        assert_eq!((s.n1, s.n2, s.events), (3, 4, 0));
    }

    #[test]
    fn full_reciprocity_keeps_difference() {
        let d = MbiDynamics::new(0.3, 0.0, 1.0, 1.0);
        for seed in 0..50 {
            let s = simulate_mbi(&d, (2, 5), 3.0, DEFAULT_EVENT_BUDGET, &mut stream_rng(seed, 0)).unwrap();
            assert_eq!(s.n1 as i64 - s.n2 as i64, -3);
        }
    }

    #[test]
    fn empty_without_immigration_stays_empty() {
        let d = MbiDynamics::new(0.5, 0.0, 0.5, 0.5);
        let s = simulate_mbi(&d, (0, 0), 100.0, 10, &mut stream_rng(0, 0)).unwrap();
        assert_eq!((s.n1, s.n2), (0, 0));
    }

    #[test]
    fn budget_overrun_carries_partial_state() {
        let d = MbiDynamics::new(0.5, 1.0, 0.5, 0.5);
        match simulate_mbi(&d, (1, 1), 1e6, 100, &mut stream_rng(1, 0)) {
            Err(MbiError::EventBudgetExceeded { partial, budget, .. }) => {
                assert_eq!(budget, 100);
                assert_eq!(partial.events, 100);
                assert!(partial.n1 + partial.n2 >= 102);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn limit_init_reference() {
        let p = ModelParams::single_group(0.5, 1.0, 0.5).unwrap();
        let sol = solve_equilibrium(&p, &SolverOptions::default()).unwrap();
        let s = LimitPairSampler::new(&p, &sol);
        let [a, b, c] = s.init_distribution(0);
        assert!((a - 0.25).abs() < 1e-12 && (b - 0.25).abs() < 1e-12 && (c - 0.5).abs() < 1e-12);
        assert!((s.c_star - 2.5).abs() < 1e-12);
    }

    #[test]
    fn init_laws_are_distributions() {
        let p = ModelParams::new(
            0.3,
            0.7,
            vec![0.2, 0.5, 0.3],
            vec![vec![0.1, 0.9, 0.4], vec![0.0, 0.3, 1.0], vec![0.6, 0.6, 0.2]],
        )
        .unwrap();
        let sol = solve_equilibrium(&p, &SolverOptions::default()).unwrap();
        let s = LimitPairSampler::new(&p, &sol);
        for m in 0..3 {
            let d = s.init_distribution(m);
            assert!(d.iter().all(|&v| v >= 0.0));
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pairs_are_never_empty() {
        let p = ModelParams::single_group(0.5, 1.0, 0.5).unwrap();
        let sol = solve_equilibrium(&p, &SolverOptions::default()).unwrap();
        let s = LimitPairSampler::new(&p, &sol);
        let mut rng = stream_rng(5, 0);
        for _ in 0..2_000 {
            let (a, b) = s.sample_limit_pair(0, &mut rng).unwrap();
            assert!(a + b >= 1);
        }
    }

    #[test]
    fn estimate_mass_and_group_mix() {
        let p = ModelParams::new(0.5, 1.0, vec![0.5, 0.5], vec![vec![0.9, 0.9], vec![0.45, 0.45]]).unwrap();
        let sol = solve_equilibrium(&p, &SolverOptions::default()).unwrap();
        let est = estimate_pkl(&p, &sol, 5_000, 10, 10, 3).unwrap();
        assert!((est.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(est.prob(0, 0), 0.0);
        let mut mixed = CountGrid::new(10, 10);
        for g in &est.groups {
            mixed.merge(g);
        }
        assert_eq!(mixed, est.counts);
        let again = estimate_pkl(&p, &sol, 5_000, 10, 10, 3).unwrap();
        assert_eq!(again.counts, est.counts);
    }

    #[test]
    fn zero_reciprocity_has_a_zero_coordinate_at_time_zero_only() {
        let p = ModelParams::single_group(0.5, 1.0, 0.0).unwrap();
        let sol = solve_equilibrium(&p, &SolverOptions::default()).unwrap();
        let s = LimitPairSampler::new(&p, &sol);
        let mut rng = stream_rng(2, 0);
        for _ in 0..200 {
            let (a, b) = s.sample_at(0, 0.0, &mut rng).unwrap();
            assert!((a, b) == (0, 1) || (a, b) == (1, 0));
        }
    }
}
