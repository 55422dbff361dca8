//! The growing network.
//!
//! Each step adds one node and one edge between it and an existing node,
//! chosen preferentially by in-degree (new node is the source) with
//! probability `alpha`, or by out-degree (new node is the target) with
//! probability `gamma`. The existing node then reverses the edge with a
//! probability that depends on both endpoints' groups.
//!
//! Node ids are 1-based in every record that leaves this module; internal
//! vectors are indexed by `id - 1`.

use rand::Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::model::ModelParams;
use crate::pmf::{CountGrid, JointPmfEstimate};
use crate::rng::{stream_rng, SimRng};

/// Default memory ceiling for a single run.
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("ResourceLimit: {n_steps} steps need about {needed} bytes, budget is {budget}")]
    ResourceLimit { n_steps: u64, needed: u64, budget: u64 },
}

/// One directed edge as it was created.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EdgeRecord {
    pub step: u64,
    pub source: u32,
    pub target: u32,
    pub reciprocal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scenario {
    /// New node sends an edge to an in-degree-preferential target.
    NewSource,
    /// An out-degree-preferential node sends an edge to the new node.
    NewTarget,
}

/// The four uniforms consumed by one step, in draw order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDraws {
    pub scenario: f64,
    pub target: f64,
    pub group: f64,
    pub coin: f64,
}

impl StepDraws {
    pub fn sample(rng: &mut SimRng) -> Self {
        StepDraws { scenario: rng.random(), target: rng.random(), group: rng.random(), coin: rng.random() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub scenario: Scenario,
    /// Existing endpoint, 0-based.
    pub existing: usize,
    pub new_group: usize,
    pub reciprocated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    steps: u64,
    delta: f64,
    node_group: Vec<u32>,
    in_deg: Vec<u32>,
    out_deg: Vec<u32>,
    // one entry per unit of in-degree / out-degree, for O(1) preferential draws
    in_pool: Vec<u32>,
    out_pool: Vec<u32>,
    group_in_edges: Vec<u64>,
    group_out_edges: Vec<u64>,
    group_node_counts: Vec<u64>,
    reciprocal_count: u64,
}

impl GraphState {
    /// Node 1 with a self-loop; its group is drawn from `pi`.
    pub fn init(params: &ModelParams, rng: &mut SimRng) -> Self {
        let u: f64 = rng.random();
        Self::with_first_group(params, params.group_from_uniform(u))
    }

    pub fn with_first_group(params: &ModelParams, group: usize) -> Self {
        let k = params.groups();
        let mut s = GraphState {
            steps: 0,
            delta: params.delta(),
            node_group: vec![group as u32],
            in_deg: vec![1],
            out_deg: vec![1],
            in_pool: vec![0],
            out_pool: vec![0],
            group_in_edges: vec![0; k],
            group_out_edges: vec![0; k],
            group_node_counts: vec![0; k],
            reciprocal_count: 0,
        };
        s.group_in_edges[group] = 1;
        s.group_out_edges[group] = 1;
        s.group_node_counts[group] = 1;
        s
    }

    pub fn with_capacity(mut self, n_steps: u64) -> Self {
        let edges = (2 * n_steps) as usize;
        self.in_pool.reserve(edges);
        self.out_pool.reserve(edges);
        self.node_group.reserve(n_steps as usize);
        self.in_deg.reserve(n_steps as usize);
        self.out_deg.reserve(n_steps as usize);
        self
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn node_count(&self) -> usize {
        self.node_group.len()
    }

    pub fn edge_count(&self) -> u64 {
        self.in_pool.len() as u64
    }

    pub fn reciprocal_count(&self) -> u64 {
        self.reciprocal_count
    }

    pub fn in_degrees(&self) -> &[u32] {
        &self.in_deg
    }

    pub fn out_degrees(&self) -> &[u32] {
        &self.out_deg
    }

    /// 0-based group of each node.
    pub fn node_groups(&self) -> &[u32] {
        &self.node_group
    }

    pub fn group_in_edges(&self) -> &[u64] {
        &self.group_in_edges
    }

    pub fn group_out_edges(&self) -> &[u64] {
        &self.group_out_edges
    }

    pub fn group_node_counts(&self) -> &[u64] {
        &self.group_node_counts
    }

    /// Exact probability that `node` is picked as the existing endpoint.
    pub fn attachment_probability(&self, dir: Direction, node: usize) -> f64 {
        let deg = match dir {
            Direction::In => self.in_deg[node],
            Direction::Out => self.out_deg[node],
        };
        (deg as f64 + self.delta) / (self.edge_count() as f64 + self.delta * self.node_count() as f64)
    }

    /// Preferential draw: `P(v) = (D_v + delta) / (|E| + delta |V|)`.
    ///
    /// A single uniform covers both mixture components: the first `|E|` units
    /// of mass index the endpoint pool, the remaining `delta |V|` are split
    /// evenly over nodes.
    #[inline]
    pub fn sample_target(&self, dir: Direction, u: f64) -> usize {
        let pool = match dir {
            Direction::In => &self.in_pool,
            Direction::Out => &self.out_pool,
        };
        let e = pool.len() as f64;
        let n = self.node_group.len();
        let x = u * (e + self.delta * n as f64);
        if x < e {
            pool[(x as usize).min(pool.len() - 1)] as usize
        } else {
            (((x - e) / self.delta) as usize).min(n - 1)
        }
    }

    #[inline]
    fn add_edge(&mut self, source: usize, target: usize) {
        self.out_deg[source] += 1;
        self.in_deg[target] += 1;
        self.out_pool.push(source as u32);
        self.in_pool.push(target as u32);
        self.group_out_edges[self.node_group[source] as usize] += 1;
        self.group_in_edges[self.node_group[target] as usize] += 1;
    }

    /// Applies one step with the given uniforms. Edges created are appended
    /// to `edges` when supplied.
    pub fn step_with(
        &mut self,
        params: &ModelParams,
        d: StepDraws,
        edges: Option<&mut Vec<EdgeRecord>>,
    ) -> StepOutcome {
        let scenario = if d.scenario < params.alpha() { Scenario::NewSource } else { Scenario::NewTarget };
        let existing = match scenario {
            Scenario::NewSource => self.sample_target(Direction::In, d.target),
            Scenario::NewTarget => self.sample_target(Direction::Out, d.target),
        };
        let r = params.group_from_uniform(d.group);
        let w = self.node_group[existing] as usize;
        let fresh = self.node_group.len();
        self.node_group.push(r as u32);
        self.in_deg.push(0);
        self.out_deg.push(0);
        self.group_node_counts[r] += 1;
        self.steps += 1;

        // (source, target) of the forced edge; the reverse edge is optional
        let (src, dst, p_back) = match scenario {
            Scenario::NewSource => (fresh, existing, params.rho(w, r)),
            Scenario::NewTarget => (existing, fresh, params.rho(r, w)),
        };
        let reciprocated = d.coin < p_back;
        self.add_edge(src, dst);
        if reciprocated {
            self.add_edge(dst, src);
            self.reciprocal_count += 1;
        }
        if let Some(log) = edges {
            let step = self.steps;
            log.push(EdgeRecord { step, source: src as u32 + 1, target: dst as u32 + 1, reciprocal: false });
            if reciprocated {
                log.push(EdgeRecord { step, source: dst as u32 + 1, target: src as u32 + 1, reciprocal: true });
            }
        }
        debug_assert!(self.check_counters().is_ok());
        StepOutcome { scenario, existing, new_group: r, reciprocated }
    }

    pub fn step(&mut self, params: &ModelParams, rng: &mut SimRng) -> StepOutcome {
        let d = StepDraws::sample(rng);
        self.step_with(params, d, None)
    }

    /// Checks every identity, including the O(n) degree sums.
    pub fn check_invariants(&self) -> Result<(), String> {
        self.check_counters()?;
        let e = self.edge_count();
        if self.in_deg.iter().map(|&d| d as u64).sum::<u64>() != e {
            return Err(self.violation("sum of in-degrees"));
        }
        if self.out_deg.iter().map(|&d| d as u64).sum::<u64>() != e {
            return Err(self.violation("sum of out-degrees"));
        }
        Ok(())
    }

    fn violation(&self, what: &str) -> String {
        format!("invariant violated after {} steps: {what}", self.steps)
    }

    /// The identities that cost O(K); checked after every step in debug builds.
    pub fn check_counters(&self) -> Result<(), String> {
        let n = self.node_group.len() as u64;
        let e = self.edge_count();
        let fail = |what: &str| Err(self.violation(what));
        if n != self.steps + 1
            || self.in_deg.len() != self.node_group.len()
            || self.out_deg.len() != self.node_group.len()
        {
            return fail("|V| = n + 1");
        }
        if self.out_pool.len() as u64 != e {
            return fail("pool lengths equal");
        }
        if self.group_in_edges.iter().sum::<u64>() != e || self.group_out_edges.iter().sum::<u64>() != e {
            return fail("group edge counts");
        }
        if self.group_node_counts.iter().sum::<u64>() != n {
            return fail("group node counts");
        }
        if e != n + self.reciprocal_count {
            return fail("|E| = n + 1 + reciprocations");
        }
        Ok(())
    }

    pub fn degree_histogram(&self) -> DegreeHistogram {
        let k = self.group_node_counts.len();
        let mut hist = DegreeHistogram { total: BTreeMap::new(), per_group: vec![BTreeMap::new(); k] };
        for v in 0..self.node_group.len() {
            let key = (self.in_deg[v], self.out_deg[v]);
            *hist.total.entry(key).or_insert(0) += 1;
            *hist.per_group[self.node_group[v] as usize].entry(key).or_insert(0) += 1;
        }
        hist
    }
}

/// Joint degree counts `N_{k,l}` overall and per group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeHistogram {
    pub total: BTreeMap<(u32, u32), u64>,
    pub per_group: Vec<BTreeMap<(u32, u32), u64>>,
}

impl DegreeHistogram {
    pub fn count(&self, k: u32, l: u32) -> u64 {
        self.total.get(&(k, l)).copied().unwrap_or(0)
    }

    pub fn nodes(&self) -> u64 {
        self.total.values().sum()
    }

    /// Empirical frequencies on a truncated grid, normalized by node count.
    pub fn to_pmf(&self, kmax: usize, lmax: usize) -> JointPmfEstimate {
        let fill = |h: &BTreeMap<(u32, u32), u64>| {
            let mut g = CountGrid::new(kmax, lmax);
            for (&(k, l), &c) in h {
                g.add_n(k as u64, l as u64, c);
            }
            g
        };
        let total = fill(&self.total);
        let groups = self.per_group.iter().map(fill).collect();
        let n = self.nodes();
        JointPmfEstimate::from_counts(total, groups, n, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_steps: u64,
    pub seed: u64,
    /// Steps after which edge counts are recorded, ascending.
    pub snapshot_steps: Vec<u64>,
    pub emit_edges: bool,
    pub memory_budget: u64,
}

impl SimConfig {
    pub fn new(n_steps: u64, seed: u64) -> Self {
        SimConfig { n_steps, seed, snapshot_steps: Vec::new(), emit_edges: false, memory_budget: DEFAULT_MEMORY_BUDGET }
    }

    /// Rough peak memory of a run in bytes.
    pub fn estimated_bytes(&self) -> u64 {
        let edges = 2 * self.n_steps + 1;
        let nodes = self.n_steps + 1;
        let per_edge = 8 + if self.emit_edges { std::mem::size_of::<EdgeRecord>() as u64 } else { 0 };
        edges * per_edge + nodes * 12
    }
}

/// Edge counts after a given step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    pub step: u64,
    pub total_edges: u64,
    pub group_in: Vec<u64>,
    pub group_out: Vec<u64>,
}

impl Snapshot {
    fn of(state: &GraphState) -> Self {
        Snapshot {
            step: state.steps(),
            total_edges: state.edge_count(),
            group_in: state.group_in_edges.clone(),
            group_out: state.group_out_edges.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub state: GraphState,
    pub edges: Vec<EdgeRecord>,
    pub trajectory: Vec<Snapshot>,
}

/// Runs `config.n_steps` steps from the initial graph on stream 0 of `config.seed`.
pub fn run(params: &ModelParams, config: &SimConfig) -> Result<SimOutput, SimError> {
    run_stream(params, config, 0)
}

pub fn run_stream(params: &ModelParams, config: &SimConfig, stream: u64) -> Result<SimOutput, SimError> {
    let needed = config.estimated_bytes();
    if needed > config.memory_budget || config.n_steps >= (u32::MAX as u64) / 2 {
        return Err(SimError::ResourceLimit { n_steps: config.n_steps, needed, budget: config.memory_budget });
    }
    let mut rng = stream_rng(config.seed, stream);
    let mut state = GraphState::init(params, &mut rng).with_capacity(config.n_steps);
    let mut edges = Vec::new();
    if config.emit_edges {
        edges.reserve((config.n_steps as f64 * 1.6) as usize + 1);
        edges.push(EdgeRecord { step: 0, source: 1, target: 1, reciprocal: false });
    }
    let mut trajectory = Vec::with_capacity(config.snapshot_steps.len());
    let mut snaps = config.snapshot_steps.iter().copied().peekable();
    while snaps.next_if(|&s| s == 0).is_some() {
        trajectory.push(Snapshot::of(&state));
    }
    for _ in 0..config.n_steps {
        let d = StepDraws::sample(&mut rng);
        state.step_with(params, d, config.emit_edges.then_some(&mut edges));
        while snaps.next_if(|&s| s == state.steps()).is_some() {
            trajectory.push(Snapshot::of(&state));
        }
    }
    Ok(SimOutput { state, edges, trajectory })
}
