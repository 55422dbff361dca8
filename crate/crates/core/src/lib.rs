//! Directed preferential attachment with heterogeneous reciprocity.
//!
//! * [`model`]: parameters, reciprocation rates, per-group branching spectra.
//! * [`equilibrium`]: limiting edge fractions and regularity checks.
//! * [`sim`]: the growing graph itself.
//! * [`mbi`]: branching processes with immigration and the limiting degree law.
//! * [`embedding`]: the linked branching construction and its exact comparison
//!   against the graph's transition law.
//! * [`tail`]: Hill estimates, angular measures and ray peeling.
//! * [`io`]: CSV readers and writers.

pub mod embedding;
pub mod equilibrium;
pub mod io;
pub mod linalg;
pub mod mbi;
pub mod model;
pub mod pmf;
pub mod presets;
pub mod rng;
pub mod sim;
pub mod tail;

pub use embedding::{embedding_chain, verify_equivalence, EmbeddingChainState, EmbeddingError, EquivalenceReport};
pub use equilibrium::{
    build_jstar, check_regularity, h_and_lambda, solve_equilibrium, ContractionReport, EquilibriumError,
    EquilibriumSolution, RegularityReport, SolverOptions,
};
pub use mbi::{estimate_pkl, simulate_mbi, LimitPairSampler, MbiDynamics, MbiError, MbiState};
pub use model::{
    group_rates, order_groups, spectral, DegenerateGroup, GroupOrder, GroupRates, GroupSpectral, ModelParams,
    ParamError, RawParams,
};
pub use pmf::{CountGrid, JointPmfEstimate};
pub use rng::{stream_rng, SimRng};
pub use sim::{run, EdgeRecord, GraphState, SimConfig, SimError, SimOutput};
pub use tail::{
    compare_pmf, hill_estimator, hrv_peel, tail_report, DegreeDataset, HillReport, HrvOptions, HrvReport, TailError,
    TailOptions, TailReport,
};
