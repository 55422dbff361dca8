//! Run configuration: one JSON object with a required `model` section.

use std::path::{Path, PathBuf};

use hetrecip_core::equilibrium::SolverOptions;
use hetrecip_core::mbi::DEFAULT_EVENT_BUDGET;
use hetrecip_core::model::{ModelParams, RawParams};
use hetrecip_core::sim::SimConfig;
use hetrecip_core::tail::{
    HrvOptions, TailOptions, DEFAULT_DISTANCE_FRACTION, DEFAULT_RADIUS_QUANTILE, HISTOGRAM_BINS,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: RawParams,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub embed: EmbedSection,
    #[serde(default)]
    pub diagnose: DiagnoseSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverSection { tol: d.tol, max_iter: d.max_iter }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub n_steps: u64,
    pub seed: u64,
    /// Steps at which group edge counts go into the trajectory.
    pub snapshots: Vec<u64>,
    pub emit_edges: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection { n_steps: 100_000, seed: 0, snapshots: Vec::new(), emit_edges: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedSection {
    pub replicates: u64,
    pub kmax: usize,
    pub lmax: usize,
    pub event_budget: u64,
    pub seed: u64,
    /// Largest step count enumerated by `verify`.
    pub verify_n: usize,
}

impl Default for EmbedSection {
    fn default() -> Self {
        EmbedSection {
            replicates: 1_000_000,
            kmax: 15,
            lmax: 15,
            event_budget: DEFAULT_EVENT_BUDGET,
            seed: 0,
            verify_n: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HillKRule {
    /// `floor(sqrt(n))`
    Sqrt,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnoseSection {
    pub hill_k_rule: HillKRule,
    pub radius_quantile: f64,
    pub bins: usize,
    pub distance_fraction: f64,
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        DiagnoseSection {
            hill_k_rule: HillKRule::Sqrt,
            radius_quantile: DEFAULT_RADIUS_QUANTILE,
            bins: HISTOGRAM_BINS,
            distance_fraction: DEFAULT_DISTANCE_FRACTION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    /// Must include `json`. Without `csv`, only the reports and the degree or
    /// pmf tables are written.
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: PathBuf::from("out"), formats: vec![Format::Json, Format::Csv] }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub n_steps: Option<u64>,
    pub replicates: Option<u64>,
    pub kmax: Option<usize>,
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(CliError::from_json)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::ConfigRead { path: path.to_path_buf(), source: e })?;
        Self::parse_str(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(s) = o.seed {
            self.sim.seed = s;
            self.embed.seed = s;
        }
        if let Some(d) = &o.out {
            self.output.directory = d.clone();
        }
        if let Some(n) = o.n_steps {
            self.sim.n_steps = n;
        }
        if let Some(r) = o.replicates {
            self.embed.replicates = r;
        }
        if let Some(k) = o.kmax {
            self.embed.kmax = k;
            self.embed.lmax = k;
        }
        self.check()
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn check(&self) -> Result<(), CliError> {
        self.params()?;
        let bad = |msg: String| Err(CliError::InvalidConfig(msg));
        if !(self.solver.tol > 0.0) {
            return bad(format!("solver.tol = {} must be > 0", self.solver.tol));
        }
        if self.solver.max_iter == 0 {
            return bad("solver.max_iter must be >= 1".into());
        }
        if self.sim.snapshots.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sim.snapshots must be strictly increasing".into());
        }
        if let Some(&s) = self.sim.snapshots.iter().find(|&&s| s > self.sim.n_steps) {
            return bad(format!("sim.snapshots entry {s} exceeds sim.n_steps = {}", self.sim.n_steps));
        }
        if self.embed.replicates == 0 {
            return bad("embed.replicates must be >= 1".into());
        }
        if self.embed.event_budget == 0 {
            return bad("embed.event_budget must be >= 1".into());
        }
        if !(1..=hetrecip_core::embedding::MAX_ENUMERATION_STEPS).contains(&self.embed.verify_n) {
            return bad(format!(
                "embed.verify_n = {} must lie in 1..={}",
                self.embed.verify_n,
                hetrecip_core::embedding::MAX_ENUMERATION_STEPS
            ));
        }
        let d = &self.diagnose;
        if !(d.radius_quantile > 0.0 && d.radius_quantile < 1.0) {
            return bad(format!("diagnose.radius_quantile = {} must lie in (0, 1)", d.radius_quantile));
        }
        if !(d.distance_fraction > 0.0 && d.distance_fraction <= 1.0) {
            return bad(format!("diagnose.distance_fraction = {} must lie in (0, 1]", d.distance_fraction));
        }
        if !self.output.formats.contains(&Format::Json) {
            return bad("output.formats must include json; reports are always written".into());
        }
        if d.bins == 0 {
            return bad("diagnose.bins must be >= 1".into());
        }
        if d.hill_k_rule == HillKRule::Fixed(0) {
            return bad("diagnose.hill_k_rule fixed k must be >= 1".into());
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        Ok(self.model.clone().validate()?)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.solver.tol, max_iter: self.solver.max_iter, ..SolverOptions::default() }
    }

    pub fn sim_config(&self) -> SimConfig {
        let mut c = SimConfig::new(self.sim.n_steps, self.sim.seed);
        c.snapshot_steps = self.sim.snapshots.clone();
        c.emit_edges = self.sim.emit_edges && self.writes_csv();
        c
    }

    pub fn tail_options(&self) -> TailOptions {
        let d = &self.diagnose;
        TailOptions {
            hrv: HrvOptions {
                radius_quantile: d.radius_quantile,
                distance_fraction: d.distance_fraction,
                ..HrvOptions::default()
            },
            bins: d.bins,
            hill_k: match d.hill_k_rule {
                HillKRule::Sqrt => None,
                HillKRule::Fixed(k) => Some(k),
            },
        }
    }

    pub fn writes_csv(&self) -> bool {
        self.output.formats.contains(&Format::Csv)
    }
}
