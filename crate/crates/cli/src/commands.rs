use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use hetrecip_core::embedding::verify_equivalence;
use hetrecip_core::equilibrium::{group_lambdas, solve_equilibrium, EquilibriumSolution};
use hetrecip_core::io::{
    pmf_rows_to_counts, read_degrees, read_pmf, write_degrees, write_edges, write_group_pmf, write_pmf,
    write_trajectory, PmfMetadata,
};
use hetrecip_core::mbi::{estimate_with, LimitPairSampler, MbiError};
use hetrecip_core::model::{
    all_spectra, group_rates, order_by_lambda, GroupRates, GroupSpectral, ModelParams, RawParams,
};
use hetrecip_core::sim::run;
use hetrecip_core::tail::{tail_report, DegreeDataset, TailReport};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// p-value below which `verify` flags a step count as inconsistent.
const VERIFY_ALPHA: f64 = 1e-3;

/// Output directory with the effective config already echoed into it.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn prepare(cfg: &RunConfig) -> Result<Self, CliError> {
        let dir = cfg.output.directory.clone();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Write { path: dir.clone(), source: e })?;
        let mut a = Artifacts { dir, written: Vec::new() };
        a.json("config.json", cfg)?;
        Ok(a)
    }

    fn create(&mut self, name: &str) -> Result<(BufWriter<File>, PathBuf), CliError> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::Write { path: path.clone(), source: e })?;
        self.written.push(path.clone());
        Ok((BufWriter::new(f), path))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let (mut w, path) = self.create(name)?;
        let wrap = |e: std::io::Error| CliError::Write { path: path.clone(), source: e };
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| wrap(e.into()))?;
        w.write_all(b"\n").map_err(wrap)?;
        w.flush().map_err(wrap)
    }

    fn csv<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    {
        let (mut w, path) = self.create(name)?;
        body(&mut w)?;
        w.flush().map_err(|e| CliError::Write { path, source: e })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

fn file_names(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect()
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Runtime(format!("csv output: {e}"))
}

#[derive(Debug, Serialize)]
struct SpectrumRow {
    group: usize,
    degenerate: bool,
    lambda: f64,
    lambda_prime: f64,
    matrix: Option<[[f64; 2]; 2]>,
    u: Option<[f64; 2]>,
    v: Option<[f64; 2]>,
    slope: Option<f64>,
    discriminant: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RayPrediction {
    rank: usize,
    group: usize,
    lambda: f64,
    tail_index: f64,
    slope: Option<f64>,
    theta: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AnalyzeReport<'a> {
    schema_version: u32,
    command: &'static str,
    model: &'a RawParams,
    gamma: f64,
    x: &'a [f64],
    y: &'a [f64],
    rho_star: f64,
    c_star: f64,
    lambda_h: f64,
    star: bool,
    rates: &'a GroupRates,
    spectra: Vec<SpectrumRow>,
    /// Group labels by decreasing eigenvalue.
    order: Vec<usize>,
    non_distinct: bool,
    predictions: Vec<RayPrediction>,
    equilibrium: &'a EquilibriumSolution,
}

/// Group spectra, the eigenvalue order, and the predicted index and ray of each group.
fn spectra_and_predictions(
    p: &ModelParams,
    rates: &GroupRates,
    sol: &EquilibriumSolution,
    tie_tol: f64,
) -> (Vec<SpectrumRow>, Vec<usize>, bool, Vec<RayPrediction>) {
    let rows: Vec<SpectrumRow> = all_spectra(p, rates)
        .into_iter()
        .map(|s| match s {
            Ok(s) => SpectrumRow {
                group: s.group + 1,
                degenerate: false,
                lambda: s.lambda,
                lambda_prime: s.lambda_prime,
                matrix: Some(s.matrix),
                u: Some(s.u),
                v: Some(s.v),
                slope: Some(s.slope),
                discriminant: Some(s.discriminant),
            },
            Err(d) => SpectrumRow {
                group: d.group + 1,
                degenerate: true,
                lambda: d.lambda,
                lambda_prime: d.lambda_prime,
                matrix: None,
                u: None,
                v: None,
                slope: None,
                discriminant: None,
            },
        })
        .collect();
    let order = order_by_lambda(&group_lambdas(p, rates), tie_tol);
    let preds = order
        .permutation
        .iter()
        .enumerate()
        .map(|(rank, &m)| {
            let r = &rows[m];
            RayPrediction {
                rank: rank + 1,
                group: m + 1,
                lambda: r.lambda,
                tail_index: sol.tail_index(r.lambda),
                slope: r.slope,
                theta: r.slope.map(|a| a / (1.0 + a)),
            }
        })
        .collect();
    let labels = order.permutation.iter().map(|m| m + 1).collect();
    (rows, labels, order.non_distinct, preds)
}

pub fn analyze(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let p = cfg.params()?;
    let opts = cfg.solver_options();
    let sol = solve_equilibrium(&p, &opts)?;
    let rates = group_rates(&p);
    let (spectra, order, non_distinct, predictions) = spectra_and_predictions(&p, &rates, &sol, opts.tie_tol);
    let mut out = Artifacts::prepare(cfg)?;
    out.json(
        "analyze.json",
        &AnalyzeReport {
            schema_version: SCHEMA_VERSION,
            command: "analyze",
            model: &cfg.model,
            gamma: p.gamma(),
            x: &sol.x,
            y: &sol.y,
            rho_star: sol.rho_star,
            c_star: sol.c_star,
            lambda_h: sol.lambda_h,
            star: sol.regular.star,
            rates: &rates,
            spectra,
            order,
            non_distinct,
            predictions,
            equilibrium: &sol,
        },
    )?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct GroupSummary {
    group: usize,
    nodes: u64,
    in_edges: u64,
    out_edges: u64,
    in_fraction: f64,
    out_fraction: f64,
    predicted_x: Option<f64>,
    predicted_y: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    schema_version: u32,
    command: &'static str,
    seed: u64,
    n_steps: u64,
    nodes: usize,
    edges: u64,
    reciprocal_edges: u64,
    edges_per_step: f64,
    predicted_edges_per_step: Option<f64>,
    groups: Vec<GroupSummary>,
    warnings: Vec<String>,
    files: Vec<String>,
}

pub fn simulate(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let p = cfg.params()?;
    let sim_cfg = cfg.sim_config();
    let result = run(&p, &sim_cfg)?;
    let mut warnings = Vec::new();
    let sol = match solve_equilibrium(&p, &cfg.solver_options()) {
        Ok(s) => Some(s),
        Err(e) => {
            warnings.push(format!("no equilibrium prediction: {e}"));
            None
        }
    };
    let st = &result.state;
    let n = sim_cfg.n_steps.max(1) as f64;
    let mut out = Artifacts::prepare(cfg)?;
    out.csv("degrees.csv", |w| Ok(write_degrees(w, st)?))?;
    if sim_cfg.emit_edges {
        out.csv("edges.csv", |w| Ok(write_edges(w, &result.edges)?))?;
    }
    if cfg.writes_csv() && !result.trajectory.is_empty() {
        out.csv("trajectory.csv", |w| Ok(write_trajectory(w, &result.trajectory, p.groups())?))?;
    }
    let groups = (0..p.groups())
        .map(|m| GroupSummary {
            group: m + 1,
            nodes: st.group_node_counts()[m],
            in_edges: st.group_in_edges()[m],
            out_edges: st.group_out_edges()[m],
            in_fraction: st.group_in_edges()[m] as f64 / n,
            out_fraction: st.group_out_edges()[m] as f64 / n,
            predicted_x: sol.as_ref().map(|s| s.x[m]),
            predicted_y: sol.as_ref().map(|s| s.y[m]),
        })
        .collect();
    let mut files = file_names(out.written());
    files.push("simulate.json".into());
    out.json(
        "simulate.json",
        &SimulateReport {
            schema_version: SCHEMA_VERSION,
            command: "simulate",
            seed: sim_cfg.seed,
            n_steps: sim_cfg.n_steps,
            nodes: st.node_count(),
            edges: st.edge_count(),
            reciprocal_edges: st.reciprocal_count(),
            edges_per_step: st.edge_count() as f64 / n,
            predicted_edges_per_step: sol.as_ref().map(|s| s.total_edge_rate()),
            groups,
            warnings,
            files,
        },
    )?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct EmbedReport {
    command: &'static str,
    #[serde(flatten)]
    meta: PmfMetadata,
    c_star: f64,
    /// Per group: probabilities of starting at `(0,1)`, `(1,0)`, `(1,1)`.
    initial_law: Vec<[f64; 3]>,
    event_budget: u64,
}

pub fn embed(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let p = cfg.params()?;
    let sol = solve_equilibrium(&p, &cfg.solver_options())?;
    if !sol.regular.star {
        return Err(MbiError::RegularityNotMet.into());
    }
    let e = &cfg.embed;
    let mut sampler = LimitPairSampler::new(&p, &sol);
    sampler.event_budget = e.event_budget;
    let est = estimate_with(&sampler, e.replicates, e.kmax, e.lmax, e.seed);
    let mut out = Artifacts::prepare(cfg)?;
    out.csv("pmf.csv", |w| Ok(write_pmf(w, &est)?))?;
    let mut group_files = Vec::new();
    if cfg.writes_csv() {
        for m in 0..p.groups() {
            let name = format!("pmf_group_{}.csv", m + 1);
            out.csv(&name, |w| Ok(write_group_pmf(w, &est, m)?))?;
            group_files.push(name);
        }
    }
    out.json(
        "pmf.json",
        &EmbedReport {
            command: "embed",
            meta: PmfMetadata {
                schema_version: SCHEMA_VERSION,
                kmax: est.kmax,
                lmax: est.lmax,
                replicates: est.replicates,
                failed: est.failed,
                overflow_mass: est.overflow_mass,
                seed: e.seed,
                group_files,
            },
            c_star: sol.c_star,
            initial_law: sampler.init.clone(),
            event_budget: e.event_budget,
        },
    )?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Source {
    Simulation,
    Degrees,
    Pmf,
}

#[derive(Debug, Serialize)]
struct DiagnoseReport<'a> {
    schema_version: u32,
    command: &'static str,
    source: Source,
    input: Option<&'a Path>,
    /// Simulation seed when no input file was given.
    seed: Option<u64>,
    expanded_replicates: Option<u64>,
    #[serde(flatten)]
    report: &'a TailReport,
    notes: Vec<String>,
}

fn sniff_header(path: &Path) -> Result<String, CliError> {
    let f = File::open(path).map_err(|e| CliError::ConfigRead { path: path.to_path_buf(), source: e })?;
    let mut line = String::new();
    BufReader::new(f).read_line(&mut line).map_err(|e| CliError::ConfigRead { path: path.to_path_buf(), source: e })?;
    Ok(line.trim().to_string())
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::ConfigRead { path: path.to_path_buf(), source: e })
}

pub fn diagnose(cfg: &RunConfig, input: Option<&Path>) -> Result<Artifacts, CliError> {
    let p = cfg.params()?;
    let opts = cfg.solver_options();
    let sol = solve_equilibrium(&p, &opts)?;
    let rates = group_rates(&p);
    let mut notes = Vec::new();
    let mut out = Artifacts::prepare(cfg)?;
    let (data, source, seed, expanded) = match input {
        Some(path) => match sniff_header(path)?.as_str() {
            "node,group,in_deg,out_deg" => (read_degrees(open(path)?)?, Source::Degrees, None, None),
            "k,l,probability" => {
                let rows = read_pmf(open(path)?)?;
                let r = cfg.embed.replicates;
                notes.push("pmf input is truncated to its grid; tail estimates only see mass inside it".into());
                (DegreeDataset::from_counts(&pmf_rows_to_counts(&rows, r))?, Source::Pmf, None, Some(r))
            }
            other => {
                return Err(CliError::Data(hetrecip_core::io::IoError::Content {
                    line: 1,
                    message: format!("unrecognized header `{other}`"),
                }))
            }
        },
        None => {
            let st = run(&p, &{
                let mut c = cfg.sim_config();
                c.emit_edges = false;
                c.snapshot_steps.clear();
                c
            })?
            .state;
            out.csv("degrees.csv", |w| Ok(write_degrees(w, &st)?))?;
            (DegreeDataset::from_state(&st), Source::Simulation, Some(cfg.sim.seed), None)
        }
    };

    let spectra: Vec<GroupSpectral> = all_spectra(&p, &rates).into_iter().filter_map(Result::ok).collect();
    if spectra.len() < p.groups() {
        notes.push("degenerate groups have no ray and are left out of the predictions".into());
    }
    let order = order_by_lambda(&spectra.iter().map(|s| s.lambda).collect::<Vec<_>>(), opts.tie_tol);
    let sorted: Vec<GroupSpectral> = order.permutation.iter().map(|&i| spectra[i].clone()).collect();
    let report = tail_report(&data, &sorted, &sol, &cfg.tail_options())?;

    if cfg.writes_csv() {
        out.csv("hill_sweep.csv", |w| write_hill_sweep(w, &report))?;
        out.csv("angular_histogram.csv", |w| write_histogram(w, &report.angular_histogram))?;
        if let Some(h) = &report.hrv {
            out.csv("peel.csv", |w| {
                let mut c = csv::Writer::from_writer(w);
                c.write_record([
                    "ray",
                    "predicted_index",
                    "estimated_index",
                    "predicted_theta",
                    "theta_median",
                    "hill_k",
                    "selected",
                    "removed",
                    "threshold",
                    "conditions_met",
                ])
                .map_err(csv_err)?;
                for s in &h.stages {
                    c.serialize((
                        s.ray,
                        s.predicted_index,
                        s.estimated_index,
                        s.predicted_theta,
                        s.theta_median,
                        s.hill_k,
                        s.selected,
                        s.removed,
                        s.threshold,
                        s.conditions_met as u8,
                    ))
                    .map_err(csv_err)?;
                }
                c.flush().map_err(|e| csv_err(e.into()))
            })?;
        }
    }
    out.json(
        "diagnose.json",
        &DiagnoseReport {
            schema_version: SCHEMA_VERSION,
            command: "diagnose",
            source,
            input,
            seed,
            expanded_replicates: expanded,
            report: &report,
            notes,
        },
    )?;
    Ok(out)
}

/// `k,in_index,out_index`; an empty field where a margin has no estimate.
fn write_hill_sweep<W: Write>(w: W, r: &TailReport) -> Result<(), CliError> {
    let sweep =
        |h: &Option<hetrecip_core::tail::HillReport>| h.as_ref().and_then(|h| h.k_sweep.clone()).unwrap_or_default();
    let (a, b) = (sweep(&r.hill_in), sweep(&r.hill_out));
    let mut ks: Vec<usize> = a.iter().chain(&b).map(|&(k, _)| k).collect();
    ks.sort_unstable();
    ks.dedup();
    let find = |s: &[(usize, f64)], k: usize| s.iter().find(|&&(j, _)| j == k).map(|&(_, v)| v);
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["k", "in_index", "out_index"]).map_err(csv_err)?;
    for k in ks {
        c.serialize((k, find(&a, k), find(&b, k))).map_err(csv_err)?;
    }
    c.flush().map_err(|e| csv_err(e.into()))
}

fn write_histogram<W: Write>(w: W, counts: &[u64]) -> Result<(), CliError> {
    let width = 1.0 / counts.len() as f64;
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["bin", "lower", "upper", "count"]).map_err(csv_err)?;
    for (i, &n) in counts.iter().enumerate() {
        c.serialize((i + 1, i as f64 * width, (i + 1) as f64 * width, n)).map_err(csv_err)?;
    }
    c.flush().map_err(|e| csv_err(e.into()))
}

#[derive(Debug, Serialize)]
struct VerifyRow {
    n: usize,
    replicates: u64,
    statistic: f64,
    dof: usize,
    p_value: f64,
    cells: usize,
    support: usize,
    max_abs_deviation: f64,
    consistent: bool,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    schema_version: u32,
    command: &'static str,
    seed: u64,
    significance: f64,
    rho0: f64,
    first_reciprocation_rate: f64,
    /// `|rate - rho0|` in binomial standard deviations.
    first_reciprocation_z: f64,
    steps: Vec<VerifyRow>,
    consistent: bool,
}

pub fn verify(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let p = cfg.params()?;
    let e = &cfg.embed;
    let mut steps = Vec::new();
    let mut first_rate = f64::NAN;
    for n in 1..=e.verify_n {
        let r = verify_equivalence(&p, n, e.replicates, e.seed)?;
        if n == 1 {
            first_rate = r.first_reciprocation_rate;
        }
        steps.push(VerifyRow {
            n,
            replicates: r.replicates,
            statistic: r.chi_square.statistic,
            dof: r.chi_square.dof,
            p_value: r.chi_square.p_value,
            cells: r.chi_square.cells,
            support: r.support,
            max_abs_deviation: r.max_abs_deviation,
            consistent: r.chi_square.p_value > VERIFY_ALPHA,
        });
    }
    let rates = group_rates(&p);
    let rho0 = rates.rho0;
    let sigma = (rho0 * (1.0 - rho0) / e.replicates as f64).sqrt();
    let z = if sigma > 0.0 {
        (first_rate - rho0).abs() / sigma
    } else if first_rate == rho0 {
        0.0
    } else {
        f64::INFINITY
    };
    let consistent = steps.iter().all(|s| s.consistent) && z <= 3.0;
    let mut out = Artifacts::prepare(cfg)?;
    out.json(
        "verify.json",
        &VerifyReport {
            schema_version: SCHEMA_VERSION,
            command: "verify",
            seed: e.seed,
            significance: VERIFY_ALPHA,
            rho0,
            first_reciprocation_rate: first_rate,
            first_reciprocation_z: z,
            steps,
            consistent,
        },
    )?;
    Ok(out)
}
