//! Deterministic experiment harness over roadmap search.
//!
//! A run executes one scenario, answers every query with Dijkstra, with
//! straight-line A*, and with landmark A* per configured landmark count,
//! and returns one record per (query, method). Costs across methods are
//! audited against the Dijkstra reference on every single query.
//!
//! Scenarios:
//! * `bugtrap`: the built-in two-dimensional trap world, start inside the
//!   cavity and goal outside, endpoints snapped to the roadmap.
//! * `fraction_sweep`: one cluttered world, a graph per configured vertex
//!   count, and a fresh landmark set per (size, count, repetition) cell
//!   answering its own random connected queries.
//! * `clutter_sweep`: a grid of target clear probabilities; per value the
//!   obstacle intensity is calibrated, several worlds are drawn, and all
//!   landmark counts share each query for paired comparisons.
//! * `custom`: like `fraction_sweep` on a caller-provided environment
//!   file, with no calibration step.
//!
//! Every random stream is seeded via `derive_seed` from the master seed
//! and the cell coordinates, so any cell can be reproduced in isolation.
//! Records carry real measured times, but `emit_report` zeroes the timing
//! columns unless asked, keeping rerun CSVs byte identical.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::env::{calibrate_intensity, poisson_forest, ClutterSpec, Environment};
use crate::error::{Error, Result};
use crate::geom::Aabb;
use crate::landmarks::{build_landmark_table, landmark_heuristic, select_landmarks, LandmarkTable};
use crate::roadmap::{build_prm, CostObjective, RoadmapGraph};
use crate::search::{euclidean_heuristic, SearchResult, Searcher};

/// Column order of every emitted CSV. Fixed at 18 fields.
pub const CSV_HEADER: &str = "scenario,p_clear,lambda,env_seed,n,graph_seed,k,table_seed,\
query_idx,query_seed,method,iterations,pushes,cost,wall_time_us,preprocess_time_us,\
resamples,status";

/// Methods agree on a query when costs match to this relative tolerance.
pub const COST_AUDIT_REL_TOL: f64 = 1e-9;

/// Rebuild attempts before giving up on connecting snapped endpoints.
const GRAPH_RESAMPLE_BUDGET: usize = 32;

/// Pair draws before giving up on finding a connected query.
const QUERY_SAMPLE_BUDGET: usize = 100_000;

const TAG_CALIBRATION: u64 = 0xC1;
const TAG_ENV: u64 = 0xE2;
const TAG_GRAPH: u64 = 0x63;
const TAG_TABLE: u64 = 0x7A;
const TAG_QUERY: u64 = 0x95;

/// SplitMix64 finalizer; bijective on u64.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a tag path into the master seed. Distinct paths give independent
/// streams; the same path always reproduces the same seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut s = mix64(master);
    for &t in tags {
        s = mix64(s ^ t);
    }
    s
}

/// Logarithmically spaced grid from `lo` to `hi` inclusive, endpoints
/// exact. Requires `0 < lo <= hi` and `count >= 1`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 1 && lo > 0.0 && hi >= lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Bugtrap,
    FractionSweep,
    ClutterSweep,
    Custom,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Bugtrap => "bugtrap",
            Scenario::FractionSweep => "fraction_sweep",
            Scenario::ClutterSweep => "clutter_sweep",
            Scenario::Custom => "custom",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "bugtrap" => Ok(Scenario::Bugtrap),
            "fraction_sweep" => Ok(Scenario::FractionSweep),
            "clutter_sweep" => Ok(Scenario::ClutterSweep),
            "custom" => Ok(Scenario::Custom),
            other => Err(Error::InvalidParameter(format!(
                "unknown scenario `{other}`; expected bugtrap, fraction_sweep, \
                 clutter_sweep, or custom"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Dijkstra,
    Euclidean,
    Landmark,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dijkstra => "dijkstra",
            Method::Euclidean => "euclidean",
            Method::Landmark => "landmark",
        }
    }
}

/// Full description of one experiment run.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub dim: usize,
    /// Forest parameters. `target_clear` drives the single environment of
    /// `fraction_sweep`; `clear_grid` overrides it per `clutter_sweep` cell.
    pub clutter: ClutterSpec,
    /// Target clear probabilities for `clutter_sweep`, each in (0, 1].
    pub clear_grid: Vec<f64>,
    /// Environment JSON for the `custom` scenario.
    pub env_path: Option<PathBuf>,
    /// Vertex counts for `fraction_sweep` and `custom`. For `bugtrap` and
    /// `clutter_sweep` these are vertex densities per unit free volume;
    /// the realized count round(density * mu_free_estimate) is recorded.
    pub graph_sizes: Vec<usize>,
    /// Landmark counts; 0 is legal and runs an empty table.
    pub landmark_counts: Vec<usize>,
    pub queries_per_cell: usize,
    /// Graph repetitions (`bugtrap`, `fraction_sweep`, `custom`) or
    /// environments per clear probability (`clutter_sweep`).
    pub repetitions: usize,
    /// Objectives stored on built graphs. Queries use the first id.
    pub objective_ids: Vec<String>,
    pub master_seed: u64,
}

impl ExperimentSpec {
    /// Trap scenario at the published density, minutes of compute.
    pub fn desk_bugtrap(master_seed: u64) -> Self {
        Self {
            scenario: Scenario::Bugtrap,
            dim: 2,
            clutter: ClutterSpec::default(),
            clear_grid: Vec::new(),
            env_path: None,
            graph_sizes: vec![1000],
            landmark_counts: vec![100],
            queries_per_cell: 1,
            repetitions: 3,
            objective_ids: vec!["length".into()],
            master_seed,
        }
    }

    /// Size-by-count sweep small enough for a laptop.
    pub fn desk_fraction_sweep(master_seed: u64) -> Self {
        Self {
            scenario: Scenario::FractionSweep,
            dim: 2,
            clutter: ClutterSpec {
                target_clear: 0.05,
                ..ClutterSpec::default()
            },
            clear_grid: Vec::new(),
            env_path: None,
            graph_sizes: vec![10_000, 20_000, 40_000],
            landmark_counts: vec![10, 30, 50, 70, 90, 110, 130],
            queries_per_cell: 1,
            repetitions: 10,
            objective_ids: vec!["length".into()],
            master_seed,
        }
    }

    /// Clutter sweep small enough for a laptop.
    pub fn desk_clutter_sweep(master_seed: u64) -> Self {
        Self {
            scenario: Scenario::ClutterSweep,
            dim: 2,
            clutter: ClutterSpec::default(),
            clear_grid: log_spaced(0.02, 1.0, 5),
            env_path: None,
            graph_sizes: vec![20_000],
            landmark_counts: vec![10, 50, 90, 130, 170],
            queries_per_cell: 20,
            repetitions: 5,
            objective_ids: vec!["length".into()],
            master_seed,
        }
    }

    /// Scales a desk spec up to the full survey workload. Expect hours to
    /// days of compute.
    pub fn full_scale(mut self) -> Self {
        match self.scenario {
            Scenario::Bugtrap | Scenario::Custom => {}
            Scenario::FractionSweep => {
                self.graph_sizes = vec![40_000, 60_000, 80_000];
                self.repetitions = 100;
            }
            Scenario::ClutterSweep => {
                self.clear_grid = log_spaced(0.02, 1.0, 20);
                self.graph_sizes = vec![100_000];
                self.landmark_counts = vec![10, 30, 50, 70, 90, 110, 130, 150, 170];
                self.queries_per_cell = 100;
                self.repetitions = 100;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if self.graph_sizes.is_empty() {
            return Err(Error::InvalidParameter("graph size list is empty".into()));
        }
        if self.graph_sizes.iter().any(|&n| n < 2) {
            return Err(Error::InvalidParameter(
                "graph sizes must be at least 2".into(),
            ));
        }
        if self.landmark_counts.is_empty() {
            return Err(Error::InvalidParameter(
                "landmark count list is empty".into(),
            ));
        }
        if self.queries_per_cell < 1 {
            return Err(Error::InvalidParameter(
                "queries per cell must be at least 1".into(),
            ));
        }
        if self.repetitions < 1 {
            return Err(Error::InvalidParameter(
                "repetitions must be at least 1".into(),
            ));
        }
        if self.objective_ids.is_empty() {
            return Err(Error::InvalidParameter("objective list is empty".into()));
        }
        for id in &self.objective_ids {
            CostObjective::by_id(id)?;
        }
        if self.scenario == Scenario::ClutterSweep {
            if self.clear_grid.is_empty() {
                return Err(Error::InvalidParameter(
                    "clutter sweep needs a clear probability grid".into(),
                ));
            }
            for &p in &self.clear_grid {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "clear probabilities must lie in (0, 1], got {p}"
                    )));
                }
            }
        }
        if self.scenario == Scenario::Custom && self.env_path.is_none() {
            return Err(Error::InvalidParameter(
                "custom scenario needs an environment file".into(),
            ));
        }
        Ok(())
    }
}

/// One (query, method) measurement with full seed provenance.
#[derive(Clone, Debug)]
pub struct ExperimentRecord {
    pub scenario: Scenario,
    pub p_clear: Option<f64>,
    pub lambda: Option<f64>,
    pub env_seed: Option<u64>,
    /// Configured cell size: vertex count or density, per scenario.
    pub size_cfg: usize,
    /// Realized vertex count of the built graph.
    pub n: usize,
    pub graph_seed: u64,
    /// Landmark count for landmark rows; 0 otherwise.
    pub k: usize,
    pub table_seed: Option<u64>,
    pub query_idx: usize,
    pub query_seed: u64,
    pub method: Method,
    pub iterations: u64,
    pub pushes: u64,
    pub cost: f64,
    pub wall_time_us: u64,
    pub preprocess_time_us: Option<u64>,
    /// Rejected draws before this query connected, or graph rebuilds for
    /// the trap scenario.
    pub resamples: u64,
    pub status: &'static str,
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_u64(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentRecord {
    /// The 18 CSV fields in header order. `size_cfg` is config, not data,
    /// and stays out of the file.
    fn csv_row(&self, include_times: bool) -> String {
        let wall = if include_times { self.wall_time_us } else { 0 };
        let prep = match self.preprocess_time_us {
            Some(v) => {
                if include_times {
                    v.to_string()
                } else {
                    "0".to_string()
                }
            }
            None => String::new(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario.as_str(),
            opt_f64(self.p_clear),
            opt_f64(self.lambda),
            opt_u64(self.env_seed),
            self.n,
            self.graph_seed,
            self.k,
            opt_u64(self.table_seed),
            self.query_idx,
            self.query_seed,
            self.method.as_str(),
            self.iterations,
            self.pushes,
            self.cost,
            wall,
            prep,
            self.resamples,
            self.status,
        )
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReportOptions {
    /// Emit measured wall and preprocessing times. Off by default so the
    /// CSV bytes depend only on the settings and master seed.
    pub include_times: bool,
}

/// Writes the records as CSV and returns the aggregate summary.
pub fn emit_report(
    records: &[ExperimentRecord],
    path: &Path,
    options: &ReportOptions,
) -> Result<Summary> {
    let mut out = String::with_capacity(96 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row(options.include_times));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(summarize(records))
}

/// Medians for one (scenario, clear probability, size, landmark count)
/// cell, joined per query against the Dijkstra reference rows.
#[derive(Clone, Debug)]
pub struct SummaryCell {
    pub scenario: Scenario,
    pub p_clear: Option<f64>,
    pub size_cfg: usize,
    pub k: usize,
    pub queries: usize,
    pub median_dijkstra_iterations: f64,
    pub median_landmark_iterations: f64,
    /// Median of per-query dijkstra / landmark iteration ratios.
    pub median_iteration_ratio: f64,
    /// Median of per-query dijkstra / straight-line iteration ratios.
    pub median_euclidean_ratio: Option<f64>,
    /// Median of per-query landmark time / dijkstra time. Machine
    /// dependent, informational only.
    pub median_time_ratio: f64,
    pub mean_preprocess_us: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Summary {
    /// Sorted by (scenario, clear probability, size, landmark count).
    pub cells: Vec<SummaryCell>,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:>8} {:>8} {:>5} {:>7} {:>11} {:>10} {:>10} {:>10} {:>10} {:>12}",
            "scenario",
            "p_clear",
            "size",
            "k",
            "queries",
            "dij_iters",
            "lm_iters",
            "iter_ratio",
            "euc_ratio",
            "time_ratio",
            "prep_us"
        )?;
        for c in &self.cells {
            writeln!(
                f,
                "{:<14} {:>8} {:>8} {:>5} {:>7} {:>11.1} {:>10.1} {:>10.2} {:>10} {:>10.3} {:>12.0}",
                c.scenario.as_str(),
                c.p_clear.map(|p| format!("{p:.4}")).unwrap_or_else(|| "-".into()),
                c.size_cfg,
                c.k,
                c.queries,
                c.median_dijkstra_iterations,
                c.median_landmark_iterations,
                c.median_iteration_ratio,
                c.median_euclidean_ratio
                    .map(|r| format!("{r:.2}"))
                    .unwrap_or_else(|| "-".into()),
                c.median_time_ratio,
                c.mean_preprocess_us,
            )?;
        }
        Ok(())
    }
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

fn scenario_rank(s: Scenario) -> u8 {
    match s {
        Scenario::Bugtrap => 0,
        Scenario::FractionSweep => 1,
        Scenario::ClutterSweep => 2,
        Scenario::Custom => 3,
    }
}

/// Aggregates landmark rows into per-cell medians. Each landmark row is
/// joined with the Dijkstra and straight-line rows of the same query via
/// the (graph seed, query seed, query index) key.
pub fn summarize(records: &[ExperimentRecord]) -> Summary {
    let mut dijkstra: HashMap<(u64, u64, usize), (u64, u64)> = HashMap::new();
    let mut euclid: HashMap<(u64, u64, usize), u64> = HashMap::new();
    for r in records {
        let key = (r.graph_seed, r.query_seed, r.query_idx);
        match r.method {
            Method::Dijkstra => {
                dijkstra.insert(key, (r.iterations, r.wall_time_us));
            }
            Method::Euclidean => {
                euclid.insert(key, r.iterations);
            }
            Method::Landmark => {}
        }
    }

    struct Acc {
        scenario: Scenario,
        p_clear: Option<f64>,
        dij: Vec<f64>,
        lm: Vec<f64>,
        iter_ratio: Vec<f64>,
        euc_ratio: Vec<f64>,
        time_ratio: Vec<f64>,
        prep: Vec<f64>,
    }

    // Clear probabilities are nonnegative, so their bit patterns order the
    // same way the values do.
    let mut cells: BTreeMap<(u8, u64, usize, usize), Acc> = BTreeMap::new();
    for r in records.iter().filter(|r| r.method == Method::Landmark) {
        let key = (r.graph_seed, r.query_seed, r.query_idx);
        let Some(&(dij_iters, dij_us)) = dijkstra.get(&key) else {
            continue;
        };
        let ckey = (
            scenario_rank(r.scenario),
            r.p_clear.map(f64::to_bits).unwrap_or(0),
            r.size_cfg,
            r.k,
        );
        let acc = cells.entry(ckey).or_insert_with(|| Acc {
            scenario: r.scenario,
            p_clear: r.p_clear,
            dij: Vec::new(),
            lm: Vec::new(),
            iter_ratio: Vec::new(),
            euc_ratio: Vec::new(),
            time_ratio: Vec::new(),
            prep: Vec::new(),
        });
        acc.dij.push(dij_iters as f64);
        acc.lm.push(r.iterations as f64);
        acc.iter_ratio.push(dij_iters as f64 / r.iterations as f64);
        if let Some(&euc_iters) = euclid.get(&key) {
            acc.euc_ratio.push(dij_iters as f64 / euc_iters as f64);
        }
        if dij_us > 0 {
            acc.time_ratio.push(r.wall_time_us as f64 / dij_us as f64);
        }
        if let Some(prep) = r.preprocess_time_us {
            acc.prep.push(prep as f64);
        }
    }

    let cells = cells
        .into_iter()
        .map(|((_, _, size_cfg, k), mut acc)| SummaryCell {
            scenario: acc.scenario,
            p_clear: acc.p_clear,
            size_cfg,
            k,
            queries: acc.lm.len(),
            median_dijkstra_iterations: median(&mut acc.dij),
            median_landmark_iterations: median(&mut acc.lm),
            median_iteration_ratio: median(&mut acc.iter_ratio),
            median_euclidean_ratio: if acc.euc_ratio.is_empty() {
                None
            } else {
                Some(median(&mut acc.euc_ratio))
            },
            median_time_ratio: median(&mut acc.time_ratio),
            mean_preprocess_us: if acc.prep.is_empty() {
                f64::NAN
            } else {
                acc.prep.iter().sum::<f64>() / acc.prep.len() as f64
            },
        })
        .collect();
    Summary { cells }
}

#[derive(Deserialize)]
struct PlacedEnvironment {
    environment: Environment,
    start: Vec<f64>,
    goal: Vec<f64>,
}

/// The built-in two-dimensional trap world with its canonical start
/// (inside the cavity) and goal (outside the opening).
pub fn bugtrap_environment() -> Result<(Environment, Vec<f64>, Vec<f64>)> {
    let asset: PlacedEnvironment = serde_json::from_str(include_str!("../assets/bugtrap.json"))?;
    asset.environment.validate()?;
    if !asset.environment.point_free(&asset.start)?
        || !asset.environment.point_free(&asset.goal)?
    {
        return Err(Error::InvalidParameter(
            "trap endpoints must be collision free".into(),
        ));
    }
    Ok((asset.environment, asset.start, asset.goal))
}

fn resolve_objectives(ids: &[String]) -> Result<Vec<CostObjective>> {
    ids.iter().map(|id| CostObjective::by_id(id)).collect()
}

fn realized_n(density: usize, mu_free: f64) -> Result<usize> {
    let n = (density as f64 * mu_free).round() as usize;
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "density {density} over free volume {mu_free} realizes {n} vertices; \
             need at least 2"
        )));
    }
    Ok(n)
}

/// Builds one table per requested count, each from its own derived seed.
/// Count 0 produces the empty table whose heuristic is identically zero.
fn build_tables(
    graph: &RoadmapGraph,
    objective_id: &str,
    counts: &[usize],
    seed_for: impl Fn(usize) -> u64,
) -> Result<Vec<(usize, u64, LandmarkTable)>> {
    counts
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let seed = seed_for(ki);
            let ids = if k == 0 {
                Vec::new()
            } else {
                select_landmarks(graph, k, &mut ChaCha8Rng::seed_from_u64(seed))?
            };
            let mut table = build_landmark_table(graph, objective_id, &ids)?;
            table.set_selection_seed(seed);
            Ok((k, seed, table))
        })
        .collect()
}

/// Uniform ordered pairs, rejecting equal endpoints and pairs split across
/// components. Returns the pair with the rejected draw count.
fn sample_connected_pair(labels: &[u32], rng: &mut ChaCha8Rng) -> Result<(u32, u32, u64)> {
    let n = labels.len();
    let mut resamples = 0u64;
    for _ in 0..QUERY_SAMPLE_BUDGET {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v && labels[u] == labels[v] {
            return Ok((u as u32, v as u32, resamples));
        }
        resamples += 1;
    }
    Err(Error::SamplingExhausted {
        budget: QUERY_SAMPLE_BUDGET,
    })
}

fn audit_cost(method: Method, result: &SearchResult, reference: f64) -> Result<()> {
    let cost = if result.is_found() {
        result.cost
    } else {
        f64::INFINITY
    };
    let ok = result.is_found()
        && (cost == reference
            || (cost - reference).abs() <= COST_AUDIT_REL_TOL * cost.abs().max(reference.abs()));
    if ok {
        Ok(())
    } else {
        Err(Error::CostMismatch {
            method: method.as_str().to_string(),
            cost,
            reference,
        })
    }
}

/// Shared provenance for every record of one query.
#[derive(Clone, Copy)]
struct RecordSeeds {
    scenario: Scenario,
    p_clear: Option<f64>,
    lambda: Option<f64>,
    env_seed: Option<u64>,
    size_cfg: usize,
    n: usize,
    graph_seed: u64,
    query_idx: usize,
    query_seed: u64,
    resamples: u64,
}

impl RecordSeeds {
    fn record(
        &self,
        method: Method,
        k: usize,
        table_seed: Option<u64>,
        preprocess: Option<Duration>,
        result: &SearchResult,
    ) -> ExperimentRecord {
        ExperimentRecord {
            scenario: self.scenario,
            p_clear: self.p_clear,
            lambda: self.lambda,
            env_seed: self.env_seed,
            size_cfg: self.size_cfg,
            n: self.n,
            graph_seed: self.graph_seed,
            k,
            table_seed,
            query_idx: self.query_idx,
            query_seed: self.query_seed,
            method,
            iterations: result.iterations,
            pushes: result.pushes,
            cost: result.cost,
            wall_time_us: result.wall_time.as_micros() as u64,
            preprocess_time_us: preprocess.map(|d| d.as_micros() as u64),
            resamples: self.resamples,
            status: "ok",
        }
    }
}

/// Answers one query with every method and audits costs against the
/// Dijkstra reference. Row order: dijkstra, euclidean, then one landmark
/// row per table in the given order. Both built-in objectives dominate
/// straight-line distance, so the euclidean row is always admissible.
fn run_query_methods(
    searcher: &mut Searcher,
    graph: &RoadmapGraph,
    objective_id: &str,
    tables: &[(usize, u64, LandmarkTable)],
    start: u32,
    goal: u32,
    seeds: &RecordSeeds,
) -> Result<Vec<ExperimentRecord>> {
    let mut rows = Vec::with_capacity(2 + tables.len());
    let reference = searcher.dijkstra(graph, objective_id, start, goal)?;
    if !reference.is_found() {
        return Err(Error::InvalidParameter(format!(
            "query endpoints {start} and {goal} are disconnected despite the \
             connectivity precheck"
        )));
    }
    let ref_cost = reference.cost;
    rows.push(seeds.record(Method::Dijkstra, 0, None, None, &reference));

    let h = euclidean_heuristic(graph);
    let result = searcher.astar(graph, objective_id, start, goal, &h)?;
    audit_cost(Method::Euclidean, &result, ref_cost)?;
    rows.push(seeds.record(Method::Euclidean, 0, None, None, &result));

    for (k, table_seed, table) in tables {
        let h = landmark_heuristic(table, graph, goal)?;
        let result = searcher.astar(graph, objective_id, start, goal, &h)?;
        audit_cost(Method::Landmark, &result, ref_cost)?;
        rows.push(seeds.record(
            Method::Landmark,
            *k,
            Some(*table_seed),
            Some(table.build_time()),
            &result,
        ));
    }
    Ok(rows)
}

/// Trap scenario: graphs at each configured density, endpoints snapped to
/// the roadmap, and a graph rebuild with an advanced seed whenever the
/// snapped endpoints land in different components. `queries_per_cell` is
/// ignored; the endpoints are fixed by the asset.
pub fn run_bugtrap(spec: &ExperimentSpec) -> Result<Vec<ExperimentRecord>> {
    spec.validate()?;
    if spec.scenario != Scenario::Bugtrap {
        return Err(Error::InvalidParameter(
            "spec scenario is not bugtrap".into(),
        ));
    }
    let (env, start_pt, goal_pt) = bugtrap_environment()?;
    if env.dim != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: env.dim,
            got: spec.dim,
        });
    }
    let objectives = resolve_objectives(&spec.objective_ids)?;
    let objective_id = spec.objective_ids[0].clone();
    let master = spec.master_seed;

    let mut cells = Vec::new();
    for si in 0..spec.graph_sizes.len() {
        for rep in 0..spec.repetitions {
            cells.push((si, rep));
        }
    }
    let per_cell: Vec<Vec<ExperimentRecord>> = cells
        .par_iter()
        .map(|&(si, rep)| {
            let density = spec.graph_sizes[si];
            let n = realized_n(density, env.mu_free_estimate)?;
            let mut attempt = 0usize;
            let (graph, start, goal, graph_seed) = loop {
                let graph_seed =
                    derive_seed(master, &[TAG_GRAPH, si as u64, rep as u64, attempt as u64]);
                let graph = build_prm(&env, n, &objectives, graph_seed)?;
                let labels = graph.component_labels();
                let s = graph.nearest_vertex(&start_pt)?;
                let g = graph.nearest_vertex(&goal_pt)?;
                if s != g && labels[s as usize] == labels[g as usize] {
                    break (graph, s, g, graph_seed);
                }
                attempt += 1;
                if attempt >= GRAPH_RESAMPLE_BUDGET {
                    return Err(Error::SamplingExhausted {
                        budget: GRAPH_RESAMPLE_BUDGET,
                    });
                }
            };
            let tables = build_tables(&graph, &objective_id, &spec.landmark_counts, |ki| {
                derive_seed(master, &[TAG_TABLE, si as u64, rep as u64, ki as u64])
            })?;
            let seeds = RecordSeeds {
                scenario: Scenario::Bugtrap,
                p_clear: None,
                lambda: None,
                env_seed: None,
                size_cfg: density,
                n: graph.n(),
                graph_seed,
                query_idx: 0,
                query_seed: derive_seed(master, &[TAG_QUERY, si as u64, rep as u64]),
                resamples: attempt as u64,
            };
            let mut searcher = Searcher::new();
            run_query_methods(
                &mut searcher,
                &graph,
                &objective_id,
                &tables,
                start,
                goal,
                &seeds,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

/// Size-by-count cells over one environment. Each (size, count,
/// repetition) cell selects a fresh landmark set and answers its own
/// random connected queries.
fn sweep_cells(
    spec: &ExperimentSpec,
    env: &Environment,
    scenario: Scenario,
    p_clear: Option<f64>,
    lambda: Option<f64>,
    env_seed: Option<u64>,
) -> Result<Vec<ExperimentRecord>> {
    let objectives = resolve_objectives(&spec.objective_ids)?;
    let objective_id = spec.objective_ids[0].clone();
    let master = spec.master_seed;

    let graphs: Vec<(RoadmapGraph, u64, Vec<u32>)> = spec
        .graph_sizes
        .iter()
        .enumerate()
        .map(|(si, &n)| {
            let graph_seed = derive_seed(master, &[TAG_GRAPH, si as u64]);
            let graph = build_prm(env, n, &objectives, graph_seed)?;
            let labels = graph.component_labels();
            Ok((graph, graph_seed, labels))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for si in 0..spec.graph_sizes.len() {
        for ki in 0..spec.landmark_counts.len() {
            for rep in 0..spec.repetitions {
                cells.push((si, ki, rep));
            }
        }
    }
    let per_cell: Vec<Vec<ExperimentRecord>> = cells
        .par_iter()
        .map(|&(si, ki, rep)| {
            let (graph, graph_seed, labels) = &graphs[si];
            let k = spec.landmark_counts[ki];
            let table_seed =
                derive_seed(master, &[TAG_TABLE, si as u64, ki as u64, rep as u64]);
            let tables = build_tables(graph, &objective_id, &[k], |_| table_seed)?;
            let mut searcher = Searcher::new();
            let mut rows = Vec::new();
            for q in 0..spec.queries_per_cell {
                let query_seed = derive_seed(
                    master,
                    &[TAG_QUERY, si as u64, ki as u64, rep as u64, q as u64],
                );
                let mut qrng = ChaCha8Rng::seed_from_u64(query_seed);
                let (s, g, resamples) = sample_connected_pair(labels, &mut qrng)?;
                let seeds = RecordSeeds {
                    scenario,
                    p_clear,
                    lambda,
                    env_seed,
                    size_cfg: spec.graph_sizes[si],
                    n: graph.n(),
                    graph_seed: *graph_seed,
                    query_idx: q,
                    query_seed,
                    resamples,
                };
                rows.extend(run_query_methods(
                    &mut searcher,
                    graph,
                    &objective_id,
                    &tables,
                    s,
                    g,
                    &seeds,
                )?);
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

/// One forest at the configured target clear probability, then the size-
/// by-count sweep over it.
pub fn run_fraction_sweep(spec: &ExperimentSpec) -> Result<Vec<ExperimentRecord>> {
    spec.validate()?;
    if spec.scenario != Scenario::FractionSweep {
        return Err(Error::InvalidParameter(
            "spec scenario is not fraction_sweep".into(),
        ));
    }
    let cal_seed = derive_seed(spec.master_seed, &[TAG_CALIBRATION]);
    let lambda = calibrate_intensity(
        &spec.clutter,
        spec.dim,
        &mut ChaCha8Rng::seed_from_u64(cal_seed),
    )?;
    let env_seed = derive_seed(spec.master_seed, &[TAG_ENV]);
    let window = Aabb::centered_cube(spec.dim, 1.0);
    let env = poisson_forest(
        lambda,
        spec.clutter.obstacle_radius,
        &window,
        &mut ChaCha8Rng::seed_from_u64(env_seed),
    )?;
    sweep_cells(
        spec,
        &env,
        Scenario::FractionSweep,
        Some(spec.clutter.target_clear),
        Some(lambda),
        Some(env_seed),
    )
}

/// Caller-provided environment, then the size-by-count sweep over it.
pub fn run_custom(spec: &ExperimentSpec) -> Result<Vec<ExperimentRecord>> {
    spec.validate()?;
    if spec.scenario != Scenario::Custom {
        return Err(Error::InvalidParameter(
            "spec scenario is not custom".into(),
        ));
    }
    let path = spec.env_path.as_ref().expect("validate checked env_path");
    let env = Environment::load(path)?;
    if env.dim != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: env.dim,
            got: spec.dim,
        });
    }
    sweep_cells(spec, &env, Scenario::Custom, None, None, None)
}

/// Per clear probability: calibrate the intensity once, then draw
/// `repetitions` worlds in parallel. Within a world, every landmark count
/// shares each query, so comparisons across counts are paired.
pub fn run_clutter_sweep(spec: &ExperimentSpec) -> Result<Vec<ExperimentRecord>> {
    spec.validate()?;
    if spec.scenario != Scenario::ClutterSweep {
        return Err(Error::InvalidParameter(
            "spec scenario is not clutter_sweep".into(),
        ));
    }
    let objectives = resolve_objectives(&spec.objective_ids)?;
    let objective_id = spec.objective_ids[0].clone();
    let master = spec.master_seed;
    let window = Aabb::centered_cube(spec.dim, 1.0);

    let mut all = Vec::new();
    for (pi, &p) in spec.clear_grid.iter().enumerate() {
        let cal_seed = derive_seed(master, &[TAG_CALIBRATION, pi as u64]);
        let target = ClutterSpec {
            target_clear: p,
            ..spec.clutter.clone()
        };
        let lambda =
            calibrate_intensity(&target, spec.dim, &mut ChaCha8Rng::seed_from_u64(cal_seed))?;
        let per_env: Vec<Vec<ExperimentRecord>> = (0..spec.repetitions)
            .into_par_iter()
            .map(|erep| {
                let env_seed = derive_seed(master, &[TAG_ENV, pi as u64, erep as u64]);
                let env = poisson_forest(
                    lambda,
                    spec.clutter.obstacle_radius,
                    &window,
                    &mut ChaCha8Rng::seed_from_u64(env_seed),
                )?;
                let mut searcher = Searcher::new();
                let mut rows = Vec::new();
                for (si, &density) in spec.graph_sizes.iter().enumerate() {
                    let n = realized_n(density, env.mu_free_estimate)?;
                    let graph_seed =
                        derive_seed(master, &[TAG_GRAPH, pi as u64, erep as u64, si as u64]);
                    let graph = build_prm(&env, n, &objectives, graph_seed)?;
                    let labels = graph.component_labels();
                    let tables =
                        build_tables(&graph, &objective_id, &spec.landmark_counts, |ki| {
                            derive_seed(
                                master,
                                &[TAG_TABLE, pi as u64, erep as u64, si as u64, ki as u64],
                            )
                        })?;
                    for q in 0..spec.queries_per_cell {
                        let query_seed = derive_seed(
                            master,
                            &[TAG_QUERY, pi as u64, erep as u64, si as u64, q as u64],
                        );
                        let mut qrng = ChaCha8Rng::seed_from_u64(query_seed);
                        let (s, g, resamples) = sample_connected_pair(&labels, &mut qrng)?;
                        let seeds = RecordSeeds {
                            scenario: Scenario::ClutterSweep,
                            p_clear: Some(p),
                            lambda: Some(lambda),
                            env_seed: Some(env_seed),
                            size_cfg: density,
                            n: graph.n(),
                            graph_seed,
                            query_idx: q,
                            query_seed,
                            resamples,
                        };
                        rows.extend(run_query_methods(
                            &mut searcher,
                            &graph,
                            &objective_id,
                            &tables,
                            s,
                            g,
                            &seeds,
                        )?);
                    }
                }
                Ok(rows)
            })
            .collect::<Result<Vec<_>>>()?;
        all.extend(per_env.into_iter().flatten());
    }
    Ok(all)
}

/// Dispatches on the configured scenario.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<ExperimentRecord>> {
    match spec.scenario {
        Scenario::Bugtrap => run_bugtrap(spec),
        Scenario::FractionSweep => run_fraction_sweep(spec),
        Scenario::ClutterSweep => run_clutter_sweep(spec),
        Scenario::Custom => run_custom(spec),
    }
}
