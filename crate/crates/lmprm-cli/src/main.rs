//! Command line front end wiring the planning library into reproducible
//! pipelines: generate environments, build roadmaps, preprocess landmark
//! tables, answer path queries, run benchmark scenarios, and audit
//! artifacts.
//!
//! Exit codes: 0 success, 2 no solution, 3 audit failure, 4 malformed or
//! mismatched artifact file, 1 any other error. Every randomized command
//! prints the seed it ran with, so any output can be reproduced.

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use lmprm::bench::{self, ExperimentSpec, ReportOptions, Scenario};
use lmprm::env::{calibrate_intensity, poisson_forest, ClutterSpec, Environment};
use lmprm::geom::{dist, Aabb};
use lmprm::landmarks::{build_landmark_table, landmark_heuristic, select_landmarks, LandmarkTable};
use lmprm::roadmap::{build_prm, CostObjective, RoadmapGraph};
use lmprm::search::{euclidean_heuristic, SearchResult, Searcher};
use lmprm::{Error, Result};

const EXIT_NO_SOLUTION: u8 = 2;
const EXIT_AUDIT: u8 = 3;
const EXIT_FORMAT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "lmprm",
    version,
    about = "Roadmap planning with landmark heuristics",
    propagate_version = true
)]
struct Cli {
    /// Seed for anything randomized; generated and printed when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections; falls back to LMPRM_THREADS,
    /// then to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log filter: error, warn, info, debug, or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random obstacle field and write it as environment JSON.
    GenEnv(GenEnvArgs),
    /// Sample a roadmap over an environment and write the graph file.
    Build(BuildArgs),
    /// Select landmarks and write their distance table.
    Landmarks(LandmarksArgs),
    /// Answer one start/goal query over a graph file.
    Query(QueryArgs),
    /// Run a benchmark scenario and write its CSV.
    Bench(BenchArgs),
    /// Audit a graph file, and optionally a table against it.
    Validate(ValidateArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("clutter_target").required(true).args(["p_clear", "lambda"])))]
struct GenEnvArgs {
    /// Target probability that a random free-box segment is collision
    /// free; the obstacle intensity is calibrated to hit it.
    #[arg(long)]
    p_clear: Option<f64>,
    /// Obstacle intensity per unit window volume, skipping calibration.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    obstacle_radius: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Monte-Carlo segment pairs for calibration.
    #[arg(long, default_value_t = 50_000)]
    mc_pairs: usize,
    /// Absolute tolerance on the achieved clear probability.
    #[arg(long, default_value_t = 0.005)]
    tolerance: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("size").required(true).args(["n", "density"])))]
struct BuildArgs {
    /// Environment JSON file.
    #[arg(long)]
    env: PathBuf,
    /// Exact vertex count.
    #[arg(long)]
    n: Option<usize>,
    /// Vertices per unit free volume; realizes round(density * mu_free).
    #[arg(long)]
    density: Option<f64>,
    /// Comma-separated cost objectives stored on the graph.
    #[arg(long, value_delimiter = ',', default_value = "length")]
    objectives: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LandmarksArgs {
    /// Graph file.
    #[arg(long)]
    graph: PathBuf,
    /// Landmark count; 0 writes a valid empty table.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "length")]
    objective: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Dijkstra,
    Euclidean,
    Landmark,
}

#[derive(Args)]
struct QueryArgs {
    /// Graph file.
    #[arg(long)]
    graph: PathBuf,
    /// Start coordinates, comma separated, e.g. --start=-0.12,0.0
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    start: Vec<f64>,
    /// Goal coordinates, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    goal: Vec<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Dijkstra)]
    method: MethodArg,
    /// Landmark table file; required for --method landmark.
    #[arg(long, required_if_eq("method", "landmark"))]
    table: Option<PathBuf>,
    #[arg(long, default_value = "length")]
    objective: String,
    /// Environment JSON, needed only by --strict-snap.
    #[arg(long)]
    env: Option<PathBuf>,
    /// Reject an endpoint whose snap segment collides; needs --env.
    #[arg(long, requires = "env")]
    strict_snap: bool,
    /// Search repetitions for the wall-time median; results are
    /// identical across repetitions.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    /// Emit one JSON object instead of text lines.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// bugtrap, fraction, clutter, or custom.
    #[arg(long)]
    scenario: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Run the full survey workload instead of the desk defaults.
    #[arg(long)]
    full_scale: bool,
    /// Emit measured times in the CSV; breaks byte reproducibility.
    #[arg(long)]
    measure_time: bool,
    #[arg(long)]
    dim: Option<usize>,
    /// Override graph sizes (or densities, per scenario), comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Override landmark counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    ks: Vec<usize>,
    /// Override queries per cell.
    #[arg(long)]
    queries: Option<usize>,
    /// Override repetitions (environments for the clutter scenario).
    #[arg(long)]
    reps: Option<usize>,
    /// Override the clear probability grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    /// Environment JSON for the custom scenario.
    #[arg(long)]
    env: Option<PathBuf>,
    #[arg(long, default_value = "length")]
    objective: String,
}

#[derive(Args)]
struct ValidateArgs {
    /// Graph file.
    #[arg(long)]
    graph: PathBuf,
    /// Landmark table file to audit against the graph.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Sampled (vertex, goal) pairs for the heuristic audits.
    #[arg(long, default_value_t = 200)]
    pairs: usize,
}

fn main() -> ExitCode {
    // Usage errors exit 1, keeping 2 unambiguous for no-solution results.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = u8::from(err.use_stderr());
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    init_logging(&cli.log_level);
    init_threads(cli.threads);
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::GenEnv(a) => cmd_gen_env(a, cli.seed),
        Command::Build(a) => cmd_build(a, cli.seed),
        Command::Landmarks(a) => cmd_landmarks(a, cli.seed),
        Command::Query(a) => cmd_query(a),
        Command::Bench(a) => cmd_bench(a, cli.seed),
        Command::Validate(a) => cmd_validate(a, cli.seed),
    }
}

fn init_logging(level: &str) {
    let mut builder = env_logger::Builder::new();
    builder.parse_filters(level);
    let _ = builder.try_init();
}

fn init_threads(flag: Option<usize>) {
    let count = flag.or_else(|| {
        std::env::var("LMPRM_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(count) = count.filter(|&c| c > 0) {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build_global();
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Format(_) | Error::FingerprintMismatch { .. } | Error::Json(_) => EXIT_FORMAT,
        Error::CostMismatch { .. } => EXIT_AUDIT,
        _ => 1,
    }
}

/// Uses the explicit seed when given, otherwise draws one from the OS.
/// Printed either way so the run can be reproduced.
fn resolve_seed(explicit: Option<u64>) -> u64 {
    let seed = explicit.unwrap_or_else(|| rand::rngs::OsRng.next_u64());
    println!("seed: {seed}");
    seed
}

fn cmd_gen_env(a: &GenEnvArgs, seed_flag: Option<u64>) -> Result<u8> {
    let seed = resolve_seed(seed_flag);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = match (a.p_clear, a.lambda) {
        (Some(p_clear), None) => {
            let spec = ClutterSpec {
                target_clear: p_clear,
                obstacle_radius: a.obstacle_radius,
                mc_pairs: a.mc_pairs,
                tolerance: a.tolerance,
            };
            log::info!("calibrating intensity for p_clear {p_clear}");
            calibrate_intensity(&spec, a.dim, &mut rng)?
        }
        (None, Some(lambda)) => lambda,
        _ => unreachable!("clap enforces exactly one of --p-clear/--lambda"),
    };
    println!("lambda: {lambda}");
    let window = Aabb::centered_cube(a.dim, 1.0);
    let mut env = poisson_forest(lambda, a.obstacle_radius, &window, &mut rng)?;
    env.seed = seed;
    env.save(&a.out)?;
    println!("obstacles: {}", env.obstacles.len());
    println!("mu_free_estimate: {}", env.mu_free_estimate);
    println!("wrote {}", a.out.display());
    Ok(0)
}

fn cmd_build(a: &BuildArgs, seed_flag: Option<u64>) -> Result<u8> {
    let seed = resolve_seed(seed_flag);
    let env = Environment::load(&a.env)?;
    let n = match (a.n, a.density) {
        (Some(n), None) => n,
        (None, Some(density)) => {
            if !(density > 0.0) || !density.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "density must be positive and finite, got {density}"
                )));
            }
            (density * env.mu_free_estimate).round() as usize
        }
        _ => unreachable!("clap enforces exactly one of --n/--density"),
    };
    let objectives = a
        .objectives
        .iter()
        .map(|id| CostObjective::by_id(id))
        .collect::<Result<Vec<_>>>()?;
    log::info!("building roadmap with {n} vertices");
    let t0 = Instant::now();
    let graph = build_prm(&env, n, &objectives, seed)?;
    let build_time = t0.elapsed();
    graph.save(&a.out)?;
    println!("vertices: {}", graph.n());
    println!("directed_edges: {}", graph.m());
    println!("radius: {}", graph.connection_radius());
    println!("build_time_ms: {}", build_time.as_millis());
    println!("wrote {}", a.out.display());
    Ok(0)
}

fn cmd_landmarks(a: &LandmarksArgs, seed_flag: Option<u64>) -> Result<u8> {
    let seed = resolve_seed(seed_flag);
    let graph = RoadmapGraph::load(&a.graph)?;
    let ids = if a.k == 0 {
        Vec::new()
    } else {
        select_landmarks(&graph, a.k, &mut ChaCha8Rng::seed_from_u64(seed))?
    };
    let mut table = build_landmark_table(&graph, &a.objective, &ids)?;
    table.set_selection_seed(seed);
    table.save(&a.out)?;
    let matrices = if table.symmetric() { 1 } else { 2 };
    println!("k: {}", table.k());
    println!("n: {}", table.n());
    println!("symmetric: {}", table.symmetric());
    println!("build_time_ms: {}", table.build_time().as_millis());
    println!(
        "matrix_bytes: {}",
        8 * table.k() * table.n() * matrices
    );
    println!("file_bytes: {}", std::fs::metadata(&a.out)?.len());
    println!("wrote {}", a.out.display());
    Ok(0)
}

fn median_u64(values: &mut [u64]) -> u64 {
    values.sort_unstable();
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2
    }
}

fn check_snap(env: &Environment, from: &[f64], to: &[f64], label: &str) -> Result<()> {
    if !env.segment_clear(from, to)? {
        return Err(Error::InvalidParameter(format!(
            "{label} snap segment collides; rerun without --strict-snap or \
             move the endpoint"
        )));
    }
    Ok(())
}

fn cmd_query(a: &QueryArgs) -> Result<u8> {
    if a.repeat < 1 {
        return Err(Error::InvalidParameter(
            "repeat must be at least 1".into(),
        ));
    }
    let graph = RoadmapGraph::load(&a.graph)?;
    let start = graph.nearest_vertex(&a.start)?;
    let goal = graph.nearest_vertex(&a.goal)?;
    let start_snap = dist(&a.start, graph.vertex(start));
    let goal_snap = dist(&a.goal, graph.vertex(goal));
    if a.strict_snap {
        let env_path = a.env.as_ref().expect("clap ties --strict-snap to --env");
        let env = Environment::load(env_path)?;
        check_snap(&env, &a.start, graph.vertex(start), "start")?;
        check_snap(&env, &a.goal, graph.vertex(goal), "goal")?;
    }

    let table = match a.method {
        MethodArg::Landmark => {
            let path = a.table.as_ref().expect("clap ties --method landmark to --table");
            Some(LandmarkTable::load(path)?)
        }
        _ => None,
    };
    let mut searcher = Searcher::new();
    let mut times = Vec::with_capacity(a.repeat);
    let mut result: Option<SearchResult> = None;
    for _ in 0..a.repeat {
        let r = match a.method {
            MethodArg::Dijkstra => searcher.dijkstra(&graph, &a.objective, start, goal)?,
            MethodArg::Euclidean => {
                let h = euclidean_heuristic(&graph);
                searcher.astar(&graph, &a.objective, start, goal, &h)?
            }
            MethodArg::Landmark => {
                let table = table.as_ref().expect("loaded above");
                let h = landmark_heuristic(table, &graph, goal)?;
                searcher.astar(&graph, &a.objective, start, goal, &h)?
            }
        };
        times.push(r.wall_time.as_micros() as u64);
        result = Some(r);
    }
    let result = result.expect("repeat >= 1");
    let median_us = median_u64(&mut times);
    let method_name = match a.method {
        MethodArg::Dijkstra => "dijkstra",
        MethodArg::Euclidean => "euclidean",
        MethodArg::Landmark => "landmark",
    };

    if a.json {
        let payload = serde_json::json!({
            "method": method_name,
            "objective": a.objective,
            "start_vertex": start,
            "goal_vertex": goal,
            "start_snap_distance": start_snap,
            "goal_snap_distance": goal_snap,
            "status": if result.is_found() { "found" } else { "no_solution" },
            "cost": if result.is_found() { Some(result.cost) } else { None },
            "path": result.path,
            "iterations": result.iterations,
            "pushes": result.pushes,
            "repeat": a.repeat,
            "wall_time_us_median": median_us,
        });
        println!("{payload}");
    } else {
        println!("method: {method_name}");
        println!("start_vertex: {start} (snap distance {start_snap})");
        println!("goal_vertex: {goal} (snap distance {goal_snap})");
        if result.is_found() {
            println!("status: found");
            println!("cost: {}", result.cost);
            let path: Vec<String> = result.path.iter().map(|v| v.to_string()).collect();
            println!("path: {}", path.join(" "));
        } else {
            println!("status: no_solution");
        }
        println!("iterations: {}", result.iterations);
        println!("pushes: {}", result.pushes);
        println!("wall_time_us_median: {median_us}");
    }
    Ok(if result.is_found() { 0 } else { EXIT_NO_SOLUTION })
}

fn cmd_bench(a: &BenchArgs, seed_flag: Option<u64>) -> Result<u8> {
    let seed = resolve_seed(seed_flag);
    let mut spec = match a.scenario.as_str() {
        "bugtrap" => ExperimentSpec::desk_bugtrap(seed),
        "fraction" => ExperimentSpec::desk_fraction_sweep(seed),
        "clutter" => ExperimentSpec::desk_clutter_sweep(seed),
        "custom" => {
            let env_path = a.env.clone().ok_or_else(|| {
                Error::InvalidParameter("custom scenario needs --env".into())
            })?;
            ExperimentSpec {
                scenario: Scenario::Custom,
                dim: 2,
                clutter: ClutterSpec::default(),
                clear_grid: Vec::new(),
                env_path: Some(env_path),
                graph_sizes: vec![10_000],
                landmark_counts: vec![50],
                queries_per_cell: 10,
                repetitions: 1,
                objective_ids: vec!["length".into()],
                master_seed: seed,
            }
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown scenario `{other}`; expected bugtrap, fraction, clutter, \
                 or custom"
            )))
        }
    };
    if a.full_scale {
        spec = spec.full_scale();
    }
    if let Some(dim) = a.dim {
        spec.dim = dim;
    }
    if !a.sizes.is_empty() {
        spec.graph_sizes = a.sizes.clone();
    }
    if !a.ks.is_empty() {
        spec.landmark_counts = a.ks.clone();
    }
    if let Some(queries) = a.queries {
        spec.queries_per_cell = queries;
    }
    if let Some(reps) = a.reps {
        spec.repetitions = reps;
    }
    if !a.grid.is_empty() {
        spec.clear_grid = a.grid.clone();
    }
    spec.objective_ids = vec![a.objective.clone()];

    log::info!("running scenario {}", spec.scenario.as_str());
    let t0 = Instant::now();
    let records = bench::run(&spec)?;
    let summary = bench::emit_report(
        &records,
        &a.out,
        &ReportOptions {
            include_times: a.measure_time,
        },
    )?;
    println!("records: {}", records.len());
    println!("run_time_ms: {}", t0.elapsed().as_millis());
    print!("{summary}");
    println!("wrote {}", a.out.display());
    Ok(0)
}

struct AuditLog {
    failures: usize,
}

impl AuditLog {
    fn new() -> Self {
        Self { failures: 0 }
    }

    fn check(&mut self, name: &str, outcome: std::result::Result<(), String>) {
        match outcome {
            Ok(()) => println!("{name}: pass"),
            Err(detail) => {
                self.failures += 1;
                println!("{name}: fail ({detail})");
            }
        }
    }
}

fn audit_graph(graph: &RoadmapGraph, log: &mut AuditLog) {
    let radius = graph.connection_radius();
    let mut edge_radius = Ok(());
    let mut edge_symmetry = Ok(());
    'outer: for u in 0..graph.n() as u32 {
        for &v in graph.neighbors_of(u) {
            let length = dist(graph.vertex(u), graph.vertex(v));
            if length >= radius {
                edge_radius = Err(format!(
                    "edge ({u}, {v}) has length {length} >= radius {radius}"
                ));
                break 'outer;
            }
            if graph.slot_of(v, u).is_none() {
                edge_symmetry = Err(format!("edge ({u}, {v}) has no reverse edge"));
                break 'outer;
            }
        }
    }
    log.check("edge_radius", edge_radius);
    log.check("edge_symmetry", edge_symmetry);

    for id in graph.objective_ids().map(str::to_owned).collect::<Vec<_>>() {
        let weights = graph.weight_array(&id).expect("listed objective exists");
        let bad = weights
            .iter()
            .position(|w| !w.is_finite() || *w < 0.0);
        log.check(
            &format!("weights_{id}"),
            match bad {
                None => Ok(()),
                Some(slot) => Err(format!("slot {slot} holds {}", weights[slot])),
            },
        );
    }
}

fn audit_table(
    table: &LandmarkTable,
    graph: &RoadmapGraph,
    pairs: usize,
    seed: u64,
    log: &mut AuditLog,
) -> Result<()> {
    log.check(
        "table_fingerprint",
        table
            .check_graph(graph)
            .map_err(|e| e.to_string()),
    );
    if table.check_graph(graph).is_err() {
        return Ok(());
    }

    let mut self_distances = Ok(());
    for (l_idx, &l) in table.landmark_ids().iter().enumerate() {
        if table.dist_to(l_idx, l) != 0.0 {
            self_distances = Err(format!(
                "landmark {l} has nonzero self distance {}",
                table.dist_to(l_idx, l)
            ));
            break;
        }
    }
    log.check("self_distances", self_distances);

    let objective_id = table.objective_id().to_owned();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = graph.n();
    let mut searcher = Searcher::new();
    let mut admissibility = Ok(());
    let mut consistency = Ok(());
    let weights = graph.weight_array(&objective_id)?;
    for _ in 0..pairs {
        let u = rand::Rng::gen_range(&mut rng, 0..n) as u32;
        let goal = rand::Rng::gen_range(&mut rng, 0..n) as u32;
        let h = landmark_heuristic(table, graph, goal)?;
        let h_u = lmprm::search::Heuristic::evaluate(&h, u, goal);
        if admissibility.is_ok() {
            let d = searcher.dijkstra(graph, &objective_id, u, goal)?.cost;
            if h_u > d * (1.0 + 1e-9) + 1e-12 {
                admissibility = Err(format!(
                    "h({u}, {goal}) = {h_u} exceeds true distance {d}"
                ));
            }
        }
        if consistency.is_ok() {
            for (slot, &v) in graph
                .slot_range(u)
                .zip(graph.neighbors_of(u).iter())
            {
                let h_v = lmprm::search::Heuristic::evaluate(&h, v, goal);
                if h_u > weights[slot] + h_v + 1e-9 {
                    consistency = Err(format!(
                        "h({u}) = {h_u} > w({u}, {v}) + h({v}) = {} with goal {goal}",
                        weights[slot] + h_v
                    ));
                    break;
                }
            }
        }
    }
    log.check("admissibility", admissibility);
    log.check("consistency", consistency);
    Ok(())
}

fn cmd_validate(a: &ValidateArgs, seed_flag: Option<u64>) -> Result<u8> {
    if a.pairs < 1 {
        return Err(Error::InvalidParameter(
            "pairs must be at least 1".into(),
        ));
    }
    let seed = resolve_seed(seed_flag);
    let mut log = AuditLog::new();

    let graph = match RoadmapGraph::load(&a.graph) {
        Ok(graph) => {
            log.check("graph_load", Ok(()));
            graph
        }
        Err(err) => {
            log.check("graph_load", Err(err.to_string()));
            println!("result: fail");
            return Ok(exit_code_for(&err).max(EXIT_AUDIT));
        }
    };
    audit_graph(&graph, &mut log);

    if let Some(table_path) = &a.table {
        match LandmarkTable::load(table_path) {
            Ok(table) => {
                log.check("table_load", Ok(()));
                audit_table(&table, &graph, a.pairs, seed, &mut log)?;
            }
            Err(err) => {
                log.check("table_load", Err(err.to_string()));
                println!("result: fail");
                return Ok(exit_code_for(&err).max(EXIT_AUDIT));
            }
        }
    }

    if log.failures == 0 {
        println!("result: pass");
        Ok(0)
    } else {
        println!("result: fail");
        Ok(EXIT_AUDIT)
    }
}
