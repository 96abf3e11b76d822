//! Multi-query motion planning over sampled roadmaps.
//!
//! The pipeline: generate or calibrate a cluttered environment (`env`),
//! sample a roadmap whose connection radius tracks vertex density
//! (`roadmap`), preprocess landmark distance tables (`landmarks`), and
//! answer shortest-path queries with best-first search under admissible
//! heuristics (`search`). `bench` drives the comparison experiments and
//! `io` pins the binary file formats.

pub mod bench;
pub mod env;
pub mod error;
pub mod geom;
pub mod io;
pub mod landmarks;
pub mod roadmap;
pub mod search;
pub mod spatial;

pub use bench::{
    bugtrap_environment, derive_seed, emit_report, log_spaced, run, run_bugtrap,
    run_clutter_sweep, run_custom, run_fraction_sweep, summarize, ExperimentRecord,
    ExperimentSpec, Method, ReportOptions, Scenario, Summary, SummaryCell, CSV_HEADER,
};
pub use env::{ClutterSpec, Environment};
pub use error::{Error, Result};
pub use geom::{Aabb, Obstacle};
pub use landmarks::{
    build_landmark_table, heuristic_quality, landmark_heuristic, select_landmarks, sssp,
    Direction, LandmarkHeuristic, LandmarkTable, QualityStats,
};
pub use roadmap::{
    build_prm, build_prm_with_vertices, connection_radius, connection_radius_real,
    CostObjective, RoadmapGraph, WORK_ASCENT_PENALTY,
};
pub use search::{
    astar, dijkstra, euclidean_heuristic, path_to_root, EuclideanHeuristic, Heuristic,
    SearchResult, SearchStatus, Searcher, ZeroHeuristic, NO_PARENT,
};
