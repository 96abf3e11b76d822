//! Landmark preprocessing: uniformly chosen pivot vertices, exact
//! shortest-path distance tables to and from them, and the triangle-bound
//! heuristic those tables support.
//!
//! Each landmark l yields lower bounds on d(v, g): d(l,g) - d(l,v) and
//! d(v,l) - d(g,l) by the triangle inequality. The heuristic takes the max
//! of both bounds over every landmark, clamped at zero, so it stays
//! admissible for the table's objective whether or not the edge weights are
//! symmetric. For symmetric weights the two matrices coincide and only one
//! is kept; the combined bound then reduces to |d(v,l) - d(l,g)|.

use rand::Rng;
use rayon::prelude::*;
use std::collections::BinaryHeap;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::io;
use crate::roadmap::RoadmapGraph;
use crate::search::{Heuristic, QueueEntry, Searcher};

/// Edge orientation for single-source distances. `Outgoing` yields
/// d(source -> v); `Incoming` yields d(v -> source).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outgoing,
    Incoming,
}

/// Draws `k` distinct vertex ids uniformly at random, returned ascending.
pub fn select_landmarks(
    graph: &RoadmapGraph,
    k: usize,
    rng: &mut impl Rng,
) -> Result<Vec<u32>> {
    let n = graph.n();
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!(
            "landmark count must lie in 1..={n}, got {k}"
        )));
    }
    let mut ids: Vec<u32> = rand::seq::index::sample(rng, n, k)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    ids.sort_unstable();
    Ok(ids)
}

/// Exact shortest-path distances between `source` and every vertex, run to
/// queue exhaustion with the same lazy-deletion semantics as the query
/// search. Unreachable vertices hold infinity.
pub fn sssp(
    graph: &RoadmapGraph,
    objective_id: &str,
    source: u32,
    direction: Direction,
) -> Result<Vec<f64>> {
    graph.check_vertex(source)?;
    let weights = graph.weight_array(objective_id)?;
    let n = graph.n();
    let mut dist = vec![f64::INFINITY; n];
    dist[source as usize] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(QueueEntry {
        key: 0.0,
        label: 0.0,
        vertex: source,
    });
    while let Some(entry) = heap.pop() {
        let v = entry.vertex;
        if entry.label > dist[v as usize] {
            continue;
        }
        for (slot, &u) in graph.slot_range(v).zip(graph.neighbors_of(v)) {
            // Outgoing walks the edge v -> u as stored; incoming walks the
            // reverse edge u -> v, whose weight sits in u's row.
            let w = match direction {
                Direction::Outgoing => weights[slot],
                Direction::Incoming => {
                    weights[graph.slot_of(u, v).expect("adjacency is symmetric")]
                }
            };
            let candidate = entry.label + w;
            if candidate < dist[u as usize] {
                dist[u as usize] = candidate;
                heap.push(QueueEntry {
                    key: candidate,
                    label: candidate,
                    vertex: u,
                });
            }
        }
    }
    Ok(dist)
}

/// Distance tables for a landmark set under one objective. Matrices are
/// stored vertex-major so a heuristic evaluation reads one contiguous
/// k-length slice per matrix.
pub struct LandmarkTable {
    objective_id: String,
    landmark_ids: Vec<u32>,
    n: usize,
    symmetric: bool,
    /// [v * k + l] = d(landmark_l -> v).
    to_flat: Vec<f64>,
    /// [v * k + l] = d(v -> landmark_l); absent when weights are symmetric
    /// and `to_flat` serves both roles.
    from_flat: Option<Vec<f64>>,
    graph_fingerprint: u64,
    selection_seed: u64,
    build_time: Duration,
}

impl LandmarkTable {
    pub fn k(&self) -> usize {
        self.landmark_ids.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn objective_id(&self) -> &str {
        &self.objective_id
    }

    pub fn landmark_ids(&self) -> &[u32] {
        &self.landmark_ids
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn graph_fingerprint(&self) -> u64 {
        self.graph_fingerprint
    }

    /// Seed recorded for provenance of the landmark draw; zero when the ids
    /// were supplied directly.
    pub fn selection_seed(&self) -> u64 {
        self.selection_seed
    }

    pub fn set_selection_seed(&mut self, seed: u64) {
        self.selection_seed = seed;
    }

    /// Wall time spent building the distance matrices; zero on a loaded
    /// table.
    pub fn build_time(&self) -> Duration {
        self.build_time
    }

    /// d(landmark_index-th landmark -> v).
    pub fn dist_to(&self, landmark_index: usize, v: u32) -> f64 {
        self.to_flat[v as usize * self.k() + landmark_index]
    }

    /// d(v -> landmark_index-th landmark).
    pub fn dist_from(&self, landmark_index: usize, v: u32) -> f64 {
        let flat = self.from_flat.as_deref().unwrap_or(&self.to_flat);
        flat[v as usize * self.k() + landmark_index]
    }

    fn to_slice(&self, v: u32) -> &[f64] {
        &self.to_flat[v as usize * self.k()..][..self.k()]
    }

    fn from_slice(&self, v: u32) -> &[f64] {
        let flat = self.from_flat.as_deref().unwrap_or(&self.to_flat);
        &flat[v as usize * self.k()..][..self.k()]
    }

    /// Errors unless the table was built from exactly this graph.
    pub fn check_graph(&self, graph: &RoadmapGraph) -> Result<()> {
        if self.graph_fingerprint != graph.fingerprint() || self.n != graph.n() {
            return Err(Error::FingerprintMismatch {
                table: self.graph_fingerprint,
                graph: graph.fingerprint(),
            });
        }
        Ok(())
    }

    fn encode(&self) -> Vec<u8> {
        let k = self.k();
        let mut w = io::Writer::new(io::TABLE_MAGIC);
        w.string(&self.objective_id);
        w.u64(k as u64);
        w.u64(self.n as u64);
        w.u8(u8::from(self.symmetric));
        w.u64(self.graph_fingerprint);
        w.u64(self.selection_seed);
        for &id in &self.landmark_ids {
            w.u64(id as u64);
        }
        let mut row = vec![0.0f64; self.n];
        let mut matrix = |w: &mut io::Writer, flat: &[f64]| {
            for l in 0..k {
                for (v, slot) in row.iter_mut().enumerate() {
                    *slot = flat[v * k + l];
                }
                w.f64_slice(&row);
            }
        };
        matrix(&mut w, &self.to_flat);
        if let Some(from) = &self.from_flat {
            matrix(&mut w, from);
        }
        w.finish()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, io::seal(self.encode()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let mut r = io::open_payload(&bytes, io::TABLE_MAGIC)?;
        let objective_id = r.string()?;
        let k = r.u64()?;
        let n = r.u64()?;
        let symmetric = match r.u8()? {
            0 => false,
            1 => true,
            other => {
                return Err(Error::Format(format!(
                    "symmetry flag must be 0 or 1, got {other}"
                )))
            }
        };
        let graph_fingerprint = r.u64()?;
        let selection_seed = r.u64()?;
        let mut landmark_ids = Vec::with_capacity(k as usize);
        for _ in 0..k {
            let id = r.u64()?;
            if id >= n {
                return Err(Error::Format(format!(
                    "landmark id {id} out of range for {n} vertices"
                )));
            }
            landmark_ids.push(id as u32);
        }
        let cells = k
            .checked_mul(n)
            .ok_or_else(|| Error::Format("matrix size overflows".into()))?;
        let read_matrix = |r: &mut io::Reader| -> Result<Vec<f64>> {
            let mut flat = vec![0.0f64; cells as usize];
            for l in 0..k as usize {
                let row = r.f64_vec(n)?;
                for (v, value) in row.into_iter().enumerate() {
                    if value.is_nan() || value < 0.0 {
                        return Err(Error::Format(format!(
                            "distance entry ({l}, {v}) is {value}"
                        )));
                    }
                    flat[v * k as usize + l] = value;
                }
            }
            Ok(flat)
        };
        let to_flat = read_matrix(&mut r)?;
        let from_flat = if symmetric {
            None
        } else {
            Some(read_matrix(&mut r)?)
        };
        if !r.is_empty() {
            return Err(Error::Format(format!(
                "{} unexpected trailing bytes",
                r.remaining()
            )));
        }
        let table = Self {
            objective_id,
            landmark_ids,
            n: n as usize,
            symmetric,
            to_flat,
            from_flat,
            graph_fingerprint,
            selection_seed,
            build_time: Duration::ZERO,
        };
        for (l, &id) in table.landmark_ids.iter().enumerate() {
            if table.dist_to(l, id) != 0.0 {
                return Err(Error::Format(format!(
                    "landmark {id} has nonzero self distance"
                )));
            }
        }
        Ok(table)
    }
}

impl std::fmt::Debug for LandmarkTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LandmarkTable")
            .field("objective_id", &self.objective_id)
            .field("k", &self.k())
            .field("n", &self.n)
            .field("symmetric", &self.symmetric)
            .field("graph_fingerprint", &self.graph_fingerprint)
            .finish()
    }
}

/// Runs one exact distance pass per landmark, in parallel, and packs the
/// results vertex-major. An empty landmark list is legal and produces a
/// table whose heuristic is identically zero.
pub fn build_landmark_table(
    graph: &RoadmapGraph,
    objective_id: &str,
    landmark_ids: &[u32],
) -> Result<LandmarkTable> {
    let t0 = Instant::now();
    let n = graph.n();
    let k = landmark_ids.len();
    for &id in landmark_ids {
        graph.check_vertex(id)?;
    }
    let mut dedup = landmark_ids.to_vec();
    dedup.sort_unstable();
    dedup.dedup();
    if dedup.len() != k {
        return Err(Error::InvalidParameter(
            "landmark ids contain duplicates".into(),
        ));
    }
    let symmetric = graph.weights_symmetric(objective_id)?;

    let pack = |rows: Vec<Vec<f64>>| {
        let mut flat = vec![0.0f64; k * n];
        for (l, row) in rows.iter().enumerate() {
            for (v, &value) in row.iter().enumerate() {
                flat[v * k + l] = value;
            }
        }
        flat
    };
    let run = |direction: Direction| -> Result<Vec<f64>> {
        let rows: Vec<Vec<f64>> = landmark_ids
            .par_iter()
            .map(|&id| sssp(graph, objective_id, id, direction))
            .collect::<Result<_>>()?;
        Ok(pack(rows))
    };

    let to_flat = run(Direction::Outgoing)?;
    let from_flat = if symmetric {
        None
    } else {
        Some(run(Direction::Incoming)?)
    };

    Ok(LandmarkTable {
        objective_id: objective_id.to_string(),
        landmark_ids: landmark_ids.to_vec(),
        n,
        symmetric,
        to_flat,
        from_flat,
        graph_fingerprint: graph.fingerprint(),
        selection_seed: 0,
        build_time: t0.elapsed(),
    })
}

/// Difference a - b under the unreachable-means-infinity convention: two
/// infinities cancel to zero because such a landmark proves nothing, while
/// an infinite minuend over a finite subtrahend is a genuine proof that the
/// bounded pair is disconnected.
fn bound_diff(a: f64, b: f64) -> f64 {
    if a.is_infinite() && b.is_infinite() {
        0.0
    } else {
        a - b
    }
}

/// Triangle-bound heuristic for one goal. The k goal-dependent distances
/// are captured at construction, so each evaluation is one or two
/// contiguous k-length scans.
pub struct LandmarkHeuristic<'t> {
    table: &'t LandmarkTable,
    goal: u32,
    /// d(l -> goal) per landmark.
    goal_to: Vec<f64>,
    /// d(goal -> l) per landmark.
    goal_from: Vec<f64>,
}

impl Heuristic for LandmarkHeuristic<'_> {
    fn evaluate(&self, v: u32, goal: u32) -> f64 {
        debug_assert_eq!(goal, self.goal, "heuristic is bound to one goal");
        let to_v = self.table.to_slice(v);
        let from_v = self.table.from_slice(v);
        let mut best = 0.0f64;
        for l in 0..self.table.k() {
            let via_to = bound_diff(self.goal_to[l], to_v[l]);
            let via_from = bound_diff(from_v[l], self.goal_from[l]);
            best = best.max(via_to).max(via_from);
        }
        best
    }
}

/// Binds a table to a goal vertex after checking that the table belongs to
/// this exact graph.
pub fn landmark_heuristic<'t>(
    table: &'t LandmarkTable,
    graph: &RoadmapGraph,
    goal: u32,
) -> Result<LandmarkHeuristic<'t>> {
    table.check_graph(graph)?;
    graph.check_vertex(goal)?;
    let k = table.k();
    let mut goal_to = Vec::with_capacity(k);
    let mut goal_from = Vec::with_capacity(k);
    for l in 0..k {
        goal_to.push(table.dist_to(l, goal));
        goal_from.push(table.dist_from(l, goal));
    }
    Ok(LandmarkHeuristic {
        table,
        goal,
        goal_to,
        goal_from,
    })
}

/// Ratio statistics of heuristic estimate over true distance across sampled
/// vertex pairs. Pairs that are disconnected or coincident are skipped.
#[derive(Debug, Clone, Copy)]
pub struct QualityStats {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Samples `pair_count` ordered vertex pairs, measures h(u, v) / d(u, v)
/// on those with a finite positive distance, and summarizes the ratios.
/// With no usable pair the statistics come back as NaN.
pub fn heuristic_quality(
    table: &LandmarkTable,
    graph: &RoadmapGraph,
    objective_id: &str,
    pair_count: usize,
    rng: &mut impl Rng,
) -> Result<QualityStats> {
    if pair_count < 1 {
        return Err(Error::InvalidParameter(
            "pair count must be at least 1".into(),
        ));
    }
    if objective_id != table.objective_id() {
        return Err(Error::InvalidParameter(format!(
            "table was built for objective `{}`, not `{objective_id}`",
            table.objective_id()
        )));
    }
    table.check_graph(graph)?;
    let n = graph.n();
    let mut searcher = Searcher::new();
    let mut ratios = Vec::with_capacity(pair_count);
    let mut skipped = 0usize;
    for _ in 0..pair_count {
        let u = rng.gen_range(0..n) as u32;
        let v = rng.gen_range(0..n) as u32;
        let d = searcher.dijkstra(graph, objective_id, u, v)?;
        if !d.is_found() || d.cost <= 0.0 {
            skipped += 1;
            continue;
        }
        let h = landmark_heuristic(table, graph, v)?.evaluate(u, v);
        ratios.push(h / d.cost);
    }
    let evaluated = ratios.len();
    if evaluated == 0 {
        return Ok(QualityStats {
            mean: f64::NAN,
            median: f64::NAN,
            min: f64::NAN,
            evaluated,
            skipped,
        });
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("ratios are never NaN"));
    let mean = ratios.iter().sum::<f64>() / evaluated as f64;
    let median = if evaluated % 2 == 1 {
        ratios[evaluated / 2]
    } else {
        0.5 * (ratios[evaluated / 2 - 1] + ratios[evaluated / 2])
    };
    Ok(QualityStats {
        mean,
        median,
        min: ratios[0],
        evaluated,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Environment;
    use crate::roadmap::{build_prm, CostObjective};
    use crate::search::{astar, dijkstra};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
    }

    fn crafted(n: usize, edges: &[(u32, u32, f64, f64)]) -> RoadmapGraph {
        let mut coords = Vec::with_capacity(2 * n);
        for i in 0..n {
            coords.push(0.01 * i as f64);
            coords.push(0.0);
        }
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(u, v, w_uv, w_vu) in edges {
            rows[u as usize].push((v, w_uv));
            rows[v as usize].push((u, w_vu));
        }
        let mut offsets = vec![0usize];
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        for row in rows.iter_mut() {
            row.sort_by_key(|&(v, _)| v);
            for &(v, w) in row.iter() {
                neighbors.push(v);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        RoadmapGraph::from_parts(
            2,
            coords,
            offsets,
            neighbors,
            vec![("w".to_string(), weights)],
            1.0,
            0,
        )
        .unwrap()
    }

    fn bellman_ford(
        g: &RoadmapGraph,
        objective_id: &str,
        source: u32,
        direction: Direction,
    ) -> Vec<f64> {
        let w = g.weight_array(objective_id).unwrap();
        let n = g.n();
        let mut dist = vec![f64::INFINITY; n];
        dist[source as usize] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n as u32 {
                for (slot, &v) in g.slot_range(u).zip(g.neighbors_of(u)) {
                    let (tail, head) = match direction {
                        Direction::Outgoing => (u, v),
                        Direction::Incoming => (v, u),
                    };
                    let cand = dist[tail as usize] + w[slot];
                    if cand < dist[head as usize] {
                        dist[head as usize] = cand;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        dist
    }

    #[test]
    fn selection_covers_ranges_and_rejects_bad_k() {
        let g = crafted(5, &[(0, 1, 1.0, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_landmarks(&g, 5, &mut rng).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(select_landmarks(&g, 0, &mut rng).is_err());
        assert!(select_landmarks(&g, 6, &mut rng).is_err());
        let single = crafted(1, &[]);
        assert_eq!(select_landmarks(&single, 1, &mut rng).unwrap(), vec![0]);
        for _ in 0..50 {
            let ids = select_landmarks(&g, 3, &mut rng).unwrap();
            assert_eq!(ids.len(), 3);
            assert!(ids.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn selection_is_uniform_over_single_draws() {
        let g = crafted(10, &[]);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut counts = [0usize; 10];
        for _ in 0..10_000 {
            let ids = select_landmarks(&g, 1, &mut rng).unwrap();
            counts[ids[0] as usize] += 1;
        }
        for (id, &c) in counts.iter().enumerate() {
            assert!(
                (910..=1090).contains(&c),
                "id {id} drawn {c} times, outside 1000 +- 3 sigma"
            );
        }
    }

    #[test]
    fn sssp_line_graph_and_source_row() {
        let g = crafted(3, &[(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0)]);
        let d = sssp(&g, "w", 0, Direction::Outgoing).unwrap();
        assert_eq!(d, vec![0.0, 1.0, 2.0]);
        let d = sssp(&g, "w", 1, Direction::Outgoing).unwrap();
        assert_eq!(d[1], 0.0);
        assert!(sssp(&g, "nope", 0, Direction::Outgoing).is_err());
        assert!(sssp(&g, "w", 7, Direction::Outgoing).is_err());
    }

    #[test]
    fn sssp_directions_follow_edge_orientation() {
        let g = crafted(2, &[(0, 1, 1.0, 10.0)]);
        assert_eq!(sssp(&g, "w", 0, Direction::Outgoing).unwrap(), vec![0.0, 1.0]);
        assert_eq!(sssp(&g, "w", 0, Direction::Incoming).unwrap(), vec![0.0, 10.0]);
        assert_eq!(sssp(&g, "w", 1, Direction::Outgoing).unwrap(), vec![10.0, 0.0]);
        assert_eq!(sssp(&g, "w", 1, Direction::Incoming).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn sssp_matches_an_independent_relaxation_oracle() {
        let env = Environment::empty(2);
        let g = build_prm(&env, 200, &[CostObjective::length(), CostObjective::work()], 77)
            .unwrap();
        for objective in ["length", "work"] {
            for source in [0u32, 57, 199] {
                for direction in [Direction::Outgoing, Direction::Incoming] {
                    let fast = sssp(&g, objective, source, direction).unwrap();
                    let slow = bellman_ford(&g, objective, source, direction);
                    for v in 0..g.n() {
                        let (a, b) = (fast[v], slow[v]);
                        assert!(
                            (a.is_infinite() && b.is_infinite()) || close(a, b),
                            "{objective} {direction:?} src {source} v {v}: {a} vs {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn table_rows_reproduce_standalone_passes() {
        let env = Environment::empty(2);
        let g = build_prm(&env, 150, &[CostObjective::work()], 5).unwrap();
        let ids = vec![3u32, 77, 140];
        let table = build_landmark_table(&g, "work", &ids).unwrap();
        assert!(!table.symmetric());
        for (l, &id) in ids.iter().enumerate() {
            assert_eq!(table.dist_to(l, id), 0.0);
            assert_eq!(table.dist_from(l, id), 0.0);
            let out = sssp(&g, "work", id, Direction::Outgoing).unwrap();
            let inc = sssp(&g, "work", id, Direction::Incoming).unwrap();
            for v in 0..g.n() as u32 {
                assert_eq!(table.dist_to(l, v), out[v as usize]);
                assert_eq!(table.dist_from(l, v), inc[v as usize]);
            }
        }
    }

    #[test]
    fn symmetric_objective_stores_one_matrix() {
        let env = Environment::empty(2);
        let g = build_prm(&env, 150, &[CostObjective::length()], 6).unwrap();
        let table = build_landmark_table(&g, "length", &[10, 20]).unwrap();
        assert!(table.symmetric());
        for v in 0..g.n() as u32 {
            for l in 0..2 {
                assert_eq!(table.dist_to(l, v), table.dist_from(l, v));
            }
        }
    }

    #[test]
    fn landmark_order_is_preserved_and_duplicates_rejected() {
        let g = crafted(6, &[(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0)]);
        let table = build_landmark_table(&g, "w", &[5, 2]).unwrap();
        assert_eq!(table.landmark_ids(), &[5, 2]);
        assert_eq!(table.dist_to(0, 5), 0.0);
        assert_eq!(table.dist_to(1, 2), 0.0);
        assert!(build_landmark_table(&g, "w", &[1, 1]).is_err());
        assert!(build_landmark_table(&g, "w", &[9]).is_err());
    }

    #[test]
    fn empty_table_degenerates_to_zero_heuristic() {
        let g = crafted(3, &[(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0)]);
        let table = build_landmark_table(&g, "w", &[]).unwrap();
        assert_eq!(table.k(), 0);
        let h = landmark_heuristic(&table, &g, 2).unwrap();
        for v in 0..3 {
            assert_eq!(h.evaluate(v, 2), 0.0);
        }
        let a = astar(&g, "w", 0, 2, &h).unwrap();
        let d = dijkstra(&g, "w", 0, 2).unwrap();
        assert_eq!(a.cost, d.cost);
        assert_eq!(a.iterations, d.iterations);
        assert_eq!(a.path, d.path);
    }

    #[test]
    fn landmark_at_goal_makes_the_bound_tight() {
        let g = crafted(3, &[(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0)]);
        let table = build_landmark_table(&g, "w", &[2]).unwrap();
        let h = landmark_heuristic(&table, &g, 2).unwrap();
        assert_eq!(h.evaluate(0, 2), 2.0);
        assert_eq!(h.evaluate(1, 2), 1.0);
        assert_eq!(h.evaluate(2, 2), 0.0);
        let r = astar(&g, "w", 0, 2, &h).unwrap();
        assert_eq!(r.path, vec![0, 1, 2]);
        assert_eq!(
            r.iterations, 3,
            "a tight bound expands only the optimal path"
        );
    }

    #[test]
    fn infinite_bounds_prove_disconnection() {
        let g = crafted(4, &[(0, 1, 1.0, 1.0), (2, 3, 1.0, 1.0)]);
        let table = build_landmark_table(&g, "w", &[0]).unwrap();
        assert!(table.dist_to(0, 2).is_infinite());
        assert!(table.dist_to(0, 3).is_infinite());
        let h = landmark_heuristic(&table, &g, 3).unwrap();
        assert!(h.evaluate(0, 3).is_infinite());
        assert_eq!(
            h.evaluate(2, 3),
            0.0,
            "a landmark blind to both endpoints claims nothing"
        );
        let r = astar(&g, "w", 0, 3, &h).unwrap();
        assert!(!r.is_found());
        assert_eq!(r.iterations, 0, "proven disconnection costs no expansions");
    }

    #[test]
    fn estimate_at_goal_is_zero_for_both_objectives() {
        let env = Environment::empty(2);
        let g = build_prm(&env, 120, &[CostObjective::length(), CostObjective::work()], 8)
            .unwrap();
        for objective in ["length", "work"] {
            let table = build_landmark_table(&g, objective, &[4, 30, 99]).unwrap();
            for goal in [0u32, 55, 119] {
                let h = landmark_heuristic(&table, &g, goal).unwrap();
                assert_eq!(h.evaluate(goal, goal), 0.0);
            }
        }
    }

    #[test]
    fn estimates_never_exceed_true_distance() {
        let env = Environment::empty(2);
        let g = build_prm(&env, 300, &[CostObjective::length(), CostObjective::work()], 19)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut searcher = Searcher::new();
        for objective in ["length", "work"] {
            for k in [1usize, 5, 32] {
                let ids = select_landmarks(&g, k, &mut rng).unwrap();
                let table = build_landmark_table(&g, objective, &ids).unwrap();
                for _ in 0..60 {
                    let u = rng.gen_range(0..g.n()) as u32;
                    let v = rng.gen_range(0..g.n()) as u32;
                    let d = searcher.dijkstra(&g, objective, u, v).unwrap();
                    let h = landmark_heuristic(&table, &g, v).unwrap().evaluate(u, v);
                    if d.is_found() {
                        assert!(
                            h <= d.cost * (1.0 + 1e-9) + 1e-12,
                            "{objective} k={k}: h({u},{v})={h} > d={}",
                            d.cost
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric_estimates_are_consistent_across_edges() {
        let env = Environment::empty(2);
        let g = build_prm(&env, 250, &[CostObjective::length()], 29).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ids = select_landmarks(&g, 8, &mut rng).unwrap();
        let table = build_landmark_table(&g, "length", &ids).unwrap();
        let weights = g.weight_array("length").unwrap();
        for goal in [7u32, 120, 248] {
            let h = landmark_heuristic(&table, &g, goal).unwrap();
            for u in 0..g.n() as u32 {
                let hu = h.evaluate(u, goal);
                for (slot, &v) in g.slot_range(u).zip(g.neighbors_of(u)) {
                    let hv = h.evaluate(v, goal);
                    assert!(
                        hu <= weights[slot] + hv + 1e-9,
                        "edge {u}->{v}: {hu} > {} + {hv}",
                        weights[slot]
                    );
                }
            }
        }
    }

    #[test]
    fn more_landmarks_never_weaken_the_bound() {
        let env = Environment::empty(2);
        let g = build_prm(&env, 200, &[CostObjective::length()], 37).unwrap();
        let all: Vec<u32> = (0..32).collect();
        let t1 = build_landmark_table(&g, "length", &all[..1]).unwrap();
        let t8 = build_landmark_table(&g, "length", &all[..8]).unwrap();
        let t32 = build_landmark_table(&g, "length", &all).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let u = rng.gen_range(0..g.n()) as u32;
            let v = rng.gen_range(0..g.n()) as u32;
            let h1 = landmark_heuristic(&t1, &g, v).unwrap().evaluate(u, v);
            let h8 = landmark_heuristic(&t8, &g, v).unwrap().evaluate(u, v);
            let h32 = landmark_heuristic(&t32, &g, v).unwrap().evaluate(u, v);
            assert!(h8 >= h1 - 1e-12);
            assert!(h32 >= h8 - 1e-12);
        }
    }

    #[test]
    fn foreign_graphs_are_rejected_by_fingerprint() {
        let env = Environment::empty(2);
        let a = build_prm(&env, 100, &[CostObjective::length()], 1).unwrap();
        let b = build_prm(&env, 100, &[CostObjective::length()], 2).unwrap();
        let table = build_landmark_table(&a, "length", &[5]).unwrap();
        assert!(table.check_graph(&a).is_ok());
        assert!(matches!(
            table.check_graph(&b),
            Err(Error::FingerprintMismatch { .. })
        ));
        assert!(matches!(
            landmark_heuristic(&table, &b, 3),
            Err(Error::FingerprintMismatch { .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(heuristic_quality(&table, &b, "length", 10, &mut rng).is_err());
    }

    #[test]
    fn save_load_round_trips_both_layouts() {
        let env = Environment::empty(2);
        let g = build_prm(&env, 200, &[CostObjective::length(), CostObjective::work()], 55)
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        for objective in ["length", "work"] {
            let mut table = build_landmark_table(&g, objective, &[2, 30, 111]).unwrap();
            table.set_selection_seed(42);
            let path = dir.path().join(format!("{objective}.lmrk"));
            table.save(&path).unwrap();
            let loaded = LandmarkTable::load(&path).unwrap();
            assert_eq!(loaded.objective_id(), objective);
            assert_eq!(loaded.landmark_ids(), table.landmark_ids());
            assert_eq!(loaded.symmetric(), table.symmetric());
            assert_eq!(loaded.selection_seed(), 42);
            assert_eq!(loaded.graph_fingerprint(), g.fingerprint());
            assert!(loaded.check_graph(&g).is_ok());
            for v in 0..g.n() as u32 {
                for l in 0..3 {
                    assert_eq!(loaded.dist_to(l, v).to_bits(), table.dist_to(l, v).to_bits());
                    assert_eq!(
                        loaded.dist_from(l, v).to_bits(),
                        table.dist_from(l, v).to_bits()
                    );
                }
            }
            let resaved = dir.path().join(format!("{objective}2.lmrk"));
            loaded.save(&resaved).unwrap();
            assert_eq!(
                std::fs::read(&path).unwrap(),
                std::fs::read(&resaved).unwrap()
            );
        }
    }

    #[test]
    fn file_size_tracks_matrix_storage() {
        let env = Environment::empty(2);
        let g = build_prm(&env, 1000, &[CostObjective::length(), CostObjective::work()], 61)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ids = select_landmarks(&g, 10, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();

        let sym = build_landmark_table(&g, "length", &ids).unwrap();
        let sym_path = dir.path().join("sym.lmrk");
        sym.save(&sym_path).unwrap();
        let size = std::fs::metadata(&sym_path).unwrap().len();
        let matrix = 8 * 10 * 1000u64;
        assert!(size >= matrix && size <= matrix * 11 / 10, "size {size}");

        let asym = build_landmark_table(&g, "work", &ids).unwrap();
        let asym_path = dir.path().join("asym.lmrk");
        asym.save(&asym_path).unwrap();
        let size = std::fs::metadata(&asym_path).unwrap().len();
        assert!(
            size >= 2 * matrix && size <= 2 * matrix * 11 / 10,
            "size {size}"
        );
    }

    #[test]
    fn corrupt_or_mismatched_files_are_rejected() {
        let env = Environment::empty(2);
        let g = build_prm(&env, 80, &[CostObjective::length()], 13).unwrap();
        let table = build_landmark_table(&g, "length", &[1, 2]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.lmrk");
        table.save(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x10;
        std::fs::write(&path, &bytes).unwrap();
        assert!(LandmarkTable::load(&path).is_err());

        let graph_path = dir.path().join("g.prmg");
        g.save(&graph_path).unwrap();
        assert!(LandmarkTable::load(&graph_path).is_err());
    }

    #[test]
    fn quality_ratios_hit_the_extremes() {
        let env = Environment::empty(2);
        let g = build_prm(&env, 120, &[CostObjective::length()], 71).unwrap();
        let all: Vec<u32> = (0..g.n() as u32).collect();
        let full = build_landmark_table(&g, "length", &all).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let stats = heuristic_quality(&full, &g, "length", 200, &mut rng).unwrap();
        assert_eq!(stats.evaluated + stats.skipped, 200);
        assert!(stats.evaluated > 100);
        assert!(
            (stats.mean - 1.0).abs() < 1e-9,
            "goal is always a landmark, mean was {}",
            stats.mean
        );
        assert!((stats.median - 1.0).abs() < 1e-9);
        assert!(stats.min > 1.0 - 1e-9);

        let empty = build_landmark_table(&g, "length", &[]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let stats = heuristic_quality(&empty, &g, "length", 200, &mut rng).unwrap();
        assert_eq!(stats.mean, 0.0);
        assert_eq!(stats.min, 0.0);
    }

    #[test]
    fn quality_grows_with_nested_landmark_sets() {
        let env = Environment::empty(2);
        let g = build_prm(&env, 250, &[CostObjective::length()], 83).unwrap();
        let all: Vec<u32> = (0..64).collect();
        let small = build_landmark_table(&g, "length", &all[..1]).unwrap();
        let large = build_landmark_table(&g, "length", &all).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = heuristic_quality(&small, &g, "length", 150, &mut rng).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let l = heuristic_quality(&large, &g, "length", 150, &mut rng).unwrap();
        assert_eq!(s.evaluated, l.evaluated, "same pair sample must be used");
        assert!(l.mean >= s.mean, "mean fell from {} to {}", s.mean, l.mean);
    }

    #[test]
    fn quality_validates_its_inputs() {
        let env = Environment::empty(2);
        let g = build_prm(&env, 60, &[CostObjective::length()], 91).unwrap();
        let table = build_landmark_table(&g, "length", &[3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(heuristic_quality(&table, &g, "length", 0, &mut rng).is_err());
        assert!(heuristic_quality(&table, &g, "work", 10, &mut rng).is_err());
    }
}
