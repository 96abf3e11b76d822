//! Best-first graph search over a roadmap: A* with a pluggable heuristic,
//! Dijkstra as its zero-heuristic form, and path reconstruction.
//!
//! The queue has no closed set. Relaxing a vertex pushes a fresh entry, and
//! superseded entries are skipped on pop by comparing their stored label
//! against the current one. Skipped pops are not counted as iterations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::geom::dist;
use crate::roadmap::RoadmapGraph;

/// Parent sentinel marking the root of a search tree.
pub const NO_PARENT: u32 = u32::MAX;

/// Remaining-cost estimate from a vertex toward a goal. Values are
/// nonnegative; infinity is legal and prunes the vertex outright.
/// Implementations must not mutate shared state during a search.
pub trait Heuristic {
    fn evaluate(&self, v: u32, goal: u32) -> f64;
}

/// Always zero; turns A* into Dijkstra.
pub struct ZeroHeuristic;

impl Heuristic for ZeroHeuristic {
    fn evaluate(&self, _v: u32, _goal: u32) -> f64 {
        0.0
    }
}

/// Straight-line distance between vertex coordinates. Admissible for the
/// Euclidean length objective; other objectives may undercut it, so pairing
/// it with them forfeits the optimality guarantee.
pub struct EuclideanHeuristic<'g> {
    graph: &'g RoadmapGraph,
}

impl Heuristic for EuclideanHeuristic<'_> {
    fn evaluate(&self, v: u32, goal: u32) -> f64 {
        dist(self.graph.vertex(v), self.graph.vertex(goal))
    }
}

pub fn euclidean_heuristic(graph: &RoadmapGraph) -> EuclideanHeuristic<'_> {
    EuclideanHeuristic { graph }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Found,
    NoSolution,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub status: SearchStatus,
    /// Vertex ids from start to goal; empty when no path exists.
    pub path: Vec<u32>,
    /// Total path weight; infinite when no path exists.
    pub cost: f64,
    /// Queue pops that survived the staleness check.
    pub iterations: u64,
    /// Entries inserted into the queue, the initial one included.
    pub pushes: u64,
    pub wall_time: Duration,
}

impl SearchResult {
    pub fn is_found(&self) -> bool {
        self.status == SearchStatus::Found
    }
}

pub(crate) struct QueueEntry {
    pub(crate) key: f64,
    pub(crate) label: f64,
    pub(crate) vertex: u32,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.vertex == other.vertex
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    // Reversed so the max-heap yields the smallest key; equal keys yield
    // the smallest vertex id. Keys in the heap are always finite.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .partial_cmp(&self.key)
            .expect("queue keys are never NaN")
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Reusable per-query state: labels and parents live in dense arrays that
/// reset lazily through an epoch stamp, so consecutive queries skip the
/// O(n) clear. One searcher serves one query at a time; concurrent queries
/// each own their searcher.
pub struct Searcher {
    labels: Vec<f64>,
    parents: Vec<u32>,
    stamps: Vec<u64>,
    epoch: u64,
}

impl Default for Searcher {
    fn default() -> Self {
        Self::new()
    }
}

impl Searcher {
    pub fn new() -> Self {
        Self {
            labels: Vec::new(),
            parents: Vec::new(),
            stamps: Vec::new(),
            epoch: 0,
        }
    }

    fn ensure_capacity(&mut self, n: usize) {
        if self.labels.len() < n {
            self.labels.resize(n, f64::INFINITY);
            self.parents.resize(n, NO_PARENT);
            self.stamps.resize(n, 0);
        }
    }

    fn label_of(&self, v: u32) -> f64 {
        if self.stamps[v as usize] == self.epoch {
            self.labels[v as usize]
        } else {
            f64::INFINITY
        }
    }

    fn set(&mut self, v: u32, label: f64, parent: u32) {
        self.labels[v as usize] = label;
        self.parents[v as usize] = parent;
        self.stamps[v as usize] = self.epoch;
    }

    pub fn astar<H: Heuristic + ?Sized>(
        &mut self,
        graph: &RoadmapGraph,
        objective_id: &str,
        start: u32,
        goal: u32,
        h: &H,
    ) -> Result<SearchResult> {
        self.astar_observed(graph, objective_id, start, goal, h, |_, _| {})
    }

    pub fn dijkstra(
        &mut self,
        graph: &RoadmapGraph,
        objective_id: &str,
        start: u32,
        goal: u32,
    ) -> Result<SearchResult> {
        self.astar(graph, objective_id, start, goal, &ZeroHeuristic)
    }

    /// A* with a callback on every counted pop, receiving (vertex, key).
    /// The callback sees the exact expansion order, which is deterministic:
    /// equal keys break toward the smaller vertex id.
    pub(crate) fn astar_observed<H, F>(
        &mut self,
        graph: &RoadmapGraph,
        objective_id: &str,
        start: u32,
        goal: u32,
        h: &H,
        mut observe: F,
    ) -> Result<SearchResult>
    where
        H: Heuristic + ?Sized,
        F: FnMut(u32, f64),
    {
        let t0 = Instant::now();
        graph.check_vertex(start)?;
        graph.check_vertex(goal)?;
        let weights = graph.weight_array(objective_id)?;
        self.ensure_capacity(graph.n());
        self.epoch += 1;

        let mut heap: BinaryHeap<QueueEntry> = BinaryHeap::new();
        let mut iterations = 0u64;
        let mut pushes = 0u64;

        self.set(start, 0.0, NO_PARENT);
        let start_key = h.evaluate(start, goal);
        if start_key.is_finite() {
            heap.push(QueueEntry {
                key: start_key,
                label: 0.0,
                vertex: start,
            });
            pushes += 1;
        }

        let mut found = false;
        while let Some(entry) = heap.pop() {
            let v = entry.vertex;
            if entry.label > self.label_of(v) {
                continue;
            }
            iterations += 1;
            observe(v, entry.key);
            if v == goal {
                found = true;
                break;
            }
            let row = graph.neighbors_of(v);
            let slots = graph.slot_range(v);
            for (slot, &w) in slots.zip(row) {
                let candidate = entry.label + weights[slot];
                if candidate < self.label_of(w) {
                    self.set(w, candidate, v);
                    let key = candidate + h.evaluate(w, goal);
                    if key.is_finite() {
                        heap.push(QueueEntry {
                            key,
                            label: candidate,
                            vertex: w,
                        });
                        pushes += 1;
                    }
                }
            }
        }

        let result = if found {
            let mut path = vec![goal];
            let mut v = goal;
            while self.parents[v as usize] != NO_PARENT {
                v = self.parents[v as usize];
                path.push(v);
                if path.len() > graph.n() {
                    return Err(Error::CycleDetected);
                }
            }
            path.reverse();
            SearchResult {
                status: SearchStatus::Found,
                path,
                cost: self.labels[goal as usize],
                iterations,
                pushes,
                wall_time: t0.elapsed(),
            }
        } else {
            SearchResult {
                status: SearchStatus::NoSolution,
                path: Vec::new(),
                cost: f64::INFINITY,
                iterations,
                pushes,
                wall_time: t0.elapsed(),
            }
        };
        Ok(result)
    }
}

/// One-shot A* with scratch state allocated per call. Reuse a `Searcher`
/// when issuing many queries.
pub fn astar<H: Heuristic + ?Sized>(
    graph: &RoadmapGraph,
    objective_id: &str,
    start: u32,
    goal: u32,
    h: &H,
) -> Result<SearchResult> {
    Searcher::new().astar(graph, objective_id, start, goal, h)
}

pub fn dijkstra(
    graph: &RoadmapGraph,
    objective_id: &str,
    start: u32,
    goal: u32,
) -> Result<SearchResult> {
    astar(graph, objective_id, start, goal, &ZeroHeuristic)
}

/// Follows parent links from `goal` to the `NO_PARENT` root and returns the
/// chain root-first. A chain longer than the vertex count means the links
/// form a cycle.
pub fn path_to_root(parents: &[u32], goal: u32) -> Result<Vec<u32>> {
    if goal as usize >= parents.len() {
        return Err(Error::InvalidVertex {
            id: goal,
            n: parents.len(),
        });
    }
    let mut path = vec![goal];
    let mut v = goal;
    while parents[v as usize] != NO_PARENT {
        v = parents[v as usize];
        if v as usize >= parents.len() {
            return Err(Error::InvalidVertex {
                id: v,
                n: parents.len(),
            });
        }
        path.push(v);
        if path.len() > parents.len() {
            return Err(Error::CycleDetected);
        }
    }
    path.reverse();
    Ok(path)
}
