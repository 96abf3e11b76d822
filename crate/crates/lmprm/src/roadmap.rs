//! Roadmap construction: random free-space vertices joined by every
//! collision-free edge shorter than a density-matched connection radius,
//! stored as a compressed sparse adjacency with per-objective edge weights.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashSet;
use std::path::Path;
use std::sync::Arc;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::geom::{dist, unit_ball_volume};
use crate::io;
use crate::spatial::GridIndex;

/// Ascent penalty used by the `work` objective.
pub const WORK_ASCENT_PENALTY: f64 = 5.0;

/// An edge-cost function with a stable identifier. Weights for each
/// objective are computed once at build time and stored per directed edge,
/// so asymmetric costs are supported.
#[derive(Clone)]
pub struct CostObjective {
    id: String,
    cost: Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>,
}

impl CostObjective {
    pub fn new(
        id: impl Into<String>,
        cost: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            cost: Arc::new(cost),
        }
    }

    /// Euclidean edge length.
    pub fn length() -> Self {
        Self::new("length", |x, y| dist(x, y))
    }

    /// Euclidean length plus a penalty on gain in the last coordinate:
    /// cost(x, y) = |x - y| + WORK_ASCENT_PENALTY * max(0, y_last - x_last).
    /// Descending is free, so this objective is asymmetric.
    pub fn work() -> Self {
        Self::new("work", |x, y| {
            let ascent = (y[y.len() - 1] - x[x.len() - 1]).max(0.0);
            dist(x, y) + WORK_ASCENT_PENALTY * ascent
        })
    }

    /// Looks up a built-in objective by its stable identifier.
    pub fn by_id(id: &str) -> Result<Self> {
        match id {
            "length" => Ok(Self::length()),
            "work" => Ok(Self::work()),
            other => Err(Error::UnknownObjective(other.to_string())),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.cost)(x, y)
    }
}

impl std::fmt::Debug for CostObjective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CostObjective").field("id", &self.id).finish()
    }
}

/// Connection radius for `n` vertices in `dim` dimensions over free volume
/// `mu_free`:
///
///   r(n) = ( 2 (1 + 1/d) * (mu_free / v_ball(d)) * ln(n) / n )^(1/d)
///
/// where v_ball(d) is the unit-ball volume. This is the smallest radius
/// scaling that keeps the roadmap asymptotically connected and its shortest
/// paths convergent, and it keeps the expected vertex degree logarithmic.
pub fn connection_radius(n: usize, dim: usize, mu_free: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "vertex count must be at least 2, got {n}"
        )));
    }
    connection_radius_real(n as f64, dim, mu_free)
}

/// Real-valued variant of `connection_radius`, for direct evaluation of the
/// formula at non-integer counts.
pub fn connection_radius_real(n: f64, dim: usize, mu_free: f64) -> Result<f64> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    if !(n > 1.0) || !n.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "vertex count must exceed 1, got {n}"
        )));
    }
    if !(mu_free > 0.0) || !mu_free.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "free volume must be positive and finite, got {mu_free}"
        )));
    }
    let d = dim as f64;
    let gamma = 2.0 * (1.0 + 1.0 / d) * (mu_free / unit_ball_volume(dim));
    Ok((gamma * n.ln() / n).powf(1.0 / d))
}

/// A built roadmap: vertex coordinates, symmetric CSR adjacency with both
/// directions stored, and one weight array per objective aligned with the
/// directed edge slots.
pub struct RoadmapGraph {
    dim: usize,
    coords: Vec<f64>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    objectives: Vec<(String, Vec<f64>)>,
    connection_radius: f64,
    build_seed: u64,
    index: GridIndex,
    fingerprint: u64,
}

impl RoadmapGraph {
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Directed edge count (twice the undirected count).
    pub fn m(&self) -> usize {
        self.neighbors.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn connection_radius(&self) -> f64 {
        self.connection_radius
    }

    pub fn build_seed(&self) -> u64 {
        self.build_seed
    }

    /// Checksum of the serialized graph; landmark tables bind to this value.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn vertex(&self, id: u32) -> &[f64] {
        &self.coords[id as usize * self.dim..][..self.dim]
    }

    pub fn check_vertex(&self, id: u32) -> Result<()> {
        if (id as usize) < self.n() {
            Ok(())
        } else {
            Err(Error::InvalidVertex { id, n: self.n() })
        }
    }

    pub fn neighbors_of(&self, v: u32) -> &[u32] {
        &self.neighbors[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    /// Directed edge slot range for vertex `v`; indexes the weight arrays.
    pub fn slot_range(&self, v: u32) -> std::ops::Range<usize> {
        self.offsets[v as usize]..self.offsets[v as usize + 1]
    }

    /// Slot of the directed edge `from -> to`, if present.
    pub fn slot_of(&self, from: u32, to: u32) -> Option<usize> {
        let range = self.slot_range(from);
        let row = &self.neighbors[range.clone()];
        row.binary_search(&to).ok().map(|i| range.start + i)
    }

    pub fn objective_ids(&self) -> impl Iterator<Item = &str> {
        self.objectives.iter().map(|(id, _)| id.as_str())
    }

    pub fn weight_array(&self, objective_id: &str) -> Result<&[f64]> {
        self.objectives
            .iter()
            .find(|(id, _)| id == objective_id)
            .map(|(_, w)| w.as_slice())
            .ok_or_else(|| Error::UnknownObjective(objective_id.to_string()))
    }

    /// True iff stored weights are equal in both directions on every edge.
    pub fn weights_symmetric(&self, objective_id: &str) -> Result<bool> {
        let weights = self.weight_array(objective_id)?;
        for u in 0..self.n() as u32 {
            for (slot, &v) in self.slot_range(u).zip(self.neighbors_of(u)) {
                if v < u {
                    continue;
                }
                let back = self.slot_of(v, u).expect("adjacency is symmetric");
                if weights[slot] != weights[back] {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Vertices with 0 < dist(x, v) < r, ascending id order.
    pub fn radius_neighbors(&self, x: &[f64], r: f64) -> Result<Vec<u32>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.index.radius_neighbors(&self.coords, x, r))
    }

    /// Vertex closest to `x`, exact ties resolved to the smallest id.
    pub fn nearest_vertex(&self, x: &[f64]) -> Result<u32> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        self.index
            .nearest(&self.coords, x)
            .ok_or_else(|| Error::InvalidParameter("graph has no vertices".into()))
    }

    /// Connected-component label per vertex (the component's root id).
    /// Edges are traversable in both directions, so one labeling serves
    /// every objective.
    pub fn component_labels(&self) -> Vec<u32> {
        let mut parent: Vec<u32> = (0..self.n() as u32).collect();
        fn find(parent: &mut [u32], mut v: u32) -> u32 {
            while parent[v as usize] != v {
                parent[v as usize] = parent[parent[v as usize] as usize];
                v = parent[v as usize];
            }
            v
        }
        for u in 0..self.n() as u32 {
            for &v in self.neighbors_of(u) {
                if v > u {
                    let ru = find(&mut parent, u);
                    let rv = find(&mut parent, v);
                    if ru != rv {
                        let (lo, hi) = if ru < rv { (ru, rv) } else { (rv, ru) };
                        parent[hi as usize] = lo;
                    }
                }
            }
        }
        (0..self.n() as u32)
            .map(|v| find(&mut parent, v))
            .collect()
    }

    /// Serialized payload (magic and version included, checksum excluded).
    pub(crate) fn encode(&self) -> Vec<u8> {
        let mut w = io::Writer::new(io::GRAPH_MAGIC);
        w.u32(self.dim as u32);
        w.u64(self.n() as u64);
        w.u64(self.m() as u64);
        w.f64(self.connection_radius);
        w.u64(self.build_seed);
        w.u32(self.objectives.len() as u32);
        for (id, _) in &self.objectives {
            w.string(id);
        }
        w.f64_slice(&self.coords);
        for &off in &self.offsets {
            w.u64(off as u64);
        }
        for &v in &self.neighbors {
            w.u64(v as u64);
        }
        for (_, weights) in &self.objectives {
            w.f64_slice(weights);
        }
        w.finish()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, io::seal(self.encode()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let mut r = io::open_payload(&bytes, io::GRAPH_MAGIC)?;
        let dim = r.u32()? as usize;
        let n = r.u64()?;
        let m = r.u64()?;
        let radius = r.f64()?;
        let seed = r.u64()?;
        let objective_count = r.u32()?;
        let mut ids = Vec::with_capacity(objective_count as usize);
        for _ in 0..objective_count {
            ids.push(r.string()?);
        }
        let coords = {
            let count = n
                .checked_mul(dim as u64)
                .ok_or_else(|| Error::Format("vertex count overflows".into()))?;
            r.f64_vec(count)?
        };
        let offsets: Vec<usize> = r
            .u64_vec(n.checked_add(1).ok_or_else(|| Error::Format("vertex count overflows".into()))?)?
            .into_iter()
            .map(|v| v as usize)
            .collect();
        let neighbors: Vec<u32> = {
            let raw = r.u64_vec(m)?;
            let mut out = Vec::with_capacity(raw.len());
            for v in raw {
                out.push(
                    u32::try_from(v)
                        .map_err(|_| Error::Format(format!("neighbor id {v} overflows u32")))?,
                );
            }
            out
        };
        let mut objectives = Vec::with_capacity(ids.len());
        for id in ids {
            objectives.push((id, r.f64_vec(m)?));
        }
        if !r.is_empty() {
            return Err(Error::Format(format!(
                "{} unexpected trailing bytes",
                r.remaining()
            )));
        }
        let graph = Self::from_parts(dim, coords, offsets, neighbors, objectives, radius, seed)?;
        // The fingerprint re-derives from a fresh encode; it must agree with
        // the checksum the file carried.
        let stored = io::crc64(&bytes[..bytes.len() - 8]);
        if graph.fingerprint != stored {
            return Err(Error::Format(
                "re-encoded graph does not reproduce the stored checksum".into(),
            ));
        }
        Ok(graph)
    }

    /// Assembles and validates a graph from raw CSR parts.
    pub(crate) fn from_parts(
        dim: usize,
        coords: Vec<f64>,
        offsets: Vec<usize>,
        neighbors: Vec<u32>,
        objectives: Vec<(String, Vec<f64>)>,
        connection_radius: f64,
        build_seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Format("dimension must be >= 1".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::Format("coordinate array length not divisible by dim".into()));
        }
        let n = coords.len() / dim;
        if n > u32::MAX as usize {
            return Err(Error::Format(format!("vertex count {n} overflows u32 ids")));
        }
        if offsets.len() != n + 1 || offsets.first() != Some(&0) {
            return Err(Error::Format("offset array malformed".into()));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Format("offsets must be nondecreasing".into()));
        }
        if *offsets.last().unwrap() != neighbors.len() {
            return Err(Error::Format("offsets do not cover the neighbor array".into()));
        }
        if !(connection_radius > 0.0) || !connection_radius.is_finite() {
            return Err(Error::Format(format!(
                "connection radius must be positive, got {connection_radius}"
            )));
        }
        for (id, weights) in &objectives {
            if weights.len() != neighbors.len() {
                return Err(Error::Format(format!(
                    "objective `{id}` has {} weights for {} edges",
                    weights.len(),
                    neighbors.len()
                )));
            }
            if weights.iter().any(|w| !(*w >= 0.0)) {
                return Err(Error::Format(format!(
                    "objective `{id}` contains negative or NaN weights"
                )));
            }
        }

        let index = GridIndex::build(dim, &coords, connection_radius);
        let mut graph = Self {
            dim,
            coords,
            offsets,
            neighbors,
            objectives,
            connection_radius,
            build_seed,
            index,
            fingerprint: 0,
        };

        for u in 0..n as u32 {
            let row = graph.neighbors_of(u);
            for pair in row.windows(2) {
                if pair[0] >= pair[1] {
                    return Err(Error::Format(format!(
                        "adjacency row {u} is not strictly ascending"
                    )));
                }
            }
            for &v in row {
                if v as usize >= n {
                    return Err(Error::Format(format!("neighbor id {v} out of range")));
                }
                if v == u {
                    return Err(Error::Format(format!("self loop at vertex {u}")));
                }
                if dist(graph.vertex(u), graph.vertex(v)) >= graph.connection_radius {
                    return Err(Error::Format(format!(
                        "edge {u}->{v} is not shorter than the connection radius"
                    )));
                }
                if graph.slot_of(v, u).is_none() {
                    return Err(Error::Format(format!(
                        "edge {u}->{v} has no reverse direction"
                    )));
                }
            }
        }

        graph.fingerprint = io::crc64(&graph.encode());
        Ok(graph)
    }
}

impl std::fmt::Debug for RoadmapGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RoadmapGraph")
            .field("dim", &self.dim)
            .field("n", &self.n())
            .field("m", &self.m())
            .field("connection_radius", &self.connection_radius)
            .field("build_seed", &self.build_seed)
            .field("fingerprint", &self.fingerprint)
            .finish()
    }
}

/// Samples `n` distinct free vertices with the seeded generator and connects
/// every pair closer than the formula radius whose straight segment is
/// collision free. Identical (environment, n, seed) inputs reproduce the
/// graph byte for byte.
pub fn build_prm(
    env: &Environment,
    n: usize,
    objectives: &[CostObjective],
    seed: u64,
) -> Result<RoadmapGraph> {
    env.validate()?;
    let radius = connection_radius(n, env.dim, env.mu_free_estimate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(n * env.dim);
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(n);
    while seen.len() < n {
        let x = env.sample_free(&mut rng)?;
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        // Exact duplicates are re-drawn so vertex ids name distinct points.
        if seen.insert(key) {
            coords.extend_from_slice(&x);
        }
    }
    build_prm_with_vertices(env, coords, objectives, Some(radius), seed)
}

/// Builds a roadmap over caller-supplied vertices. `radius` falls back to
/// the formula value for the given vertex count. Every vertex must lie in
/// free space.
pub fn build_prm_with_vertices(
    env: &Environment,
    coords: Vec<f64>,
    objectives: &[CostObjective],
    radius: Option<f64>,
    seed: u64,
) -> Result<RoadmapGraph> {
    env.validate()?;
    if coords.len() % env.dim != 0 {
        return Err(Error::DimensionMismatch {
            expected: env.dim,
            got: coords.len() % env.dim,
        });
    }
    let n = coords.len() / env.dim;
    if n == 0 {
        return Err(Error::InvalidParameter("vertex set is empty".into()));
    }
    if n > u32::MAX as usize {
        return Err(Error::InvalidParameter(format!(
            "vertex count {n} overflows u32 ids"
        )));
    }
    for i in 0..objectives.len() {
        for j in i + 1..objectives.len() {
            if objectives[i].id() == objectives[j].id() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate objective id `{}`",
                    objectives[i].id()
                )));
            }
        }
    }
    let radius = match radius {
        Some(r) if r > 0.0 && r.is_finite() => r,
        Some(r) => {
            return Err(Error::InvalidParameter(format!(
                "connection radius must be positive, got {r}"
            )))
        }
        None => connection_radius(n, env.dim, env.mu_free_estimate)?,
    };

    let dim = env.dim;
    for v in 0..n {
        let x = &coords[v * dim..][..dim];
        if !env.point_free(x)? {
            return Err(Error::InvalidParameter(format!(
                "vertex {v} at {x:?} is not in free space"
            )));
        }
    }

    let index = GridIndex::build(dim, &coords, radius);

    // Upper-neighbor pass: for each u, every v > u within the radius whose
    // joining segment is clear. Rows come back in vertex order regardless of
    // the parallel schedule.
    let upper: Vec<Vec<u32>> = (0..n as u32)
        .into_par_iter()
        .map(|u| {
            let xu = &coords[u as usize * dim..][..dim];
            let mut row = Vec::new();
            for v in index.radius_neighbors(&coords, xu, radius) {
                if v <= u {
                    continue;
                }
                let xv = &coords[v as usize * dim..][..dim];
                if env.segment_clear(xu, xv)? {
                    row.push(v);
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    // Both directions of each undirected pair, rows sorted ascending.
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    for u in 0..n {
        adjacency[u].extend_from_slice(&upper[u]);
        for &v in &upper[u] {
            adjacency[v as usize].push(u as u32);
        }
    }
    for row in adjacency.iter_mut() {
        row.sort_unstable();
    }

    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    let mut neighbors = Vec::new();
    for row in &adjacency {
        neighbors.extend_from_slice(row);
        offsets.push(neighbors.len());
    }

    let mut weight_arrays = Vec::with_capacity(objectives.len());
    for objective in objectives {
        let mut weights = Vec::with_capacity(neighbors.len());
        for u in 0..n {
            let xu = &coords[u * dim..][..dim];
            for &v in &adjacency[u] {
                let xv = &coords[v as usize * dim..][..dim];
                let w = objective.evaluate(xu, xv);
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "objective `{}` produced invalid cost {w} on edge {u}->{v}",
                        objective.id()
                    )));
                }
                weights.push(w);
            }
        }
        weight_arrays.push((objective.id().to_string(), weights));
    }

    RoadmapGraph::from_parts(dim, coords, offsets, neighbors, weight_arrays, radius, seed)
}
