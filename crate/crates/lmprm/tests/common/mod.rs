//! Shared oracles and helpers for the acceptance suite.

use std::io::Write;
use std::sync::{Mutex, MutexGuard, OnceLock, PoisonError};
use std::time::Instant;

use lmprm::env::poisson_forest;
use lmprm::geom::Aabb;
use lmprm::roadmap::RoadmapGraph;
use lmprm::Environment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Serializes the suite so timing measurements and peak memory of one
/// criterion never overlap another. Poisoning is ignored: a failed
/// criterion must not mask the remaining ones.
pub fn suite_lock() -> MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(PoisonError::into_inner)
}

/// Prints the one-line verdict for a criterion. Writes straight to the
/// stderr handle so the line survives the harness output capture.
pub fn report(name: &str, pass: bool, started: Instant, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let secs = started.elapsed().as_secs_f64();
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[acceptance] {name}: {verdict} ({secs:.1}s) {detail}");
}

/// Random disc field over the window [-1, 1]^dim with the standard free
/// box, built from a private seeded stream.
pub fn forest(dim: usize, intensity: f64, seed: u64) -> Environment {
    let window = Aabb::centered_cube(dim, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    poisson_forest(intensity, 0.05, &window, &mut rng).expect("forest construction")
}

/// Reference single-source distances by iterated full-edge relaxation.
/// Shares nothing with the search module beyond the graph accessors;
/// convergence within n passes is guaranteed for nonnegative weights.
pub fn bellman_ford(graph: &RoadmapGraph, objective_id: &str, source: u32) -> Vec<f64> {
    let n = graph.n();
    let weights = graph.weight_array(objective_id).expect("known objective");
    let mut dist = vec![f64::INFINITY; n];
    dist[source as usize] = 0.0;
    for pass in 0..=n {
        let mut changed = false;
        for u in 0..n as u32 {
            let du = dist[u as usize];
            if !du.is_finite() {
                continue;
            }
            for (slot, &v) in graph.slot_range(u).zip(graph.neighbors_of(u)) {
                let cand = du + weights[slot];
                if cand < dist[v as usize] {
                    dist[v as usize] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            return dist;
        }
        assert!(pass < n, "relaxation failed to settle within {n} passes");
    }
    dist
}

/// Draws a distinct vertex pair from one connected component.
pub fn connected_pair(labels: &[u32], rng: &mut impl Rng) -> (u32, u32) {
    let n = labels.len();
    assert!(n >= 2, "need at least two vertices");
    loop {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v && labels[u] == labels[v] {
            return (u as u32, v as u32);
        }
    }
}

/// Midpoint of the sorted values; the average of the middle two when the
/// count is even.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Clear probability for fixed endpoints as an explicit mixture over the
/// obstacle count: sum of Poisson(intensity * window_volume) weights times
/// the per-obstacle miss chance raised to the count. Planar only; the
/// swept area is derived here independently as strip plus end caps. The
/// miss chance is floored at zero before powering.
pub fn poisson_series_clear(
    intensity: f64,
    obstacle_radius: f64,
    z1: &[f64],
    z2: &[f64],
    window_volume: f64,
    terms: usize,
) -> f64 {
    assert_eq!(z1.len(), 2, "series oracle is two-dimensional");
    assert_eq!(z2.len(), 2, "series oracle is two-dimensional");
    let length = z1
        .iter()
        .zip(z2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let swept = std::f64::consts::PI * obstacle_radius * obstacle_radius
        + 2.0 * obstacle_radius * length;
    let miss_one = (1.0 - swept / window_volume).max(0.0);
    let mean_count = intensity * window_volume;
    let mut weight = (-mean_count).exp();
    let mut sum = weight;
    let mut miss_pow = 1.0;
    for count in 1..=terms {
        weight *= mean_count / count as f64;
        miss_pow *= miss_one;
        sum += weight * miss_pow;
    }
    sum
}
