//! Uniform bucket grid over a fixed point set, for exact fixed-radius and
//! nearest-neighbor queries. The grid never owns the coordinates; callers
//! pass the same flat row-major array the index was built from.

/// Bucket grid with cubic cells. Cell size is chosen by the caller, usually
/// the roadmap connection radius.
#[derive(Clone, Debug)]
pub struct GridIndex {
    dim: usize,
    cell: f64,
    origin: Vec<f64>,
    shape: Vec<i64>,
    buckets: Vec<Vec<u32>>,
}

impl GridIndex {
    /// Builds the grid over `coords` (row-major, `coords.len() / dim` points).
    /// `cell` must be positive.
    pub fn build(dim: usize, coords: &[f64], cell: f64) -> Self {
        assert!(dim > 0 && cell > 0.0 && cell.is_finite());
        assert_eq!(coords.len() % dim, 0);
        let n = coords.len() / dim;

        let mut origin = vec![0.0; dim];
        let mut upper = vec![0.0; dim];
        if n > 0 {
            for a in 0..dim {
                origin[a] = f64::INFINITY;
                upper[a] = f64::NEG_INFINITY;
            }
            for p in 0..n {
                for a in 0..dim {
                    let v = coords[p * dim + a];
                    origin[a] = origin[a].min(v);
                    upper[a] = upper[a].max(v);
                }
            }
        }
        let shape: Vec<i64> = (0..dim)
            .map(|a| {
                let span = (upper[a] - origin[a]).max(0.0);
                ((span / cell).floor() as i64 + 1).max(1)
            })
            .collect();

        let total: usize = shape.iter().map(|&s| s as usize).product();
        let mut buckets = vec![Vec::new(); total];
        let mut idx = vec![0i64; dim];
        for p in 0..n {
            for a in 0..dim {
                // Clamp handles points sitting exactly on the upper face.
                idx[a] = (((coords[p * dim + a] - origin[a]) / cell).floor() as i64)
                    .clamp(0, shape[a] - 1);
            }
            let flat = Self::flatten(&shape, &idx);
            buckets[flat].push(p as u32);
        }
        Self {
            dim,
            cell,
            origin,
            shape,
            buckets,
        }
    }

    fn flatten(shape: &[i64], idx: &[i64]) -> usize {
        let mut flat = 0usize;
        for (s, i) in shape.iter().zip(idx) {
            flat = flat * *s as usize + *i as usize;
        }
        flat
    }

    /// Cell coordinate of `x`, clamped per axis to one cell beyond the valid
    /// range. Moving the base toward the grid only shortens ring distances
    /// on the side where `x` lies outside, so the lower bound "cells at ring
    /// m hold points farther than (m - 1) * cell from x" stays valid while
    /// the ring count stays bounded by the grid extent.
    fn cell_of(&self, x: &[f64]) -> Vec<i64> {
        (0..self.dim)
            .map(|a| {
                let t = ((x[a] - self.origin[a]) / self.cell).floor();
                let t = t.clamp(-1.0, self.shape[a] as f64);
                t as i64
            })
            .collect()
    }

    /// Ids of points v with 0 < dist(x, v) < r, ascending. Points exactly
    /// coincident with `x` are excluded.
    pub fn radius_neighbors(&self, coords: &[f64], x: &[f64], r: f64) -> Vec<u32> {
        assert_eq!(x.len(), self.dim);
        let mut out = Vec::new();
        if r <= 0.0 {
            return out;
        }
        let base = self.cell_of(x);
        let ring = (r / self.cell).floor() as i64 + 1;
        let r_sq = r * r;

        let lo: Vec<i64> = (0..self.dim).map(|a| (base[a] - ring).max(0)).collect();
        let hi: Vec<i64> = (0..self.dim)
            .map(|a| (base[a] + ring).min(self.shape[a] - 1))
            .collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return out;
        }

        let mut idx = lo.clone();
        loop {
            let flat = Self::flatten(&self.shape, &idx);
            for &p in &self.buckets[flat] {
                let d_sq = crate::geom::dist_sq(&coords[p as usize * self.dim..][..self.dim], x);
                if d_sq > 0.0 && d_sq < r_sq {
                    out.push(p);
                }
            }
            // Odometer increment over the cell box.
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    out.sort_unstable();
                    return out;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] <= hi[axis] {
                    break;
                }
                idx[axis] = lo[axis];
            }
        }
    }

    /// Id of the point closest to `x`. Exact ties resolve to the smallest id.
    /// Returns None only for an empty point set.
    pub fn nearest(&self, coords: &[f64], x: &[f64]) -> Option<u32> {
        assert_eq!(x.len(), self.dim);
        if self.buckets.iter().all(|b| b.is_empty()) {
            return None;
        }
        let base = self.cell_of(x);
        // Largest ring that still reaches a valid cell from the base cell.
        let k_max: i64 = (0..self.dim)
            .map(|a| (base[a]).abs().max((self.shape[a] - 1 - base[a]).abs()))
            .max()
            .unwrap();

        let mut best: Option<(f64, u32)> = None;
        for k in 0..=k_max {
            self.scan_ring(coords, x, &base, k, &mut best);
            if let Some((d_sq, _)) = best {
                // Any point in an unvisited ring sits strictly farther than
                // k * cell from x, so the current best cannot be beaten.
                let safe = k as f64 * self.cell;
                if d_sq.sqrt() <= safe {
                    break;
                }
            }
        }
        best.map(|(_, id)| id)
    }

    /// Visits every valid cell at Chebyshev distance exactly `k` from `base`.
    fn scan_ring(
        &self,
        coords: &[f64],
        x: &[f64],
        base: &[i64],
        k: i64,
        best: &mut Option<(f64, u32)>,
    ) {
        let lo: Vec<i64> = (0..self.dim).map(|a| (base[a] - k).max(0)).collect();
        let hi: Vec<i64> = (0..self.dim)
            .map(|a| (base[a] + k).min(self.shape[a] - 1))
            .collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return;
        }
        let mut idx = lo.clone();
        loop {
            let cheb = idx
                .iter()
                .zip(base)
                .map(|(i, b)| (i - b).abs())
                .max()
                .unwrap();
            if cheb == k {
                let flat = Self::flatten(&self.shape, &idx);
                for &p in &self.buckets[flat] {
                    let d_sq =
                        crate::geom::dist_sq(&coords[p as usize * self.dim..][..self.dim], x);
                    let better = match *best {
                        None => true,
                        Some((bd, bid)) => d_sq < bd || (d_sq == bd && p < bid),
                    };
                    if better {
                        *best = Some((d_sq, p));
                    }
                }
            }
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] <= hi[axis] {
                    break;
                }
                idx[axis] = lo[axis];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_radius(coords: &[f64], dim: usize, x: &[f64], r: f64) -> Vec<u32> {
        let n = coords.len() / dim;
        let mut out: Vec<u32> = (0..n as u32)
            .filter(|&p| {
                let d = crate::geom::dist(&coords[p as usize * dim..][..dim], x);
                d > 0.0 && d < r
            })
            .collect();
        out.sort_unstable();
        out
    }

    fn brute_nearest(coords: &[f64], dim: usize, x: &[f64]) -> Option<u32> {
        let n = coords.len() / dim;
        (0..n as u32).min_by(|&a, &b| {
            let da = crate::geom::dist_sq(&coords[a as usize * dim..][..dim], x);
            let db = crate::geom::dist_sq(&coords[b as usize * dim..][..dim], x);
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        })
    }

    #[test]
    fn coincident_point_is_not_its_own_neighbor() {
        let coords = vec![0.0, 0.0, 0.5, 0.0];
        let grid = GridIndex::build(2, &coords, 0.25);
        // Strict radius: the vertex at distance exactly 0.5 is out too.
        assert!(grid.radius_neighbors(&coords, &[0.0, 0.0], 0.5).is_empty());
        assert_eq!(grid.radius_neighbors(&coords, &[0.0, 0.0], 0.51), vec![1]);
    }

    #[test]
    fn nearest_breaks_ties_by_smallest_id() {
        // Points 0..4 at distance 0.5, points 1 and 3 coincide by symmetry.
        let coords = vec![0.5, 0.0, 0.0, 0.5, -0.5, 0.0, 0.0, -0.5, 0.9, 0.9];
        let grid = GridIndex::build(2, &coords, 0.3);
        assert_eq!(grid.nearest(&coords, &[0.0, 0.0]), Some(0));
    }

    #[test]
    fn matches_brute_force_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for round in 0..60 {
            let n = rng.gen_range(1..400);
            let dim = if round % 3 == 0 { 3 } else { 2 };
            let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let cell = rng.gen_range(0.02..0.3);
            let grid = GridIndex::build(dim, &coords, cell);
            for _ in 0..20 {
                let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.8..0.8)).collect();
                let r = rng.gen_range(0.01..0.6);
                assert_eq!(
                    grid.radius_neighbors(&coords, &x, r),
                    brute_radius(&coords, dim, &x, r),
                    "radius query mismatch (n={n}, dim={dim}, cell={cell}, r={r})"
                );
                assert_eq!(
                    grid.nearest(&coords, &x),
                    brute_nearest(&coords, dim, &x),
                    "nearest mismatch (n={n}, dim={dim}, cell={cell})"
                );
            }
        }
    }

    #[test]
    fn queries_far_outside_coverage() {
        let coords = vec![0.0, 0.0, 0.1, 0.1, -0.2, 0.3];
        let grid = GridIndex::build(2, &coords, 0.05);
        assert_eq!(grid.nearest(&coords, &[40.0, -3.0]), Some(1));
        assert!(grid
            .radius_neighbors(&coords, &[40.0, -3.0], 1.0)
            .is_empty());
        let all = grid.radius_neighbors(&coords, &[40.0, -3.0], 100.0);
        assert_eq!(all, vec![0, 1, 2]);
    }

    #[test]
    fn empty_point_set() {
        let coords: Vec<f64> = Vec::new();
        let grid = GridIndex::build(2, &coords, 0.1);
        assert_eq!(grid.nearest(&coords, &[0.0, 0.0]), None);
        assert!(grid.radius_neighbors(&coords, &[0.0, 0.0], 1.0).is_empty());
    }
}
