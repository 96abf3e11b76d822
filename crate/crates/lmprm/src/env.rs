//! Sampling environments: an open free box minus closed obstacles, plus the
//! random-clutter generator and its intensity calibration.
//!
//! The clutter model scatters a Poisson number of equal-radius discs over an
//! enlarged window so that obstacle statistics near the free box carry no
//! boundary artifacts. Calibration picks the disc intensity that hits a
//! requested probability that a random straight segment through the free box
//! stays collision free.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{unit_ball_volume, Aabb, Obstacle};

/// Consecutive rejections tolerated by `sample_free` before giving up.
pub const DEFAULT_REJECTION_BUDGET: usize = 10_000;

/// Monte-Carlo sample count used when estimating the free-space volume.
pub const MU_FREE_SAMPLES: u64 = 100_000;

/// Upper end of the intensity bracket searched by `calibrate_intensity`.
pub const LAMBDA_MAX: f64 = 1.0e4;

/// A planning environment. Free space is the open interior of `free_bounds`
/// minus the closed obstacles. Obstacle centers are scattered over
/// `sample_window`, which must contain `free_bounds`.
///
/// Field order here fixes the JSON field order of saved environment files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub dim: usize,
    pub free_bounds: Aabb,
    pub sample_window: Aabb,
    pub obstacles: Vec<Obstacle>,
    pub mu_free_estimate: f64,
    pub mu_free_samples: u64,
    pub seed: u64,
}

impl Environment {
    /// Environment with explicit geometry. The free-volume estimate starts at
    /// the full box volume; call `estimate_mu_free` when obstacles are present.
    pub fn new(free_bounds: Aabb, sample_window: Aabb, obstacles: Vec<Obstacle>) -> Result<Self> {
        let env = Self {
            dim: free_bounds.dim(),
            mu_free_estimate: free_bounds.volume(),
            mu_free_samples: 0,
            free_bounds,
            sample_window,
            obstacles,
            seed: 0,
        };
        env.validate()?;
        Ok(env)
    }

    /// Obstacle-free environment: free box [-0.5, 0.5]^dim inside the window
    /// [-1, 1]^dim. The free volume is exactly 1.
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            free_bounds: Aabb::centered_cube(dim, 0.5),
            sample_window: Aabb::centered_cube(dim, 1.0),
            obstacles: Vec::new(),
            mu_free_estimate: 1.0,
            mu_free_samples: 0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.free_bounds.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: self.free_bounds.dim(),
            });
        }
        if self.sample_window.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: self.sample_window.dim(),
            });
        }
        if !self.sample_window.contains_box(&self.free_bounds) {
            return Err(Error::InvalidParameter(
                "sample window must contain the free bounds".into(),
            ));
        }
        for obs in &self.obstacles {
            obs.validate(self.dim)?;
        }
        if !(self.mu_free_estimate >= 0.0 && self.mu_free_estimate <= self.free_bounds.volume()) {
            return Err(Error::InvalidParameter(format!(
                "free-volume estimate {} outside [0, {}]",
                self.mu_free_estimate,
                self.free_bounds.volume()
            )));
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// True iff `x` lies strictly inside the free box and outside every
    /// closed obstacle. Obstacle boundary contact counts as a collision.
    pub fn point_free(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(self.free_bounds.contains_strict(x) && !self.obstacles.iter().any(|o| o.contains(x)))
    }

    /// True iff the closed segment [p, q] stays inside the free box and
    /// touches no obstacle. A degenerate segment reduces to `point_free`.
    pub fn segment_clear(&self, p: &[f64], q: &[f64]) -> Result<bool> {
        self.check_dim(p)?;
        self.check_dim(q)?;
        // The box is convex, so strict interior endpoints keep the whole
        // segment strictly inside.
        if !self.free_bounds.contains_strict(p) || !self.free_bounds.contains_strict(q) {
            return Ok(false);
        }
        Ok(!self.obstacles.iter().any(|o| o.intersects_segment(p, q)))
    }

    /// Draws a point uniformly from free space by rejection from the free
    /// box. Fails after `DEFAULT_REJECTION_BUDGET` consecutive rejections.
    pub fn sample_free<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.sample_free_with_budget(rng, DEFAULT_REJECTION_BUDGET)
    }

    pub fn sample_free_with_budget<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        budget: usize,
    ) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.dim];
        for _ in 0..budget {
            for (i, v) in x.iter_mut().enumerate() {
                *v = rng.gen_range(self.free_bounds.min[i]..self.free_bounds.max[i]);
            }
            if self.point_free(&x)? {
                return Ok(x);
            }
        }
        Err(Error::SamplingExhausted { budget })
    }

    /// Re-estimates the free-space volume by Monte Carlo over the free box
    /// and records the sample count used.
    pub fn estimate_mu_free<R: Rng + ?Sized>(&mut self, samples: u64, rng: &mut R) -> Result<()> {
        if samples == 0 {
            return Err(Error::InvalidParameter("sample count must be positive".into()));
        }
        let mut x = vec![0.0; self.dim];
        let mut hits = 0u64;
        for _ in 0..samples {
            for (i, v) in x.iter_mut().enumerate() {
                *v = rng.gen_range(self.free_bounds.min[i]..self.free_bounds.max[i]);
            }
            if self.point_free(&x)? {
                hits += 1;
            }
        }
        self.mu_free_estimate = hits as f64 / samples as f64 * self.free_bounds.volume();
        self.mu_free_samples = samples;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let env: Environment = serde_json::from_str(&text)?;
        env.validate()?;
        Ok(env)
    }
}

/// Scatters a Poisson(intensity * window volume) number of closed discs of
/// radius `obstacle_radius`, centers i.i.d. uniform on `window`. The free box
/// is fixed at [-0.5, 0.5]^dim and must sit inside the window. Ends by
/// estimating the free volume with `MU_FREE_SAMPLES` points from the same
/// random stream.
pub fn poisson_forest<R: Rng + ?Sized>(
    intensity: f64,
    obstacle_radius: f64,
    window: &Aabb,
    rng: &mut R,
) -> Result<Environment> {
    if !(intensity >= 0.0) || !intensity.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "intensity must be finite and nonnegative, got {intensity}"
        )));
    }
    if !(obstacle_radius > 0.0) || !obstacle_radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "obstacle radius must be positive, got {obstacle_radius}"
        )));
    }
    let dim = window.dim();
    let free_bounds = Aabb::centered_cube(dim, 0.5);
    if !window.contains_box(&free_bounds) {
        return Err(Error::InvalidParameter(
            "window must contain the free box [-0.5, 0.5]^dim".into(),
        ));
    }

    let mean = intensity * window.volume();
    let count = if mean == 0.0 {
        0
    } else {
        let poisson = Poisson::new(mean)
            .map_err(|e| Error::InvalidParameter(format!("invalid Poisson mean {mean}: {e}")))?;
        poisson.sample(rng) as u64
    };

    let mut obstacles = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let center: Vec<f64> = (0..dim)
            .map(|i| rng.gen_range(window.min[i]..window.max[i]))
            .collect();
        obstacles.push(Obstacle::Circle {
            center,
            radius: obstacle_radius,
        });
    }

    let mut env = Environment::new(free_bounds, window.clone(), obstacles)?;
    if !env.obstacles.is_empty() {
        env.estimate_mu_free(MU_FREE_SAMPLES, rng)?;
    }
    Ok(env)
}

/// Parameters for `calibrate_intensity`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClutterSpec {
    /// Desired probability that a random segment through the free box is
    /// collision free. Must lie in (0, 1].
    pub target_clear: f64,
    pub obstacle_radius: f64,
    /// Number of segment endpoint pairs in the Monte-Carlo estimate.
    pub mc_pairs: usize,
    /// Absolute tolerance on the achieved clear probability.
    pub tolerance: f64,
}

impl Default for ClutterSpec {
    fn default() -> Self {
        Self {
            target_clear: 0.5,
            obstacle_radius: 0.05,
            mc_pairs: 50_000,
            tolerance: 0.005,
        }
    }
}

/// Volume swept by a radius-r disc whose center travels along a length-l
/// segment: a ball plus a cylinder with (d-1)-ball cross-section.
fn swept_volume(dim: usize, r: f64, l: f64) -> f64 {
    unit_ball_volume(dim) * r.powi(dim as i32) + unit_ball_volume(dim - 1) * r.powi(dim as i32 - 1) * l
}

/// Probability that a segment with endpoints drawn uniformly from
/// [-0.5, 0.5]^dim avoids every disc of a Poisson forest with the given
/// intensity.
///
/// For a fixed segment of length l, a single center uniform on the window S
/// misses the swept body with probability 1 - v(l) / vol(S), where v(l) is
/// `swept_volume`. Averaging that miss probability to the power N over the
/// Poisson obstacle count N (mean = intensity * vol(S)) collapses, via the
/// Poisson generating function, to exp(-intensity * v(l)); the window volume
/// cancels. This closed form requires the swept body to stay inside S, which
/// holds whenever obstacle_radius <= 0.5 and S is at least [-1, 1]^dim. The
/// returned value averages exp(-intensity * v(l)) over `mc_pairs` random
/// endpoint pairs.
pub fn clear_probability<R: Rng + ?Sized>(
    intensity: f64,
    obstacle_radius: f64,
    dim: usize,
    mc_pairs: usize,
    rng: &mut R,
) -> Result<f64> {
    if mc_pairs == 0 {
        return Err(Error::InvalidParameter("mc_pairs must be positive".into()));
    }
    if !(intensity >= 0.0) || !intensity.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "intensity must be finite and nonnegative, got {intensity}"
        )));
    }
    if !(obstacle_radius > 0.0 && obstacle_radius <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "obstacle radius must lie in (0, 0.5], got {obstacle_radius}"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let lengths = sample_pair_lengths(dim, mc_pairs, rng);
    Ok(mean_clear(intensity, obstacle_radius, dim, &lengths))
}

/// Clear probability for one fixed endpoint pair instead of the average
/// over random pairs: exp(-intensity * v(l)) with l = |z1 - z2|. The same
/// window-embedding requirement as `clear_probability` applies.
pub fn pair_clear_probability(
    intensity: f64,
    obstacle_radius: f64,
    z1: &[f64],
    z2: &[f64],
) -> Result<f64> {
    if !(intensity >= 0.0) || !intensity.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "intensity must be finite and nonnegative, got {intensity}"
        )));
    }
    if !(obstacle_radius > 0.0 && obstacle_radius <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "obstacle radius must lie in (0, 0.5], got {obstacle_radius}"
        )));
    }
    let dim = z1.len();
    if dim == 0 || z2.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim.max(1),
            got: z2.len(),
        });
    }
    let l = crate::geom::dist(z1, z2);
    Ok((-intensity * swept_volume(dim, obstacle_radius, l)).exp())
}

fn sample_pair_lengths<R: Rng + ?Sized>(dim: usize, pairs: usize, rng: &mut R) -> Vec<f64> {
    let mut z1 = vec![0.0; dim];
    let mut z2 = vec![0.0; dim];
    (0..pairs)
        .map(|_| {
            for v in z1.iter_mut() {
                *v = rng.gen_range(-0.5..0.5);
            }
            for v in z2.iter_mut() {
                *v = rng.gen_range(-0.5..0.5);
            }
            crate::geom::dist(&z1, &z2)
        })
        .collect()
}

fn mean_clear(intensity: f64, obstacle_radius: f64, dim: usize, lengths: &[f64]) -> f64 {
    let sum: f64 = lengths
        .iter()
        .map(|&l| (-intensity * swept_volume(dim, obstacle_radius, l)).exp())
        .sum();
    sum / lengths.len() as f64
}

/// Finds the disc intensity whose clear probability matches
/// `spec.target_clear` within `spec.tolerance`, by bisection on
/// [0, LAMBDA_MAX].
///
/// The endpoint pairs are drawn once and reused for every bisection
/// evaluation, which makes the estimate exactly monotone in the intensity.
pub fn calibrate_intensity<R: Rng + ?Sized>(
    spec: &ClutterSpec,
    dim: usize,
    rng: &mut R,
) -> Result<f64> {
    if !(spec.target_clear > 0.0 && spec.target_clear <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target clear probability must lie in (0, 1], got {}",
            spec.target_clear
        )));
    }
    if !(spec.tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            spec.tolerance
        )));
    }
    if spec.mc_pairs == 0 {
        return Err(Error::InvalidParameter("mc_pairs must be positive".into()));
    }
    if !(spec.obstacle_radius > 0.0 && spec.obstacle_radius <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "obstacle radius must lie in (0, 0.5], got {}",
            spec.obstacle_radius
        )));
    }
    if spec.target_clear == 1.0 {
        return Ok(0.0);
    }

    let lengths = sample_pair_lengths(dim, spec.mc_pairs, rng);
    let estimate = |lambda: f64| mean_clear(lambda, spec.obstacle_radius, dim, &lengths);

    let at_max = estimate(LAMBDA_MAX);
    if at_max > spec.target_clear + spec.tolerance {
        return Err(Error::BracketFailure(format!(
            "clear probability at intensity {LAMBDA_MAX} is still {at_max:.6}, above target {}",
            spec.target_clear
        )));
    }
    if (at_max - spec.target_clear).abs() <= spec.tolerance {
        return Ok(LAMBDA_MAX);
    }

    let mut lo = 0.0f64;
    let mut hi = LAMBDA_MAX;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let value = estimate(mid);
        if (value - spec.target_clear).abs() <= spec.tolerance {
            return Ok(mid);
        }
        if value > spec.target_clear {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::BracketFailure(
        "bisection did not converge within 200 iterations".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn disc_env(center: [f64; 2], radius: f64) -> Environment {
        Environment::new(
            Aabb::centered_cube(2, 0.5),
            Aabb::centered_cube(2, 1.0),
            vec![Obstacle::Circle {
                center: center.to_vec(),
                radius,
            }],
        )
        .unwrap()
    }

    #[test]
    fn point_free_basics() {
        let env = Environment::empty(2);
        assert!(env.point_free(&[0.0, 0.0]).unwrap());
        // Free space is open: the box boundary is not free.
        assert!(!env.point_free(&[0.5, 0.0]).unwrap());
        assert!(!env.point_free(&[0.7, 0.0]).unwrap());
        assert!(env.point_free(&[0.0]).is_err());

        let env = disc_env([0.0, 0.0], 0.05);
        assert!(!env.point_free(&[0.05, 0.0]).unwrap());
        assert!(env.point_free(&[0.0501, 0.0]).unwrap());
    }

    #[test]
    fn segment_clear_near_disc() {
        let env = disc_env([0.0, 0.0], 0.05);
        assert!(env.segment_clear(&[-0.4, 0.051], &[0.4, 0.051]).unwrap());
        assert!(!env.segment_clear(&[-0.4, 0.049], &[0.4, 0.049]).unwrap());
        // Endpoint outside the free box.
        assert!(!env.segment_clear(&[-0.6, 0.3], &[0.4, 0.3]).unwrap());
    }

    #[test]
    fn degenerate_segment_equals_point_test() {
        let env = disc_env([0.1, -0.2], 0.07);
        let mut r = rng(11);
        for _ in 0..500 {
            let p = [r.gen_range(-0.6..0.6), r.gen_range(-0.6..0.6)];
            assert_eq!(
                env.segment_clear(&p, &p).unwrap(),
                env.point_free(&p).unwrap(),
                "mismatch at {p:?}"
            );
        }
    }

    #[test]
    fn clear_segment_has_free_interior() {
        let env = disc_env([0.0, 0.0], 0.11);
        let mut r = rng(12);
        let mut checked = 0;
        while checked < 200 {
            let p = [r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5)];
            let q = [r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5)];
            if !env.segment_clear(&p, &q).unwrap() {
                continue;
            }
            checked += 1;
            for i in 0..=100 {
                let t = i as f64 / 100.0;
                let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                assert!(env.point_free(&x).unwrap(), "interior point {x:?} not free");
            }
        }
    }

    #[test]
    fn sample_free_is_uniform_and_free() {
        let env = disc_env([0.2, 0.2], 0.1);
        let mut r = rng(13);
        let n = 100_000;
        let mut mean = [0.0f64; 2];
        for _ in 0..n {
            let x = env.sample_free(&mut r).unwrap();
            assert!(env.point_free(&x).unwrap());
            mean[0] += x[0];
            mean[1] += x[1];
        }
        mean[0] /= n as f64;
        mean[1] /= n as f64;
        // The disc at (0.2, 0.2) pushes the mean away from its quadrant.
        assert!(mean[0] < 0.0 && mean[1] < 0.0);

        // Empty environment: per-axis mean within 3 sigma of the center.
        let env = Environment::empty(2);
        let mut mean = [0.0f64; 2];
        for _ in 0..n {
            let x = env.sample_free(&mut r).unwrap();
            mean[0] += x[0];
            mean[1] += x[1];
        }
        let bound = 3.0 * (1.0 / 12.0f64).sqrt() / (n as f64).sqrt();
        assert!((mean[0] / n as f64).abs() < bound);
        assert!((mean[1] / n as f64).abs() < bound);
    }

    #[test]
    fn sample_free_exhausts_on_covered_env() {
        let env = disc_env([0.0, 0.0], 2.0);
        let mut r = rng(14);
        match env.sample_free(&mut r) {
            Err(Error::SamplingExhausted { budget }) => {
                assert_eq!(budget, DEFAULT_REJECTION_BUDGET)
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn forest_count_matches_poisson_mean() {
        let window = Aabb::centered_cube(2, 1.0);
        let mut r = rng(15);
        let draws = 10_000;
        let mut total = 0u64;
        for _ in 0..draws {
            let env = poisson_forest(10.0, 0.05, &window, &mut r).unwrap();
            for obs in &env.obstacles {
                match obs {
                    Obstacle::Circle { center, .. } => {
                        assert!(window.contains_closed(center))
                    }
                    _ => panic!("forest should contain circles only"),
                }
            }
            total += env.obstacles.len() as u64;
        }
        let mean = total as f64 / draws as f64;
        // Mean of Poisson(40) over 1e4 draws: 3 sigma = 3 * sqrt(40 / 1e4).
        let bound = 3.0 * (40.0f64 / draws as f64).sqrt();
        assert!(
            (mean - 40.0).abs() < bound,
            "empirical mean {mean} outside 40 +- {bound}"
        );
    }

    #[test]
    fn forest_zero_intensity_is_empty() {
        let window = Aabb::centered_cube(2, 1.0);
        let env = poisson_forest(0.0, 0.05, &window, &mut rng(16)).unwrap();
        assert!(env.obstacles.is_empty());
        assert_eq!(env.mu_free_estimate, 1.0);
        assert_eq!(env.mu_free_samples, 0);
    }

    #[test]
    fn forest_records_free_volume_estimate() {
        let window = Aabb::centered_cube(2, 1.0);
        let env = poisson_forest(50.0, 0.05, &window, &mut rng(17)).unwrap();
        assert_eq!(env.mu_free_samples, MU_FREE_SAMPLES);
        assert!(env.mu_free_estimate > 0.3 && env.mu_free_estimate < 0.95);
    }

    #[test]
    fn forest_is_deterministic_per_seed() {
        let window = Aabb::centered_cube(2, 1.0);
        let a = poisson_forest(20.0, 0.05, &window, &mut rng(18)).unwrap();
        let b = poisson_forest(20.0, 0.05, &window, &mut rng(18)).unwrap();
        assert_eq!(a, b);
        let c = poisson_forest(20.0, 0.05, &window, &mut rng(19)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn clear_probability_zero_intensity_is_one() {
        let p = clear_probability(0.0, 0.05, 2, 1000, &mut rng(20)).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn pair_clear_matches_frozen_value_and_bounds() {
        let p = pair_clear_probability(50.0, 0.05, &[-0.25, 0.0], &[0.25, 0.0]).unwrap();
        assert!((p - 0.055426410128652036).abs() < 1e-15);
        assert_eq!(
            pair_clear_probability(0.0, 0.05, &[0.1, 0.1], &[0.2, 0.3]).unwrap(),
            1.0
        );
        let near = pair_clear_probability(10.0, 0.05, &[0.0, 0.0], &[0.1, 0.0]).unwrap();
        let far = pair_clear_probability(10.0, 0.05, &[0.0, 0.0], &[0.4, 0.0]).unwrap();
        assert!(far < near && near < 1.0);
        assert!(pair_clear_probability(10.0, 0.05, &[0.0], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn clear_probability_monotone_in_intensity_and_radius() {
        let lambdas = [0.5, 2.0, 8.0, 32.0, 128.0];
        let mut prev = f64::INFINITY;
        for lambda in lambdas {
            let p = clear_probability(lambda, 0.05, 2, 20_000, &mut rng(21)).unwrap();
            assert!(p <= prev, "clear probability rose from {prev} to {p}");
            prev = p;
        }
        let radii = [0.01, 0.02, 0.05, 0.1, 0.2];
        let mut prev = f64::INFINITY;
        for radius in radii {
            let p = clear_probability(20.0, radius, 2, 20_000, &mut rng(21)).unwrap();
            assert!(p <= prev, "clear probability rose from {prev} to {p}");
            prev = p;
        }
    }

    /// Direct evaluation of the pair-conditional clear probability: sum the
    /// Poisson count distribution against the per-count miss probability,
    /// truncated at n = 500. Independent of the closed form under test.
    fn direct_sum_clear(intensity: f64, radius: f64, window_vol: f64, length: f64) -> f64 {
        let mean = intensity * window_vol;
        let q = ((window_vol - swept_volume(2, radius, length)) / window_vol).max(0.0);
        let mut term = (-mean).exp();
        let mut total = 0.0;
        for n in 0..=500u32 {
            if n > 0 {
                term *= mean / n as f64;
            }
            total += term * q.powi(n as i32);
        }
        total
    }

    #[test]
    fn closed_form_matches_direct_sum() {
        // Fixed endpoint pair; mean counts 4, 40, 100 stay well inside the
        // truncation horizon.
        let length = crate::geom::dist(&[-0.2, -0.1], &[0.3, 0.2]);
        for lambda in [1.0, 10.0, 25.0] {
            let closed = (-lambda * swept_volume(2, 0.05, length)).exp();
            let direct = direct_sum_clear(lambda, 0.05, 4.0, length);
            assert!(
                (closed - direct).abs() < 1e-6,
                "lambda {lambda}: closed {closed} vs direct {direct}"
            );
        }
    }

    #[test]
    fn analytic_estimate_matches_forest_sampling() {
        let lambda = 50.0;
        let radius = 0.05;
        let analytic = clear_probability(lambda, radius, 2, 100_000, &mut rng(22)).unwrap();

        // Brute force: draw whole forests and count clear random segments.
        let window = Aabb::centered_cube(2, 1.0);
        let mut r = rng(23);
        let envs = 400;
        let pairs_per_env = 50;
        let mut clear = 0u64;
        for _ in 0..envs {
            let mut env = poisson_forest(lambda, radius, &window, &mut r).unwrap();
            // The free-volume estimate is irrelevant here; skip recomputing.
            env.mu_free_samples = 0;
            for _ in 0..pairs_per_env {
                let p = [r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5)];
                let q = [r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5)];
                if env.segment_clear(&p, &q).unwrap() {
                    clear += 1;
                }
            }
        }
        let brute = clear as f64 / (envs * pairs_per_env) as f64;
        assert!(
            (analytic - brute).abs() < 0.01,
            "analytic {analytic} vs forest sampling {brute}"
        );
    }

    #[test]
    fn calibrate_full_clear_gives_zero() {
        let spec = ClutterSpec {
            target_clear: 1.0,
            ..ClutterSpec::default()
        };
        assert_eq!(calibrate_intensity(&spec, 2, &mut rng(24)).unwrap(), 0.0);
    }

    #[test]
    fn calibrate_round_trips_through_fresh_estimate() {
        for target in [0.05, 0.5] {
            let spec = ClutterSpec {
                target_clear: target,
                ..ClutterSpec::default()
            };
            let lambda = calibrate_intensity(&spec, 2, &mut rng(25)).unwrap();
            let achieved =
                clear_probability(lambda, spec.obstacle_radius, 2, 100_000, &mut rng(26)).unwrap();
            assert!(
                (achieved - target).abs() <= 2.0 * spec.tolerance,
                "target {target}: intensity {lambda} re-evaluates to {achieved}"
            );
        }
    }

    #[test]
    fn calibrate_reports_unreachable_targets() {
        let spec = ClutterSpec {
            target_clear: 1e-12,
            obstacle_radius: 1e-3,
            mc_pairs: 2_000,
            tolerance: 1e-13,
        };
        assert!(matches!(
            calibrate_intensity(&spec, 2, &mut rng(27)),
            Err(Error::BracketFailure(_))
        ));
    }

    #[test]
    fn env_json_round_trip_is_exact() {
        let mut env = disc_env([0.1234567890123, -0.2], 0.05678901234);
        env.obstacles.push(Obstacle::Rect {
            min: vec![-0.3, -0.3],
            max: vec![-0.1, 0.12345],
        });
        env.mu_free_estimate = 0.87654321;
        env.mu_free_samples = 100_000;
        env.seed = 42;

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("env.json");
        env.save(&path).unwrap();
        let loaded = Environment::load(&path).unwrap();
        assert_eq!(env, loaded);

        // Field order in the file is fixed by the struct declaration.
        let text = std::fs::read_to_string(&path).unwrap();
        let order = ["dim", "free_bounds", "sample_window", "obstacles", "mu_free_estimate", "mu_free_samples", "seed"];
        let mut last = 0;
        for key in order {
            let pos = text.find(&format!("\"{key}\"")).unwrap();
            assert!(pos > last, "field {key} out of order");
            last = pos;
        }
    }

    #[test]
    fn load_rejects_inconsistent_dims() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        let text = r#"{
            "dim": 3,
            "free_bounds": {"min": [-0.5, -0.5], "max": [0.5, 0.5]},
            "sample_window": {"min": [-1.0, -1.0], "max": [1.0, 1.0]},
            "obstacles": [],
            "mu_free_estimate": 1.0,
            "mu_free_samples": 0,
            "seed": 0
        }"#;
        std::fs::write(&path, text).unwrap();
        assert!(Environment::load(&path).is_err());
    }
}
