//! Exact geometric primitives: axis-aligned boxes, circular and rectangular
//! obstacles, and segment collision tests in arbitrary dimension.
//!
//! Obstacles are closed sets. Free space is open, so any contact with an
//! obstacle boundary or with the boundary of the free box counts as a
//! collision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box given by its componentwise min and max corners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Aabb {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::DimensionMismatch {
                expected: min.len(),
                got: max.len(),
            });
        }
        if min.is_empty() {
            return Err(Error::InvalidParameter("box dimension must be >= 1".into()));
        }
        if min.iter().zip(&max).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "degenerate box: min {min:?} must be strictly below max {max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    /// Cube [-half, half]^dim.
    pub fn centered_cube(dim: usize, half: f64) -> Self {
        Self {
            min: vec![-half; dim],
            max: vec![half; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn volume(&self) -> f64 {
        self.min
            .iter()
            .zip(&self.max)
            .map(|(a, b)| b - a)
            .product()
    }

    /// Membership in the open interior.
    pub fn contains_strict(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(v, (a, b))| a < v && v < b)
    }

    /// Membership in the closed box.
    pub fn contains_closed(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(v, (a, b))| a <= v && v <= b)
    }

    /// True iff `other` is contained in `self` (closed containment).
    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.min
            .iter()
            .zip(&other.min)
            .all(|(a, b)| a <= b)
            && self.max.iter().zip(&other.max).all(|(a, b)| b <= a)
    }
}

/// A single closed obstacle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Obstacle {
    Circle { center: Vec<f64>, radius: f64 },
    Rect { min: Vec<f64>, max: Vec<f64> },
}

impl Obstacle {
    pub fn dim(&self) -> usize {
        match self {
            Obstacle::Circle { center, .. } => center.len(),
            Obstacle::Rect { min, .. } => min.len(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Obstacle::Circle { center, radius } => {
                if center.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: center.len(),
                    });
                }
                if !(radius > &0.0) || !radius.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "circle radius must be positive and finite, got {radius}"
                    )));
                }
            }
            Obstacle::Rect { min, max } => {
                Aabb::new(min.clone(), max.clone())?;
                if min.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: min.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Closed membership: boundary points collide.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Obstacle::Circle { center, radius } => dist_sq(center, x) <= radius * radius,
            Obstacle::Rect { min, max } => x
                .iter()
                .zip(min.iter().zip(max))
                .all(|(v, (a, b))| a <= v && v <= b),
        }
    }

    /// True iff the closed segment [p, q] meets this closed obstacle,
    /// touching included.
    pub fn intersects_segment(&self, p: &[f64], q: &[f64]) -> bool {
        match self {
            Obstacle::Circle { center, radius } => {
                point_segment_dist_sq(center, p, q) <= radius * radius
            }
            Obstacle::Rect { min, max } => segment_intersects_box(p, q, min, max),
        }
    }
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// Squared distance from point `c` to the closed segment [p, q].
/// Handles the degenerate segment p == q.
pub fn point_segment_dist_sq(c: &[f64], p: &[f64], q: &[f64]) -> f64 {
    let seg_sq = dist_sq(p, q);
    if seg_sq == 0.0 {
        return dist_sq(c, p);
    }
    // Projection parameter of c onto the segment, clamped to [0, 1].
    let t: f64 = c
        .iter()
        .zip(p.iter().zip(q))
        .map(|(cv, (pv, qv))| (cv - pv) * (qv - pv))
        .sum::<f64>()
        / seg_sq;
    let t = t.clamp(0.0, 1.0);
    c.iter()
        .zip(p.iter().zip(q))
        .map(|(cv, (pv, qv))| {
            let proj = pv + t * (qv - pv);
            (cv - proj) * (cv - proj)
        })
        .sum()
}

/// Slab test for the closed segment [p, q] against the closed box
/// [min, max]. Touching counts as intersection.
fn segment_intersects_box(p: &[f64], q: &[f64], min: &[f64], max: &[f64]) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for i in 0..min.len() {
        let d = q[i] - p[i];
        if d == 0.0 {
            if p[i] < min[i] || p[i] > max[i] {
                return false;
            }
        } else {
            let mut ta = (min[i] - p[i]) / d;
            let mut tb = (max[i] - p[i]) / d;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Volume of the unit ball in `dim` dimensions, via the recurrence
/// V_d = (2 pi / d) V_{d-2} with V_0 = 1, V_1 = 2.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / dim as f64 * unit_ball_volume(dim - 2),
    }
}
