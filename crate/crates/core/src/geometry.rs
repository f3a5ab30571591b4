//! Planar geometry shared by the simulator and the metrics.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(length: f64, angle: f64) -> Self {
        Self::new(length * angle.cos(), length * angle.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Vec2::new(x, y)
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Normalizes an angle to (−π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    // rem_euclid can return exactly 2π for tiny negative inputs
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Signed shortest angular difference `to − from`, in (−π, π].
pub fn angle_diff(from: f64, to: f64) -> f64 {
    normalize_angle(to - from)
}

/// Intersection of segments `a0→a1` and `b0→b1`, as parameters `(s, t)` in
/// [0, 1] along each segment. Parallel segments never intersect.
pub fn segment_intersection(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> Option<(f64, f64)> {
    let da = a1 - a0;
    let db = b1 - b0;
    let denom = da.cross(db);
    if denom.abs() <= 1e-12 * da.norm() * db.norm() {
        return None;
    }
    let w = b0 - a0;
    let s = w.cross(db) / denom;
    let t = w.cross(da) / denom;
    let eps = 1e-12;
    ((-eps..=1.0 + eps).contains(&s) && (-eps..=1.0 + eps).contains(&t))
        .then(|| (s.clamp(0.0, 1.0), t.clamp(0.0, 1.0)))
}

/// A polyline with cumulative arc lengths. Zero-length segments are dropped
/// on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Vec2>,
    arc: Vec<f64>,
}

impl Polyline {
    pub fn new(points: impl IntoIterator<Item = Vec2>) -> Self {
        let mut pts: Vec<Vec2> = Vec::new();
        for p in points {
            if pts.last().map_or(true, |&q| q != p) {
                pts.push(p);
            }
        }
        let mut arc = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        for (i, p) in pts.iter().enumerate() {
            if i > 0 {
                acc += p.distance(pts[i - 1]);
            }
            arc.push(acc);
        }
        Self { points: pts, arc }
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.arc.last().copied().unwrap_or(0.0)
    }

    pub fn segment_count(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    /// Arc length at the start of segment `i`.
    pub fn arc_at_vertex(&self, i: usize) -> f64 {
        self.arc[i]
    }

    fn segment_index(&self, s: f64) -> usize {
        let n = self.segment_count();
        if n == 0 {
            return 0;
        }
        match self.arc.partition_point(|&a| a <= s) {
            0 => 0,
            k => (k - 1).min(n - 1),
        }
    }

    /// Position at arc length `s` (clamped to the polyline).
    pub fn point_at(&self, s: f64) -> Vec2 {
        if self.points.len() == 1 {
            return self.points[0];
        }
        let s = s.clamp(0.0, self.length());
        let i = self.segment_index(s);
        let seg = self.arc[i + 1] - self.arc[i];
        let f = ((s - self.arc[i]) / seg).clamp(0.0, 1.0);
        self.points[i] + (self.points[i + 1] - self.points[i]) * f
    }

    /// Unit tangent direction at arc length `s`.
    pub fn heading_at(&self, s: f64) -> f64 {
        if self.points.len() < 2 {
            return 0.0;
        }
        let i = self.segment_index(s.clamp(0.0, self.length()));
        (self.points[i + 1] - self.points[i]).angle()
    }

    /// First crossing with `other`, ordered by arc length along `self`.
    /// Returns `(point, arc_self, arc_other, segment_self, segment_other)`.
    pub fn first_crossing(&self, other: &Polyline) -> Option<Crossing> {
        for i in 0..self.segment_count() {
            let (a0, a1) = (self.points[i], self.points[i + 1]);
            let mut best: Option<Crossing> = None;
            for j in 0..other.segment_count() {
                let (b0, b1) = (other.points[j], other.points[j + 1]);
                if let Some((s, t)) = segment_intersection(a0, a1, b0, b1) {
                    let arc_self = self.arc[i] + s * (self.arc[i + 1] - self.arc[i]);
                    let arc_other = other.arc[j] + t * (other.arc[j + 1] - other.arc[j]);
                    let c = Crossing {
                        point: a0 + (a1 - a0) * s,
                        arc_self,
                        arc_other,
                        dir_self: (a1 - a0).normalized().unwrap_or_default(),
                        dir_other: (b1 - b0).normalized().unwrap_or_default(),
                    };
                    if best.as_ref().map_or(true, |b| c.arc_self < b.arc_self) {
                        best = Some(c);
                    }
                }
            }
            if best.is_some() {
                return best;
            }
        }
        None
    }

    /// Distance from `p` to the polyline point at arc length `s`.
    pub fn offset_at(&self, s: f64, p: Vec2) -> f64 {
        self.point_at(s).distance(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub point: Vec2,
    pub arc_self: f64,
    pub arc_other: f64,
    pub dir_self: Vec2,
    pub dir_other: Vec2,
}

/// Signed distance from `p` to a convex CCW polygon: positive outside,
/// negative inside (minus the depth to the nearest edge).
pub fn signed_distance_convex(polygon: &[Vec2], p: Vec2) -> f64 {
    let n = polygon.len();
    let mut inside = true;
    let mut min_edge_depth = f64::INFINITY;
    let mut min_dist = f64::INFINITY;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        let e = b - a;
        let len = e.norm();
        // outward normal for a CCW polygon
        let outward = Vec2::new(e.y, -e.x) * (1.0 / len);
        let signed = (p - a).dot(outward);
        if signed > 0.0 {
            inside = false;
        }
        min_edge_depth = min_edge_depth.min(-signed);
        let t = ((p - a).dot(e) / (len * len)).clamp(0.0, 1.0);
        min_dist = min_dist.min(p.distance(a + e * t));
    }
    if inside {
        -min_edge_depth
    } else {
        min_dist
    }
}

/// Shoelace area; positive for CCW vertex order.
pub fn polygon_area(polygon: &[Vec2]) -> f64 {
    let n = polygon.len();
    (0..n)
        .map(|i| polygon[i].cross(polygon[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

pub fn polygon_centroid(polygon: &[Vec2]) -> Vec2 {
    let n = polygon.len() as f64;
    polygon
        .iter()
        .fold(Vec2::default(), |acc, &p| acc + p)
        * (1.0 / n)
}
