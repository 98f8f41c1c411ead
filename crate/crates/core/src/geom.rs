//! Small fixed-size vector types, boxes and rigid frames.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

/// A point or vector in model space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Model-space points share the vector representation.
pub type Point3 = Vec3;

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    /// Any unit vector orthogonal to `self` (which must be non-zero).
    pub fn any_orthogonal(self) -> Vec3 {
        let a = if self.x.abs() <= self.y.abs() && self.x.abs() <= self.z.abs() {
            Vec3::X
        } else if self.y.abs() <= self.z.abs() {
            Vec3::Y
        } else {
            Vec3::Z
        };
        self.cross(a).normalized().unwrap_or(Vec3::X)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// A point in the parameter space of a surface.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamPoint {
    pub u: f64,
    pub v: f64,
}

impl ParamPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn dot(self, o: ParamPoint) -> f64 {
        self.u * o.u + self.v * o.v
    }

    /// z-component of the planar cross product.
    pub fn cross(self, o: ParamPoint) -> f64 {
        self.u * o.v - self.v * o.u
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: ParamPoint) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

impl Add for ParamPoint {
    type Output = ParamPoint;
    fn add(self, o: ParamPoint) -> ParamPoint {
        ParamPoint::new(self.u + o.u, self.v + o.v)
    }
}

impl Sub for ParamPoint {
    type Output = ParamPoint;
    fn sub(self, o: ParamPoint) -> ParamPoint {
        ParamPoint::new(self.u - o.u, self.v - o.v)
    }
}

impl Mul<f64> for ParamPoint {
    type Output = ParamPoint;
    fn mul(self, s: f64) -> ParamPoint {
        ParamPoint::new(self.u * s, self.v * s)
    }
}

/// Axis-aligned box in model space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb3 {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb3 {
    pub fn empty() -> Self {
        Self {
            min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<I: IntoIterator<Item = Point3>>(pts: I) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.include(p);
        }
        b
    }

    pub fn include(&mut self, p: Point3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn merge(&mut self, o: &Aabb3) {
        self.min = self.min.min(o.min);
        self.max = self.max.max(o.max);
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn contains(&self, p: Point3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn diagonal(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            (self.max - self.min).norm()
        }
    }

    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn volume(&self) -> f64 {
        let d = self.max - self.min;
        d.x * d.y * d.z
    }

    pub fn expanded(&self, margin: f64) -> Aabb3 {
        let m = Vec3::new(margin, margin, margin);
        Aabb3 {
            min: self.min - m,
            max: self.max + m,
        }
    }
}

/// Axis-aligned box in parameter space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb2 {
    pub min: ParamPoint,
    pub max: ParamPoint,
}

impl Aabb2 {
    pub fn empty() -> Self {
        Self {
            min: ParamPoint::new(f64::INFINITY, f64::INFINITY),
            max: ParamPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn new(min: ParamPoint, max: ParamPoint) -> Self {
        Self { min, max }
    }

    pub fn from_points<I: IntoIterator<Item = ParamPoint>>(pts: I) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.include(p);
        }
        b
    }

    pub fn include(&mut self, p: ParamPoint) {
        self.min.u = self.min.u.min(p.u);
        self.min.v = self.min.v.min(p.v);
        self.max.u = self.max.u.max(p.u);
        self.max.v = self.max.v.max(p.v);
    }

    pub fn merge(&mut self, o: &Aabb2) {
        self.include(o.min);
        self.include(o.max);
    }

    pub fn is_empty(&self) -> bool {
        self.min.u > self.max.u || self.min.v > self.max.v
    }

    /// Closed containment.
    pub fn contains(&self, p: ParamPoint) -> bool {
        p.u >= self.min.u && p.u <= self.max.u && p.v >= self.min.v && p.v <= self.max.v
    }

    pub fn diagonal(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            (self.max - self.min).norm()
        }
    }

    pub fn expanded(&self, m: f64) -> Aabb2 {
        Aabb2 {
            min: ParamPoint::new(self.min.u - m, self.min.v - m),
            max: ParamPoint::new(self.max.u + m, self.max.v + m),
        }
    }

    pub fn intersection(&self, o: &Aabb2) -> Aabb2 {
        Aabb2 {
            min: ParamPoint::new(self.min.u.max(o.min.u), self.min.v.max(o.min.v)),
            max: ParamPoint::new(self.max.u.min(o.max.u), self.max.v.min(o.max.v)),
        }
    }

    /// Euclidean distance from `p` to the box (zero inside).
    pub fn distance_to(&self, p: ParamPoint) -> f64 {
        let du = (self.min.u - p.u).max(0.0).max(p.u - self.max.u);
        let dv = (self.min.v - p.v).max(0.0).max(p.v - self.max.v);
        du.hypot(dv)
    }

    /// Largest distance from `p` to any point of the box.
    pub fn max_distance_to(&self, p: ParamPoint) -> f64 {
        let du = (p.u - self.min.u).abs().max((p.u - self.max.u).abs());
        let dv = (p.v - self.min.v).abs().max((p.v - self.max.v).abs());
        du.hypot(dv)
    }
}

/// A proper rotation stored as three orthonormal rows.
///
/// Applying the rotation to `v` gives `(row0·v, row1·v, row2·v)`; row 2 is the
/// direction that is carried onto +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub rows: [Vec3; 3],
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        rows: [Vec3::X, Vec3::Y, Vec3::Z],
    };

    /// Rotation that carries unit vector `dir` onto +z.
    pub fn to_z(dir: Vec3) -> Rotation {
        let d = dir.normalized().unwrap_or(Vec3::Z);
        if (d - Vec3::Z).norm() < 1e-15 {
            return Rotation::IDENTITY;
        }
        if (d + Vec3::Z).norm() < 1e-15 {
            // half-turn about x
            return Rotation {
                rows: [Vec3::X, -Vec3::Y, -Vec3::Z],
            };
        }
        // Rodrigues rotation about axis d × z taking d to z, written row-wise.
        let axis = d.cross(Vec3::Z);
        let s = axis.norm();
        let c = d.z;
        let k = axis / s;
        let m = |i: usize, j: usize| -> f64 {
            let kk = [k.x, k.y, k.z];
            let delta = if i == j { 1.0 } else { 0.0 };
            let cross = match (i, j) {
                (0, 1) => -kk[2],
                (0, 2) => kk[1],
                (1, 0) => kk[2],
                (1, 2) => -kk[0],
                (2, 0) => -kk[1],
                (2, 1) => kk[0],
                _ => 0.0,
            };
            c * delta + s * cross + (1.0 - c) * kk[i] * kk[j]
        };
        Rotation {
            rows: [
                Vec3::new(m(0, 0), m(0, 1), m(0, 2)),
                Vec3::new(m(1, 0), m(1, 1), m(1, 2)),
                Vec3::new(m(2, 0), m(2, 1), m(2, 2)),
            ],
        }
    }

    /// Builds a rotation from an orthonormal right-handed frame whose third
    /// vector is carried onto +z.
    pub fn from_frame(e0: Vec3, e1: Vec3, e2: Vec3) -> Rotation {
        Rotation { rows: [e0, e1, e2] }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.rows[0].dot(v),
            self.rows[1].dot(v),
            self.rows[2].dot(v),
        )
    }

    pub fn transpose(&self) -> Rotation {
        let r = &self.rows;
        Rotation {
            rows: [
                Vec3::new(r[0].x, r[1].x, r[2].x),
                Vec3::new(r[0].y, r[1].y, r[2].y),
                Vec3::new(r[0].z, r[1].z, r[2].z),
            ],
        }
    }

    pub fn compose(&self, inner: &Rotation) -> Rotation {
        // (self ∘ inner)(v) = self(inner(v))
        let t = inner.transpose();
        Rotation {
            rows: [
                Vec3::new(
                    self.rows[0].dot(t.rows[0]),
                    self.rows[0].dot(t.rows[1]),
                    self.rows[0].dot(t.rows[2]),
                ),
                Vec3::new(
                    self.rows[1].dot(t.rows[0]),
                    self.rows[1].dot(t.rows[1]),
                    self.rows[1].dot(t.rows[2]),
                ),
                Vec3::new(
                    self.rows[2].dot(t.rows[0]),
                    self.rows[2].dot(t.rows[1]),
                    self.rows[2].dot(t.rows[2]),
                ),
            ],
        }
    }
}

/// An oriented line with unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line3 {
    pub origin: Point3,
    pub direction: Vec3,
}

impl Line3 {
    /// Normalizes `direction`; returns `None` for a zero direction.
    pub fn new(origin: Point3, direction: Vec3) -> Option<Self> {
        direction
            .normalized()
            .map(|direction| Self { origin, direction })
    }

    pub fn at(&self, t: f64) -> Point3 {
        self.origin + self.direction * t
    }
}

/// Oriented box: `center + Σ axes[i] * s_i` with `|s_i| <= half_extents[i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb3 {
    pub center: Point3,
    pub axes: [Vec3; 3],
    pub half_extents: [f64; 3],
}

impl Obb3 {
    pub fn local(&self, p: Point3) -> [f64; 3] {
        let d = p - self.center;
        [
            self.axes[0].dot(d),
            self.axes[1].dot(d),
            self.axes[2].dot(d),
        ]
    }

    pub fn contains(&self, p: Point3) -> bool {
        let l = self.local(p);
        (0..3).all(|i| l[i].abs() <= self.half_extents[i])
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.iter().product::<f64>()
    }

    /// Fits a box around `pts` using the principal directions of their
    /// covariance.
    pub fn from_points(pts: &[Point3]) -> Obb3 {
        if pts.is_empty() {
            return Obb3 {
                center: Vec3::ZERO,
                axes: [Vec3::X, Vec3::Y, Vec3::Z],
                half_extents: [0.0; 3],
            };
        }
        let n = pts.len() as f64;
        let mean = pts.iter().fold(Vec3::ZERO, |a, &p| a + p) / n;
        let mut cov = [[0.0; 3]; 3];
        for p in pts {
            let d = (*p - mean).to_array();
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += d[i] * d[j] / n;
                }
            }
        }
        let vecs = symmetric_eigenvectors(cov);
        let mut axes = [
            Vec3::from_array(vecs[0]),
            Vec3::from_array(vecs[1]),
            Vec3::ZERO,
        ];
        // re-orthonormalize and force a right-handed frame
        axes[0] = axes[0].normalized().unwrap_or(Vec3::X);
        let a1 = axes[1] - axes[0] * axes[0].dot(axes[1]);
        axes[1] = a1.normalized().unwrap_or_else(|| axes[0].any_orthogonal());
        axes[2] = axes[0].cross(axes[1]);
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in pts {
            for i in 0..3 {
                let s = axes[i].dot(*p - mean);
                lo[i] = lo[i].min(s);
                hi[i] = hi[i].max(s);
            }
        }
        let mut center = mean;
        let mut half_extents = [0.0; 3];
        for i in 0..3 {
            center += axes[i] * (0.5 * (lo[i] + hi[i]));
            half_extents[i] = 0.5 * (hi[i] - lo[i]);
        }
        Obb3 {
            center,
            axes,
            half_extents,
        }
    }
}

/// Eigenvectors of a symmetric 3×3 matrix by cyclic Jacobi sweeps, sorted by
/// decreasing eigenvalue.
fn symmetric_eigenvectors(mut a: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..50 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        let scale = a[0][0].abs() + a[1][1].abs() + a[2][2].abs();
        if off <= 1e-300 || off <= 1e-15 * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vkp = row[p];
                let vkq = row[q];
                row[p] = c * vkp - s * vkq;
                row[q] = s * vkp + c * vkq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let col = |j: usize| [v[0][j], v[1][j], v[2][j]];
    [col(order[0]), col(order[1]), col(order[2])]
}
