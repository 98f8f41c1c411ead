//! Rational Bézier curves and tensor-product patches stored in homogeneous
//! coordinates, with de Casteljau evaluation and exact subdivision.

use crate::geom::{Aabb2, Aabb3, ParamPoint, Point3, Rotation, Vec3};

fn lerp<const N: usize>(a: &[f64; N], b: &[f64; N], t: f64) -> [f64; N] {
    let mut o = [0.0; N];
    for c in 0..N {
        o[c] = (1.0 - t) * a[c] + t * b[c];
    }
    o
}

fn sub<const N: usize>(a: &[f64; N], b: &[f64; N]) -> [f64; N] {
    let mut o = [0.0; N];
    for c in 0..N {
        o[c] = a[c] - b[c];
    }
    o
}

/// Value and first derivative of a polynomial Bézier curve at `t`.
pub(crate) fn de_casteljau<const N: usize>(pts: &[[f64; N]], t: f64) -> ([f64; N], [f64; N]) {
    let n = pts.len() - 1;
    if n == 0 {
        return (pts[0], [0.0; N]);
    }
    let mut w: Vec<[f64; N]> = pts.to_vec();
    for r in 1..n {
        for i in 0..=n - r {
            w[i] = lerp(&w[i], &w[i + 1], t);
        }
    }
    let mut d = sub(&w[1], &w[0]);
    for x in d.iter_mut() {
        *x *= n as f64;
    }
    (lerp(&w[0], &w[1], t), d)
}

/// Blossom evaluation `P(t_1, ..., t_n)`.
fn blossom<const N: usize>(pts: &[[f64; N]], ts: &[f64]) -> [f64; N] {
    let n = pts.len() - 1;
    let mut w: Vec<[f64; N]> = pts.to_vec();
    for r in 1..=n {
        for i in 0..=n - r {
            w[i] = lerp(&w[i], &w[i + 1], ts[r - 1]);
        }
    }
    w[0]
}

/// Control polygon of the same polynomial restricted to `[a, b]` (any reals,
/// so this also extrapolates).
pub(crate) fn sub_range<const N: usize>(pts: &[[f64; N]], a: f64, b: f64) -> Vec<[f64; N]> {
    let n = pts.len() - 1;
    let mut ts = vec![0.0; n];
    (0..=n)
        .map(|k| {
            for (i, t) in ts.iter_mut().enumerate() {
                *t = if i < n - k { a } else { b };
            }
            blossom(pts, &ts)
        })
        .collect()
}

/// Splits at `t` into the polygons for `[0, t]` and `[t, 1]`.
pub(crate) fn split<const N: usize>(pts: &[[f64; N]], t: f64) -> (Vec<[f64; N]>, Vec<[f64; N]>) {
    let n = pts.len() - 1;
    let mut w = pts.to_vec();
    let mut left = Vec::with_capacity(n + 1);
    let mut right = Vec::with_capacity(n + 1);
    left.push(w[0]);
    right.push(w[n]);
    for r in 1..=n {
        for i in 0..=n - r {
            w[i] = lerp(&w[i], &w[i + 1], t);
        }
        left.push(w[0]);
        right.push(w[n - r]);
    }
    right.reverse();
    (left, right)
}

/// A rational planar Bézier curve in homogeneous form `(x w, y w, w)`
/// covering `range` of its parent curve's parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierCurve2 {
    pub cw: Vec<[f64; 3]>,
    pub range: (f64, f64),
}

impl BezierCurve2 {
    pub fn from_points(points: &[ParamPoint], weights: &[f64], range: (f64, f64)) -> Self {
        let cw = points
            .iter()
            .zip(weights)
            .map(|(p, &w)| [p.u * w, p.v * w, w])
            .collect();
        Self { cw, range }
    }

    pub fn degree(&self) -> usize {
        self.cw.len() - 1
    }

    /// Euclidean control point `i`.
    pub fn point(&self, i: usize) -> ParamPoint {
        let h = self.cw[i];
        ParamPoint::new(h[0] / h[2], h[1] / h[2])
    }

    pub fn points(&self) -> impl Iterator<Item = ParamPoint> + '_ {
        (0..self.cw.len()).map(|i| self.point(i))
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.cw[i][2]
    }

    pub fn start(&self) -> ParamPoint {
        self.point(0)
    }

    pub fn end(&self) -> ParamPoint {
        self.point(self.cw.len() - 1)
    }

    pub fn bbox(&self) -> Aabb2 {
        Aabb2::from_points(self.points())
    }

    /// Point and derivative with respect to the local parameter `s ∈ [0, 1]`.
    pub fn eval_local(&self, s: f64) -> (ParamPoint, ParamPoint) {
        let (h, dh) = de_casteljau(&self.cw, s);
        let p = ParamPoint::new(h[0] / h[2], h[1] / h[2]);
        let d = ParamPoint::new((dh[0] - p.u * dh[2]) / h[2], (dh[1] - p.v * dh[2]) / h[2]);
        (p, d)
    }

    /// Point and derivative with respect to the parent parameter.
    pub fn eval(&self, t: f64) -> (ParamPoint, ParamPoint) {
        let (a, b) = self.range;
        let (p, d) = self.eval_local((t - a) / (b - a));
        (p, d * (1.0 / (b - a)))
    }

    pub fn split(&self, s: f64) -> (BezierCurve2, BezierCurve2) {
        let (l, r) = split(&self.cw, s);
        let (a, b) = self.range;
        let m = a + s * (b - a);
        (
            BezierCurve2 {
                cw: l,
                range: (a, m),
            },
            BezierCurve2 {
                cw: r,
                range: (m, b),
            },
        )
    }

    pub fn bisect(&self) -> (BezierCurve2, BezierCurve2) {
        self.split(0.5)
    }

    /// Restriction to the parent-parameter interval `[t0, t1]`.
    pub fn restrict(&self, t0: f64, t1: f64) -> BezierCurve2 {
        let (a, b) = self.range;
        let s0 = (t0 - a) / (b - a);
        let s1 = (t1 - a) / (b - a);
        BezierCurve2 {
            cw: sub_range(&self.cw, s0, s1),
            range: (t0, t1),
        }
    }

    pub fn reversed(&self) -> BezierCurve2 {
        let mut cw = self.cw.clone();
        cw.reverse();
        let (a, b) = self.range;
        BezierCurve2 {
            cw,
            range: (-b, -a),
        }
    }
}

/// Point and first partials of a surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub point: Point3,
    pub du: Vec3,
    pub dv: Vec3,
}

impl SurfacePoint {
    /// Unnormalized normal `S_u × S_v`.
    pub fn normal(&self) -> Vec3 {
        self.du.cross(self.dv)
    }
}

/// A rational tensor-product Bézier patch in homogeneous form
/// `(x w, y w, z w, w)`, indexed `i * (deg_v + 1) + j` with `i` along u.
/// `range` is the rectangle of the parent parameter space it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierPatch {
    pub deg_u: usize,
    pub deg_v: usize,
    pub cw: Vec<[f64; 4]>,
    pub range: Aabb2,
}

impl BezierPatch {
    pub fn from_points(
        deg_u: usize,
        deg_v: usize,
        points: &[Point3],
        weights: &[f64],
        range: Aabb2,
    ) -> Self {
        let cw = points
            .iter()
            .zip(weights)
            .map(|(p, &w)| [p.x * w, p.y * w, p.z * w, w])
            .collect();
        Self {
            deg_u,
            deg_v,
            cw,
            range,
        }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.deg_v + 1) + j
    }

    pub fn point(&self, i: usize, j: usize) -> Point3 {
        let h = self.cw[self.idx(i, j)];
        Vec3::new(h[0] / h[3], h[1] / h[3], h[2] / h[3])
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.cw[self.idx(i, j)][3]
    }

    pub fn points(&self) -> impl Iterator<Item = Point3> + '_ {
        self.cw
            .iter()
            .map(|h| Vec3::new(h[0] / h[3], h[1] / h[3], h[2] / h[3]))
    }

    pub fn aabb(&self) -> Aabb3 {
        Aabb3::from_points(self.points())
    }

    fn column(&self, j: usize) -> Vec<[f64; 4]> {
        (0..=self.deg_u).map(|i| self.cw[self.idx(i, j)]).collect()
    }

    fn row(&self, i: usize) -> Vec<[f64; 4]> {
        (0..=self.deg_v).map(|j| self.cw[self.idx(i, j)]).collect()
    }

    fn patch_from_columns(&self, cols: Vec<Vec<[f64; 4]>>, range: Aabb2) -> BezierPatch {
        let mut cw = vec![[0.0; 4]; self.cw.len()];
        for (j, col) in cols.iter().enumerate() {
            for (i, h) in col.iter().enumerate() {
                cw[i * (self.deg_v + 1) + j] = *h;
            }
        }
        BezierPatch { cw, range, ..*self }
    }

    fn patch_from_rows(&self, rows: Vec<Vec<[f64; 4]>>, range: Aabb2) -> BezierPatch {
        let cw = rows.into_iter().flatten().collect();
        BezierPatch { cw, range, ..*self }
    }

    /// Surface point and partials with respect to local `(s, t) ∈ [0,1]²`.
    pub fn eval_local(&self, s: f64, t: f64) -> SurfacePoint {
        let mut a = Vec::with_capacity(self.deg_v + 1);
        let mut da = Vec::with_capacity(self.deg_v + 1);
        for j in 0..=self.deg_v {
            let (h, dh) = de_casteljau(&self.column(j), s);
            a.push(h);
            da.push(dh);
        }
        let (h, h_t) = de_casteljau(&a, t);
        let (h_s, _) = de_casteljau(&da, t);
        let w = h[3];
        let p = Vec3::new(h[0] / w, h[1] / w, h[2] / w);
        let ds = Vec3::new(
            (h_s[0] - p.x * h_s[3]) / w,
            (h_s[1] - p.y * h_s[3]) / w,
            (h_s[2] - p.z * h_s[3]) / w,
        );
        let dt = Vec3::new(
            (h_t[0] - p.x * h_t[3]) / w,
            (h_t[1] - p.y * h_t[3]) / w,
            (h_t[2] - p.z * h_t[3]) / w,
        );
        SurfacePoint {
            point: p,
            du: ds,
            dv: dt,
        }
    }

    pub fn to_local(&self, uv: ParamPoint) -> (f64, f64) {
        let r = &self.range;
        (
            (uv.u - r.min.u) / (r.max.u - r.min.u),
            (uv.v - r.min.v) / (r.max.v - r.min.v),
        )
    }

    pub fn to_parent(&self, s: f64, t: f64) -> ParamPoint {
        let r = &self.range;
        ParamPoint::new(
            r.min.u + s * (r.max.u - r.min.u),
            r.min.v + t * (r.max.v - r.min.v),
        )
    }

    /// Evaluation in parent parameter coordinates (polynomial extension
    /// outside `range`).
    pub fn eval(&self, uv: ParamPoint) -> SurfacePoint {
        let (s, t) = self.to_local(uv);
        let mut sp = self.eval_local(s, t);
        sp.du = sp.du / (self.range.max.u - self.range.min.u);
        sp.dv = sp.dv / (self.range.max.v - self.range.min.v);
        sp
    }

    /// Restriction to local `[s0, s1] × [t0, t1]` (may extrapolate).
    pub fn sub_patch(&self, s0: f64, s1: f64, t0: f64, t1: f64) -> BezierPatch {
        let range = Aabb2::new(self.to_parent(s0, t0), self.to_parent(s1, t1));
        let cols: Vec<_> = (0..=self.deg_v)
            .map(|j| sub_range(&self.column(j), s0, s1))
            .collect();
        let tmp = self.patch_from_columns(cols, range);
        let rows: Vec<_> = (0..=self.deg_u)
            .map(|i| sub_range(&tmp.row(i), t0, t1))
            .collect();
        tmp.patch_from_rows(rows, range)
    }

    /// Restriction to a parent-parameter rectangle.
    pub fn restrict(&self, rect: &Aabb2) -> BezierPatch {
        let (s0, t0) = self.to_local(rect.min);
        let (s1, t1) = self.to_local(rect.max);
        let mut p = self.sub_patch(s0, s1, t0, t1);
        p.range = *rect;
        p
    }

    /// Four quadrants (exact de Casteljau at the midpoints), ordered
    /// `(u-low, v-low), (u-high, v-low), (u-low, v-high), (u-high, v-high)`.
    pub fn split4(&self) -> [BezierPatch; 4] {
        let r = self.range;
        let mid = self.to_parent(0.5, 0.5);
        let mut lo_cols = Vec::with_capacity(self.deg_v + 1);
        let mut hi_cols = Vec::with_capacity(self.deg_v + 1);
        for j in 0..=self.deg_v {
            let (l, h) = split(&self.column(j), 0.5);
            lo_cols.push(l);
            hi_cols.push(h);
        }
        let u_lo =
            self.patch_from_columns(lo_cols, Aabb2::new(r.min, ParamPoint::new(mid.u, r.max.v)));
        let u_hi =
            self.patch_from_columns(hi_cols, Aabb2::new(ParamPoint::new(mid.u, r.min.v), r.max));
        let split_v = |p: &BezierPatch| -> (BezierPatch, BezierPatch) {
            let mut lo_rows = Vec::with_capacity(p.deg_u + 1);
            let mut hi_rows = Vec::with_capacity(p.deg_u + 1);
            for i in 0..=p.deg_u {
                let (l, h) = split(&p.row(i), 0.5);
                lo_rows.push(l);
                hi_rows.push(h);
            }
            let pr = p.range;
            (
                p.patch_from_rows(
                    lo_rows,
                    Aabb2::new(pr.min, ParamPoint::new(pr.max.u, mid.v)),
                ),
                p.patch_from_rows(
                    hi_rows,
                    Aabb2::new(ParamPoint::new(pr.min.u, mid.v), pr.max),
                ),
            )
        };
        let (a, c) = split_v(&u_lo);
        let (b, d) = split_v(&u_hi);
        [a, b, c, d]
    }

    /// Rigid motion `x ↦ R (x - origin)` applied to the control net.
    pub fn transformed(&self, rot: &Rotation, origin: Point3) -> BezierPatch {
        let cw = self
            .cw
            .iter()
            .map(|h| {
                let w = h[3];
                let p = rot.apply(Vec3::new(h[0] / w, h[1] / w, h[2] / w) - origin);
                [p.x * w, p.y * w, p.z * w, w]
            })
            .collect();
        BezierPatch { cw, ..self.clone() }
    }
}
