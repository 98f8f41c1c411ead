use super::bezier::{BezierPatch, SurfacePoint};
use super::knots::{KnotVector, Segment};
use crate::error::{Error, Result};
use crate::geom::{Aabb2, Aabb3, ParamPoint, Point3, Rotation, Vec3};

/// A rational tensor-product B-spline surface.
///
/// Control points are stored row-major with the u index outermost:
/// `control[i * count_v + j]`.
#[derive(Debug, Clone)]
pub struct NurbsPatch {
    knots_u: KnotVector,
    knots_v: KnotVector,
    control: Vec<Point3>,
    weights: Vec<f64>,
    breaks_u: Vec<f64>,
    breaks_v: Vec<f64>,
    /// Bézier spans, indexed `su * spans_v + sv`.
    spans: Vec<BezierPatch>,
}

impl PartialEq for NurbsPatch {
    fn eq(&self, o: &Self) -> bool {
        self.knots_u == o.knots_u
            && self.knots_v == o.knots_v
            && self.control == o.control
            && self.weights == o.weights
    }
}

impl NurbsPatch {
    pub fn new(
        knots_u: KnotVector,
        knots_v: KnotVector,
        control: Vec<Point3>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let nu = knots_u.control_count();
        let nv = knots_v.control_count();
        if control.len() != nu * nv {
            return Err(Error::InvalidGeometry(format!(
                "surface has {} control points, knots require {nu}×{nv}",
                control.len()
            )));
        }
        if weights.len() != control.len() {
            return Err(Error::InvalidGeometry(
                "surface weight count differs from control point count".into(),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "non-positive surface weight {w}"
            )));
        }
        if control.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGeometry(
                "non-finite surface control point".into(),
            ));
        }
        Ok(Self::build(knots_u, knots_v, control, weights))
    }

    pub(crate) fn build(
        knots_u: KnotVector,
        knots_v: KnotVector,
        control: Vec<Point3>,
        weights: Vec<f64>,
    ) -> Self {
        let nu = knots_u.control_count();
        let nv = knots_v.control_count();
        let p = knots_u.degree();
        let q = knots_v.degree();
        let hom = |k: usize| {
            let c = control[k];
            let w = weights[k];
            [c.x * w, c.y * w, c.z * w, w]
        };
        // decompose along u for every column, then along v for every row
        let cols: Vec<Vec<Segment<4>>> = (0..nv)
            .map(|j| knots_u.decompose(&(0..nu).map(|i| hom(i * nv + j)).collect::<Vec<_>>()))
            .collect();
        let breaks_u = knots_u.breakpoints();
        let breaks_v = knots_v.breakpoints();
        let su_count = breaks_u.len() - 1;
        let sv_count = breaks_v.len() - 1;
        let mut spans = Vec::with_capacity(su_count * sv_count);
        for su in 0..su_count {
            // rows of this u-span: (p+1) rows, each a full v-polygon of length nv
            let rows: Vec<Vec<[f64; 4]>> = (0..=p)
                .map(|a| (0..nv).map(|j| cols[j][su].0[a]).collect())
                .collect();
            let row_segments: Vec<Vec<Segment<4>>> =
                rows.iter().map(|r| knots_v.decompose(r)).collect();
            for sv in 0..sv_count {
                let mut cw = Vec::with_capacity((p + 1) * (q + 1));
                for seg in &row_segments {
                    cw.extend_from_slice(&seg[sv].0);
                }
                spans.push(BezierPatch {
                    deg_u: p,
                    deg_v: q,
                    cw,
                    range: Aabb2::new(
                        ParamPoint::new(breaks_u[su], breaks_v[sv]),
                        ParamPoint::new(breaks_u[su + 1], breaks_v[sv + 1]),
                    ),
                });
            }
        }
        Self {
            knots_u,
            knots_v,
            control,
            weights,
            breaks_u,
            breaks_v,
            spans,
        }
    }

    /// Single Bézier patch on `[0, 1]²` from a `(deg_u+1) × (deg_v+1)` net.
    pub fn bezier(
        deg_u: usize,
        deg_v: usize,
        control: Vec<Point3>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            KnotVector::bezier(deg_u, 0.0, 1.0),
            KnotVector::bezier(deg_v, 0.0, 1.0),
            control,
            weights,
        )
    }

    /// Bilinear patch with corners `p00, p10, p01, p11`.
    pub fn bilinear(p00: Point3, p10: Point3, p01: Point3, p11: Point3) -> Self {
        Self::build(
            KnotVector::bezier(1, 0.0, 1.0),
            KnotVector::bezier(1, 0.0, 1.0),
            vec![p00, p01, p10, p11],
            vec![1.0; 4],
        )
    }

    pub fn degree_u(&self) -> usize {
        self.knots_u.degree()
    }

    pub fn degree_v(&self) -> usize {
        self.knots_v.degree()
    }

    pub fn knots_u(&self) -> &KnotVector {
        &self.knots_u
    }

    pub fn knots_v(&self) -> &KnotVector {
        &self.knots_v
    }

    pub fn count_u(&self) -> usize {
        self.knots_u.control_count()
    }

    pub fn count_v(&self) -> usize {
        self.knots_v.control_count()
    }

    pub fn control(&self) -> &[Point3] {
        &self.control
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn control_point(&self, i: usize, j: usize) -> Point3 {
        self.control[i * self.count_v() + j]
    }

    /// Nominal knot domain.
    pub fn domain(&self) -> Aabb2 {
        let (u0, u1) = self.knots_u.domain();
        let (v0, v1) = self.knots_v.domain();
        Aabb2::new(ParamPoint::new(u0, v0), ParamPoint::new(u1, v1))
    }

    pub fn span_counts(&self) -> (usize, usize) {
        (self.breaks_u.len() - 1, self.breaks_v.len() - 1)
    }

    /// The Bézier spans of the patch, indexed `su * spans_v + sv`.
    pub fn bezier_spans(&self) -> &[BezierPatch] {
        &self.spans
    }

    fn span_index(breaks: &[f64], x: f64) -> usize {
        let i = breaks[1..breaks.len() - 1].partition_point(|&b| b <= x);
        i.min(breaks.len() - 2)
    }

    /// Evaluates inside the domain enlarged by `margin` on all sides; outside
    /// the knot domain the end spans are continued polynomially.
    pub fn eval_extended(&self, uv: ParamPoint, margin: f64) -> Result<SurfacePoint> {
        let d = self.domain();
        let slack = margin + 1e-12 * d.diagonal();
        if !(uv.u >= d.min.u - slack && uv.u <= d.max.u + slack) {
            return Err(Error::Domain(uv.u, d.min.u - margin, d.max.u + margin));
        }
        if !(uv.v >= d.min.v - slack && uv.v <= d.max.v + slack) {
            return Err(Error::Domain(uv.v, d.min.v - margin, d.max.v + margin));
        }
        Ok(self.eval_unchecked(uv))
    }

    pub fn eval(&self, uv: ParamPoint) -> Result<SurfacePoint> {
        self.eval_extended(uv, 0.0)
    }

    pub(crate) fn eval_unchecked(&self, uv: ParamPoint) -> SurfacePoint {
        let su = Self::span_index(&self.breaks_u, uv.u);
        let sv = Self::span_index(&self.breaks_v, uv.v);
        self.spans[su * (self.breaks_v.len() - 1) + sv].eval(uv)
    }

    /// Bézier pieces covering `rect` (which may extend past the knot domain;
    /// border spans are extrapolated).
    pub fn bezier_pieces_over(&self, rect: &Aabb2) -> Vec<BezierPatch> {
        let nu = self.breaks_u.len() - 1;
        let nv = self.breaks_v.len() - 1;
        let mut out = Vec::new();
        for su in 0..nu {
            let lo_u = if su == 0 {
                f64::NEG_INFINITY
            } else {
                self.breaks_u[su]
            };
            let hi_u = if su == nu - 1 {
                f64::INFINITY
            } else {
                self.breaks_u[su + 1]
            };
            let a = rect.min.u.max(lo_u);
            let b = rect.max.u.min(hi_u);
            if !(b > a) {
                continue;
            }
            for sv in 0..nv {
                let lo_v = if sv == 0 {
                    f64::NEG_INFINITY
                } else {
                    self.breaks_v[sv]
                };
                let hi_v = if sv == nv - 1 {
                    f64::INFINITY
                } else {
                    self.breaks_v[sv + 1]
                };
                let c = rect.min.v.max(lo_v);
                let d = rect.max.v.min(hi_v);
                if !(d > c) {
                    continue;
                }
                let span = &self.spans[su * nv + sv];
                let sub = Aabb2::new(ParamPoint::new(a, c), ParamPoint::new(b, d));
                if sub == span.range {
                    out.push(span.clone());
                } else {
                    out.push(span.restrict(&sub));
                }
            }
        }
        out
    }

    /// Box around the control net (contains the surface when weights are
    /// positive).
    pub fn aabb(&self) -> Aabb3 {
        Aabb3::from_points(self.control.iter().copied())
    }

    /// Applies `x ↦ R (x - origin)` to every control point.
    pub fn transformed(&self, rot: &Rotation, origin: Point3) -> NurbsPatch {
        Self::build(
            self.knots_u.clone(),
            self.knots_v.clone(),
            self.control
                .iter()
                .map(|&p| rot.apply(p - origin))
                .collect(),
            self.weights.clone(),
        )
    }

    /// Same surface with u and v exchanged (flips the normal).
    pub fn swapped_uv(&self) -> NurbsPatch {
        let nu = self.count_u();
        let nv = self.count_v();
        let mut control = Vec::with_capacity(self.control.len());
        let mut weights = Vec::with_capacity(self.control.len());
        for j in 0..nv {
            for i in 0..nu {
                control.push(self.control[i * nv + j]);
                weights.push(self.weights[i * nv + j]);
            }
        }
        Self::build(self.knots_v.clone(), self.knots_u.clone(), control, weights)
    }

    /// Splits at an interior u value into two patches that together
    /// reproduce this one exactly.
    pub fn split_u(&self, u: f64) -> Result<(NurbsPatch, NurbsPatch)> {
        let d = self.domain();
        if !(u > d.min.u && u < d.max.u) {
            return Err(Error::Domain(u, d.min.u, d.max.u));
        }
        let p = self.degree_u();
        let nu = self.count_u();
        let nv = self.count_v();
        let existing = self.knots_u.values().iter().filter(|&&k| k == u).count();
        let mut cols: Vec<Vec<[f64; 4]>> = (0..nv)
            .map(|j| {
                (0..nu)
                    .map(|i| {
                        let c = self.control[i * nv + j];
                        let w = self.weights[i * nv + j];
                        [c.x * w, c.y * w, c.z * w, w]
                    })
                    .collect()
            })
            .collect();
        let mut knots = self.knots_u.clone();
        for _ in existing..p {
            for col in cols.iter_mut() {
                knots.clone().insert(col, u);
            }
            knots.insert_value(u);
        }
        // u now has multiplicity p; the curve passes through control s - 1
        let vals = knots.values();
        let s = vals
            .iter()
            .position(|&k| k == u)
            .expect("inserted knot present");
        let mut left_knots = vals[..s + p].to_vec();
        left_knots.push(u);
        let mut right_knots = vec![u];
        right_knots.extend_from_slice(&vals[s..]);
        let unpack = |range: std::ops::Range<usize>| {
            let mut control = Vec::new();
            let mut weights = Vec::new();
            for i in range {
                for col in &cols {
                    let h = col[i];
                    control.push(Vec3::new(h[0] / h[3], h[1] / h[3], h[2] / h[3]));
                    weights.push(h[3]);
                }
            }
            (control, weights)
        };
        let (lc, lw) = unpack(0..s);
        let (rc, rw) = unpack(s - 1..cols[0].len());
        Ok((
            Self::new(
                KnotVector::new(left_knots, p)?,
                self.knots_v.clone(),
                lc,
                lw,
            )?,
            Self::new(
                KnotVector::new(right_knots, p)?,
                self.knots_v.clone(),
                rc,
                rw,
            )?,
        ))
    }

    /// Splits at an interior v value.
    pub fn split_v(&self, v: f64) -> Result<(NurbsPatch, NurbsPatch)> {
        let (a, b) = self.swapped_uv().split_u(v)?;
        Ok((a.swapped_uv(), b.swapped_uv()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_bilinear_evaluation() {
        let s = NurbsPatch::bilinear(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        );
        let sp = s.eval(ParamPoint::new(0.3, 0.7)).unwrap();
        assert!((sp.point - Vec3::new(0.3, 0.7, 0.0)).norm() < 1e-15);
        assert!((sp.du - Vec3::X).norm() < 1e-15);
        assert!((sp.dv - Vec3::Y).norm() < 1e-15);
        assert!(s.eval(ParamPoint::new(1.5, 0.0)).is_err());
        let ext = s.eval_extended(ParamPoint::new(-0.1, 0.5), 0.2).unwrap();
        assert!((ext.point - Vec3::new(-0.1, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn split_reproduces_parent() {
        let knots = KnotVector::new(vec![0.0, 0.0, 0.0, 0.4, 1.0, 1.0, 1.0], 2).unwrap();
        let mut control = Vec::new();
        let mut weights = Vec::new();
        for i in 0..4 {
            for j in 0..3 {
                control.push(Vec3::new(
                    i as f64,
                    j as f64,
                    ((i * 7 + j * 3) % 5) as f64 * 0.3,
                ));
                weights.push(1.0 + ((i + 2 * j) % 3) as f64 * 0.25);
            }
        }
        let s = NurbsPatch::new(knots, KnotVector::bezier(2, 0.0, 1.0), control, weights).unwrap();
        for cut in [0.4, 0.7] {
            let (l, r) = s.split_u(cut).unwrap();
            for k in 0..20 {
                let v = k as f64 / 19.0;
                for u in [0.05, 0.3, cut, 0.8, 0.95] {
                    let part = if u <= cut { &l } else { &r };
                    let a = s.eval(ParamPoint::new(u, v)).unwrap().point;
                    let b = part.eval(ParamPoint::new(u, v)).unwrap().point;
                    assert!((a - b).norm() < 1e-12, "u={u} v={v}");
                }
            }
        }
        let (l, _) = s.split_v(0.5).unwrap();
        let a = s.eval(ParamPoint::new(0.3, 0.2)).unwrap().point;
        let b = l.eval(ParamPoint::new(0.3, 0.2)).unwrap().point;
        assert!((a - b).norm() < 1e-12);
    }
}
