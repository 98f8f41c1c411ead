use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::curve::{LoopOrientation, RationalCurve2};
use super::surface::NurbsPatch;
use crate::error::Result;
use crate::gauss::GaussRule;
use crate::geom::{Aabb2, Aabb3, Line3, Obb3, ParamPoint, Point3, Rotation, Vec3};

/// A NURBS surface together with the trimming curves bounding its visible
/// region.
///
/// Loops are stored so that counterclockwise traversal bounds the visible
/// region and the outward normal is `S_u × S_v`. Curves need not form closed
/// or connected loops.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimmedPatch {
    pub id: String,
    surface: NurbsPatch,
    loops: Vec<Vec<RationalCurve2>>,
    orientation: LoopOrientation,
    extension_radius: f64,
}

impl TrimmedPatch {
    /// Patch whose loops are counterclockwise around the visible region.
    pub fn new(surface: NurbsPatch, loops: Vec<Vec<RationalCurve2>>) -> Self {
        Self {
            id: String::new(),
            surface,
            loops,
            orientation: LoopOrientation::CounterClockwise,
            extension_radius: 0.0,
        }
    }

    /// Patch whose loops follow `orientation`; clockwise input is reversed
    /// so the stored loops are always counterclockwise. The flag is kept for
    /// serialization.
    pub fn with_orientation(
        surface: NurbsPatch,
        loops: Vec<Vec<RationalCurve2>>,
        orientation: LoopOrientation,
    ) -> Self {
        let loops = match orientation {
            LoopOrientation::CounterClockwise => loops,
            LoopOrientation::Clockwise => loops.iter().map(|l| reverse_loop(l)).collect(),
        };
        Self {
            orientation,
            ..Self::new(surface, loops)
        }
    }

    /// Whole knot domain visible: one loop of the four domain edges.
    pub fn untrimmed(surface: NurbsPatch) -> Self {
        let d = surface.domain();
        let c = [
            d.min,
            ParamPoint::new(d.max.u, d.min.v),
            d.max,
            ParamPoint::new(d.min.u, d.max.v),
        ];
        let edges = (0..4)
            .map(|k| RationalCurve2::line(c[k], c[(k + 1) % 4]))
            .collect();
        Self::new(surface, vec![edges])
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn surface(&self) -> &NurbsPatch {
        &self.surface
    }

    /// Loops in counterclockwise-visible form.
    pub fn loops(&self) -> &[Vec<RationalCurve2>] {
        &self.loops
    }

    /// Loops as declared at construction.
    pub fn declared_loops(&self) -> Vec<Vec<RationalCurve2>> {
        match self.orientation {
            LoopOrientation::CounterClockwise => self.loops.clone(),
            LoopOrientation::Clockwise => self.loops.iter().map(|l| reverse_loop(l)).collect(),
        }
    }

    pub fn orientation(&self) -> LoopOrientation {
        self.orientation
    }

    /// All trimming curves in a stable order.
    pub fn curves(&self) -> impl Iterator<Item = &RationalCurve2> + '_ {
        self.loops.iter().flatten()
    }

    pub fn curve_count(&self) -> usize {
        self.loops.iter().map(Vec::len).sum()
    }

    pub fn extension_radius(&self) -> f64 {
        self.extension_radius
    }

    /// Same patch with the evaluable domain enlarged by `r` on every side.
    pub fn extend(&self, r: f64) -> Self {
        Self {
            extension_radius: r.max(0.0),
            ..self.clone()
        }
    }

    /// Evaluation honoring the extension radius.
    pub fn eval(&self, uv: ParamPoint) -> Result<super::bezier::SurfacePoint> {
        self.surface.eval_extended(uv, self.extension_radius)
    }

    /// Point and boundary tangent `S_u u' + S_v v'` of a curve at `t`.
    pub fn trace_boundary(&self, curve: &RationalCurve2, t: f64) -> Result<(Point3, Vec3)> {
        let (uv, d) = curve.eval(t)?;
        let sp = self.eval(uv)?;
        Ok((sp.point, sp.du * d.u + sp.dv * d.v))
    }

    /// Parameter box of the trimming curves' control points (empty when
    /// there are no curves).
    pub fn trim_bbox(&self) -> Aabb2 {
        let mut b = Aabb2::empty();
        for c in self.curves() {
            b.merge(&c.bbox());
        }
        b
    }

    /// Parameter box to which intersection search is restricted: the trim
    /// box clipped to the domain. Falls back to the domain when there are
    /// no curves.
    pub fn active_rect(&self) -> Aabb2 {
        let t = self.trim_bbox();
        if t.is_empty() {
            return self.surface.domain();
        }
        let i = t.intersection(&self.surface.domain().expanded(self.extension_radius));
        if i.is_empty() {
            t
        } else {
            i
        }
    }

    pub fn aabb(&self) -> Aabb3 {
        self.surface.aabb()
    }

    pub fn obb(&self) -> Obb3 {
        Obb3::from_points(self.surface.control())
    }

    /// Rigid copy mapping `line.origin` to the origin and `line.direction`
    /// to +z. Trimming curves are unchanged.
    pub fn rotate_to_z(&self, line: &Line3) -> Self {
        let rot = Rotation::to_z(line.direction);
        Self {
            surface: self.surface.transformed(&rot, line.origin),
            ..self.clone()
        }
    }

    /// Copy with the control points mapped through `x ↦ R (x - origin)`.
    pub fn transformed(&self, rot: &Rotation, origin: Point3) -> Self {
        Self {
            surface: self.surface.transformed(rot, origin),
            ..self.clone()
        }
    }

    /// Same geometry and trimming with new loops.
    pub fn with_loops(&self, loops: Vec<Vec<RationalCurve2>>) -> Self {
        Self {
            loops,
            orientation: LoopOrientation::CounterClockwise,
            ..self.clone()
        }
    }

    /// Splits the surface at a knot value `at` (in u, or v when `along_v`)
    /// and distributes the trimming region between the halves.
    pub fn split(&self, at: f64, along_v: bool) -> Result<(TrimmedPatch, TrimmedPatch)> {
        let (lo, hi) = if along_v {
            self.surface.split_v(at)?
        } else {
            self.surface.split_u(at)?
        };
        let set = crate::winding2d::TrimLoopSet::new(self.curves().cloned().collect());
        let tol = crate::winding2d::default_edge_tolerance(&self.surface.domain());
        let (below, above) = crate::winding2d::clip_loops_to_half_plane(&set, at, along_v, tol)?;
        let make = |surface: NurbsPatch, curves: Vec<RationalCurve2>, tag: &str| TrimmedPatch {
            id: if self.id.is_empty() {
                String::new()
            } else {
                format!("{}{tag}", self.id)
            },
            surface,
            loops: vec![curves],
            orientation: LoopOrientation::CounterClockwise,
            extension_radius: self.extension_radius,
        };
        Ok((make(lo, below.curves, ".a"), make(hi, above.curves, ".b")))
    }

    /// Normalized average of `S_u × S_v` over the knot domain using a
    /// `(p+1) × (q+1)` Gauss rule per span. When the average is tiny
    /// compared with the mean magnitude, a random unit vector drawn from
    /// `seed` is returned together with `true`.
    pub fn mean_normal(&self, seed: u64) -> (Vec3, bool) {
        let s = &self.surface;
        let gu = GaussRule::cached(s.degree_u() + 1);
        let gv = GaussRule::cached(s.degree_v() + 1);
        let mut sum = Vec3::ZERO;
        let mut mag = 0.0;
        for span in s.bezier_spans() {
            let area =
                (span.range.max.u - span.range.min.u) * (span.range.max.v - span.range.min.v);
            for (a, wa) in gu.nodes.iter().zip(&gu.weights) {
                for (b, wb) in gv.nodes.iter().zip(&gv.weights) {
                    let n = span.eval(span.to_parent(*a, *b)).normal();
                    let w = wa * wb * area;
                    sum += n * w;
                    mag += n.norm() * w;
                }
            }
        }
        match sum.normalized() {
            Some(d) if sum.norm() >= 1e-6 * mag => (d, false),
            _ => (random_unit(seed), true),
        }
    }
}

/// Uniformly distributed unit vector from a seeded generator.
pub fn random_unit(seed: u64) -> Vec3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_unit_with(&mut rng)
}

pub(crate) fn random_unit_with<R: Rng>(rng: &mut R) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

fn reverse_loop(l: &[RationalCurve2]) -> Vec<RationalCurve2> {
    l.iter().rev().map(RationalCurve2::reversed).collect()
}

/// An ordered collection of trimmed patches; its winding number is the sum
/// over patches.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Model {
    pub units: String,
    pub patches: Vec<TrimmedPatch>,
}

impl Model {
    pub fn new(patches: Vec<TrimmedPatch>) -> Self {
        Self {
            units: "unitless".into(),
            patches,
        }
    }

    pub fn aabb(&self) -> Aabb3 {
        let mut b = Aabb3::empty();
        for p in &self.patches {
            b.merge(&p.aabb());
        }
        b
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> TrimmedPatch {
        TrimmedPatch::untrimmed(NurbsPatch::bilinear(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ))
    }

    #[test]
    fn flat_mean_normal_is_z() {
        let (n, degenerate) = unit_square().mean_normal(1);
        assert!(!degenerate);
        assert!((n - Vec3::Z).norm() < 1e-12);
    }

    #[test]
    fn rotate_to_z_identity_and_axis_permutation() {
        let p = unit_square();
        let id = p.rotate_to_z(&Line3::new(Vec3::ZERO, Vec3::Z).unwrap());
        assert_eq!(id.surface().control(), p.surface().control());
        let along_x = p.rotate_to_z(&Line3::new(Vec3::ZERO, Vec3::X).unwrap());
        // the +x corner lands on +z
        assert!((along_x.surface().control_point(1, 0) - Vec3::Z).norm() < 1e-12);
    }

    #[test]
    fn boundary_trace_follows_edge() {
        let p = unit_square();
        let edge = &p.loops()[0][0];
        let (pos, tan) = p.trace_boundary(edge, 0.5).unwrap();
        assert!((pos - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
        assert!((tan.normalized().unwrap() - Vec3::X).norm() < 1e-15);
    }

    #[test]
    fn split_keeps_visible_area() {
        let p = unit_square();
        let (a, b) = p.split(0.3, false).unwrap();
        let tol = 1e-10;
        let inside = |t: &TrimmedPatch, u, v| {
            crate::winding2d::trim_contains(ParamPoint::new(u, v), t.curves(), tol)
                .unwrap()
                .0
        };
        assert!(inside(&a, 0.1, 0.5) && !inside(&a, 0.5, 0.5));
        assert!(inside(&b, 0.5, 0.5) && !inside(&b, 0.1, 0.5));
        let (c, d) = p.split(0.6, true).unwrap();
        assert!(inside(&c, 0.5, 0.1) && !inside(&c, 0.5, 0.9));
        assert!(inside(&d, 0.5, 0.9) && !inside(&d, 0.5, 0.1));
    }

    #[test]
    fn clockwise_declaration_round_trips() {
        let p = unit_square();
        let cw: Vec<Vec<RationalCurve2>> = p.loops().iter().map(|l| reverse_loop(l)).collect();
        let q = TrimmedPatch::with_orientation(
            p.surface().clone(),
            cw.clone(),
            LoopOrientation::Clockwise,
        );
        assert_eq!(q.loops(), p.loops());
        assert_eq!(q.declared_loops(), cw);
    }
}
