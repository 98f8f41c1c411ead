//! Winding numbers of trimming curves in parameter space, plus the
//! proximity and clipping helpers used for disk extraction.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geom::{Aabb2, ParamPoint};
use crate::kernel::{circle_arc, circle_loop, BezierCurve2, LoopOrientation, RationalCurve2};

const MAX_DEPTH: u32 = 64;

/// Signed angle subtended by the segment `a → b` seen from the origin,
/// as a fraction of a full turn.
pub fn segment_winding(a: ParamPoint, b: ParamPoint) -> Result<f64> {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(Error::Coincident);
    }
    Ok(a.cross(b).atan2(a.dot(b)) / TAU)
}

/// Result of a 2D winding query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding2D {
    pub value: f64,
    pub coincident: bool,
}

impl Winding2D {
    pub fn rounded(&self) -> i64 {
        self.value.round() as i64
    }
}

/// An unordered set of trimming curves, owning its curves.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrimLoopSet {
    pub curves: Vec<RationalCurve2>,
}

impl TrimLoopSet {
    pub fn new(curves: Vec<RationalCurve2>) -> Self {
        Self { curves }
    }

    pub fn bbox(&self) -> Aabb2 {
        let mut b = Aabb2::empty();
        for c in &self.curves {
            b.merge(&c.bbox());
        }
        b
    }

    pub fn winding(&self, q: ParamPoint, edge_tol: f64) -> Result<Winding2D> {
        gwn2d(q, &self.curves, edge_tol)
    }
}

/// Default coincidence tolerance for a parameter domain.
pub fn default_edge_tolerance(domain: &Aabb2) -> f64 {
    1e-10 * domain.diagonal().max(f64::MIN_POSITIVE)
}

fn bezier_winding(
    q: ParamPoint,
    b: &BezierCurve2,
    tol: f64,
    depth: u32,
    out: &mut Winding2D,
) -> Result<()> {
    let bb = b.bbox();
    if !bb.contains(q) {
        out.value += segment_winding(b.start() - q, b.end() - q)?;
        return Ok(());
    }
    if bb.diagonal() < tol {
        out.coincident = true;
        if let Ok(w) = segment_winding(b.start() - q, b.end() - q) {
            out.value += w;
        }
        return Ok(());
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Degenerate(
            "2D winding recursion depth exceeded".into(),
        ));
    }
    let (l, r) = b.bisect();
    bezier_winding(q, &l, tol, depth + 1, out)?;
    bezier_winding(q, &r, tol, depth + 1, out)
}

/// Sum of the winding numbers of `curves` about `q`. Each curve is bisected
/// until `q` leaves its control box; the chord angle is then exact.
pub fn gwn2d<'a, I>(q: ParamPoint, curves: I, edge_tol: f64) -> Result<Winding2D>
where
    I: IntoIterator<Item = &'a RationalCurve2>,
{
    let mut out = Winding2D {
        value: 0.0,
        coincident: false,
    };
    for c in curves {
        for b in c.beziers() {
            bezier_winding(q, b, edge_tol, 0, &mut out)?;
        }
    }
    Ok(out)
}

/// Nonzero-rule trim test; also reports whether `q` lies on a curve.
pub fn trim_contains<'a, I>(q: ParamPoint, curves: I, edge_tol: f64) -> Result<(bool, bool)>
where
    I: IntoIterator<Item = &'a RationalCurve2>,
{
    let w = gwn2d(q, curves, edge_tol)?;
    Ok((w.rounded() != 0, w.coincident))
}

fn bezier_enters_disk(b: &BezierCurve2, c: ParamPoint, r: f64, depth: u32) -> bool {
    let bb = b.bbox();
    if bb.distance_to(c) > r {
        return false;
    }
    if bb.max_distance_to(c) <= r || bb.diagonal() < r * 1e-6 || depth >= MAX_DEPTH {
        return true;
    }
    // any point of the curve inside the disk settles it
    if b.start().distance(c) <= r || b.end().distance(c) <= r {
        return true;
    }
    let (l, rr) = b.bisect();
    bezier_enters_disk(&l, c, r, depth + 1) || bezier_enters_disk(&rr, c, r, depth + 1)
}

/// Whether any curve passes within `radius` of `center` (conservative up to
/// `radius · 1e-6`).
pub fn loops_enter_disk<'a, I>(curves: I, center: ParamPoint, radius: f64) -> bool
where
    I: IntoIterator<Item = &'a RationalCurve2>,
{
    curves.into_iter().any(|c| {
        c.beziers()
            .iter()
            .any(|b| bezier_enters_disk(b, center, radius, 0))
    })
}

/// A closed cutting boundary in parameter space with an inside and an
/// outside.
pub(crate) trait Cutter {
    /// Negative inside, positive outside.
    fn side(&self, p: ParamPoint) -> f64;
    /// `Some(inside)` when the whole box lies on one side.
    fn box_side(&self, b: &Aabb2) -> Option<bool>;
    /// Length scale used for subdivision stopping.
    fn scale(&self) -> f64;
    /// Coordinate of a boundary point along the boundary.
    fn coord(&self, p: ParamPoint) -> f64;
    /// Boundary traversed in increasing coordinate from `a` to `b`; this
    /// direction keeps the inside on the left.
    fn boundary(&self, a: f64, b: f64) -> Vec<RationalCurve2>;
    fn point_at(&self, a: f64) -> ParamPoint;
    /// Period of the coordinate for closed boundaries.
    fn period(&self) -> Option<f64>;
    /// Full boundary when nothing crosses it and it lies inside the region.
    fn full(&self) -> Option<Vec<RationalCurve2>>;
}

pub(crate) struct Circle {
    pub center: ParamPoint,
    pub radius: f64,
}

impl Cutter for Circle {
    fn side(&self, p: ParamPoint) -> f64 {
        p.distance(self.center) - self.radius
    }
    fn box_side(&self, b: &Aabb2) -> Option<bool> {
        if b.distance_to(self.center) > self.radius {
            Some(false)
        } else if b.max_distance_to(self.center) < self.radius {
            Some(true)
        } else {
            None
        }
    }
    fn scale(&self) -> f64 {
        self.radius
    }
    fn coord(&self, p: ParamPoint) -> f64 {
        let a = (p.v - self.center.v).atan2(p.u - self.center.u);
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    }
    fn boundary(&self, a: f64, b: f64) -> Vec<RationalCurve2> {
        circle_arc(self.center, self.radius, a, b)
    }
    fn point_at(&self, a: f64) -> ParamPoint {
        ParamPoint::new(
            self.center.u + self.radius * a.cos(),
            self.center.v + self.radius * a.sin(),
        )
    }
    fn period(&self) -> Option<f64> {
        Some(TAU)
    }
    fn full(&self) -> Option<Vec<RationalCurve2>> {
        Some(circle_loop(
            self.center,
            self.radius,
            LoopOrientation::CounterClockwise,
        ))
    }
}

/// The half-plane `u < at` (or `v < at` when `along_v`).
pub(crate) struct HalfPlane {
    pub at: f64,
    pub along_v: bool,
    pub extent: f64,
}

impl HalfPlane {
    fn normal_coord(&self, p: ParamPoint) -> f64 {
        if self.along_v {
            p.v
        } else {
            p.u
        }
    }
}

impl Cutter for HalfPlane {
    fn side(&self, p: ParamPoint) -> f64 {
        self.normal_coord(p) - self.at
    }
    fn box_side(&self, b: &Aabb2) -> Option<bool> {
        let (lo, hi) = if self.along_v {
            (b.min.v, b.max.v)
        } else {
            (b.min.u, b.max.u)
        };
        if hi < self.at {
            Some(true)
        } else if lo > self.at {
            Some(false)
        } else {
            None
        }
    }
    fn scale(&self) -> f64 {
        self.extent
    }
    fn coord(&self, p: ParamPoint) -> f64 {
        // increasing coordinate keeps the inside (smaller normal coordinate) on the left
        if self.along_v {
            -p.u
        } else {
            p.v
        }
    }
    fn boundary(&self, a: f64, b: f64) -> Vec<RationalCurve2> {
        vec![RationalCurve2::line(self.point_at(a), self.point_at(b))]
    }
    fn point_at(&self, a: f64) -> ParamPoint {
        if self.along_v {
            ParamPoint::new(-a, self.at)
        } else {
            ParamPoint::new(self.at, a)
        }
    }
    fn period(&self) -> Option<f64> {
        None
    }
    fn full(&self) -> Option<Vec<RationalCurve2>> {
        None
    }
}

/// A clipped curve, remembering the source curve when it passed through
/// unmodified.
#[derive(Debug, Clone)]
pub(crate) struct ClipPiece {
    pub curve: RationalCurve2,
    pub source: Option<usize>,
}

/// Parameters in `[b.range]` where the curve crosses the cutter boundary.
fn crossings(b: &BezierCurve2, cut: &dyn Cutter, depth: u32, out: &mut Vec<f64>) {
    let bb = b.bbox();
    if cut.box_side(&bb).is_some() {
        return;
    }
    if bb.diagonal() > 0.05 * cut.scale() && depth < 40 {
        let (l, r) = b.bisect();
        crossings(&l, cut, depth + 1, out);
        crossings(&r, cut, depth + 1, out);
        return;
    }
    // short piece: the side function is unimodal along it
    let (t0, t1) = b.range;
    let f = |t: f64| cut.side(b.eval(t).0);
    let f0 = f(t0);
    let f1 = f(t1);
    let tol = 1e-10 * (t1 - t0).abs().max(1e-300);
    let root = |mut a: f64, mut c: f64| {
        let fa = f(a);
        while (c - a).abs() > tol {
            let m = 0.5 * (a + c);
            if (f(m) < 0.0) == (fa < 0.0) {
                a = m;
            } else {
                c = m;
            }
        }
        0.5 * (a + c)
    };
    if (f0 < 0.0) != (f1 < 0.0) {
        out.push(root(t0, t1));
        return;
    }
    // same sign at both ends: look for an excursion across the boundary
    let (mut a, mut c) = (t0, t1);
    let want_min = f0 >= 0.0;
    let g = |t: f64| if want_min { f(t) } else { -f(t) };
    for _ in 0..80 {
        let m1 = a + (c - a) / 3.0;
        let m2 = c - (c - a) / 3.0;
        if g(m1) < g(m2) {
            c = m2;
        } else {
            a = m1;
        }
    }
    let tm = 0.5 * (a + c);
    if g(tm) < 0.0 {
        out.push(root(t0, tm));
        out.push(root(tm, t1));
    }
}

fn curve_crossings(c: &RationalCurve2, cut: &dyn Cutter) -> Vec<f64> {
    let mut out = Vec::new();
    for b in c.beziers() {
        crossings(b, cut, 0, &mut out);
    }
    out.sort_by(f64::total_cmp);
    let (a, b) = c.domain();
    let tol = 1e-9 * (b - a);
    out.dedup_by(|x, y| (*x - *y).abs() < tol);
    // crossings at the very ends do not split the curve
    out.retain(|&t| t - a > tol && b - t > tol);
    out
}

/// Splits `c` at sorted interior parameters into consecutive curves.
fn split_curve(c: &RationalCurve2, cuts: &[f64]) -> Vec<RationalCurve2> {
    let mut groups: Vec<Vec<BezierCurve2>> = vec![Vec::new()];
    let mut k = 0;
    for b in c.beziers() {
        let (mut lo, hi) = b.range;
        while k < cuts.len() && cuts[k] < hi {
            let t = cuts[k];
            if t > lo {
                groups.last_mut().unwrap().push(b.restrict(lo, t));
                lo = t;
            }
            groups.push(Vec::new());
            k += 1;
        }
        if hi > lo {
            groups.last_mut().unwrap().push(if lo == b.range.0 {
                b.clone()
            } else {
                b.restrict(lo, hi)
            });
        }
    }
    groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|g| RationalCurve2::from_bezier_chain(&g))
        .collect()
}

fn midpoint(c: &RationalCurve2) -> ParamPoint {
    let (a, b) = c.domain();
    c.eval(0.5 * (a + b)).map_or(c.start(), |(p, _)| p)
}

/// Splits the region bounded by `curves` into the parts inside and outside
/// `cut`. Each curve is cut at its crossings; pieces go to the side of their
/// midpoint. The boundary itself is added, between consecutive crossings,
/// with multiplicity equal to the rounded winding number of the original
/// curves there, so both parts stay closed when the input is closed.
pub(crate) fn clip_loops(
    curves: &[&RationalCurve2],
    cut: &dyn Cutter,
    edge_tol: f64,
) -> Result<(Vec<ClipPiece>, Vec<ClipPiece>)> {
    let mut inner = Vec::new();
    let mut outer = Vec::new();
    let mut coords = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        let ts = curve_crossings(c, cut);
        for &t in &ts {
            coords.push(cut.coord(c.eval(t)?.0));
        }
        // endpoints lying on the boundary also delimit boundary arcs
        for p in [c.start(), c.end()] {
            if cut.side(p).abs() < 1e-12 * cut.scale() {
                coords.push(cut.coord(p));
            }
        }
        if ts.is_empty() {
            let piece = ClipPiece {
                curve: (*c).clone(),
                source: Some(i),
            };
            if cut.side(midpoint(c)) < 0.0 {
                inner.push(piece);
            } else {
                outer.push(piece);
            }
            continue;
        }
        for part in split_curve(c, &ts) {
            let piece = ClipPiece {
                curve: part,
                source: None,
            };
            if cut.side(midpoint(&piece.curve)) < 0.0 {
                inner.push(piece);
            } else {
                outer.push(piece);
            }
        }
    }
    coords.sort_by(f64::total_cmp);
    coords.dedup_by(|x, y| (*x - *y).abs() < 1e-12 * cut.scale());

    let mut add_boundary = |arcs: Vec<RationalCurve2>, mult: i64| {
        for _ in 0..mult.unsigned_abs() {
            for arc in &arcs {
                let (fwd, rev) = (arc.clone(), arc.reversed());
                if mult > 0 {
                    inner.push(ClipPiece {
                        curve: fwd,
                        source: None,
                    });
                    outer.push(ClipPiece {
                        curve: rev,
                        source: None,
                    });
                } else {
                    inner.push(ClipPiece {
                        curve: rev,
                        source: None,
                    });
                    outer.push(ClipPiece {
                        curve: fwd,
                        source: None,
                    });
                }
            }
        }
    };
    let winding_at = |p: ParamPoint| -> Result<i64> {
        Ok(gwn2d(p, curves.iter().copied(), edge_tol)?.rounded())
    };

    match cut.period() {
        Some(period) => {
            if coords.is_empty() {
                let m = winding_at(cut.point_at(0.0))?;
                if let Some(full) = cut.full() {
                    add_boundary(full, m);
                }
            } else {
                let n = coords.len();
                for k in 0..n {
                    let a = coords[k];
                    let b = if k + 1 < n {
                        coords[k + 1]
                    } else {
                        coords[0] + period
                    };
                    if b - a <= 0.0 {
                        continue;
                    }
                    let m = winding_at(cut.point_at(0.5 * (a + b)))?;
                    if m != 0 {
                        add_boundary(cut.boundary(a, b), m);
                    }
                }
            }
        }
        None => {
            for w in coords.windows(2) {
                let m = winding_at(cut.point_at(0.5 * (w[0] + w[1])))?;
                if m != 0 {
                    add_boundary(cut.boundary(w[0], w[1]), m);
                }
            }
        }
    }
    Ok((outer, inner))
}

/// Splits a loop set along a circle: `outer` bounds the region outside the
/// disk, `inner` the region inside it.
pub fn clip_loops_to_circle(
    loops: &TrimLoopSet,
    center: ParamPoint,
    radius: f64,
    edge_tol: f64,
) -> Result<(TrimLoopSet, TrimLoopSet)> {
    if !(radius > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "non-positive disk radius {radius}"
        )));
    }
    let refs: Vec<&RationalCurve2> = loops.curves.iter().collect();
    let (o, i) = clip_loops(&refs, &Circle { center, radius }, edge_tol)?;
    Ok((
        TrimLoopSet::new(o.into_iter().map(|p| p.curve).collect()),
        TrimLoopSet::new(i.into_iter().map(|p| p.curve).collect()),
    ))
}

/// Splits a loop set along the line `u = at` (or `v = at` when `along_v`)
/// into the parts below and above it.
pub fn clip_loops_to_half_plane(
    loops: &TrimLoopSet,
    at: f64,
    along_v: bool,
    edge_tol: f64,
) -> Result<(TrimLoopSet, TrimLoopSet)> {
    let extent = loops.bbox().diagonal().max(f64::MIN_POSITIVE);
    let refs: Vec<&RationalCurve2> = loops.curves.iter().collect();
    let (above, below) = clip_loops(
        &refs,
        &HalfPlane {
            at,
            along_v,
            extent,
        },
        edge_tol,
    )?;
    Ok((
        TrimLoopSet::new(below.into_iter().map(|p| p.curve).collect()),
        TrimLoopSet::new(above.into_iter().map(|p| p.curve).collect()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(lo: f64, hi: f64) -> Vec<RationalCurve2> {
        let c = [
            ParamPoint::new(lo, lo),
            ParamPoint::new(hi, lo),
            ParamPoint::new(hi, hi),
            ParamPoint::new(lo, hi),
        ];
        (0..4)
            .map(|k| RationalCurve2::line(c[k], c[(k + 1) % 4]))
            .collect()
    }

    #[test]
    fn segment_examples() {
        let p = ParamPoint::new;
        assert!((segment_winding(p(1.0, 0.0), p(0.0, 1.0)).unwrap() - 0.25).abs() < 1e-15);
        assert!((segment_winding(p(1.0, 0.0), p(1.0, 1.0)).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(segment_winding(p(3.0, 4.0), p(3.0, 4.0)).unwrap(), 0.0);
        assert!(segment_winding(p(0.0, 0.0), p(1.0, 0.0)).is_err());
    }

    #[test]
    fn circle_inside_outside_and_half() {
        let o = ParamPoint::new(0.0, 0.0);
        let c = circle_loop(o, 1.0, LoopOrientation::CounterClockwise);
        assert!((gwn2d(o, &c, 1e-10).unwrap().value - 1.0).abs() < 1e-9);
        assert!(
            gwn2d(ParamPoint::new(2.0, 0.0), &c, 1e-10)
                .unwrap()
                .value
                .abs()
                < 1e-9
        );
        let cw = circle_loop(o, 1.0, LoopOrientation::Clockwise);
        assert!((gwn2d(o, &cw, 1e-10).unwrap().value + 1.0).abs() < 1e-9);
        let semi = &c[..2];
        assert!((gwn2d(o, semi, 1e-10).unwrap().value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn hole_excluded_by_nonzero_rule() {
        let mut curves = square(0.0, 1.0);
        curves.extend(circle_loop(
            ParamPoint::new(0.5, 0.5),
            0.2,
            LoopOrientation::Clockwise,
        ));
        let t = |u, v| {
            trim_contains(ParamPoint::new(u, v), &curves, 1e-10)
                .unwrap()
                .0
        };
        assert!(!t(0.5, 0.5));
        assert!(t(0.1, 0.1));
        assert!(!t(1.5, 0.5));
    }

    #[test]
    fn coincident_query_is_flagged() {
        let curves = square(0.0, 1.0);
        let w = gwn2d(ParamPoint::new(0.5, 0.0), &curves, 1e-10).unwrap();
        assert!(w.coincident);
        assert!((w.value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn disk_proximity() {
        let curves = square(0.0, 1.0);
        assert!(!loops_enter_disk(&curves, ParamPoint::new(0.5, 0.5), 0.1));
        assert!(loops_enter_disk(&curves, ParamPoint::new(0.05, 0.5), 0.1));
        assert!(!loops_enter_disk(&[], ParamPoint::new(0.05, 0.5), 0.1));
    }

    #[test]
    fn interior_disk_clip() {
        let set = TrimLoopSet::new(square(0.0, 1.0));
        let (outer, inner) =
            clip_loops_to_circle(&set, ParamPoint::new(0.5, 0.5), 0.1, 1e-10).unwrap();
        assert_eq!(outer.curves.len(), 8);
        assert_eq!(inner.curves.len(), 4);
        let w = |s: &TrimLoopSet, u, v| s.winding(ParamPoint::new(u, v), 1e-10).unwrap().value;
        assert!((w(&inner, 0.5, 0.5) - 1.0).abs() < 1e-9);
        assert!(w(&outer, 0.5, 0.5).abs() < 1e-9);
        assert!((w(&outer, 0.2, 0.2) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn edge_disk_clip_splits_edge() {
        let set = TrimLoopSet::new(square(0.0, 1.0));
        let c = ParamPoint::new(0.0, 0.5);
        let (outer, inner) = clip_loops_to_circle(&set, c, 0.2, 1e-10).unwrap();
        // the u = 0 edge leaves two pieces outside and one inside
        let on_edge = |s: &TrimLoopSet| {
            s.curves
                .iter()
                .filter(|k| k.start().u.abs() < 1e-12 && k.end().u.abs() < 1e-12)
                .count()
        };
        assert_eq!(on_edge(&outer), 2);
        assert_eq!(on_edge(&inner), 1);
        for (u, v) in [
            (0.05, 0.5),
            (0.3, 0.5),
            (0.5, 0.9),
            (0.15, 0.62),
            (-0.1, 0.5),
        ] {
            let q = ParamPoint::new(u, v);
            let a = outer.winding(q, 1e-10).unwrap().value + inner.winding(q, 1e-10).unwrap().value;
            let b = set.winding(q, 1e-10).unwrap().value;
            assert!((a - b).abs() < 1e-9, "{u} {v}");
        }
    }
}
