//! Intersections between a full line and a trimmed patch.

use crate::error::{Error, Result};
use crate::geom::{Aabb2, Aabb3, Line3, Obb3, ParamPoint, Point3, Rotation, Vec3};
use crate::kernel::{BezierPatch, NurbsPatch, RationalCurve2, TrimmedPatch};
use crate::winding2d::{gwn2d, loops_enter_disk};

/// How an intersection is treated by the winding number engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntersectionKind {
    Interior,
    NearBoundary,
    Cusp,
    Tangent,
}

/// A signed crossing of the line with the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionRecord {
    /// Signed line parameter of the crossing.
    pub z0: f64,
    pub uv: ParamPoint,
    /// Unnormalized `S_u × S_v` at `uv`.
    pub normal: Vec3,
    pub kind: IntersectionKind,
    /// The trim test was undecided at `uv` (the point lies on a trimming curve).
    pub on_trim: bool,
    /// `uv` lies inside the visible region.
    pub visible: bool,
}

/// An unclassified root `(z0, uv)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawHit {
    pub z0: f64,
    pub uv: ParamPoint,
}

/// A bilinear patch given by its corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearPatch {
    pub p00: Point3,
    pub p10: Point3,
    pub p01: Point3,
    pub p11: Point3,
}

impl BilinearPatch {
    pub fn eval(&self, u: f64, v: f64) -> Point3 {
        self.p00 * ((1.0 - u) * (1.0 - v))
            + self.p10 * (u * (1.0 - v))
            + self.p01 * ((1.0 - u) * v)
            + self.p11 * (u * v)
    }
}

/// Search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectOptions {
    /// Squared-distance flatness tolerance for bilinear leaves.
    pub eps_ls: f64,
    /// Disk radius in parameter units used for the boundary proximity test
    /// and as the search margin around the trimming curves.
    pub disk_radius: f64,
    /// Parameter-space merge distance for duplicate roots.
    pub dedup_tol: f64,
    /// Relative threshold on `|S_u × S_v|` below which a hit is a cusp.
    pub cusp_tol: f64,
    /// Threshold on `|n̂ · d̂|` below which a hit is tangential.
    pub tangent_tol: f64,
    pub max_depth: u32,
}

impl Default for IntersectOptions {
    fn default() -> Self {
        Self {
            eps_ls: 1e-6,
            disk_radius: 0.01,
            dedup_tol: 1e-6,
            cusp_tol: 1e-8,
            tangent_tol: 1e-3,
            max_depth: 50,
        }
    }
}

/// Roots of the line with the doubly ruled surface through the corners.
/// Returns `(z0, u, v)` with `u, v ∈ [0, 1]`.
pub fn garp(bl: &BilinearPatch, line: &Line3) -> Result<Vec<(f64, f64, f64)>> {
    let rot = Rotation::to_z(line.direction);
    let local = |p: Point3| rot.apply(p - line.origin);
    garp_local(&BilinearPatch {
        p00: local(bl.p00),
        p10: local(bl.p10),
        p01: local(bl.p01),
        p11: local(bl.p11),
    })
}

/// [`garp`] for a patch already expressed in the line frame (line = z axis).
fn garp_local(bl: &BilinearPatch) -> Result<Vec<(f64, f64, f64)>> {
    let xy = |p: Point3| ParamPoint::new(p.x, p.y);
    let a = xy(bl.p00);
    let ea = xy(bl.p10) - a;
    let eb = xy(bl.p01) - a;
    let ec = a - xy(bl.p10) - xy(bl.p01) + xy(bl.p11);
    let scale = [bl.p00, bl.p10, bl.p01, bl.p11]
        .iter()
        .map(|p| p.x.abs().max(p.y.abs()))
        .fold(0.0, f64::max)
        .max(ea.norm().max(eb.norm()));
    if scale == 0.0 {
        return Err(Error::UnresolvedIntersection(
            "patch collapses onto the line".into(),
        ));
    }
    let tiny = 1e-14 * scale * scale;
    // (a + uA) × (B + uC) = 0
    let c0 = a.cross(eb);
    let c1 = a.cross(ec) + ea.cross(eb);
    let c2 = ea.cross(ec);
    let mut us: Vec<f64> = Vec::with_capacity(2);
    if c2.abs() <= tiny {
        if c1.abs() <= tiny {
            if c0.abs() <= tiny {
                return Err(Error::UnresolvedIntersection(
                    "line lies in the patch".into(),
                ));
            }
            return Ok(Vec::new());
        }
        us.push(-c0 / c1);
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        // slightly negative discriminants are rounding of a double root
        if disc < -1e-12 * (c1 * c1).max(tiny * tiny) {
            return Ok(Vec::new());
        }
        let sq = disc.max(0.0).sqrt();
        let q = -0.5 * (c1 + c1.signum() * sq);
        if q == 0.0 {
            us.push(0.0);
        } else {
            us.push(q / c2);
            us.push(c0 / q);
        }
        if sq == 0.0 {
            us.truncate(1);
        }
    }
    const SLACK: f64 = 1e-12;
    let mut out = Vec::new();
    for u in us {
        if !(-SLACK..=1.0 + SLACK).contains(&u) {
            continue;
        }
        let den = eb + ec * u;
        let num = a + ea * u;
        let v = if den.u.abs() >= den.v.abs() {
            if den.u == 0.0 {
                continue;
            }
            -num.u / den.u
        } else {
            -num.v / den.v
        };
        if !(-SLACK..=1.0 + SLACK).contains(&v) {
            continue;
        }
        let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
        out.push((bl.eval(u, v).z, u, v));
    }
    Ok(out)
}

/// Corner bilinear of a Bézier patch's control net.
fn corner_bilinear(b: &BezierPatch) -> BilinearPatch {
    BilinearPatch {
        p00: b.point(0, 0),
        p10: b.point(b.deg_u, 0),
        p01: b.point(0, b.deg_v),
        p11: b.point(b.deg_u, b.deg_v),
    }
}

/// Whether every control point lies within squared distance `eps_ls` of the
/// bilinear interpolant of the corners at its Greville-like parameter.
pub fn is_approximately_bilinear(b: &BezierPatch, eps_ls: f64) -> bool {
    if b.deg_u <= 1 && b.deg_v <= 1 {
        return true;
    }
    let bl = corner_bilinear(b);
    for i in 0..=b.deg_u {
        let s = if b.deg_u == 0 {
            0.0
        } else {
            i as f64 / b.deg_u as f64
        };
        for j in 0..=b.deg_v {
            let t = if b.deg_v == 0 {
                0.0
            } else {
                j as f64 / b.deg_v as f64
            };
            if (b.point(i, j) - bl.eval(s, t)).norm_squared() > eps_ls {
                return false;
            }
        }
    }
    true
}

/// Recursive search on a patch expressed in the line frame. Parameters in
/// the output refer to the patch's parent domain.
fn recurse_local(
    b: &BezierPatch,
    eps_ls: f64,
    depth: u32,
    max_depth: u32,
    out: &mut Vec<RawHit>,
) -> Result<()> {
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in b.points() {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    if x0 > 0.0 || x1 < 0.0 || y0 > 0.0 || y1 < 0.0 {
        return Ok(());
    }
    if is_approximately_bilinear(b, eps_ls) {
        for (z0, s, t) in garp_local(&corner_bilinear(b))? {
            out.push(RawHit {
                z0,
                uv: b.to_parent(s, t),
            });
        }
        return Ok(());
    }
    if depth >= max_depth {
        return Err(Error::UnresolvedIntersection(format!(
            "subdivision depth {max_depth} exceeded"
        )));
    }
    for c in b.split4() {
        recurse_local(&c, eps_ls, depth + 1, max_depth, out)?;
    }
    Ok(())
}

/// All raw roots of `line` with the Bézier patch `bez` (both directions).
pub fn line_bezier_recursive(
    line: &Line3,
    bez: &BezierPatch,
    eps_ls: f64,
    max_depth: u32,
) -> Result<Vec<RawHit>> {
    let rot = Rotation::to_z(line.direction);
    let local = bez.transformed(&rot, line.origin);
    let mut out = Vec::new();
    recurse_local(&local, eps_ls, 0, max_depth, &mut out)?;
    Ok(out)
}

/// Merges roots closer than `tol` in parameter space (and consistent in
/// `z0`) into their mean.
pub fn dedup_intersections(raw: &[RawHit], tol: f64) -> Vec<RawHit> {
    let mut groups: Vec<(RawHit, usize)> = Vec::new();
    'next: for h in raw {
        for (g, n) in groups.iter_mut() {
            let mean = ParamPoint::new(g.uv.u / *n as f64, g.uv.v / *n as f64);
            let z = g.z0 / *n as f64;
            if mean.distance(h.uv) <= tol
                && (z - h.z0).abs() <= tol.max(1e-9 * z.abs().max(1.0)) * 1e3
            {
                g.uv = g.uv + h.uv;
                g.z0 += h.z0;
                *n += 1;
                continue 'next;
            }
        }
        groups.push((*h, 1));
    }
    groups
        .into_iter()
        .map(|(g, n)| RawHit {
            z0: g.z0 / n as f64,
            uv: ParamPoint::new(g.uv.u / n as f64, g.uv.v / n as f64),
        })
        .collect()
}

/// Bézier pieces of a patch and the parameter rectangle searched for roots.
#[derive(Debug, Clone)]
pub struct SearchRegion {
    pub rect: Aabb2,
    pub pieces: Vec<BezierPatch>,
    /// Length scale of `S_u × S_v` used for the cusp test.
    pub normal_scale: f64,
    pub edge_tol: f64,
}

impl SearchRegion {
    /// Pieces covering the trimming curves' box grown by `margin` and
    /// limited to the domain extended by the patch's extension radius.
    pub fn new(patch: &TrimmedPatch, margin: f64) -> Self {
        Self::over(
            patch.surface(),
            patch.active_rect().expanded(margin),
            patch.extension_radius(),
        )
    }

    /// Pieces of `surface` over `rect`, clipped to the domain grown by `ext`.
    pub fn over(surface: &NurbsPatch, rect: Aabb2, ext: f64) -> Self {
        let dom = surface.domain();
        let rect = rect.intersection(&dom.expanded(ext));
        let pieces = if rect.is_empty() {
            Vec::new()
        } else {
            surface.bezier_pieces_over(&rect)
        };
        let d3 = surface.aabb().diagonal();
        let d2 = dom.diagonal();
        Self {
            rect,
            pieces,
            normal_scale: (d3 / d2).powi(2),
            edge_tol: crate::winding2d::default_edge_tolerance(&dom),
        }
    }

    /// Axis-aligned box of the pieces' control points.
    pub fn aabb(&self) -> Aabb3 {
        let mut b = Aabb3::empty();
        for p in &self.pieces {
            b.merge(&p.aabb());
        }
        b
    }

    /// Oriented box of the pieces' control points.
    pub fn obb(&self) -> Obb3 {
        let pts: Vec<Point3> = self.pieces.iter().flat_map(|p| p.points()).collect();
        Obb3::from_points(&pts)
    }
}

/// Newton refinement of a root on the true surface in the line frame,
/// stopping once the distance to the line is below `target`.
fn polish(
    view: &SurfaceView,
    rot: &Rotation,
    line: &Line3,
    uv: ParamPoint,
    rect: &Aabb2,
    target: f64,
) -> ParamPoint {
    let mut uv = uv;
    for _ in 0..30 {
        let Ok(sp) = view.surface.eval_extended(uv, view.ext) else {
            return uv;
        };
        let p = rot.apply(sp.point - line.origin);
        if p.x.hypot(p.y) <= target {
            return uv;
        }
        let du = rot.apply(sp.du);
        let dv = rot.apply(sp.dv);
        let det = du.x * dv.y - du.y * dv.x;
        if det == 0.0 || !det.is_finite() {
            return uv;
        }
        let su = (p.x * dv.y - p.y * dv.x) / det;
        let sv = (du.x * p.y - du.y * p.x) / det;
        let next = ParamPoint::new(uv.u - su, uv.v - sv);
        if !rect.expanded(1e-12 * rect.diagonal()).contains(next) || !next.is_finite() {
            return uv;
        }
        uv = next;
    }
    uv
}

/// Surface, evaluation margin and trimming curves of a (possibly derived)
/// trimmed region.
pub(crate) struct SurfaceView<'a> {
    pub surface: &'a NurbsPatch,
    pub ext: f64,
    pub curves: Vec<&'a RationalCurve2>,
}

/// Finds, refines, deduplicates, filters and classifies every crossing of
/// the full line with the patch. Records are sorted by `z0`.
pub fn line_patch_intersections(
    line: &Line3,
    patch: &TrimmedPatch,
    opts: &IntersectOptions,
) -> Result<Vec<IntersectionRecord>> {
    let patch = patch.extend(patch.extension_radius().max(2.0 * opts.disk_radius));
    let region = SearchRegion::new(&patch, opts.disk_radius);
    let view = SurfaceView {
        surface: patch.surface(),
        ext: patch.extension_radius(),
        curves: patch.curves().collect(),
    };
    intersections_in_region(line, &view, &region, opts)
}

pub(crate) fn intersections_in_region(
    line: &Line3,
    view: &SurfaceView,
    region: &SearchRegion,
    opts: &IntersectOptions,
) -> Result<Vec<IntersectionRecord>> {
    let rot = Rotation::to_z(line.direction);
    let mut raw = Vec::new();
    for piece in &region.pieces {
        let local = piece.transformed(&rot, line.origin);
        recurse_local(&local, opts.eps_ls, 0, opts.max_depth, &mut raw)?;
    }
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    let scale = view.surface.aabb().diagonal().max(f64::MIN_POSITIVE);
    let target = 1e-3 * opts.eps_ls * scale;
    for h in raw.iter_mut() {
        h.uv = polish(view, &rot, line, h.uv, &region.rect, target);
        let mut sp = view.surface.eval_extended(h.uv, view.ext)?;
        h.z0 = (sp.point - line.origin).dot(line.direction);
        if h.z0.abs() < 1e-6 * scale {
            // the origin may lie on the surface; settle that to rounding level
            h.uv = polish(view, &rot, line, h.uv, &region.rect, 1e-15 * scale);
            sp = view.surface.eval_extended(h.uv, view.ext)?;
            h.z0 = (sp.point - line.origin).dot(line.direction);
        }
    }
    let hits = dedup_intersections(&raw, opts.dedup_tol);
    let mut out = Vec::new();
    for h in hits {
        let w = gwn2d(h.uv, view.curves.iter().copied(), region.edge_tol)?;
        let visible = w.rounded() != 0;
        let near =
            w.coincident || loops_enter_disk(view.curves.iter().copied(), h.uv, opts.disk_radius);
        if !visible && !near {
            continue;
        }
        let normal = view.surface.eval_extended(h.uv, view.ext)?.normal();
        let kind = classify(normal, line, near, region.normal_scale, opts);
        out.push(IntersectionRecord {
            z0: h.z0,
            uv: h.uv,
            normal,
            kind,
            on_trim: w.coincident,
            visible,
        });
    }
    out.sort_by(|a, b| a.z0.total_cmp(&b.z0));
    Ok(out)
}

fn classify(
    normal: Vec3,
    line: &Line3,
    near: bool,
    normal_scale: f64,
    opts: &IntersectOptions,
) -> IntersectionKind {
    let n = normal.norm();
    if n < opts.cusp_tol * normal_scale {
        IntersectionKind::Cusp
    } else if (normal.dot(line.direction) / n).abs() < opts.tangent_tol {
        IntersectionKind::Tangent
    } else if near {
        IntersectionKind::NearBoundary
    } else {
        IntersectionKind::Interior
    }
}

/// Classifies a single raw root against the patch.
pub fn classify_intersection(
    patch: &TrimmedPatch,
    hit: &RawHit,
    line: &Line3,
    r: f64,
    opts: &IntersectOptions,
) -> Result<IntersectionRecord> {
    let region_scale = {
        let dom = patch.surface().domain();
        (patch.aabb().diagonal() / dom.diagonal()).powi(2)
    };
    let tol = crate::winding2d::default_edge_tolerance(&patch.surface().domain());
    let w = gwn2d(hit.uv, patch.curves(), tol)?;
    let near = w.coincident || loops_enter_disk(patch.curves(), hit.uv, r);
    let normal = patch
        .surface()
        .eval_extended(hit.uv, patch.extension_radius().max(r))?
        .normal();
    Ok(IntersectionRecord {
        z0: hit.z0,
        uv: hit.uv,
        normal,
        kind: classify(normal, line, near, region_scale, opts),
        on_trim: w.coincident,
        visible: w.rounded() != 0,
    })
}
