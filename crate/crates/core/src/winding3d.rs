//! Winding numbers of trimmed patches from a boundary line integral plus a
//! half-integer correction for every crossing of the integrand's singular
//! line with the surface.

use std::borrow::Cow;
use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss::GaussRule;
use crate::geom::{Aabb2, Aabb3, Line3, Obb3, ParamPoint, Point3, Rotation, Vec3};
use crate::intersect::{
    intersections_in_region, IntersectOptions, IntersectionKind, SearchRegion, SurfaceView,
};
use crate::kernel::trimmed::random_unit_with;
use crate::kernel::{BezierCurve2, Model, NurbsPatch, RationalCurve2, TrimmedPatch};
use crate::winding2d::{clip_loops, default_edge_tolerance, Circle, ClipPiece};

/// Coordinate axis carrying the singular line of an antiderivative field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Vector field whose curl is `x / (4π |x|³)`, singular on the line
/// through the origin along `axis`.
pub fn antiderivative_field(x: Vec3, axis: Axis) -> Result<Vec3> {
    let r = x.norm();
    let f = |a: f64, b: f64, c: f64| -> Result<(f64, f64)> {
        let rho2 = a * a + b * b;
        if rho2 == 0.0 {
            return Err(Error::SingularIntegrand);
        }
        let k = c / (4.0 * PI * rho2 * r);
        Ok((b * k, -a * k))
    };
    Ok(match axis {
        Axis::Z => {
            let (fx, fy) = f(x.x, x.y, x.z)?;
            Vec3::new(fx, fy, 0.0)
        }
        Axis::X => {
            let (fy, fz) = f(x.y, x.z, x.x)?;
            Vec3::new(0.0, fy, fz)
        }
        Axis::Y => {
            let (fz, fx) = f(x.z, x.x, x.y)?;
            Vec3::new(fx, 0.0, fz)
        }
    })
}

/// Tolerances and limits of the winding number engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GwnConfig {
    /// Absolute tolerance of the adaptive boundary quadrature.
    pub eps_quad: f64,
    /// Squared-distance flatness tolerance of the intersection search.
    pub eps_ls: f64,
    /// Disk radius as a percentage of the trimming curves' parameter box
    /// diagonal.
    pub disk_radius_pct: f64,
    /// Disk radius factor used around coincident boundary points.
    pub coincident_disk_factor: f64,
    /// Gauss–Legendre nodes per quadrature segment.
    pub quad_order: usize,
    pub max_quad_depth: u32,
    pub max_edge_recursion: u32,
    /// Relative (to the patch box diagonal) distance below which the query
    /// counts as lying on the surface.
    pub coincident_tol: f64,
    pub rng_seed: u64,
    /// Reuse boundary quadrature nodes across queries.
    pub memoize: bool,
    /// Adaptive bisection; when false every curve span uses one rule.
    pub adaptive: bool,
    pub tangent_tol: f64,
    pub cusp_tol: f64,
    pub dedup_tol: f64,
    pub max_intersect_depth: u32,
}

impl Default for GwnConfig {
    fn default() -> Self {
        Self {
            eps_quad: 1e-6,
            eps_ls: 1e-6,
            disk_radius_pct: 1.0,
            coincident_disk_factor: 0.1,
            quad_order: 15,
            max_quad_depth: 40,
            max_edge_recursion: 10,
            coincident_tol: 1e-10,
            rng_seed: 0,
            memoize: true,
            adaptive: true,
            tangent_tol: 1e-3,
            cusp_tol: 1e-8,
            dedup_tol: 1e-6,
            max_intersect_depth: 50,
        }
    }
}

impl GwnConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps_quad", self.eps_quad),
            ("eps_ls", self.eps_ls),
            ("disk_radius_pct", self.disk_radius_pct),
            ("coincident_disk_factor", self.coincident_disk_factor),
            ("coincident_tol", self.coincident_tol),
            ("tangent_tol", self.tangent_tol),
            ("cusp_tol", self.cusp_tol),
            ("dedup_tol", self.dedup_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidGeometry(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.quad_order < 2 {
            return Err(Error::InvalidGeometry(
                "quad_order must be at least 2".into(),
            ));
        }
        if self.max_quad_depth > 60 {
            return Err(Error::InvalidGeometry(
                "max_quad_depth must not exceed 60".into(),
            ));
        }
        Ok(())
    }

    fn intersect_options(&self, r: f64) -> IntersectOptions {
        IntersectOptions {
            eps_ls: self.eps_ls,
            disk_radius: r,
            dedup_tol: self.dedup_tol,
            cusp_tol: self.cusp_tol,
            tangent_tol: self.tangent_tol,
            max_depth: self.max_intersect_depth,
        }
    }
}

/// Which case resolved a patch-level evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GwnCase {
    FarFieldZ,
    FarFieldX,
    FarFieldY,
    FarFieldObbRotated,
    NearField,
    EdgeDisk,
    EdgeTangentRotate,
    CoincidentSurface,
    CoincidentBoundary,
}

/// Coarse grouping of [`GwnCase`] used for statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseCategory {
    FarField,
    NearField,
    Edge,
}

impl GwnCase {
    pub fn category(self) -> CaseCategory {
        match self {
            GwnCase::FarFieldZ
            | GwnCase::FarFieldX
            | GwnCase::FarFieldY
            | GwnCase::FarFieldObbRotated => CaseCategory::FarField,
            GwnCase::NearField | GwnCase::CoincidentSurface => CaseCategory::NearField,
            GwnCase::EdgeDisk | GwnCase::EdgeTangentRotate | GwnCase::CoincidentBoundary => {
                CaseCategory::Edge
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GwnCase::FarFieldZ => "far-z",
            GwnCase::FarFieldX => "far-x",
            GwnCase::FarFieldY => "far-y",
            GwnCase::FarFieldObbRotated => "far-obb",
            GwnCase::NearField => "near",
            GwnCase::EdgeDisk => "edge-disk",
            GwnCase::EdgeTangentRotate => "edge-rotate",
            GwnCase::CoincidentSurface => "coincident-surface",
            GwnCase::CoincidentBoundary => "coincident-boundary",
        }
    }
}

/// A case tag with the cases of nested evaluations (extracted disks,
/// rotated retries).
#[derive(Debug, Clone, PartialEq)]
pub struct CaseNode {
    pub tag: GwnCase,
    pub children: Vec<CaseNode>,
}

impl CaseNode {
    fn leaf(tag: GwnCase) -> Self {
        Self {
            tag,
            children: Vec::new(),
        }
    }
}

/// Winding number of one patch with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GwnResult {
    pub value: f64,
    pub case: CaseNode,
    /// Surface evaluations performed (cache hits are free).
    pub surface_evals: u64,
    /// Sum of the half-integer corrections applied.
    pub correction: f64,
    pub coincident: bool,
    /// A limit was hit and the value is best effort.
    pub unresolved: bool,
}

/// Segments longer than this multiple of their distance to the singular
/// line are always split.
const RESOLVED_RATIO: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct NodeKey {
    curve: u32,
    span: u32,
    depth: u8,
    path: u64,
    order: u16,
}

/// Quadrature node in model space; the tangent already carries the Gauss
/// weight and the segment length.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    pos: Point3,
    tan: Vec3,
}

/// Memoized boundary quadrature nodes of one patch, keyed by trimming
/// curve, Bézier span and bisection path. Safe for concurrent use; values
/// are a pure function of the key.
#[derive(Debug, Default)]
pub struct QuadratureCache {
    map: RwLock<HashMap<NodeKey, Arc<[Node]>>>,
}

impl QuadratureCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("quadrature cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.write().expect("quadrature cache poisoned").clear();
    }

    fn get(&self, k: &NodeKey) -> Option<Arc<[Node]>> {
        self.map
            .read()
            .expect("quadrature cache poisoned")
            .get(k)
            .cloned()
    }

    fn insert(&self, k: NodeKey, v: Arc<[Node]>) -> Arc<[Node]> {
        self.map
            .write()
            .expect("quadrature cache poisoned")
            .entry(k)
            .or_insert(v)
            .clone()
    }
}

/// Per-patch data reused across queries.
#[derive(Debug)]
pub struct PreparedPatch {
    patch: TrimmedPatch,
    region: SearchRegion,
    aabb: Aabb3,
    obb: Obb3,
    normal: (Vec3, bool),
    radius: f64,
    diag: f64,
    cache: QuadratureCache,
}

impl PreparedPatch {
    pub fn new(patch: &TrimmedPatch, cfg: &GwnConfig) -> Self {
        let tb = patch.trim_bbox();
        let basis = if tb.is_empty() {
            patch.surface().domain()
        } else {
            tb
        };
        let radius = cfg.disk_radius_pct / 100.0 * basis.diagonal();
        let patch = patch.extend(patch.extension_radius().max(2.0 * radius));
        let region = SearchRegion::new(&patch, radius);
        let aabb = region.aabb();
        let obb = region.obb();
        let normal = patch.mean_normal(cfg.rng_seed);
        Self {
            diag: patch.aabb().diagonal(),
            patch,
            region,
            aabb,
            obb,
            normal,
            radius,
            cache: QuadratureCache::new(),
        }
    }

    pub fn patch(&self) -> &TrimmedPatch {
        &self.patch
    }

    /// Disk radius in parameter units.
    pub fn disk_radius(&self) -> f64 {
        self.radius
    }

    pub fn cache(&self) -> &QuadratureCache {
        &self.cache
    }

    /// Winding number at `q`; `salt` decorrelates random retries between
    /// patches of a model.
    pub fn gwn(&self, q: Point3, cfg: &GwnConfig, salt: u64) -> Result<GwnResult> {
        let cache = if cfg.memoize { Some(&self.cache) } else { None };
        self.gwn_with_cache(q, cfg, salt, cache)
    }

    fn gwn_with_cache(
        &self,
        q: Point3,
        cfg: &GwnConfig,
        salt: u64,
        cache: Option<&QuadratureCache>,
    ) -> Result<GwnResult> {
        cfg.validate()?;
        let ctx = Ctx {
            cfg,
            cache,
            surface: self.patch.surface(),
            ext: self.patch.extension_radius(),
            diag: self.diag,
            evals: Cell::new(0),
            rng: RefCell::new(ChaCha8Rng::seed_from_u64(mix(cfg.rng_seed, q, salt))),
            rule: GaussRule::cached(cfg.quad_order),
        };
        let curves: Vec<WorkCurve> = self
            .patch
            .curves()
            .enumerate()
            .map(|(i, c)| WorkCurve {
                curve: Cow::Borrowed(c),
                key: Some(i as u32),
            })
            .collect();
        let work = Work {
            curves,
            region: Cow::Borrowed(&self.region),
            aabb: self.aabb,
            obb: self.obb,
            excluded: None,
            normal: Some(self.normal),
        };
        let p = ctx.gwn_work(&work, q, 0, self.radius)?;
        Ok(GwnResult {
            value: p.value,
            case: p.case,
            surface_evals: ctx.evals.get(),
            correction: p.correction,
            coincident: p.coincident,
            unresolved: p.unresolved,
        })
    }

    /// Boundary integral of one trimming curve about `q` using the
    /// antiderivative for `axis` after applying `frame`.
    pub fn line_integral(
        &self,
        curve_index: usize,
        q: Point3,
        axis: Axis,
        frame: &Rotation,
        cfg: &GwnConfig,
    ) -> Result<(f64, u64)> {
        let curve =
            self.patch.curves().nth(curve_index).ok_or_else(|| {
                Error::InvalidGeometry(format!("no trimming curve {curve_index}"))
            })?;
        let ctx = Ctx {
            cfg,
            cache: if cfg.memoize { Some(&self.cache) } else { None },
            surface: self.patch.surface(),
            ext: self.patch.extension_radius(),
            diag: self.diag,
            evals: Cell::new(0),
            rng: RefCell::new(ChaCha8Rng::seed_from_u64(cfg.rng_seed)),
            rule: GaussRule::cached(cfg.quad_order),
        };
        let wc = WorkCurve {
            curve: Cow::Borrowed(curve),
            key: Some(curve_index as u32),
        };
        let v = ctx.curve_integral(&wc, q, frame, axis)?;
        Ok((v, ctx.evals.get()))
    }
}

/// Winding number of a single patch. Builds the per-patch data on the fly;
/// use [`GwnEngine`] for repeated queries.
pub fn patch_gwn(
    patch: &TrimmedPatch,
    q: Point3,
    cfg: &GwnConfig,
    cache: Option<&QuadratureCache>,
) -> Result<GwnResult> {
    let prepared = PreparedPatch::new(patch, cfg);
    prepared.gwn_with_cache(q, cfg, 0, cache)
}

/// Boundary integral of one trimming curve of `patch` (see
/// [`PreparedPatch::line_integral`]).
pub fn evaluate_line_integral(
    patch: &TrimmedPatch,
    curve_index: usize,
    q: Point3,
    axis: Axis,
    cfg: &GwnConfig,
) -> Result<f64> {
    let p = PreparedPatch::new(patch, cfg);
    Ok(
        p.line_integral(curve_index, q, axis, &Rotation::IDENTITY, cfg)?
            .0,
    )
}

/// Splits a patch into the part outside and the part inside a parameter
/// disk. The two winding numbers add up to the original one.
pub fn extract_parameter_disk(
    patch: &TrimmedPatch,
    center: ParamPoint,
    radius: f64,
) -> Result<(TrimmedPatch, TrimmedPatch)> {
    if !(radius > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "non-positive disk radius {radius}"
        )));
    }
    let curves: Vec<&RationalCurve2> = patch.curves().collect();
    let tol = default_edge_tolerance(&patch.surface().domain());
    let (o, i) = clip_loops(&curves, &Circle { center, radius }, tol)?;
    Ok((
        patch.with_loops(vec![o.into_iter().map(|p| p.curve).collect()]),
        patch.with_loops(vec![i.into_iter().map(|p| p.curve).collect()]),
    ))
}

/// Winding number of a whole model with per-patch diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGwn {
    pub value: f64,
    pub patches: Vec<std::result::Result<GwnResult, Error>>,
}

impl ModelGwn {
    pub fn unresolved(&self) -> bool {
        self.patches
            .iter()
            .any(|p| p.as_ref().map_or(true, |r| r.unresolved))
    }

    pub fn coincident(&self) -> bool {
        self.patches
            .iter()
            .any(|p| p.as_ref().is_ok_and(|r| r.coincident))
    }

    pub fn surface_evals(&self) -> u64 {
        self.patches
            .iter()
            .filter_map(|p| p.as_ref().ok())
            .map(|r| r.surface_evals)
            .sum()
    }
}

/// A model prepared for repeated queries.
#[derive(Debug)]
pub struct GwnEngine {
    cfg: GwnConfig,
    patches: Vec<PreparedPatch>,
}

impl GwnEngine {
    pub fn new(model: &Model, cfg: GwnConfig) -> Result<Self> {
        cfg.validate()?;
        let patches = model
            .patches
            .par_iter()
            .map(|p| PreparedPatch::new(p, &cfg))
            .collect();
        Ok(Self { cfg, patches })
    }

    pub fn config(&self) -> &GwnConfig {
        &self.cfg
    }

    pub fn patches(&self) -> &[PreparedPatch] {
        &self.patches
    }

    /// Sum of the patch winding numbers; patches that fail contribute
    /// nothing and are reported in `patches`.
    pub fn query(&self, q: Point3) -> ModelGwn {
        let patches: Vec<_> = self
            .patches
            .iter()
            .enumerate()
            .map(|(i, p)| p.gwn(q, &self.cfg, i as u64))
            .collect();
        let value = patches
            .iter()
            .filter_map(|p| p.as_ref().ok())
            .map(|r| r.value)
            .sum();
        ModelGwn { value, patches }
    }

    /// Queries in parallel on the current rayon pool; output order follows
    /// input order.
    pub fn query_batch(&self, qs: &[Point3]) -> Vec<ModelGwn> {
        qs.par_iter().map(|&q| self.query(q)).collect()
    }

    /// [`Self::query_batch`] on a dedicated pool of `threads` workers.
    pub fn query_batch_with_threads(&self, qs: &[Point3], threads: usize) -> Result<Vec<ModelGwn>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::Io(e.to_string()))?;
        Ok(pool.install(|| self.query_batch(qs)))
    }
}

/// One-shot model evaluation.
pub fn model_gwn(model: &Model, q: Point3, cfg: &GwnConfig) -> Result<ModelGwn> {
    Ok(GwnEngine::new(model, *cfg)?.query(q))
}

fn mix(seed: u64, q: Point3, salt: u64) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for w in [q.x.to_bits(), q.y.to_bits(), q.z.to_bits(), salt] {
        h ^= w;
        // splitmix64 finalizer
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

#[derive(Debug, Clone)]
struct WorkCurve<'a> {
    curve: Cow<'a, RationalCurve2>,
    /// Cache identity for curves of the original patch.
    key: Option<u32>,
}

/// A trimmed region of the prepared surface being evaluated.
struct Work<'a> {
    curves: Vec<WorkCurve<'a>>,
    region: Cow<'a, SearchRegion>,
    aabb: Aabb3,
    obb: Obb3,
    /// Parameter disk removed around a coincident boundary point.
    excluded: Option<(ParamPoint, f64)>,
    normal: Option<(Vec3, bool)>,
}

struct Partial {
    value: f64,
    correction: f64,
    case: CaseNode,
    coincident: bool,
    unresolved: bool,
}

enum Attempt {
    Done(Partial),
    Retry,
}

struct Ctx<'a> {
    cfg: &'a GwnConfig,
    cache: Option<&'a QuadratureCache>,
    surface: &'a NurbsPatch,
    ext: f64,
    diag: f64,
    evals: Cell<u64>,
    rng: RefCell<ChaCha8Rng>,
    rule: Arc<GaussRule>,
}

impl Ctx<'_> {
    fn nodes(
        &self,
        wc: &WorkCurve,
        span: usize,
        b: &BezierCurve2,
        t0: f64,
        t1: f64,
        depth: u32,
        path: u64,
    ) -> Result<Arc<[Node]>> {
        let key = match (self.cache, wc.key) {
            (Some(_), Some(curve)) => Some(NodeKey {
                curve,
                span: span as u32,
                depth: depth as u8,
                path,
                order: self.cfg.quad_order as u16,
            }),
            _ => None,
        };
        if let (Some(cache), Some(k)) = (self.cache, key.as_ref()) {
            if let Some(v) = cache.get(k) {
                return Ok(v);
            }
        }
        let h = t1 - t0;
        let mut out = Vec::with_capacity(self.rule.len());
        for (s, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let (uv, d) = b.eval(t0 + s * h);
            let sp = self.surface.eval_extended(uv, self.ext)?;
            out.push(Node {
                pos: sp.point,
                tan: (sp.du * d.u + sp.dv * d.v) * (w * h),
            });
        }
        self.evals.set(self.evals.get() + out.len() as u64);
        let v: Arc<[Node]> = out.into();
        Ok(match (self.cache, key) {
            (Some(cache), Some(k)) => cache.insert(k, v),
            _ => v,
        })
    }

    /// Rule value over `nodes`, and whether the segment is short compared
    /// with its distance to the singular line (otherwise a narrow peak can
    /// hide between the nodes of both the whole and the halves).
    fn sum(&self, nodes: &[Node], q: Point3, frame: &Rotation, axis: Axis) -> Result<(f64, bool)> {
        let mut s = 0.0;
        let mut len = 0.0;
        let mut rho = f64::INFINITY;
        for n in nodes {
            let x = frame.apply(n.pos - q);
            let t = frame.apply(n.tan);
            s += antiderivative_field(x, axis)?.dot(t);
            len += t.norm();
            let r2 = match axis {
                Axis::Z => x.x * x.x + x.y * x.y,
                Axis::X => x.y * x.y + x.z * x.z,
                Axis::Y => x.x * x.x + x.z * x.z,
            };
            rho = rho.min(r2);
        }
        Ok((s, len <= RESOLVED_RATIO * rho.sqrt()))
    }

    #[allow(clippy::too_many_arguments)]
    fn adapt(
        &self,
        wc: &WorkCurve,
        span: usize,
        b: &BezierCurve2,
        (t0, t1): (f64, f64),
        depth: u32,
        path: u64,
        whole: f64,
        q: Point3,
        frame: &Rotation,
        axis: Axis,
    ) -> Result<f64> {
        let tm = 0.5 * (t0 + t1);
        let ln = self.nodes(wc, span, b, t0, tm, depth + 1, path << 1)?;
        let rn = self.nodes(wc, span, b, tm, t1, depth + 1, (path << 1) | 1)?;
        let (l, l_ok) = self.sum(&ln, q, frame, axis)?;
        let (r, r_ok) = self.sum(&rn, q, frame, axis)?;
        if l_ok && r_ok && (whole - (l + r)).abs() < self.cfg.eps_quad {
            return Ok(l + r);
        }
        if depth + 1 >= self.cfg.max_quad_depth {
            return Err(Error::QuadratureFailure {
                depth: depth + 1,
                partial: l + r,
            });
        }
        Ok(self.adapt(
            wc,
            span,
            b,
            (t0, tm),
            depth + 1,
            path << 1,
            l,
            q,
            frame,
            axis,
        )? + self.adapt(
            wc,
            span,
            b,
            (tm, t1),
            depth + 1,
            (path << 1) | 1,
            r,
            q,
            frame,
            axis,
        )?)
    }

    fn curve_integral(
        &self,
        wc: &WorkCurve,
        q: Point3,
        frame: &Rotation,
        axis: Axis,
    ) -> Result<f64> {
        let mut total = 0.0;
        for (si, b) in wc.curve.beziers().iter().enumerate() {
            let (t0, t1) = b.range;
            let nodes = self.nodes(wc, si, b, t0, t1, 0, 0)?;
            let (whole, _) = self.sum(&nodes, q, frame, axis)?;
            total += if self.cfg.adaptive {
                self.adapt(wc, si, b, (t0, t1), 0, 0, whole, q, frame, axis)?
            } else {
                whole
            };
        }
        Ok(total)
    }

    fn boundary(
        &self,
        curves: &[WorkCurve],
        q: Point3,
        frame: &Rotation,
        axis: Axis,
    ) -> Result<f64> {
        let mut s = 0.0;
        for wc in curves {
            s += self.curve_integral(wc, q, frame, axis)?;
        }
        Ok(s)
    }

    fn random_direction(&self) -> Vec3 {
        random_unit_with(&mut *self.rng.borrow_mut())
    }

    fn gwn_work(&self, work: &Work, q: Point3, depth: u32, r: f64) -> Result<Partial> {
        if work.curves.is_empty() {
            return Ok(Partial {
                value: 0.0,
                correction: 0.0,
                case: CaseNode::leaf(GwnCase::FarFieldZ),
                coincident: false,
                unresolved: false,
            });
        }
        if let Some(p) = self.far_field(work, q)? {
            return Ok(p);
        }
        let mut dir = match work.normal {
            Some((d, false)) => d,
            _ => self.random_direction(),
        };
        let max = self.cfg.max_edge_recursion;
        for attempt in 0..=max {
            let permissive = attempt == max;
            match self.near_field(work, q, depth, r, dir, permissive)? {
                Attempt::Done(mut p) => {
                    if attempt > 0 {
                        p.case = CaseNode {
                            tag: GwnCase::EdgeTangentRotate,
                            children: vec![p.case],
                        };
                    }
                    return Ok(p);
                }
                Attempt::Retry => dir = self.random_direction(),
            }
        }
        unreachable!("the last attempt is permissive")
    }

    fn far_field(&self, work: &Work, q: Point3) -> Result<Option<Partial>> {
        let b = &work.aabb;
        let (tag, frame, axis) = if !b.contains(q) {
            let out = |i: usize| q[i] < b.min[i] || q[i] > b.max[i];
            if out(0) || out(1) {
                (GwnCase::FarFieldZ, Rotation::IDENTITY, Axis::Z)
            } else if out(2) {
                (GwnCase::FarFieldX, Rotation::IDENTITY, Axis::X)
            } else {
                (GwnCase::FarFieldY, Rotation::IDENTITY, Axis::Y)
            }
        } else if !work.obb.contains(q) {
            let l = work.obb.local(q);
            let k = (0..3)
                .max_by(|&a, &c| {
                    (l[a].abs() - work.obb.half_extents[a])
                        .total_cmp(&(l[c].abs() - work.obb.half_extents[c]))
                })
                .unwrap_or(0);
            let j = (k + 1) % 3;
            (
                GwnCase::FarFieldObbRotated,
                Rotation::to_z(work.obb.axes[j]),
                Axis::Z,
            )
        } else {
            return Ok(None);
        };
        let value = self.boundary(&work.curves, q, &frame, axis)?;
        Ok(Some(Partial {
            value,
            correction: 0.0,
            case: CaseNode::leaf(tag),
            coincident: false,
            unresolved: false,
        }))
    }

    fn near_field(
        &self,
        work: &Work,
        q: Point3,
        depth: u32,
        r: f64,
        dir: Vec3,
        permissive: bool,
    ) -> Result<Attempt> {
        let line =
            Line3::new(q, dir).ok_or_else(|| Error::Degenerate("zero line direction".into()))?;
        let opts = self.cfg.intersect_options(r);
        let view = SurfaceView {
            surface: self.surface,
            ext: self.ext,
            curves: work.curves.iter().map(|c| c.curve.as_ref()).collect(),
        };
        let mut unresolved = false;
        let recs = match intersections_in_region(&line, &view, &work.region, &opts) {
            Ok(r) => r,
            Err(_) if !permissive => return Ok(Attempt::Retry),
            Err(_) => {
                unresolved = true;
                Vec::new()
            }
        };
        let tol = self.cfg.coincident_tol * self.diag;
        let at_limit = depth >= self.cfg.max_edge_recursion || permissive;
        let mut coincident = false;
        let mut edges = Vec::new();
        let mut interior = Vec::new();
        for rec in recs {
            if let Some((c, rad)) = work.excluded {
                if rec.uv.distance(c) < rad {
                    continue;
                }
            }
            let near = rec.on_trim || rec.kind == IntersectionKind::NearBoundary;
            if rec.z0.abs() < tol {
                if near && work.excluded.is_none() {
                    return self
                        .coincident_boundary(work, q, rec.uv, depth, r)
                        .map(Attempt::Done);
                }
                coincident |= rec.visible;
                continue;
            }
            match rec.kind {
                IntersectionKind::Tangent if !permissive => return Ok(Attempt::Retry),
                IntersectionKind::Cusp if depth > 0 && !permissive => return Ok(Attempt::Retry),
                IntersectionKind::Cusp | IntersectionKind::NearBoundary if !at_limit => {
                    edges.push(rec)
                }
                _ => {
                    if rec.visible {
                        unresolved |= rec.on_trim;
                        interior.push(rec);
                    }
                }
            }
        }
        let mut centers: Vec<ParamPoint> = Vec::new();
        for e in &edges {
            if centers.iter().all(|c| c.distance(e.uv) >= r) {
                centers.push(e.uv);
            }
        }
        let mut correction = 0.0;
        for rec in &interior {
            if centers.iter().any(|c| c.distance(rec.uv) < r) {
                continue;
            }
            let s = rec.normal.dot(line.direction) * rec.z0;
            correction += if s > 0.0 { 0.5 } else { -0.5 };
        }
        let frame = Rotation::to_z(line.direction);
        let base_tag = if coincident {
            GwnCase::CoincidentSurface
        } else {
            GwnCase::NearField
        };
        if centers.is_empty() {
            let value = match self.boundary(&work.curves, q, &frame, Axis::Z) {
                Ok(v) => v,
                Err(_) if !permissive => return Ok(Attempt::Retry),
                Err(Error::QuadratureFailure { partial, .. }) => {
                    unresolved = true;
                    partial
                }
                Err(e) => return Err(e),
            };
            return Ok(Attempt::Done(Partial {
                value: value + correction,
                correction,
                case: CaseNode::leaf(base_tag),
                coincident,
                unresolved,
            }));
        }

        // carve out disks one after another so the pieces stay disjoint
        let edge_tol = work.region.edge_tol;
        let mut outer: Vec<WorkCurve<'static>> = work.curves.iter().cloned().map(own).collect();
        let mut disks: Vec<(ParamPoint, Vec<WorkCurve<'static>>)> = Vec::new();
        for &c in &centers {
            let refs: Vec<&RationalCurve2> = outer.iter().map(|w| w.curve.as_ref()).collect();
            let (o, i) = clip_loops(
                &refs,
                &Circle {
                    center: c,
                    radius: r,
                },
                edge_tol,
            )?;
            let inner = adopt(i, &outer);
            let next = adopt(o, &outer);
            disks.push((c, inner));
            outer = next;
        }
        let value = match self.boundary(&outer, q, &frame, Axis::Z) {
            Ok(v) => v,
            Err(_) if !permissive => return Ok(Attempt::Retry),
            Err(Error::QuadratureFailure { partial, .. }) => {
                unresolved = true;
                partial
            }
            Err(e) => return Err(e),
        };
        let mut total = value + correction;
        let mut children = vec![CaseNode::leaf(base_tag)];
        let r_next = 0.25 * r;
        for (c, curves) in disks {
            if curves.is_empty() {
                continue;
            }
            let mut rect = Aabb2::empty();
            for wc in &curves {
                rect.merge(&wc.curve.bbox());
            }
            let region = SearchRegion::over(self.surface, rect.expanded(r_next), self.ext);
            let normal = self
                .surface
                .eval_extended(c, self.ext)
                .ok()
                .and_then(|sp| sp.normal().normalized())
                .map(|n| (n, false));
            let sub = Work {
                aabb: region.aabb(),
                obb: region.obb(),
                region: Cow::Owned(region),
                curves,
                excluded: None,
                normal,
            };
            let p = self.gwn_work(&sub, q, depth + 1, r_next)?;
            total += p.value;
            correction += p.correction;
            coincident |= p.coincident;
            unresolved |= p.unresolved;
            children.push(p.case);
        }
        Ok(Attempt::Done(Partial {
            value: total,
            correction,
            case: CaseNode {
                tag: GwnCase::EdgeDisk,
                children,
            },
            coincident,
            unresolved,
        }))
    }

    /// The query lies on (or next to) the boundary: remove a small disk
    /// around its preimage, give the disk a zero contribution, evaluate the
    /// rest normally.
    fn coincident_boundary(
        &self,
        work: &Work,
        q: Point3,
        uv: ParamPoint,
        depth: u32,
        r: f64,
    ) -> Result<Partial> {
        let rad = self.cfg.coincident_disk_factor * r;
        let refs: Vec<&RationalCurve2> = work.curves.iter().map(|w| w.curve.as_ref()).collect();
        let (o, _) = clip_loops(
            &refs,
            &Circle {
                center: uv,
                radius: rad,
            },
            work.region.edge_tol,
        )?;
        let curves = adopt(o, &work.curves);
        let sub = Work {
            curves,
            region: Cow::Owned(work.region.as_ref().clone()),
            aabb: work.aabb,
            obb: work.obb,
            excluded: Some((uv, rad)),
            normal: work.normal,
        };
        let p = self.gwn_work(&sub, q, depth, r)?;
        Ok(Partial {
            case: CaseNode {
                tag: GwnCase::CoincidentBoundary,
                children: vec![p.case],
            },
            coincident: true,
            ..p
        })
    }
}

/// Clipped pieces as work curves; untouched curves keep their cache key.
fn adopt(pieces: Vec<ClipPiece>, from: &[WorkCurve]) -> Vec<WorkCurve<'static>> {
    pieces
        .into_iter()
        .map(|p| match p.source {
            Some(s) => WorkCurve {
                curve: Cow::Owned(from[s].curve.as_ref().clone()),
                key: from[s].key,
            },
            None => WorkCurve {
                curve: Cow::Owned(p.curve),
                key: None,
            },
        })
        .collect()
}

fn own(w: WorkCurve<'_>) -> WorkCurve<'static> {
    WorkCurve {
        curve: Cow::Owned(w.curve.into_owned()),
        key: w.key,
    }
}
