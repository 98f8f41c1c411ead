//! Reference methods: exact triangle winding numbers, triangle meshes,
//! oriented point clouds, direct surface quadrature, and a parametric
//! tessellator for trimmed patches.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gauss::GaussRule;
use crate::geom::{Aabb2, ParamPoint, Point3, Vec3};
use crate::kernel::{Model, TrimmedPatch};
use crate::winding2d::{default_edge_tolerance, trim_contains};

/// Triangles with orientation given by vertex order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleSoup {
    pub triangles: Vec<[Point3; 3]>,
}

impl TriangleSoup {
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|[a, b, c]| 0.5 * (*b - *a).cross(*c - *a).norm())
            .sum()
    }
}

/// Winding number of one triangle: its signed solid angle over 4π.
/// Points in the triangle's plane get 0.
pub fn triangle_gwn(a: Point3, b: Point3, c: Point3, q: Point3) -> f64 {
    let (a, b, c) = (a - q, b - q, c - q);
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(b.cross(c));
    let den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    if num == 0.0 {
        return 0.0;
    }
    num.atan2(den) / (2.0 * PI)
}

pub fn mesh_gwn(soup: &TriangleSoup, q: Point3) -> f64 {
    soup.triangles
        .iter()
        .map(|t| triangle_gwn(t[0], t[1], t[2], q))
        .sum()
}

/// Surface sample with unit normal and area weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudSample {
    pub point: Point3,
    pub normal: Vec3,
    pub area: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OrientedPointCloud {
    pub samples: Vec<CloudSample>,
}

impl OrientedPointCloud {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.samples.iter().map(|s| s.area).sum()
    }
}

/// Dipole sum over the cloud.
pub fn cloud_gwn(cloud: &OrientedPointCloud, q: Point3) -> Result<f64> {
    let mut s = 0.0;
    for (i, smp) in cloud.samples.iter().enumerate() {
        let d = smp.point - q;
        let r = d.norm();
        if r <= 1e-12 {
            return Err(Error::SingularSample(i));
        }
        s += smp.area * d.dot(smp.normal) / (r * r * r);
    }
    Ok(s / (4.0 * PI))
}

/// Samples a patch at the centers of an `n × n` grid over its active
/// parameter rectangle, keeping visible ones, with weights from the
/// surface Jacobian.
pub fn sample_patch(patch: &TrimmedPatch, n: usize) -> Result<OrientedPointCloud> {
    let rect = patch.active_rect();
    let tol = default_edge_tolerance(&patch.surface().domain());
    let (du, dv) = cell_size(&rect, n);
    let mut samples = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let uv = ParamPoint::new(
                rect.min.u + (i as f64 + 0.5) * du,
                rect.min.v + (j as f64 + 0.5) * dv,
            );
            if !trim_contains(uv, patch.curves(), tol)?.0 {
                continue;
            }
            let sp = patch.eval(uv)?;
            let nrm = sp.normal();
            let Some(unit) = nrm.normalized() else {
                continue;
            };
            samples.push(CloudSample {
                point: sp.point,
                normal: unit,
                area: nrm.norm() * du * dv,
            });
        }
    }
    Ok(OrientedPointCloud { samples })
}

/// [`sample_patch`] over every patch of a model.
pub fn sample_model(model: &Model, n: usize) -> Result<OrientedPointCloud> {
    let mut samples = Vec::new();
    for p in &model.patches {
        samples.extend(sample_patch(p, n)?.samples);
    }
    Ok(OrientedPointCloud { samples })
}

fn cell_size(rect: &Aabb2, n: usize) -> (f64, f64) {
    let n = n.max(1) as f64;
    ((rect.max.u - rect.min.u) / n, (rect.max.v - rect.min.v) / n)
}

/// `n × n` grid over the active parameter rectangle, two triangles per
/// cell, cells whose center is trimmed away dropped. Triangles follow the
/// patch normal.
pub fn tessellate_trimmed(patch: &TrimmedPatch, n: usize) -> Result<TriangleSoup> {
    if n < 2 {
        return Err(Error::InvalidGeometry(format!(
            "tessellation needs n >= 2, got {n}"
        )));
    }
    let rect = patch.active_rect();
    let tol = default_edge_tolerance(&patch.surface().domain());
    let (du, dv) = cell_size(&rect, n);
    let at = |i: usize, j: usize| {
        ParamPoint::new(rect.min.u + i as f64 * du, rect.min.v + j as f64 * dv)
    };
    let mut grid = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            grid.push(patch.eval(at(i, j))?.point);
        }
    }
    let g = |i: usize, j: usize| grid[i * (n + 1) + j];
    let mut triangles = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let c = ParamPoint::new(
                rect.min.u + (i as f64 + 0.5) * du,
                rect.min.v + (j as f64 + 0.5) * dv,
            );
            if !trim_contains(c, patch.curves(), tol)?.0 {
                continue;
            }
            triangles.push([g(i, j), g(i + 1, j), g(i + 1, j + 1)]);
            triangles.push([g(i, j), g(i + 1, j + 1), g(i, j + 1)]);
        }
    }
    Ok(TriangleSoup { triangles })
}

pub fn tessellate_model(model: &Model, n: usize) -> Result<TriangleSoup> {
    let mut triangles = Vec::new();
    for p in &model.patches {
        triangles.extend(tessellate_trimmed(p, n)?.triangles);
    }
    Ok(TriangleSoup { triangles })
}

/// Direct tensor-product Gauss–Legendre integration of the solid-angle
/// integrand over the patch's parameter domain, span by span. Nodes
/// outside the trimmed region contribute nothing. Returns the value and
/// the number of surface evaluations.
///
/// The adaptive variant splits a rectangle into four until the children
/// agree with their parent to `eps_quad`.
pub fn surface_quadrature_gwn(
    patch: &TrimmedPatch,
    q: Point3,
    order: usize,
    adaptive: bool,
    eps_quad: f64,
) -> Result<(f64, u64)> {
    if order < 1 {
        return Err(Error::InvalidGeometry(
            "quadrature order must be positive".into(),
        ));
    }
    let rule = GaussRule::cached(order);
    let untrimmed = is_untrimmed(patch);
    let tol = default_edge_tolerance(&patch.surface().domain());
    let mut evals = 0u64;
    let mut rect_value = |r: &Aabb2| -> Result<f64> {
        let (w, h) = (r.max.u - r.min.u, r.max.v - r.min.v);
        let mut s = 0.0;
        for (a, wa) in rule.nodes.iter().zip(&rule.weights) {
            for (b, wb) in rule.nodes.iter().zip(&rule.weights) {
                let uv = ParamPoint::new(r.min.u + a * w, r.min.v + b * h);
                if !untrimmed && !trim_contains(uv, patch.curves(), tol)?.0 {
                    continue;
                }
                let sp = patch.eval(uv)?;
                evals += 1;
                let d = sp.point - q;
                let r2 = d.norm_squared();
                if r2 == 0.0 {
                    return Err(Error::SingularIntegrand);
                }
                s += wa * wb * d.dot(sp.normal()) / (r2 * r2.sqrt());
            }
        }
        Ok(s * w * h / (4.0 * PI))
    };
    let mut total = 0.0;
    for span in patch.surface().bezier_spans() {
        let whole = rect_value(&span.range)?;
        total += if adaptive {
            adapt_rect(&mut rect_value, span.range, whole, eps_quad, 0)?
        } else {
            whole
        };
    }
    Ok((total, evals))
}

const MAX_RECT_DEPTH: u32 = 30;

fn adapt_rect(
    f: &mut impl FnMut(&Aabb2) -> Result<f64>,
    r: Aabb2,
    whole: f64,
    eps: f64,
    depth: u32,
) -> Result<f64> {
    let mu = 0.5 * (r.min.u + r.max.u);
    let mv = 0.5 * (r.min.v + r.max.v);
    let kids = [
        Aabb2::new(r.min, ParamPoint::new(mu, mv)),
        Aabb2::new(ParamPoint::new(mu, r.min.v), ParamPoint::new(r.max.u, mv)),
        Aabb2::new(ParamPoint::new(r.min.u, mv), ParamPoint::new(mu, r.max.v)),
        Aabb2::new(ParamPoint::new(mu, mv), r.max),
    ];
    let mut vals = [0.0; 4];
    for (v, k) in vals.iter_mut().zip(&kids) {
        *v = f(k)?;
    }
    let sum: f64 = vals.iter().sum();
    if (whole - sum).abs() < eps {
        return Ok(sum);
    }
    if depth + 1 >= MAX_RECT_DEPTH {
        return Err(Error::QuadratureFailure {
            depth: depth + 1,
            partial: sum,
        });
    }
    let mut total = 0.0;
    for (k, v) in kids.iter().zip(vals) {
        total += adapt_rect(f, *k, v, eps, depth + 1)?;
    }
    Ok(total)
}

/// True when the loops are exactly the four domain edges.
fn is_untrimmed(patch: &TrimmedPatch) -> bool {
    let d = patch.surface().domain();
    let t = patch.trim_bbox();
    patch.curve_count() == 4
        && patch
            .curves()
            .all(|c| c.degree() == 1 && c.control().len() == 2)
        && t == d
}

/// Regular icosahedron inscribed in the sphere of `radius`, outward
/// orientation.
pub fn icosahedron(center: Point3, radius: f64) -> TriangleSoup {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, g, 0.0),
        (1.0, g, 0.0),
        (-1.0, -g, 0.0),
        (1.0, -g, 0.0),
        (0.0, -1.0, g),
        (0.0, 1.0, g),
        (0.0, -1.0, -g),
        (0.0, 1.0, -g),
        (g, 0.0, -1.0),
        (g, 0.0, 1.0),
        (-g, 0.0, -1.0),
        (-g, 0.0, 1.0),
    ];
    let v: Vec<Point3> = raw
        .iter()
        .map(|&(x, y, z)| center + Vec3::new(x, y, z) * (radius / (1.0 + g * g).sqrt()))
        .collect();
    #[rustfmt::skip]
    let faces: [[usize; 3]; 20] = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    let triangles = faces
        .iter()
        .map(|f| {
            let t = [v[f[0]], v[f[1]], v[f[2]]];
            // make every face point away from the center
            let n = (t[1] - t[0]).cross(t[2] - t[0]);
            if n.dot(t[0] - center) < 0.0 {
                [t[0], t[2], t[1]]
            } else {
                t
            }
        })
        .collect();
    TriangleSoup { triangles }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn octant_triangle() {
        let w = triangle_gwn(Vec3::X, Vec3::Y, Vec3::Z, Vec3::ZERO);
        assert!((w - 0.125).abs() < 1e-15);
        assert_eq!(
            triangle_gwn(Vec3::X, Vec3::Y, Vec3::Z, Vec3::new(2.0, 2.0, -3.0)),
            0.0
        );
        assert_eq!(triangle_gwn(Vec3::X, Vec3::Z, Vec3::Y, Vec3::ZERO), -w);
    }

    #[test]
    fn icosahedron_is_watertight() {
        let m = icosahedron(Vec3::ZERO, 1.0);
        assert!((mesh_gwn(&m, Vec3::ZERO) - 1.0).abs() < 1e-12);
        assert!(mesh_gwn(&m, Vec3::new(1.5, 0.2, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn flat_tessellation() {
        let s = tessellate_trimmed(&shapes::unit_square(), 2).unwrap();
        assert_eq!(s.len(), 8);
        assert!((s.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hole_drops_cells() {
        let sq = shapes::unit_square();
        let mut loops = sq.loops().to_vec();
        loops.push(crate::kernel::circle_loop(
            ParamPoint::new(0.5, 0.5),
            0.2,
            crate::kernel::LoopOrientation::Clockwise,
        ));
        let holed = sq.with_loops(loops);
        // 3×3 grid: only the middle cell center lies in the hole
        assert_eq!(tessellate_trimmed(&holed, 3).unwrap().len(), 16);
    }

    #[test]
    fn fixed_surface_quadrature_counts() {
        let m = shapes::cobb_sphere(Vec3::ZERO, 1.0);
        let (_, n) =
            surface_quadrature_gwn(&m.patches[0], Vec3::new(0.1, 0.2, 0.3), 20, false, 1e-6)
                .unwrap();
        assert_eq!(n, 400);
    }

    #[test]
    fn flat_square_on_axis() {
        let q = Vec3::new(0.5, 0.5, 3.0);
        let (w, _) = surface_quadrature_gwn(&shapes::unit_square(), q, 20, false, 1e-6).unwrap();
        let exact = -4.0 * (0.25 / (3.0 * (0.5f64 + 9.0).sqrt())).atan() / (4.0 * PI);
        assert!((w - exact).abs() < 1e-10);
    }

    #[test]
    fn cloud_rejects_sample_hits() {
        let cloud = OrientedPointCloud {
            samples: vec![CloudSample {
                point: Vec3::X,
                normal: Vec3::X,
                area: 1.0,
            }],
        };
        assert_eq!(cloud_gwn(&cloud, Vec3::X), Err(Error::SingularSample(0)));
    }
}
