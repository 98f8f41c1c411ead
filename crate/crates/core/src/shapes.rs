//! Ready-made test geometry: exact rational sphere and torus, boxes, flat
//! and domed disks sharing one boundary circle, triangles as degenerate
//! bilinear patches, and random bicubic patches.

use rand::Rng;

use crate::geom::{ParamPoint, Point3, Rotation, Vec3};
use crate::kernel::{
    circle_loop, KnotVector, LoopOrientation, Model, NurbsPatch, RationalCurve2, TrimmedPatch,
};

/// The z < 0 face of Cobb's six-patch sphere: a biquartic rational Bézier
/// patch on the unit sphere, as homogeneous control points.
fn cobb_face() -> NurbsPatch {
    let r2 = 2f64.sqrt();
    let r3 = 3f64.sqrt();
    let r6 = 6f64.sqrt();
    let a = 4.0 * (1.0 - r3);
    let b = r2 * (r3 - 4.0);
    let c = 4.0 * (1.0 - 2.0 * r3) / 3.0;
    let d = (2.0 - 3.0 * r3) / 2.0;
    let e = -(r3 + 6.0) / 2.0;
    let f = r2 * (2.0 * r3 - 7.0) / 3.0;
    let g = -5.0 * r6 / 3.0;
    let h = 4.0 * (r3 - 5.0) / 3.0;
    #[rustfmt::skip]
    let rows: [[[f64; 3]; 5]; 5] = [
        [[a, a, a], [b, -r2, b], [c, 0.0, c], [b, r2, b], [a, -a, a]],
        [[-r2, b, b], [d, d, e], [f, 0.0, g], [d, -d, e], [-r2, -b, b]],
        [[0.0, c, c], [0.0, f, g], [0.0, 0.0, h], [0.0, -f, g], [0.0, -c, c]],
        [[r2, b, b], [-d, d, e], [-f, 0.0, g], [-d, -d, e], [r2, -b, b]],
        [[-a, a, a], [-b, -r2, b], [-c, 0.0, c], [-b, r2, b], [-a, -a, a]],
    ];
    let w0 = [
        4.0 * (3.0 - r3),
        r2 * (3.0 * r3 - 2.0),
        4.0 * (5.0 - r3) / 3.0,
    ];
    let w1 = [
        r2 * (3.0 * r3 - 2.0),
        (r3 + 6.0) / 2.0,
        r2 * (r3 + 6.0) / 3.0,
    ];
    let w2 = [
        4.0 * (5.0 - r3) / 3.0,
        r2 * (r3 + 6.0) / 3.0,
        4.0 * (5.0 * r3 - 1.0) / 9.0,
    ];
    let wrow = |w: [f64; 3]| [w[0], w[1], w[2], w[1], w[0]];
    let weights = [wrow(w0), wrow(w1), wrow(w2), wrow(w1), wrow(w0)];
    let mut control = Vec::with_capacity(25);
    let mut ws = Vec::with_capacity(25);
    for i in 0..5 {
        for j in 0..5 {
            let w = weights[i][j];
            let p = rows[i][j];
            control.push(Vec3::new(p[0] / w, p[1] / w, p[2] / w));
            ws.push(w);
        }
    }
    NurbsPatch::bezier(4, 4, control, ws).expect("sphere face data is valid")
}

/// Flips the parameterization if `S_u × S_v` at the domain center points
/// against `outward(point)`.
fn orient(surface: NurbsPatch, outward: impl Fn(Point3) -> Vec3) -> NurbsPatch {
    let d = surface.domain();
    let mid = ParamPoint::new(0.5 * (d.min.u + d.max.u), 0.5 * (d.min.v + d.max.v));
    let sp = surface.eval(mid).expect("center is in the domain");
    if sp.normal().dot(outward(sp.point)) < 0.0 {
        surface.swapped_uv()
    } else {
        surface
    }
}

/// Closed sphere from six biquartic rational patches (exact, watertight),
/// normals pointing outward.
pub fn cobb_sphere(center: Point3, radius: f64) -> Model {
    let face = cobb_face();
    let frames = [
        ("-z", Rotation::IDENTITY),
        ("+z", Rotation::from_frame(Vec3::X, -Vec3::Y, -Vec3::Z)),
        (
            "-x",
            Rotation::from_frame(Vec3::new(0.0, 0.0, 1.0), Vec3::Y, -Vec3::X),
        ),
        ("+x", Rotation::from_frame(-Vec3::Z, Vec3::Y, Vec3::X)),
        ("-y", Rotation::from_frame(Vec3::X, Vec3::Z, -Vec3::Y)),
        ("+y", Rotation::from_frame(Vec3::X, -Vec3::Z, Vec3::Y)),
    ];
    let patches = frames
        .iter()
        .map(|(name, rot)| {
            let s = scaled(&face.transformed(rot, Vec3::ZERO), radius, center);
            TrimmedPatch::untrimmed(orient(s, |p| p - center)).with_id(format!("sphere{name}"))
        })
        .collect();
    Model::new(patches)
}

fn scaled(s: &NurbsPatch, k: f64, offset: Vec3) -> NurbsPatch {
    NurbsPatch::new(
        s.knots_u().clone(),
        s.knots_v().clone(),
        s.control().iter().map(|&p| p * k + offset).collect(),
        s.weights().to_vec(),
    )
    .expect("scaling keeps a valid surface")
}

/// Half circle of radius 1 from angle `a0` as a two-span rational
/// quadratic: control points and weights.
fn half_circle(a0: f64) -> (Vec<(f64, f64)>, Vec<f64>) {
    let w = std::f64::consts::FRAC_1_SQRT_2;
    let pts = (0..5)
        .map(|k| {
            let t = a0 + k as f64 * std::f64::consts::FRAC_PI_4;
            if k % 2 == 1 {
                // corner of the tangent square
                (t.cos() / w, t.sin() / w)
            } else {
                (t.cos(), t.sin())
            }
        })
        .collect();
    (pts, vec![1.0, w, 1.0, w, 1.0])
}

/// Torus around the z axis from four rational biquadratic patches, each
/// covering half a turn in both directions.
pub fn torus(center: Point3, major: f64, minor: f64) -> Model {
    let knots =
        KnotVector::new(vec![0.0, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 1.0], 2).expect("valid knots");
    let mut patches = Vec::new();
    for (iu, a0) in [0.0, std::f64::consts::PI].into_iter().enumerate() {
        for (iv, b0) in [0.0, std::f64::consts::PI].into_iter().enumerate() {
            let (cu, wu) = half_circle(a0);
            let (cv, wv) = half_circle(b0);
            let mut control = Vec::new();
            let mut weights = Vec::new();
            for (i, &(cx, cy)) in cu.iter().enumerate() {
                for (j, &(cr, cz)) in cv.iter().enumerate() {
                    let rho = major + minor * cr;
                    control.push(center + Vec3::new(rho * cx, rho * cy, minor * cz));
                    weights.push(wu[i] * wv[j]);
                }
            }
            let s = NurbsPatch::new(knots.clone(), knots.clone(), control, weights)
                .expect("valid torus patch");
            let s = orient(s, |p| {
                let d = p - center;
                let radial = Vec3::new(d.x, d.y, 0.0).normalized().unwrap_or(Vec3::X) * major;
                d - radial
            });
            patches.push(TrimmedPatch::untrimmed(s).with_id(format!("torus{iu}{iv}")));
        }
    }
    Model::new(patches)
}

/// Axis-aligned box from six bilinear faces with outward normals.
pub fn box_model(min: Point3, max: Point3) -> Model {
    let c = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let center = (min + max) * 0.5;
    let faces = [
        ("-x", [0, 2, 4, 6]),
        ("+x", [1, 3, 5, 7]),
        ("-y", [0, 1, 4, 5]),
        ("+y", [2, 3, 6, 7]),
        ("-z", [0, 1, 2, 3]),
        ("+z", [4, 5, 6, 7]),
    ];
    let patches = faces
        .iter()
        .map(|(name, f)| {
            let s = NurbsPatch::bilinear(c(f[0]), c(f[1]), c(f[2]), c(f[3]));
            TrimmedPatch::untrimmed(orient(s, |p| p - center)).with_id(format!("box{name}"))
        })
        .collect();
    Model::new(patches)
}

/// Unit square in the z = 0 plane, normal +z.
pub fn unit_square() -> TrimmedPatch {
    TrimmedPatch::untrimmed(NurbsPatch::bilinear(
        Vec3::ZERO,
        Vec3::X,
        Vec3::Y,
        Vec3::new(1.0, 1.0, 0.0),
    ))
}

/// Planar square `[-s, s]²` at height 0 with parameters equal to x and y.
fn square_domain_patch(s: f64, z: impl Fn(f64, f64) -> f64) -> NurbsPatch {
    // biquadratic net reproducing (u, v, z(u, v)) for z of degree ≤ 2 per
    // variable: the middle row holds the polar values
    let t = [-s, 0.0, s];
    let mut control = Vec::new();
    for &u in &t {
        for &v in &t {
            control.push(Vec3::new(u, v, z(u, v)));
        }
    }
    NurbsPatch::new(
        KnotVector::bezier(2, -s, s),
        KnotVector::bezier(2, -s, s),
        control,
        vec![1.0; 9],
    )
    .expect("valid planar net")
}

/// Flat disk of radius `r` in the z = 0 plane, normal +z: a square
/// trimmed by a circle.
pub fn flat_disk(r: f64) -> TrimmedPatch {
    let s = square_domain_patch(1.5 * r, |_, _| 0.0);
    TrimmedPatch::new(
        s,
        vec![circle_loop(
            ParamPoint::new(0.0, 0.0),
            r,
            LoopOrientation::CounterClockwise,
        )],
    )
    .with_id("disk")
}

/// Paraboloid cap `z = h (1 − (x² + y²)/r²)` trimmed by the same circle as
/// [`flat_disk`], so both share one boundary curve in space.
pub fn dome(r: f64, h: f64) -> TrimmedPatch {
    let s = 1.5 * r;
    let k = h / (r * r);
    // polar form of u² on [-s, s] at the middle node is -s²
    let zc = |u: f64, v: f64| {
        let pu = if u == 0.0 { -s * s } else { u * u };
        let pv = if v == 0.0 { -s * s } else { v * v };
        h - k * (pu + pv)
    };
    let surf = square_domain_patch(s, zc);
    TrimmedPatch::new(
        surf,
        vec![circle_loop(
            ParamPoint::new(0.0, 0.0),
            r,
            LoopOrientation::CounterClockwise,
        )],
    )
    .with_id("dome")
}

/// Triangle `a, b, c` as a bilinear patch collapsed at `c`; the normal
/// follows the vertex order.
pub fn triangle_patch(a: Point3, b: Point3, c: Point3) -> TrimmedPatch {
    TrimmedPatch::untrimmed(NurbsPatch::bilinear(a, b, c, c))
}

/// Bicubic Bézier patch over the unit square with random heights and
/// weights; untrimmed unless `trimmed`, then cut by a random circle.
pub fn random_bicubic<R: Rng>(rng: &mut R, trimmed: bool) -> TrimmedPatch {
    let mut control = Vec::with_capacity(16);
    let mut weights = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            let x = i as f64 / 3.0 + rng.gen_range(-0.08..0.08);
            let y = j as f64 / 3.0 + rng.gen_range(-0.08..0.08);
            control.push(Vec3::new(x, y, rng.gen_range(-0.4..0.4)));
            weights.push(rng.gen_range(0.5..2.0));
        }
    }
    let s = NurbsPatch::bezier(3, 3, control, weights).expect("random net is valid");
    if trimmed {
        let c = ParamPoint::new(rng.gen_range(0.35..0.65), rng.gen_range(0.35..0.65));
        let r = rng.gen_range(0.15..0.3);
        TrimmedPatch::new(
            s,
            vec![circle_loop(c, r, LoopOrientation::CounterClockwise)],
        )
    } else {
        TrimmedPatch::untrimmed(s)
    }
}

/// Parameter-space square loop, counterclockwise.
pub fn square_loop(min: ParamPoint, max: ParamPoint) -> Vec<RationalCurve2> {
    let c = [
        min,
        ParamPoint::new(max.u, min.v),
        max,
        ParamPoint::new(min.u, max.v),
    ];
    (0..4)
        .map(|k| RationalCurve2::line(c[k], c[(k + 1) % 4]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cobb_face_lies_on_the_unit_sphere() {
        let f = cobb_face();
        for i in 0..=8 {
            for j in 0..=8 {
                let p = f
                    .eval(ParamPoint::new(i as f64 / 8.0, j as f64 / 8.0))
                    .unwrap()
                    .point;
                assert!((p.norm() - 1.0).abs() < 1e-12, "{p:?}");
                assert!(p.z < 0.0);
            }
        }
    }

    #[test]
    fn sphere_faces_point_outward_and_meet() {
        let m = cobb_sphere(Vec3::new(1.0, 2.0, 3.0), 2.0);
        assert_eq!(m.len(), 6);
        for p in &m.patches {
            let sp = p.eval(ParamPoint::new(0.3, 0.6)).unwrap();
            let d = sp.point - Vec3::new(1.0, 2.0, 3.0);
            assert!((d.norm() - 2.0).abs() < 1e-12);
            assert!(sp.normal().dot(d) > 0.0);
        }
    }

    #[test]
    fn torus_points_have_the_right_tube_distance() {
        let m = torus(Vec3::ZERO, 2.0, 0.5);
        for p in &m.patches {
            for (u, v) in [(0.1, 0.2), (0.5, 0.5), (0.9, 0.7)] {
                let sp = p.eval(ParamPoint::new(u, v)).unwrap();
                let q = sp.point;
                let rho = (q.x * q.x + q.y * q.y).sqrt();
                assert!((((rho - 2.0).powi(2) + q.z * q.z).sqrt() - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dome_matches_paraboloid() {
        let d = dome(1.0, 0.5);
        for (u, v) in [(0.0, 0.0), (0.3, -0.2), (1.0, 0.0)] {
            let p = d.eval(ParamPoint::new(u, v)).unwrap().point;
            assert!((p.x - u).abs() < 1e-14 && (p.y - v).abs() < 1e-14);
            assert!((p.z - 0.5 * (1.0 - u * u - v * v)).abs() < 1e-14);
        }
    }
}
