use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trimwind::baselines::{icosahedron, mesh_gwn, triangle_gwn};
use trimwind::io::model::{parse_model, serialize_model};
use trimwind::winding2d::gwn2d;
use trimwind::{
    circle_loop, extract_parameter_disk, patch_gwn, shapes, GwnConfig, GwnEngine, LoopOrientation,
    Model, ParamPoint, Point3, Rotation, TrimmedPatch, Vec3,
};

fn vec3() -> impl Strategy<Value = Vec3> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn direction() -> impl Strategy<Value = Vec3> {
    vec3().prop_filter_map("nonzero", |v| v.normalized())
}

/// Same surface with the normal reversed: swap u and v and reverse the
/// loops so they stay counterclockwise.
fn flipped(p: &TrimmedPatch) -> TrimmedPatch {
    let swap = |q: ParamPoint| ParamPoint::new(q.v, q.u);
    let loops = p
        .loops()
        .iter()
        .map(|l| {
            l.iter()
                .rev()
                .map(|c| c.map_points(swap).reversed())
                .collect()
        })
        .collect();
    TrimmedPatch::new(p.surface().swapped_uv(), loops)
}

fn bicubic(seed: u64, trimmed: bool) -> TrimmedPatch {
    shapes::random_bicubic(&mut ChaCha8Rng::seed_from_u64(seed), trimmed)
}

/// Rough guard against queries on the surface: outside the padded box, or
/// clear of a 20×10 sample grid.
fn off_surface(p: &TrimmedPatch, q: Point3) -> bool {
    let b = p.aabb();
    !b.expanded(1e-3).contains(q)
        || (0..200).all(|k| {
            let uv = ParamPoint::new((k % 20) as f64 / 19.0, (k / 20) as f64 / 9.0);
            p.eval(uv).map_or(true, |s| s.point.distance(q) > 2e-2)
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rigid_motion_leaves_sphere_values_unchanged(axis in direction(), angle in 0.0..std::f64::consts::TAU, t in vec3(), q in vec3()) {
        prop_assume!((q.norm() - 1.0).abs() > 1e-2);
        let base = shapes::cobb_sphere(Vec3::ZERO, 1.0);
        let rot = Rotation::to_z(axis).compose(&Rotation::from_frame(
            Vec3::new(angle.cos(), angle.sin(), 0.0),
            Vec3::new(-angle.sin(), angle.cos(), 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ));
        let moved = Model::new(base.patches.iter().map(|p| p.transformed(&rot, t)).collect());
        let cfg = GwnConfig::default();
        let a = GwnEngine::new(&base, cfg).unwrap().query(q).value;
        let b = GwnEngine::new(&moved, cfg).unwrap().query(rot.apply(q - t)).value;
        prop_assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }

    #[test]
    fn reversing_orientation_negates(seed in any::<u64>(), trimmed in any::<bool>(), q in vec3()) {
        let p = bicubic(seed, trimmed);
        prop_assume!(off_surface(&p, q));
        let cfg = GwnConfig::default();
        let a = patch_gwn(&p, q, &cfg, None).unwrap().value;
        let b = patch_gwn(&flipped(&p), q, &cfg, None).unwrap().value;
        prop_assert!((a + b).abs() < 4.0 * cfg.eps_quad, "{a} vs {b}");
    }

    #[test]
    fn line_direction_does_not_matter(seed in any::<u64>(), s1 in any::<u64>(), s2 in any::<u64>(), q in vec3()) {
        let p = bicubic(seed, true);
        prop_assume!(off_surface(&p, q));
        let c1 = GwnConfig { rng_seed: s1, ..GwnConfig::default() };
        let c2 = GwnConfig { rng_seed: s2, ..GwnConfig::default() };
        let a = patch_gwn(&p, q, &c1, None).unwrap().value;
        let b = patch_gwn(&p, q, &c2, None).unwrap().value;
        prop_assert!((a - b).abs() < 4.0 * c1.eps_quad);
    }

    #[test]
    fn disk_extraction_is_additive(seed in any::<u64>(), u in 0.2..0.8f64, v in 0.2..0.8f64, r in 0.01..0.15f64, q in vec3()) {
        let p = bicubic(seed, false);
        prop_assume!(off_surface(&p, q));
        let cfg = GwnConfig::default();
        let (outer, disk) = extract_parameter_disk(&p, ParamPoint::new(u, v), r).unwrap();
        let whole = patch_gwn(&p, q, &cfg, None).unwrap().value;
        let parts = patch_gwn(&outer, q, &cfg, None).unwrap().value + patch_gwn(&disk, q, &cfg, None).unwrap().value;
        prop_assert!((whole - parts).abs() < 4.0 * cfg.eps_quad, "{whole} vs {parts}");
    }

    #[test]
    fn split_triangles_add_up(a in vec3(), b in vec3(), c in vec3(), s in 0.1..0.9f64, q in vec3()) {
        let m = a + (b - a) * s;
        let whole = triangle_gwn(a, b, c, q);
        let parts = triangle_gwn(a, m, c, q) + triangle_gwn(m, b, c, q);
        prop_assert!((whole - parts).abs() < 1e-9);
    }

    #[test]
    fn closed_mesh_is_integral(c in vec3(), r in 0.2..2.0f64, q in vec3()) {
        let d = (q - c).norm();
        prop_assume!(d < 0.7 * r || d > 1.05 * r);
        let w = mesh_gwn(&icosahedron(c, r), q);
        let want = if d < 0.7 * r { 1.0 } else { 0.0 };
        prop_assert!((w - want).abs() < 1e-9);
    }

    #[test]
    fn circle_loops_wind_once(cu in -1.0..1.0f64, cv in -1.0..1.0f64, r in 0.1..1.0f64, qu in -2.0..2.0f64, qv in -2.0..2.0f64, ccw in any::<bool>()) {
        let c = ParamPoint::new(cu, cv);
        let q = ParamPoint::new(qu, qv);
        let d = q.distance(c);
        prop_assume!((d - r).abs() > 1e-3);
        let orient = if ccw { LoopOrientation::CounterClockwise } else { LoopOrientation::Clockwise };
        let lp = circle_loop(c, r, orient);
        let w = gwn2d(q, lp.iter(), 1e-9).unwrap().value;
        let inside = if d < r { 1.0 } else { 0.0 };
        let want = if ccw { inside } else { -inside };
        prop_assert!((w - want).abs() < 1e-9, "{w} vs {want}");
    }

    #[test]
    fn model_text_round_trips(seed in any::<u64>(), trimmed in any::<bool>()) {
        let m = Model::new(vec![bicubic(seed, trimmed).with_id("p")]);
        let text = serialize_model(&m);
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(serialize_model(&back), text);
        let (a, b) = (&m.patches[0], &back.patches[0]);
        prop_assert_eq!(a.surface().control(), b.surface().control());
        prop_assert_eq!(a.curve_count(), b.curve_count());
    }
}
