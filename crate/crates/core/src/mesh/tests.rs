use std::f64::consts::PI;

use super::*;
use crate::test_support::{ellipsoid_curvatures, ellipsoid_integrals};

fn ellipsoid_mesh(levels: u32, axes: [f64; 3]) -> TriangleMesh {
    icosphere(levels, 1.0)
        .unwrap()
        .map_vertices(|p| {
            let s = (p.x / axes[0]).powi(2) + (p.y / axes[1]).powi(2) + (p.z / axes[2]).powi(2);
            p / s.sqrt()
        })
        .unwrap()
}

fn max_rel_error(values: &[f64], exact: impl Fn(usize) -> f64) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| ((v - exact(i)) / exact(i)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn primitives_are_outward_oriented() {
    assert!(tetrahedron().signed_volume() > 0.0);
    let ico = icosphere(0, 1.0).unwrap();
    assert!(ico.signed_volume() > 0.0);
    assert!(ico.orientation_warning().is_none());
    assert!(ico.flipped().orientation_warning().is_some());
    assert_eq!(icosphere(3, 1.0).unwrap().faces().len(), 20 * 64);
}

#[test]
fn tetrahedron_stiffness_rows_sum_to_zero() {
    let ops = DiscreteOperators::build(&tetrahedron());
    for i in 0..4 {
        let s: f64 = ops.stiffness.row(i).map(|(_, v)| v).sum();
        assert!(s.abs() < 1e-15, "row {i}: {s:e}");
        assert_eq!(ops.stiffness.get(i, (i + 1) % 4), ops.stiffness.get((i + 1) % 4, i));
    }
}

#[test]
fn mass_partitions_area() {
    for mesh in [icosphere(3, 1.0).unwrap(), ellipsoid_mesh(3, [1.0, 0.6, 1.9])] {
        let ops = DiscreteOperators::build(&mesh);
        assert!(ops.mass.iter().all(|m| *m > 0.0));
        assert!((ops.total_mass() - mesh.area()).abs() < 1e-12);
    }
}

#[test]
fn coordinate_functions_are_first_eigenfunctions() {
    let err = |levels: u32| {
        let mesh = icosphere(levels, 1.0).unwrap();
        let ops = DiscreteOperators::build(&mesh);
        let x: Vec<f64> = mesh.vertices().iter().map(|p| p.x).collect();
        let e: Vec<f64> = ops.laplacian(&x).iter().zip(&x).map(|(l, x)| l + 2.0 * x).collect();
        let max = e.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
        let l2 = ops.integrate(&e.iter().map(|e| e * e).collect::<Vec<_>>()).sqrt();
        let radial = mean_curvature_vector(&mesh, &ops)
            .iter()
            .zip(mesh.vertices())
            .map(|(h, p)| (h + 2.0 * p).dot(p).abs())
            .fold(0.0, f64::max);
        (max, l2, radial)
    };
    let errs: Vec<_> = (3..=6).map(err).collect();
    for w in errs.windows(2) {
        // the tangential part is first order pointwise, better in L²
        assert!(w[0].0 / w[1].0 > 1.8, "{errs:?}");
        assert!(w[0].1 / w[1].1 > 2.5, "{errs:?}");
    }
    assert!(errs.iter().all(|e| e.2 < 1e-10), "{errs:?}");
    assert!(errs[3].0 < 2e-3);
}

#[test]
fn icosphere_mean_curvature() {
    let mesh = icosphere(4, 1.0).unwrap();
    let ops = DiscreteOperators::build(&mesh);
    let h = mean_curvature(&mesh, &ops);
    assert!(max_rel_error(&h, |_| 2.0) < 0.02);

    for (c, tol) in [(4.0, 0.0), (0.125, 0.0), (3.7, 1e-13)] {
        let scaled = mesh.map_vertices(|p| p * c).unwrap();
        let hs = mean_curvature(&scaled, &DiscreteOperators::build(&scaled));
        for (a, b) in h.iter().zip(&hs) {
            assert!((a / c - b).abs() <= tol * a.abs(), "{c}: {a} {b}");
        }
    }
}

#[test]
fn curvature_errors_shrink_under_refinement() {
    let errs: Vec<(f64, f64)> = (3..=5)
        .map(|lv| {
            let mesh = icosphere(lv, 1.0).unwrap();
            let ops = DiscreteOperators::build(&mesh);
            (
                max_rel_error(&mean_curvature(&mesh, &ops), |_| 2.0),
                max_rel_error(&gauss_curvature(&mesh, &ops), |_| 1.0),
            )
        })
        .collect();
    for w in errs.windows(2) {
        assert!(w[0].0 / w[1].0 >= 1.5, "H {:?}", errs);
        assert!(w[0].1 / w[1].1 >= 1.5, "K {:?}", errs);
    }
}

#[test]
fn discrete_gauss_bonnet() {
    for mesh in [
        tetrahedron(),
        icosphere(2, 0.3).unwrap(),
        ellipsoid_mesh(3, [2.0, 0.5, 1.0]),
    ] {
        let ops = DiscreteOperators::build(&mesh);
        let total = ops.integrate(&gauss_curvature(&mesh, &ops));
        assert!((total - 4.0 * PI).abs() < 1e-11, "{total}");
    }
    let mesh = icosphere(4, 2.0).unwrap();
    let ops = DiscreteOperators::build(&mesh);
    assert!(max_rel_error(&gauss_curvature(&mesh, &ops), |_| 0.25) < 0.02);
}

#[test]
fn ellipsoid_pointwise_curvatures() {
    let axes = [1.0, 1.0, 1.2];
    let mesh = ellipsoid_mesh(6, axes);
    assert!(mesh.faces().len() >= 50_000);
    let ops = DiscreteOperators::build(&mesh);
    let h = mean_curvature(&mesh, &ops);
    let k = gauss_curvature(&mesh, &ops);
    let exact = |i: usize| {
        let p = mesh.vertices()[i];
        ellipsoid_curvatures(axes, [p.x, p.y, p.z])
    };
    assert!(max_rel_error(&h, |i| exact(i).0) < 0.03);
    assert!(max_rel_error(&k, |i| exact(i).1) < 0.03);

    let tf = tracefree_norm_sq(&h, &k);
    let ao2 = ops.integrate(&tf.values);
    let reference = ellipsoid_integrals(axes, 200, 200).ao2;
    assert!(((ao2 - reference) / reference).abs() < 0.05, "{ao2} vs {reference}");
}

#[test]
fn tracefree_norm_near_umbilic_and_scale_invariant() {
    let mesh = icosphere(4, 1.0).unwrap();
    let ops = DiscreteOperators::build(&mesh);
    let h = mean_curvature(&mesh, &ops);
    let k = gauss_curvature(&mesh, &ops);
    let tf = tracefree_norm_sq(&h, &k);
    for (a, h) in tf.values.iter().zip(&h) {
        assert!(*a <= 0.01 * h * h);
    }

    let e = ellipsoid_mesh(3, [1.0, 0.8, 1.3]);
    let energy = |m: &TriangleMesh| {
        let ops = DiscreteOperators::build(m);
        let tf = tracefree_norm_sq(&mean_curvature(m, &ops), &gauss_curvature(m, &ops));
        ops.integrate(&tf.values)
    };
    let base = energy(&e);
    let scaled = energy(&e.map_vertices(|p| p * 0.37).unwrap());
    assert!((base - scaled).abs() <= 1e-12 * base);
}

#[test]
fn clamp_rate_on_quality_meshes() {
    for (axes, levels) in [([1.0, 0.9, 1.3], 5), ([1.0, 0.7, 1.5], 4)] {
        let mesh = ellipsoid_mesh(levels, axes);
        assert!(mesh.min_angle() > 20f64.to_radians());
        let ops = DiscreteOperators::build(&mesh);
        let tf = tracefree_norm_sq(&mean_curvature(&mesh, &ops), &gauss_curvature(&mesh, &ops));
        assert!((tf.clamped as f64) < 0.01 * mesh.num_vertices() as f64, "{axes:?}: {}", tf.clamped);
    }
    assert_eq!(tracefree_norm_sq(&[2.0], &[1.5]).clamped, 1);
}

#[test]
fn clamping_concentrates_at_umbilics() {
    // angle defect over flat area overestimates K by O(h²), so near umbilic
    // points the clamped set is a band of width O(h)
    let rate = |levels| {
        let mesh = ellipsoid_mesh(levels, [1.0, 1.0, 1.2]);
        let ops = DiscreteOperators::build(&mesh);
        let tf = tracefree_norm_sq(&mean_curvature(&mesh, &ops), &gauss_curvature(&mesh, &ops));
        tf.clamped as f64 / mesh.num_vertices() as f64
    };
    let (r4, r5) = (rate(4), rate(5));
    assert!(r5 < 0.6 * r4, "{r4} {r5}");
}

#[test]
fn area_and_volume() {
    let mesh = icosphere(5, 1.0).unwrap();
    assert!((mesh.area() / (4.0 * PI) - 1.0).abs() < 0.005);
    assert!((mesh.signed_volume() / (4.0 * PI / 3.0) - 1.0).abs() < 0.005);
    assert_eq!(mesh.flipped().signed_volume(), -mesh.signed_volume());

    let v = mesh.signed_volume();
    for t in [[0.3, -1.2, 5.0], [100.0, 2.0, -7.5]] {
        let shifted = mesh.map_vertices(|p| p + Point::from(t)).unwrap();
        assert!((shifted.signed_volume() - v).abs() <= 1e-10 * v.abs());
    }
}

#[test]
fn concentration_properties() {
    let mesh = icosphere(6, 1.0).unwrap();
    let ops = DiscreteOperators::build(&mesh);
    let h = mean_curvature(&mesh, &ops);
    let k = gauss_curvature(&mesh, &ops);
    let tf = tracefree_norm_sq(&h, &k);
    let a2: Vec<f64> = tf.values.iter().zip(&h).map(|(a, h)| a + 0.5 * h * h).collect();
    let total = ops.integrate(&a2);
    assert_eq!(concentration(&mesh, &ops, &a2, 2.5).unwrap(), total);
    assert_eq!(concentration(&mesh, &ops, &a2, 100.0).unwrap(), total);

    // chordal radius r ↔ cap of polar angle φ with r = 2 sin(φ/2)
    let r = 0.1_f64;
    let phi = 2.0 * (r / 2.0).asin();
    let cap = 2.0 * 2.0 * PI * (1.0 - phi.cos());
    let alpha = concentration(&mesh, &ops, &a2, r).unwrap();
    assert!(((alpha - cap) / cap).abs() < 0.1, "{alpha} vs {cap}");

    let coarse = icosphere(3, 1.0).unwrap();
    let cops = DiscreteOperators::build(&coarse);
    let ca2 = vec![2.0; coarse.num_vertices()];
    let mut last = 0.0;
    for r in [0.05, 0.1, 0.2, 0.3, 0.4, 0.8, 1.2, 1.6, 1.99, 2.0, 2.01] {
        let a = concentration(&coarse, &cops, &ca2, r).unwrap();
        assert!(a >= last);
        last = a;
    }
    assert!(concentration(&mesh, &ops, &a2, 0.0).is_err());
    assert!(concentration(&mesh, &ops, &a2, -1.0).is_err());
}

#[test]
fn rejects_invalid_meshes() {
    let ico = icosphere(1, 1.0).unwrap();
    let v = ico.vertices().to_vec();

    let mut open = ico.faces().to_vec();
    open.pop();
    assert!(matches!(TriangleMesh::new(v.clone(), open), Err(FlowError::Topology(_))));

    let mut twisted = ico.faces().to_vec();
    twisted[0] = [twisted[0][0], twisted[0][2], twisted[0][1]];
    assert!(matches!(TriangleMesh::new(v.clone(), twisted), Err(FlowError::Topology(_))));

    let mut dup = ico.faces().to_vec();
    dup.push(dup[0]);
    assert!(matches!(TriangleMesh::new(v.clone(), dup), Err(FlowError::Topology(_))));

    let mut flat = v.clone();
    let f0 = ico.faces()[0];
    flat[f0[2]] = (flat[f0[0]] + flat[f0[1]]) * 0.5;
    assert!(matches!(TriangleMesh::new(flat, ico.faces().to_vec()), Err(FlowError::Geometry(_))));

    // two disjoint spheres: closed and oriented but χ = 4
    let mut verts = v.clone();
    verts.extend(v.iter().map(|p| p + Point::new(5.0, 0.0, 0.0)));
    let n = v.len();
    let mut faces = ico.faces().to_vec();
    faces.extend(ico.faces().iter().map(|f| [f[0] + n, f[1] + n, f[2] + n]));
    assert!(matches!(TriangleMesh::new(verts, faces), Err(FlowError::Topology(_))));
}

#[test]
fn obj_round_trip_and_rejections() {
    let mesh = icosphere(2, 1.3).unwrap();
    let mut buf = Vec::new();
    obj::write(&mesh, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.lines().any(|l| l.starts_with("f 1 ")));
    let back = obj::read(text.as_bytes(), "mem").unwrap();
    assert_eq!(back, mesh);

    let with_slashes = "v 1 1 1\nv 1 -1 -1\nv -1 1 -1\nv -1 -1 1\n\
                        f 1/1/1 2/2/2 3/3/3\nf 1//1 4//1 2//1\nf 1 3 4\nf 2 4 3\n";
    let t = obj::read(with_slashes.as_bytes(), "mem").unwrap();
    assert!(t.signed_volume() > 0.0);

    let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
    assert!(matches!(obj::read(quad.as_bytes(), "mem"), Err(FlowError::Parse { line: 5, .. })));
    let zero = "v 0 0 0\nf 0 1 2\n";
    assert!(obj::read(zero.as_bytes(), "mem").is_err());
}

mod concentration_props {
    use proptest::prelude::*;

    use super::*;

    fn brute(points: &[Point], w: &[f64], centres: &[Point], r: f64) -> f64 {
        centres
            .iter()
            .map(|c| {
                points
                    .iter()
                    .zip(w)
                    .filter(|(p, _)| (*p - c).norm() <= r)
                    .map(|(_, w)| w)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            pts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -0.3..0.3f64, 0.0..5.0f64), 1..300),
            r in 0.01..3.0f64,
        ) {
            let points: Vec<Point> = pts.iter().map(|&(x, y, z, _)| Point::new(x, y, z)).collect();
            let w: Vec<f64> = pts.iter().map(|t| t.3).collect();
            let fast = concentration_of_samples(&points, &w, &points, r).unwrap();
            let slow = brute(&points, &w, &points, r);
            prop_assert!((fast - slow).abs() <= 1e-12 * slow.max(1.0), "{} {}", fast, slow);
        }
    }

    #[test]
    fn rejects_negative_weights() {
        let p = [Point::zeros(), Point::x()];
        assert!(concentration_of_samples(&p, &[1.0, -1.0], &p, 0.5).is_err());
        assert!(concentration_of_samples(&p, &[1.0, f64::NAN], &p, 0.5).is_err());
    }
}
