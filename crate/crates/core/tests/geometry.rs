use std::f64::consts::PI;

use proptest::prelude::*;
use urm::geometry::{
    clip_triangle, CutClassification, LevelSet, Orientation, SurrogateGeometry, Tag,
};
use urm::mesh::{BackgroundMesh, Rect};
use urm::{Error, Vec2};

fn circle(r: f64, o: Orientation) -> LevelSet {
    LevelSet::circle(Vec2::ZERO, r, o).unwrap()
}

#[test]
fn phi_values_and_gradients() {
    let e = LevelSet::ellipse([1.0, 1.0, 0.0, 0.0], 0.05, Orientation::Interior).unwrap();
    assert!((e.phi(Vec2::new(1.0, 1.0)) - 1.95).abs() < 1e-15);
    let c = circle(0.2, Orientation::Interior);
    assert_eq!(c.phi(Vec2::new(0.2, 0.0)), 0.0);
    let g = c.grad(Vec2::new(0.3, 0.0)).unwrap();
    assert_eq!(g, Vec2::new(1.0, 0.0));
    assert!(matches!(
        c.grad(Vec2::ZERO),
        Err(Error::DegenerateGradient { .. })
    ));
    assert!(matches!(
        e.grad(Vec2::ZERO),
        Err(Error::DegenerateGradient { .. })
    ));
    assert!(LevelSet::ellipse([0.0, 1.0, 0.0, 0.0], 0.05, Orientation::Interior).is_err());
    assert!(LevelSet::circle(Vec2::ZERO, -1.0, Orientation::Interior).is_err());
}

#[test]
fn analytic_closest_points() {
    let c = circle(0.2, Orientation::Interior);
    let p = c.closest_point(Vec2::new(0.3, 0.0)).unwrap();
    assert!((p - Vec2::new(0.2, 0.0)).norm() < 1e-15);
    let b = LevelSet::rect(Vec2::ZERO, Vec2::new(0.4, 0.35), Orientation::Exterior).unwrap();
    assert_eq!(
        b.closest_point(Vec2::new(0.6, 0.0)).unwrap(),
        Vec2::new(0.4, 0.0)
    );
    // corner region of the box clamps to the corner
    assert_eq!(
        b.closest_point(Vec2::new(0.5, -0.5)).unwrap(),
        Vec2::new(0.4, -0.35)
    );
    // square box centre ties go to the +x face
    let sq = LevelSet::rect(Vec2::ZERO, Vec2::new(0.3, 0.3), Orientation::Interior).unwrap();
    let (m, n) = sq.project(Vec2::ZERO).unwrap();
    assert_eq!((m, n), (Vec2::new(0.3, 0.0), Vec2::new(1.0, 0.0)));
}

#[test]
fn normals_point_out_of_the_physical_domain() {
    let inner = circle(0.5, Orientation::Interior);
    let (_, n) = inner.project(Vec2::new(0.1, 0.0)).unwrap();
    assert_eq!(n, Vec2::new(1.0, 0.0));
    let (_, n) = inner.flipped().project(Vec2::new(0.1, 0.0)).unwrap();
    assert_eq!(n, Vec2::new(-1.0, 0.0));
}

/// Dense sampling of the ellipse boundary as an independent distance oracle.
fn sampled_closest(mu: [f64; 4], r: f64, p: Vec2, n: usize) -> Vec2 {
    let (a, b) = (mu[0] * r.sqrt(), mu[1] * r.sqrt());
    let mut best = (f64::INFINITY, Vec2::ZERO);
    for k in 0..n {
        let t = 2.0 * PI * k as f64 / n as f64;
        let q = Vec2::new(mu[2] + a * t.cos(), mu[3] + b * t.sin());
        let d = (q - p).norm_sq();
        if d < best.0 {
            best = (d, q);
        }
    }
    best.1
}

#[test]
fn ellipse_closest_point_matches_boundary_sampling() {
    let mu = [1.5, 0.6, 0.1, -0.2];
    let e = LevelSet::ellipse(mu, 0.05, Orientation::Interior).unwrap();
    let x = Vec2::new(0.5, 0.5);
    let p = e.closest_point(x).unwrap();
    let oracle = sampled_closest(mu, 0.05, x, 1_000_000);
    assert!((p - oracle).norm() < 1e-5, "{p:?} vs {oracle:?}");
    assert!(e.phi(p).abs() <= 1e-12 * e.scale());
}

#[test]
fn surrogate_around_a_cylinder() {
    let mesh = BackgroundMesh::structured(Rect::new(-2.0, 2.0, -1.0, 1.0), 80, 40).unwrap();
    let ls = LevelSet::circle(Vec2::new(0.13, -0.07), 0.2, Orientation::Exterior).unwrap();
    let s = SurrogateGeometry::build(&mesh, &ls).unwrap();
    assert!(!s.facets.is_empty());
    for &t in &s.elements {
        assert!(mesh.triangles[t]
            .iter()
            .all(|&v| ls.is_physical(mesh.vertices[v])));
    }
    for f in &s.facets {
        assert!(s.in_surrogate[f.element]);
        assert!(!s.in_surrogate[mesh.facets[f.facet].other(f.element)]);
        assert!((f.normal.norm() - 1.0).abs() < 1e-14 && (f.tangent.norm() - 1.0).abs() < 1e-14);
        for q in &f.points {
            assert!(q.d.norm() <= 2.0 * mesh.h);
            assert!(ls.phi(q.x + q.d).abs() < 1e-10 * mesh.bounds.diameter());
            assert!((q.normal.norm() - 1.0).abs() < 1e-14);
            // the outward normal of the fluid points into the obstacle
            assert!(q.normal.dot(q.closest - Vec2::new(0.13, -0.07)) < 0.0);
        }
    }
}

#[test]
fn absent_obstacle_keeps_every_element() {
    let mesh = BackgroundMesh::structured(Rect::new(-1.0, 1.0, -1.0, 1.0), 8, 8).unwrap();
    let ls = LevelSet::circle(Vec2::new(5.0, 5.0), 0.2, Orientation::Exterior).unwrap();
    let s = SurrogateGeometry::build(&mesh, &ls).unwrap();
    assert_eq!(s.elements.len(), mesh.n_triangles());
    assert!(s.facets.is_empty());
    let gone = LevelSet::circle(Vec2::new(5.0, 5.0), 0.2, Orientation::Interior).unwrap();
    assert!(matches!(
        SurrogateGeometry::build(&mesh, &gone),
        Err(Error::GeometryDegenerate(_))
    ));
}

#[test]
fn hand_clipped_right_triangle() {
    let v = [
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(1.0, 1.0),
    ];
    let phi = v.map(|p| p.y - p.x + 0.5);
    let c = clip_triangle(v, phi);
    let area = |ts: &[[Vec2; 3]]| {
        ts.iter()
            .map(|t| 0.5 * (t[1] - t[0]).cross(t[2] - t[0]))
            .sum::<f64>()
    };
    assert!((area(&c.negative) - 0.125).abs() < 1e-15);
    assert!((area(&c.positive) - 0.375).abs() < 1e-15);
    // pieces keep counterclockwise orientation
    assert!(c
        .negative
        .iter()
        .chain(&c.positive)
        .all(|t| (t[1] - t[0]).cross(t[2] - t[0]) > 0.0));
    let [a, b] = c.segment.unwrap();
    let mut ends = [a, b];
    ends.sort_by(|p, q| p.x.total_cmp(&q.x));
    assert_eq!(ends, [Vec2::new(0.5, 0.0), Vec2::new(1.0, 0.5)]);
    let flipped = clip_triangle(v, phi.map(|p| -p));
    assert!((area(&flipped.negative) - 0.375).abs() < 1e-15);
}

#[test]
fn cut_classification_structure() {
    let mesh = BackgroundMesh::structured(Rect::new(-0.5, 0.5, -0.5, 0.5), 30, 30).unwrap();
    let ls = LevelSet::circle(Vec2::new(0.011, -0.017), 0.2, Orientation::Interior).unwrap();
    let c = CutClassification::build(&mesh, &ls).unwrap();
    let mut perimeter = 0.0;
    for (t, tag) in c.tags.iter().enumerate() {
        match tag {
            Tag::Inside => assert!(c.cut_element(t).is_none()),
            Tag::Cut => {
                let e = c.cut_element(t).unwrap();
                let a = mesh.area(t);
                assert!((e.inside_area + e.outside_area - a).abs() <= 1e-12 * a);
                let w: f64 = e.inside.iter().map(|q| q.1).sum();
                assert!((w - e.inside_area).abs() <= 1e-14);
                assert!(e.inside.iter().all(|q| q.1 > 0.0));
                let len = (e.segment[1] - e.segment[0]).norm();
                let iw: f64 = e.interface.iter().map(|q| q.weight).sum();
                assert!((iw - len).abs() <= 1e-14);
                assert!(e.interface.iter().all(|q| q.weight > 0.0));
                perimeter += len;
            }
            Tag::Outside => {}
        }
    }
    assert!(mesh.h < 0.05);
    assert!((perimeter - 2.0 * PI * 0.2).abs() < 1e-2);
    for &f in &c.ghost_faces {
        let facet = &mesh.facets[f];
        assert!(!facet.is_boundary());
        assert!(facet.triangles.iter().any(|&t| c.tags[t] == Tag::Cut));
    }
    let csv = c.to_csv(&mesh);
    assert_eq!(csv.lines().count(), mesh.n_triangles() + 1);
    assert!(csv.starts_with("element_id,tag,inside_area_fraction\n0,"));
}

#[test]
fn cut_area_and_perimeter_converge() {
    let r = 0.2;
    let ls = LevelSet::circle(Vec2::new(0.003, 0.007), r, Orientation::Interior).unwrap();
    let mut errs = Vec::new();
    for n in [30, 60] {
        let mesh = BackgroundMesh::structured(Rect::new(-0.5, 0.5, -0.5, 0.5), n, n).unwrap();
        let c = CutClassification::build(&mesh, &ls).unwrap();
        let area: f64 = c
            .domain
            .iter()
            .flat_map(|&t| c.volume_rule(&mesh, t))
            .map(|q| q.1)
            .sum();
        let perim: f64 = c
            .cut
            .iter()
            .flat_map(|e| e.interface.iter())
            .map(|q| q.weight)
            .sum();
        errs.push(((area - PI * r * r).abs(), (perim - 2.0 * PI * r).abs()));
    }
    assert!(errs[1].0 < 1e-3);
    assert!(
        errs[1].0 < errs[0].0 / 2.5 && errs[1].1 < errs[0].1 / 2.5,
        "{errs:?}"
    );
}

#[test]
fn orientation_flip_swaps_tags() {
    let mesh = BackgroundMesh::structured(Rect::new(-2.0, 2.0, -1.0, 1.0), 40, 20).unwrap();
    let ls = LevelSet::rect(
        Vec2::new(0.0, 0.123),
        Vec2::new(0.4, 0.35),
        Orientation::Exterior,
    )
    .unwrap();
    let a = CutClassification::build(&mesh, &ls).unwrap();
    let b = CutClassification::build(&mesh, &ls.flipped()).unwrap();
    for (x, y) in a.tags.iter().zip(&b.tags) {
        let expect = match x {
            Tag::Inside => Tag::Outside,
            Tag::Outside => Tag::Inside,
            Tag::Cut => Tag::Cut,
        };
        assert_eq!(*y, expect);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closest_point_is_idempotent_and_minimal(
        px in -1.2f64..1.2, py in -1.2f64..1.2,
        m1 in 0.3f64..1.8, m2 in 0.3f64..1.8, m3 in -0.85f64..0.85, m4 in -0.85f64..0.85,
    ) {
        let mu = [m1, m2, m3, m4];
        let x = Vec2::new(px, py);
        prop_assume!((x - Vec2::new(m3, m4)).norm() > 1e-6);
        let e = LevelSet::ellipse(mu, 0.05, Orientation::Interior).unwrap();
        let p = e.closest_point(x).unwrap();
        let pp = e.closest_point(p).unwrap();
        prop_assert!((p - pp).norm() < 1e-10);
        prop_assert!(e.phi(p).abs() <= 1e-12 * e.scale().max(1.0));
        let oracle = sampled_closest(mu, 0.05, x, 20_000);
        prop_assert!((p - x).norm() <= (oracle - x).norm() + 1e-10);
    }

    #[test]
    fn circle_and_box_projection_idempotent(px in -1.0f64..1.0, py in -1.0f64..1.0, hw in 0.1f64..0.5, hh in 0.1f64..0.5) {
        let x = Vec2::new(px, py);
        for ls in [
            LevelSet::rect(Vec2::new(0.1, -0.05), Vec2::new(hw, hh), Orientation::Interior).unwrap(),
            LevelSet::circle(Vec2::new(0.1, -0.05), hw, Orientation::Exterior).unwrap(),
        ] {
            let p = ls.closest_point(x).unwrap();
            prop_assert!(ls.phi(p).abs() < 1e-12);
            prop_assert!((ls.closest_point(p).unwrap() - p).norm() < 1e-10);
        }
    }

    #[test]
    fn lattice_translation_translates_tags(cx in -0.3f64..0.3, cy in -0.3f64..0.3, r in 0.1f64..0.3, sx in 0usize..4, sy in 0usize..4) {
        let mesh = BackgroundMesh::structured(Rect::new(-1.0, 1.0, -1.0, 1.0), 20, 20).unwrap();
        let (dx, dy) = mesh.cell_size();
        let ls = LevelSet::circle(Vec2::new(cx, cy), r, Orientation::Interior).unwrap();
        let moved = ls.translated(Vec2::new(sx as f64 * dx, sy as f64 * dy));
        let a = CutClassification::build(&mesh, &ls).unwrap();
        let b = CutClassification::build(&mesh, &moved).unwrap();
        // cells whose shifted copy stays on the mesh and away from the rim
        for j in 2..(20 - sy - 2) {
            for i in 2..(20 - sx - 2) {
                for k in 0..2 {
                    let t = 2 * (j * 20 + i) + k;
                    let s = 2 * ((j + sy) * 20 + i + sx) + k;
                    prop_assert_eq!(a.tags[t], b.tags[s]);
                }
            }
        }
    }
}
