use proptest::prelude::*;
use urm::mesh::{BackgroundMesh, Rect};
use urm::Vec2;

fn unit() -> Rect {
    Rect::new(0.0, 1.0, 0.0, 1.0)
}

#[test]
fn minimal_grid() {
    let m = BackgroundMesh::structured(unit(), 1, 1).unwrap();
    assert_eq!((m.n_vertices(), m.n_triangles(), m.facets.len()), (4, 2, 5));
    assert_eq!(m.h, 2f64.sqrt());
}

#[test]
fn count_formulas() {
    let m = BackgroundMesh::structured(Rect::new(-2.0, 2.0, -1.0, 1.0), 40, 20).unwrap();
    assert_eq!((m.n_vertices(), m.n_triangles()), (861, 1600));
}

#[test]
fn invalid_inputs() {
    assert!(BackgroundMesh::structured(unit(), 0, 3).is_err());
    assert!(BackgroundMesh::structured(Rect::new(1.0, 0.0, 0.0, 1.0), 2, 2).is_err());
    assert!(BackgroundMesh::structured(Rect::new(0.0, 1.0, 0.0, 0.0), 2, 2).is_err());
}

#[test]
fn bottom_facet_normal_points_down() {
    let m = BackgroundMesh::structured(unit(), 1, 1).unwrap();
    let f = m.triangle_facets[0][0];
    assert_eq!(
        m.facet_points(f),
        [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]
    );
    let n = m.facet_normal(f, 0).unwrap();
    assert!((n.x).abs() < 1e-15 && (n.y + 1.0).abs() < 1e-15);
    assert!(m.facet_normal(f, 1).is_err());
}

#[test]
fn interior_normals_are_opposite() {
    let m = BackgroundMesh::structured(Rect::new(-1.0, 2.0, 0.5, 1.5), 5, 4).unwrap();
    for (f, facet) in m
        .facets
        .iter()
        .enumerate()
        .filter(|(_, f)| !f.is_boundary())
    {
        let a = m.facet_normal(f, facet.triangles[0]).unwrap();
        let b = m.facet_normal(f, facet.triangles[1]).unwrap();
        assert!((a.norm() - 1.0).abs() < 1e-14);
        assert!((a + b).norm() < 1e-14);
    }
}

#[test]
fn p1_gradients_reproduce_affine_fields() {
    let m = BackgroundMesh::structured(Rect::new(-1.0, 1.0, -1.0, 1.0), 3, 5).unwrap();
    let f = |p: Vec2| 2.0 - 3.0 * p.x + 0.5 * p.y;
    for t in 0..m.n_triangles() {
        let g = m.p1_gradients(t);
        let tri = m.triangles[t];
        let grad = (0..3).fold(Vec2::ZERO, |acc, k| acc + g[k] * f(m.vertices[tri[k]]));
        assert!((grad - Vec2::new(-3.0, 0.5)).norm() < 1e-13);
    }
}

#[test]
fn interpolation_is_exact_for_affine_and_zero_outside() {
    let m = BackgroundMesh::structured(Rect::new(-2.0, 2.0, -1.0, 1.0), 8, 6).unwrap();
    let field: Vec<f64> = m.vertices.iter().map(|p| 1.0 + p.x - 2.0 * p.y).collect();
    for p in [
        Vec2::new(0.123, -0.77),
        Vec2::new(-2.0, 1.0),
        Vec2::new(1.999, 0.0),
    ] {
        let v = m.interpolate(&field, p).unwrap();
        assert!((v - (1.0 + p.x - 2.0 * p.y)).abs() < 1e-13);
    }
    assert!(m.interpolate(&field, Vec2::new(2.1, 0.0)).is_none());
}

#[test]
fn dump_lists_every_record() {
    let m = BackgroundMesh::structured(unit(), 2, 1).unwrap();
    let d = m.dump();
    assert_eq!(d.lines().count(), 2 + 6 + 4);
    assert!(d.starts_with("vertices 6\n0 "));
}

proptest! {
    #[test]
    fn structural_invariants(nx in 1usize..12, ny in 1usize..12, x0 in -3.0f64..3.0, w in 0.1f64..5.0, h in 0.1f64..5.0) {
        let b = Rect::new(x0, x0 + w, -x0, -x0 + h);
        let m = BackgroundMesh::structured(b, nx, ny).unwrap();
        let total: f64 = (0..m.n_triangles()).map(|t| m.signed_area(t)).sum();
        prop_assert!((0..m.n_triangles()).all(|t| m.signed_area(t) > 0.0));
        prop_assert!((total - b.area()).abs() <= 1e-12 * b.area());
        let v = m.n_vertices() as i64;
        let e = m.facets.len() as i64;
        let t = m.n_triangles() as i64;
        prop_assert_eq!(v - e + t, 1);
        let mut max_edge = 0.0f64;
        for f in 0..m.facets.len() {
            max_edge = max_edge.max(m.facet_length(f));
        }
        prop_assert!((max_edge - m.h).abs() <= 1e-14 * m.h);
        let boundary = m.facets.iter().filter(|f| f.is_boundary()).count();
        prop_assert_eq!(boundary, 2 * (nx + ny));
        for (t, tf) in m.triangle_facets.iter().enumerate() {
            for &f in tf {
                prop_assert!(m.facets[f].triangles.contains(&t));
            }
        }
        prop_assert_eq!(m.clone(), BackgroundMesh::structured(b, nx, ny).unwrap());
    }

    #[test]
    fn locate_finds_a_containing_triangle(px in 0.0f64..1.0, py in 0.0f64..1.0, nx in 1usize..9, ny in 1usize..9) {
        let m = BackgroundMesh::structured(Rect::new(-1.0, 3.0, 2.0, 3.0), nx, ny).unwrap();
        let p = Vec2::new(-1.0 + 4.0 * px, 2.0 + py);
        let t = m.locate(p).unwrap();
        prop_assert!(m.barycentric(t, p).iter().all(|&l| l >= -1e-12));
    }
}
