use urm::cutfem::{assemble_poisson_cutfem, ghost_penalty, interface_trace_error, CutfemOptions};
use urm::fem::{constant, eval_p1, scalar_fn, EmbeddedBc, PoissonData};
use urm::geometry::{CutClassification, LevelSet, Orientation};
use urm::mesh::{BackgroundMesh, Rect};
use urm::quadrature::TRI_DEG5;
use urm::system::solve_fom;
use urm::{Point, Vec2};

fn square(n: usize, half: f64) -> BackgroundMesh {
    BackgroundMesh::structured(Rect::new(-half, half, -half, half), n, n).unwrap()
}

fn data(source: f64, g: fn(Point) -> f64) -> PoissonData {
    PoissonData {
        source: constant(source),
        boundary: scalar_fn(g),
        embedded: EmbeddedBc::Dirichlet,
        outer: scalar_fn(g),
    }
}

#[test]
fn constant_state_is_reproduced() {
    let mesh = square(40, 1.2);
    let ls = LevelSet::ellipse([1.3, 0.7, 0.1, -0.05], 0.05, Orientation::Interior).unwrap();
    let cut = CutClassification::build(&mesh, &ls).unwrap();
    let sys = assemble_poisson_cutfem(&mesh, &cut, &data(0.0, |_| 0.75), &CutfemOptions::default())
        .unwrap();
    assert!(sys.symmetric);
    let u = solve_fom(&sys).unwrap();
    for v in 0..mesh.n_vertices() {
        if cut.active[v] {
            assert!((u[v] - 0.75).abs() < 1e-9);
        } else {
            assert_eq!(u[v], 0.0);
        }
    }
}

#[test]
fn matrix_is_symmetric() {
    let mesh = square(30, 1.2);
    let ls = LevelSet::ellipse([1.0, 1.0, 0.0, 0.0], 0.05, Orientation::Interior).unwrap();
    let cut = CutClassification::build(&mesh, &ls).unwrap();
    let sys = assemble_poisson_cutfem(
        &mesh,
        &cut,
        &data(20.0, |p| 0.5 + p.x * p.y),
        &CutfemOptions::default(),
    )
    .unwrap();
    assert!(sys.matrix.asymmetry() < 1e-12);
}

#[test]
fn ghost_penalty_annihilates_affine_fields() {
    let mesh = square(24, 1.0);
    let ls = LevelSet::circle(Vec2::new(0.05, 0.02), 0.5, Orientation::Interior).unwrap();
    let cut = CutClassification::build(&mesh, &ls).unwrap();
    assert!(!cut.ghost_faces.is_empty());
    let j = ghost_penalty(&mesh, &cut, 0.1).unwrap();
    let u: Vec<f64> = mesh
        .vertices
        .iter()
        .map(|p| 0.3 - 2.0 * p.x + 5.0 * p.y)
        .collect();
    let ju = j.matvec(&u);
    assert!(
        ju.iter().all(|v| v.abs() < 1e-14),
        "{:e}",
        ju.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    );
    // and it is not the zero form
    let bump: Vec<f64> = mesh.vertices.iter().map(|p| p.x * p.x).collect();
    assert!(j.matvec(&bump).iter().any(|v| v.abs() > 1e-6));
}

/// The Neumann data uses the analytic normal while the cut domain is the
/// polygonal zero set of the interpolated φ, so exactness is only up to the
/// O(h²) geometric error; check that rate.
#[test]
fn embedded_neumann_converges() {
    let u = |p: Point| 1.0 + p.x * p.x + 0.5 * p.y;
    let c = Vec2::new(0.04, -0.03);
    let ls = LevelSet::circle(c, 0.45, Orientation::Exterior).unwrap();
    let mut errs = Vec::new();
    for n in [20, 40, 80] {
        let mesh = square(n, 1.0);
        let cut = CutClassification::build(&mesh, &ls).unwrap();
        let g_n = scalar_fn(move |p: Point| {
            let nrm = ls.oriented_grad(p).unwrap().normalized();
            2.0 * p.x * nrm.x + 0.5 * nrm.y
        });
        let d = PoissonData {
            source: constant(-2.0),
            boundary: g_n,
            embedded: EmbeddedBc::Neumann,
            outer: scalar_fn(u),
        };
        let sol = solve_fom(
            &assemble_poisson_cutfem(&mesh, &cut, &d, &CutfemOptions::default()).unwrap(),
        )
        .unwrap();
        let err = cut
            .domain
            .iter()
            .map(|&t| {
                cut.volume_rule_with(&mesh, t, &TRI_DEG5)
                    .into_iter()
                    .map(|(p, w)| w * (eval_p1(&mesh, t, &sol, p) - u(p)).powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt();
        errs.push(err);
    }
    eprintln!("cutfem neumann errors {errs:?}");
    assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0);
}

fn quadratic(p: Point) -> f64 {
    p.x * p.x + p.y * p.y
}

fn manufactured_error(n: usize) -> f64 {
    let mesh = square(n, 0.5);
    let ls = LevelSet::circle(Vec2::new(0.013, -0.021), 0.37, Orientation::Interior).unwrap();
    let cut = CutClassification::build(&mesh, &ls).unwrap();
    let sol = solve_fom(
        &assemble_poisson_cutfem(
            &mesh,
            &cut,
            &data(-4.0, quadratic),
            &CutfemOptions::default(),
        )
        .unwrap(),
    )
    .unwrap();
    cut.domain
        .iter()
        .map(|&t| {
            cut.volume_rule_with(&mesh, t, &TRI_DEG5)
                .into_iter()
                .map(|(p, w)| w * (eval_p1(&mesh, t, &sol, p) - quadratic(p)).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

#[test]
fn manufactured_second_order() {
    let e1 = manufactured_error(24);
    let e2 = manufactured_error(48);
    let ratio = e1 / e2;
    eprintln!("cutfem manufactured: {e1:.3e} {e2:.3e} ratio {ratio:.3}");
    assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
}

#[test]
fn ellipse_boundary_trace_improves_under_refinement() {
    let ls = LevelSet::ellipse([1.0, 1.0, 0.0, 0.0], 0.05, Orientation::Interior).unwrap();
    let g_d = |p: Point| 0.5 + p.x * p.y;
    let mut errs = Vec::new();
    for n in [24, 48, 96] {
        let mesh = square(n, 1.2);
        let cut = CutClassification::build(&mesh, &ls).unwrap();
        let sol = solve_fom(
            &assemble_poisson_cutfem(&mesh, &cut, &data(20.0, g_d), &CutfemOptions::default())
                .unwrap(),
        )
        .unwrap();
        assert!(sol.iter().all(|v| v.is_finite()));
        errs.push(interface_trace_error(&mesh, &cut, &sol, g_d));
    }
    eprintln!("ellipse trace errors {errs:?}");
    assert!(errs[1] < errs[0] && errs[2] < errs[1]);
}
