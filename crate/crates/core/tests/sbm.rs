use std::f64::consts::PI;
use std::sync::Arc;

use urm::fem::{constant, l2_error_sq, scalar_fn};
use urm::geometry::{LevelSet, Orientation, SurrogateGeometry};
use urm::linalg::{sym_eig, DenseMatrix};
use urm::mesh::{BackgroundMesh, Rect};
use urm::sbm::{
    assemble_poisson_sbm, assemble_stokes_sbm, boundary_mismatch, drag, EmbeddedBc, OuterBc,
    PoissonData, SbmOptions, StokesData, VecFn,
};
use urm::system::solve_fom;
use urm::{Point, Vec2};

fn heat_mesh(nx: usize, ny: usize) -> BackgroundMesh {
    BackgroundMesh::structured(Rect::new(-2.0, 2.0, -1.0, 1.0), nx, ny).unwrap()
}

fn obstacle() -> LevelSet {
    LevelSet::circle(Vec2::new(0.07, -0.03), 0.2, Orientation::Exterior).unwrap()
}

fn linear_data(f: fn(Point) -> f64) -> PoissonData {
    PoissonData {
        source: constant(0.0),
        boundary: scalar_fn(f),
        embedded: EmbeddedBc::Dirichlet,
        outer: scalar_fn(f),
    }
}

fn max_nodal_error(
    sol: &[f64],
    active: &[bool],
    mesh: &BackgroundMesh,
    f: impl Fn(Point) -> f64,
) -> f64 {
    (0..mesh.n_vertices())
        .filter(|&v| active[v])
        .map(|v| (sol[v] - f(mesh.vertices[v])).abs())
        .fold(0.0, f64::max)
}

#[test]
fn poisson_linear_patch_test() {
    let mesh = heat_mesh(60, 30);
    for ls in [
        obstacle(),
        LevelSet::rect(
            Vec2::new(0.0, 0.21),
            Vec2::new(0.4, 0.35),
            Orientation::Exterior,
        )
        .unwrap(),
    ] {
        let sur = SurrogateGeometry::build(&mesh, &ls).unwrap();
        let f = |p: Point| 0.3 + p.x - 0.5 * p.y;
        let sys =
            assemble_poisson_sbm(&mesh, &sur, &linear_data(f), &SbmOptions::default()).unwrap();
        let sol = solve_fom(&sys).unwrap();
        assert!(max_nodal_error(&sol, &sur.active, &mesh, f) < 1e-9);
        assert!(sol
            .iter()
            .enumerate()
            .all(|(v, &x)| sur.active[v] || x == 0.0));
    }
}

#[test]
fn poisson_constant_state() {
    let mesh = heat_mesh(40, 20);
    let sur = SurrogateGeometry::build(&mesh, &obstacle()).unwrap();
    let sys =
        assemble_poisson_sbm(&mesh, &sur, &linear_data(|_| 2.5), &SbmOptions::default()).unwrap();
    let sol = solve_fom(&sys).unwrap();
    assert!(max_nodal_error(&sol, &sur.active, &mesh, |_| 2.5) < 1e-9);
}

#[test]
fn poisson_embedded_neumann_is_exact_for_linear_fields() {
    let mesh = heat_mesh(60, 30);
    let c = Vec2::new(0.07, -0.03);
    let ls = LevelSet::circle(c, 0.2, Orientation::Exterior).unwrap();
    let sur = SurrogateGeometry::build(&mesh, &ls).unwrap();
    let f = |p: Point| 1.0 + 2.0 * p.x + p.y;
    // outward normal of the fluid at a boundary point points into the obstacle
    let g_n = scalar_fn(move |m: Point| {
        let n = (c - m).normalized();
        2.0 * n.x + n.y
    });
    let data = PoissonData {
        source: constant(0.0),
        boundary: g_n,
        embedded: EmbeddedBc::Neumann,
        outer: scalar_fn(f),
    };
    let sol = solve_fom(&assemble_poisson_sbm(&mesh, &sur, &data, &SbmOptions::default()).unwrap())
        .unwrap();
    assert!(max_nodal_error(&sol, &sur.active, &mesh, f) < 1e-9);
}

fn manufactured(p: Point) -> f64 {
    (PI * p.x).sin() * (PI * p.y).cos()
}

fn manufactured_error(
    n: usize,
    opts: &SbmOptions,
) -> (f64, BackgroundMesh, SurrogateGeometry, Vec<f64>) {
    let mesh = BackgroundMesh::structured(Rect::new(-1.0, 1.0, -1.0, 1.0), n, n).unwrap();
    let ls = LevelSet::circle(Vec2::new(0.03, 0.02), 0.37, Orientation::Exterior).unwrap();
    let sur = SurrogateGeometry::build(&mesh, &ls).unwrap();
    let data = PoissonData {
        source: scalar_fn(|p| 2.0 * PI * PI * manufactured(p)),
        boundary: scalar_fn(manufactured),
        embedded: EmbeddedBc::Dirichlet,
        outer: scalar_fn(manufactured),
    };
    let sol = solve_fom(&assemble_poisson_sbm(&mesh, &sur, &data, opts).unwrap()).unwrap();
    let err = l2_error_sq(&mesh, &sur.elements, &sol, manufactured).sqrt();
    (err, mesh, sur, sol)
}

#[test]
fn poisson_manufactured_second_order() {
    let opts = SbmOptions::default();
    let e1 = manufactured_error(32, &opts).0;
    let e2 = manufactured_error(64, &opts).0;
    let ratio = e1 / e2;
    eprintln!("sbm manufactured: {e1:.3e} {e2:.3e} ratio {ratio:.3}");
    assert!((3.2..=4.8).contains(&ratio), "ratio {ratio} ({e1} / {e2})");
}

#[test]
fn larger_penalty_tightens_the_boundary_condition() {
    let mut last = f64::INFINITY;
    for c in [5.0, 10.0, 20.0, 40.0, 80.0] {
        let opts = SbmOptions {
            c,
            ..SbmOptions::default()
        };
        let (_, mesh, sur, sol) = manufactured_error(24, &opts);
        let m = boundary_mismatch(&mesh, &sur, &scalar_fn(manufactured), &sol);
        assert!(m < last, "c={c}: {m} >= {last}");
        last = m;
    }
}

#[test]
fn unshifted_form_is_symmetric_and_shifted_form_is_coercive() {
    let mesh = heat_mesh(24, 12);
    let sur = SurrogateGeometry::build(&mesh, &obstacle()).unwrap();
    let data = linear_data(|p| p.x);
    let plain = SbmOptions {
        shift: false,
        ..SbmOptions::default()
    };
    let sys = assemble_poisson_sbm(&mesh, &sur, &data, &plain).unwrap();
    assert!(sys.matrix.asymmetry() < 1e-12);
    let sys = assemble_poisson_sbm(&mesh, &sur, &data, &SbmOptions::default()).unwrap();
    assert!(sys.matrix.asymmetry() > 1e-6);
    let a = sys.matrix.to_dense();
    let n = a.rows();
    let mut s = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    let e = sym_eig(&s).unwrap();
    assert!(
        *e.values.last().unwrap() > 0.0,
        "min eig {}",
        e.values.last().unwrap()
    );
}

fn stokes_mesh(n: usize) -> BackgroundMesh {
    BackgroundMesh::structured(Rect::new(-2.0, 0.0, -1.0, 1.0), n, n).unwrap()
}

fn cylinder(y: f64) -> LevelSet {
    LevelSet::circle(Vec2::new(-1.0, y), 0.2, Orientation::Exterior).unwrap()
}

fn max_state_error(
    state: &[f64],
    mesh: &BackgroundMesh,
    sur: &SurrogateGeometry,
    u: impl Fn(Point) -> Vec2,
    p: f64,
) -> f64 {
    let n = mesh.n_vertices();
    (0..n)
        .filter(|&v| sur.active[v])
        .map(|v| {
            let e = u(mesh.vertices[v]);
            (state[v] - e.x)
                .abs()
                .max((state[n + v] - e.y).abs())
                .max((state[2 * n + v] - p).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn stokes_rest_state() {
    let mesh = stokes_mesh(24);
    let sur = SurrogateGeometry::build(&mesh, &cylinder(0.1)).unwrap();
    let zero: VecFn = Arc::new(|_| Vec2::ZERO);
    let data = StokesData {
        nu: 1.0,
        force: zero.clone(),
        boundary: zero,
        outer: OuterBc::channel(0.0, 0.0),
        pressure_pin: None,
    };
    let state =
        solve_fom(&assemble_stokes_sbm(&mesh, &sur, &data, &SbmOptions::default()).unwrap())
            .unwrap();
    assert!(max_state_error(&state, &mesh, &sur, |_| Vec2::ZERO, 0.0) < 1e-9);
}

#[test]
fn stokes_affine_patch_tests() {
    let mesh = stokes_mesh(30);
    let sur = SurrogateGeometry::build(&mesh, &cylinder(-0.23)).unwrap();
    let fields: [fn(Point) -> Vec2; 3] = [
        |_| Vec2::new(1.0, 0.0),
        |p| Vec2::new(p.y, 0.0),
        |p| Vec2::new(0.5 + p.y, 0.25 - p.x),
    ];
    for u in fields {
        let uf: VecFn = Arc::new(u);
        let data = StokesData {
            nu: 1.0,
            force: Arc::new(|_| Vec2::ZERO),
            boundary: uf.clone(),
            outer: OuterBc::all_dirichlet(uf),
            pressure_pin: Some((Point::new(-2.0, -1.0), 0.0)),
        };
        let state =
            solve_fom(&assemble_stokes_sbm(&mesh, &sur, &data, &SbmOptions::default()).unwrap())
                .unwrap();
        let err = max_state_error(&state, &mesh, &sur, u, 0.0);
        assert!(err < 1e-8, "err {err}");
    }
}

#[test]
fn cylinder_drag_is_mesh_converged() {
    let force: VecFn = Arc::new(|_| Vec2::new(1.0, 0.0));
    let zero: VecFn = Arc::new(|_| Vec2::ZERO);
    let data = StokesData {
        nu: 1.0,
        force,
        boundary: zero,
        outer: OuterBc::channel(1.0, 0.0),
        pressure_pin: None,
    };
    let mut drags = Vec::new();
    for n in [40, 80] {
        let mesh = stokes_mesh(n);
        let sur = SurrogateGeometry::build(&mesh, &cylinder(0.0)).unwrap();
        let state =
            solve_fom(&assemble_stokes_sbm(&mesh, &sur, &data, &SbmOptions::default()).unwrap())
                .unwrap();
        drags.push(drag(&mesh, &sur, 1.0, &state).x);
    }
    assert!(drags[1] > 0.0);
    let rel = (drags[0] - drags[1]).abs() / drags[1].abs();
    eprintln!("drag {drags:?}");
    assert!(rel < 0.1, "drag {drags:?}");
}
