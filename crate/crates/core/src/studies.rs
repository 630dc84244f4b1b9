//! Verification studies of the full-order solvers: patch tests on the
//! shipped geometries, manufactured-solution refinement, and the sliver-cut
//! conditioning sweep.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::cutfem::{assemble_poisson_cutfem, CutfemOptions};
use crate::error::Result;
use crate::fem::{constant, eval_p1, l2_error_sq, scalar_fn, EmbeddedBc, PoissonData};
use crate::geometry::{CutClassification, LevelSet, Orientation, SurrogateGeometry, Tag};
use crate::linalg::{pcg, sym_eig, CgOptions, SparseMatrix};
use crate::mesh::{BackgroundMesh, Rect};
use crate::point::{Point, Vec2};
use crate::quadrature::TRI_DEG5;
use crate::sbm::{
    assemble_poisson_sbm, assemble_stokes_sbm, OuterBc, SbmOptions, StokesData, VecFn,
};
use crate::scenario::{Scenario, ScenarioConfig, ScenarioId};
use crate::system::solve_fom;

#[derive(Clone, Debug, PartialEq)]
pub struct PatchResult {
    pub name: String,
    /// Max nodal error over the active vertices.
    pub max_error: f64,
}

fn max_nodal(
    mesh: &BackgroundMesh,
    active: &[bool],
    fields: &[(&[f64], &dyn Fn(Point) -> f64)],
) -> f64 {
    let mut worst = 0.0f64;
    for v in (0..mesh.n_vertices()).filter(|&v| active[v]) {
        for (u, f) in fields {
            worst = worst.max((u[v] - f(mesh.vertices[v])).abs());
        }
    }
    worst
}

/// Parameter values probed on each scenario: the range corners and centre.
fn probe_parameters(cfg: &ScenarioConfig) -> Vec<Vec<f64>> {
    let lo: Vec<f64> = cfg.ranges.iter().map(|r| r[0]).collect();
    let hi: Vec<f64> = cfg.ranges.iter().map(|r| r[1]).collect();
    let mid: Vec<f64> = cfg
        .ranges
        .iter()
        .map(|r| 0.5 * (r[0] + r[1]) + 0.013 * (r[1] - r[0]))
        .collect();
    vec![lo, mid, hi]
}

/// Affine and constant exactness of every solver on the shipped scenario
/// geometries at the configured resolutions.
pub fn patch_tests() -> Result<Vec<PatchResult>> {
    let mut out = Vec::new();
    let sbm = SbmOptions::default();

    let heat = Scenario::new(ScenarioConfig::default_for(ScenarioId::Heat))?;
    let affine = |p: Point| 0.3 + p.x - 0.5 * p.y;
    for mu in probe_parameters(&heat.config) {
        let sur = SurrogateGeometry::build(&heat.mesh, &heat.level_set(&mu)?)?;
        let data = PoissonData {
            source: constant(0.0),
            boundary: scalar_fn(affine),
            embedded: EmbeddedBc::Dirichlet,
            outer: scalar_fn(affine),
        };
        let u = solve_fom(&assemble_poisson_sbm(&heat.mesh, &sur, &data, &sbm)?)?;
        out.push(PatchResult {
            name: format!("sbm-poisson heat mu={mu:?}"),
            max_error: max_nodal(&heat.mesh, &sur.active, &[(&u, &affine)]),
        });
    }

    // Divergence-free and affine, with zero pressure.
    let u: fn(Point) -> Vec2 = |p| Vec2::new(1.0 + 0.5 * p.y, 0.25 - 0.5 * p.x);
    for id in [ScenarioId::Stokes1p, ScenarioId::Stokes2p] {
        let sc = Scenario::new(ScenarioConfig::default_for(id))?;
        let n = sc.n_h();
        for mu in probe_parameters(&sc.config) {
            let sur = SurrogateGeometry::build(&sc.mesh, &sc.level_set(&mu)?)?;
            let uf: VecFn = Arc::new(u);
            let data = StokesData {
                nu: 1.0,
                force: Arc::new(|_| Vec2::ZERO),
                boundary: uf.clone(),
                outer: OuterBc::all_dirichlet(uf),
                pressure_pin: Some((sc.mesh.vertices[0], 0.0)),
            };
            let s = solve_fom(&assemble_stokes_sbm(&sc.mesh, &sur, &data, &sbm)?)?;
            let ux = move |p: Point| u(p).x;
            let uy = move |p: Point| u(p).y;
            let p0 = |_: Point| 0.0;
            let err = max_nodal(
                &sc.mesh,
                &sur.active,
                &[(&s[..n], &ux), (&s[n..2 * n], &uy), (&s[2 * n..], &p0)],
            );
            out.push(PatchResult {
                name: format!("sbm-stokes {} mu={mu:?}", id.as_str()),
                max_error: err,
            });
        }
    }

    let ell = Scenario::new(ScenarioConfig::default_for(ScenarioId::Ellipse))?;
    for mu in probe_parameters(&ell.config) {
        let cut = CutClassification::build(&ell.mesh, &ell.level_set(&mu)?)?;
        let data = PoissonData {
            source: constant(0.0),
            boundary: constant(1.5),
            embedded: EmbeddedBc::Dirichlet,
            outer: constant(1.5),
        };
        let u = solve_fom(&assemble_poisson_cutfem(
            &ell.mesh,
            &cut,
            &data,
            &CutfemOptions::default(),
        )?)?;
        let c = |_: Point| 1.5;
        out.push(PatchResult {
            name: format!("cutfem-poisson ellipse mu={mu:?}"),
            max_error: max_nodal(&ell.mesh, &cut.active, &[(&u, &c)]),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub l2_error: f64,
    /// Error ratio to the previous (coarser) level.
    pub ratio: Option<f64>,
}

fn with_ratios(levels: &[usize], errs: Vec<(f64, f64)>) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for (&n, (h, e)) in levels.iter().zip(errs) {
        let ratio = rows.last().map(|r| r.l2_error / e);
        rows.push(ConvergenceRow {
            n,
            h,
            l2_error: e,
            ratio,
        });
    }
    rows
}

fn sbm_exact(p: Point) -> f64 {
    (PI * p.x).sin() * (PI * p.y).cos()
}

/// SBM Poisson on [-1,1]² minus a disc, exact solution sin(πx)cos(πy); L2
/// error over the surrogate domain.
pub fn sbm_convergence(levels: &[usize]) -> Result<Vec<ConvergenceRow>> {
    let ls = LevelSet::circle(Vec2::new(0.03, 0.02), 0.37, Orientation::Exterior)?;
    let data = PoissonData {
        source: scalar_fn(|p| 2.0 * PI * PI * sbm_exact(p)),
        boundary: scalar_fn(sbm_exact),
        embedded: EmbeddedBc::Dirichlet,
        outer: scalar_fn(sbm_exact),
    };
    let errs = levels
        .iter()
        .map(|&n| {
            let mesh = BackgroundMesh::structured(Rect::new(-1.0, 1.0, -1.0, 1.0), n, n)?;
            let sur = SurrogateGeometry::build(&mesh, &ls)?;
            let u = solve_fom(&assemble_poisson_sbm(
                &mesh,
                &sur,
                &data,
                &SbmOptions::default(),
            )?)?;
            Ok((
                mesh.h,
                l2_error_sq(&mesh, &sur.elements, &u, sbm_exact).sqrt(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(with_ratios(levels, errs))
}

fn cutfem_exact(p: Point) -> f64 {
    p.x * p.x + p.y * p.y
}

/// CutFEM Poisson in a disc inside [-0.5,0.5]², exact solution x² + y²; L2
/// error over the cut physical domain.
pub fn cutfem_convergence(levels: &[usize]) -> Result<Vec<ConvergenceRow>> {
    let ls = LevelSet::circle(Vec2::new(0.013, -0.021), 0.37, Orientation::Interior)?;
    let data = PoissonData {
        source: constant(-4.0),
        boundary: scalar_fn(cutfem_exact),
        embedded: EmbeddedBc::Dirichlet,
        outer: scalar_fn(cutfem_exact),
    };
    let errs = levels
        .iter()
        .map(|&n| {
            let mesh = BackgroundMesh::structured(Rect::new(-0.5, 0.5, -0.5, 0.5), n, n)?;
            let cut = CutClassification::build(&mesh, &ls)?;
            let u = solve_fom(&assemble_poisson_cutfem(
                &mesh,
                &cut,
                &data,
                &CutfemOptions::default(),
            )?)?;
            let e2: f64 = cut
                .domain
                .iter()
                .map(|&t| {
                    cut.volume_rule_with(&mesh, t, &TRI_DEG5)
                        .into_iter()
                        .map(|(p, w)| w * (eval_p1(&mesh, t, &u, p) - cutfem_exact(p)).powi(2))
                        .sum::<f64>()
                })
                .sum();
            Ok((mesh.h, e2.sqrt()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(with_ratios(levels, errs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliverCase {
    /// Centre shift in cell widths.
    pub offset: f64,
    /// Smallest physical fraction over the cut elements.
    pub min_fraction: f64,
    pub gamma_1: f64,
    /// max |λ| / min |λ| of the system matrix.
    pub condition: f64,
    /// Jacobi-PCG iterations to 1e-10, when the matrix is positive definite.
    pub cg_iterations: Option<usize>,
}

/// Cells per side of the sliver-study mesh on [0,1]².
pub const SLIVER_MESH: usize = 16;

/// Spectral condition max|λ|/min|λ| of a small symmetric matrix, with a flag
/// for positive definiteness.
fn dense_condition(a: &SparseMatrix) -> Result<(f64, bool)> {
    let e = sym_eig(&crate::rom::online::sym(a.to_dense()))?;
    let abs: Vec<f64> = e.values.iter().map(|l| l.abs()).collect();
    let max = abs.iter().cloned().fold(0.0, f64::max);
    let min = abs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((max / min, e.values.iter().all(|&l| l > 0.0)))
}

/// Box occupying cells 4..12 of the sliver mesh, shifted by `offset` cell
/// widths in x and y, so the top and right faces cut elements leaving a
/// physical fraction of offset² in the smallest pieces.
pub fn sliver_case(offset: f64, gamma_1: f64) -> Result<SliverCase> {
    let n = SLIVER_MESH;
    let mesh = BackgroundMesh::structured(Rect::new(0.0, 1.0, 0.0, 1.0), n, n)?;
    let dx = 1.0 / n as f64;
    let ls = LevelSet::rect(
        Point::new(0.5 + offset * dx, 0.5 + offset * dx),
        Vec2::new(4.0 * dx, 4.0 * dx),
        Orientation::Interior,
    )?;
    let cut = CutClassification::build(&mesh, &ls)?;
    let min_fraction = (0..mesh.n_triangles())
        .filter(|&t| cut.tags[t] == Tag::Cut)
        .map(|t| cut.inside_fraction(&mesh, t))
        .fold(f64::INFINITY, f64::min);
    let data = PoissonData {
        source: constant(1.0),
        boundary: constant(0.0),
        embedded: EmbeddedBc::Dirichlet,
        outer: constant(0.0),
    };
    let opts = CutfemOptions {
        gamma_1,
        ..CutfemOptions::default()
    };
    let sys = assemble_poisson_cutfem(&mesh, &cut, &data, &opts)?;
    let (condition, spd) = dense_condition(&sys.matrix)?;
    let cg_iterations = if spd {
        Some(pcg(&sys.matrix, &sys.rhs, CgOptions::default())?.iterations)
    } else {
        None
    };
    Ok(SliverCase {
        offset,
        min_fraction,
        gamma_1,
        condition,
        cg_iterations,
    })
}

/// Offsets giving smallest cut fractions 1e-4 … 0.5.
pub const SLIVER_SWEEP: [f64; 5] = [
    1e-2,
    3.162_277_660_168_379_5e-2,
    1e-1,
    0.316_227_766_016_837_94,
    0.707_106_781_186_547_6,
];

/// Offset giving a smallest cut fraction of 1e-6.
pub const SLIVER_EXTREME: f64 = 1e-3;
