use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::fem::assemble_elements;
use crate::geometry::SurrogateGeometry;
use crate::mesh::BackgroundMesh;
use crate::point::{Mat2, Point, Vec2};
use crate::quadrature::TRI_DEG5;
use crate::system::AssembledSystem;

use super::SbmOptions;

pub type VecFn = Arc<dyn Fn(Point) -> Vec2 + Send + Sync>;

/// Condition on one side of the background rectangle.
#[derive(Clone)]
pub enum SideBc {
    /// Both velocity components prescribed.
    Dirichlet(VecFn),
    /// Zero normal velocity, free tangential slip.
    Slip,
    /// Do-nothing outflow with reference pressure.
    Open { pressure: f64 },
}

#[derive(Clone)]
pub struct OuterBc {
    pub left: SideBc,
    pub right: SideBc,
    pub bottom: SideBc,
    pub top: SideBc,
}

impl OuterBc {
    pub fn all_dirichlet(u: VecFn) -> Self {
        Self {
            left: SideBc::Dirichlet(u.clone()),
            right: SideBc::Dirichlet(u.clone()),
            bottom: SideBc::Dirichlet(u.clone()),
            top: SideBc::Dirichlet(u),
        }
    }

    /// Uniform inflow on the left, slip walls, open outflow on the right.
    pub fn channel(u_in: f64, p_out: f64) -> Self {
        Self {
            left: SideBc::Dirichlet(Arc::new(move |_| Vec2::new(u_in, 0.0))),
            right: SideBc::Open { pressure: p_out },
            bottom: SideBc::Slip,
            top: SideBc::Slip,
        }
    }
}

#[derive(Clone)]
pub struct StokesData {
    pub nu: f64,
    pub force: VecFn,
    /// Velocity g_D on the embedded boundary, evaluated at M(x̃).
    pub boundary: VecFn,
    pub outer: OuterBc,
    /// Fixes the pressure at the active vertex nearest to the point; needed
    /// when no side is open.
    pub pressure_pin: Option<(Point, f64)>,
}

/// Number of scalar fields in the Stokes state: u_x, u_y, p.
pub const FIELDS: usize = 3;

fn strain_basis(g: Vec2, i: usize) -> Mat2 {
    let mut m = [[0.0; 2]; 2];
    m[i] = [g.x, g.y];
    Mat2(m)
}

fn unit(i: usize) -> Vec2 {
    if i == 0 {
        Vec2::new(1.0, 0.0)
    } else {
        Vec2::new(0.0, 1.0)
    }
}

fn grad_apply(g: &Mat2, v: Vec2) -> Vec2 {
    g.apply(v)
}

/// Assembles the P1/P1 SBM Stokes saddle system with state layout
/// `[u_x (N_h), u_y (N_h), p (N_h)]`.
pub fn assemble_stokes_sbm(
    mesh: &BackgroundMesh,
    sur: &SurrogateGeometry,
    data: &StokesData,
    opts: &SbmOptions,
) -> Result<AssembledSystem> {
    opts.validate()?;
    if !(data.nu > 0.0) {
        return invalid("viscosity must be positive");
    }
    let n = mesh.n_vertices();
    let h = mesh.h;
    let nu2 = 2.0 * data.nu;
    let pen = opts.alpha * nu2 / h;
    let tan = opts.beta * nu2 * h;
    let stab = opts.delta * h * h;
    let ne = sur.elements.len();
    let items: Vec<usize> = (0..ne + sur.facets.len()).collect();
    let vdof = |v: usize, i: usize| i * n + v;
    let pdof = |v: usize| 2 * n + v;

    let full = assemble_elements(FIELDS * n, &items, |k, b| {
        if k < ne {
            let t = sur.elements[k];
            let g = mesh.p1_gradients(t);
            let area = mesh.area(t);
            let tri = mesh.triangles[t];
            for bw in 0..3 {
                for j in 0..2 {
                    let ew = strain_basis(g[bw], j).sym();
                    for a in 0..3 {
                        for i in 0..2 {
                            let eu = strain_basis(g[a], i).sym();
                            b.push(vdof(tri[bw], j), vdof(tri[a], i), area * nu2 * eu.ddot(&ew));
                        }
                        // −(∇·w, p) and −(∇·u, q), with ∫ψ = area/3
                        b.push(vdof(tri[bw], j), pdof(tri[a]), -area / 3.0 * g[bw][j]);
                        b.push(pdof(tri[a]), vdof(tri[bw], j), -area / 3.0 * g[bw][j]);
                    }
                }
                for a in 0..3 {
                    b.push(pdof(tri[bw]), pdof(tri[a]), -stab * area * g[a].dot(g[bw]));
                }
            }
            return;
        }
        let f = &sur.facets[k - ne];
        let t = f.element;
        let g = mesh.p1_gradients(t);
        let tri = mesh.triangles[t];
        let nt = f.normal;
        for q in &f.points {
            let w = q.weight;
            let l = mesh.barycentric(t, q.x);
            let d = if opts.shift { q.d } else { Vec2::ZERO };
            let tau = q.tangent;
            for bw in 0..3 {
                for j in 0..2 {
                    let gw = strain_basis(g[bw], j);
                    let wv = unit(j) * l[bw];
                    let sw = unit(j) * (l[bw] + g[bw].dot(d));
                    let ew_n = gw.sym().apply(nt);
                    let gw_t = grad_apply(&gw, tau);
                    for a in 0..3 {
                        for i in 0..2 {
                            let gu = strain_basis(g[a], i);
                            let su = unit(i) * (l[a] + g[a].dot(d));
                            let eu_n = gu.sym().apply(nt);
                            let v = -nu2 * wv.dot(eu_n) - nu2 * ew_n.dot(su)
                                + pen * sw.dot(su)
                                + tan * gw_t.dot(grad_apply(&gu, tau));
                            b.push(vdof(tri[bw], j), vdof(tri[a], i), w * v);
                        }
                        // ⟨w·ñ, p⟩
                        b.push(vdof(tri[bw], j), pdof(tri[a]), w * wv.dot(nt) * l[a]);
                        // ⟨(u + ∇u d)·ñ, q⟩ with q = ψ_bw, u = φ_a e_j
                        let su = unit(j) * (l[a] + g[a].dot(d));
                        b.push(pdof(tri[bw]), vdof(tri[a], j), w * su.dot(nt) * l[bw]);
                    }
                }
            }
        }
    });

    let mut rhs = vec![0.0; FIELDS * n];
    for &t in &sur.elements {
        let tri = mesh.triangles[t];
        for (p, w) in TRI_DEG5.map(mesh.triangle_points(t)) {
            let l = mesh.barycentric(t, p);
            let fv = (data.force)(p);
            for bw in 0..3 {
                rhs[vdof(tri[bw], 0)] += w * fv.x * l[bw];
                rhs[vdof(tri[bw], 1)] += w * fv.y * l[bw];
            }
        }
    }
    for f in &sur.facets {
        let t = f.element;
        let g = mesh.p1_gradients(t);
        let tri = mesh.triangles[t];
        let nt = f.normal;
        for q in &f.points {
            let w = q.weight;
            let l = mesh.barycentric(t, q.x);
            let d = if opts.shift { q.d } else { Vec2::ZERO };
            let gd = (data.boundary)(q.closest);
            let dgd = tangential_derivative(&data.boundary, q.closest, q.tangent, h);
            for bw in 0..3 {
                for j in 0..2 {
                    let gw = strain_basis(g[bw], j);
                    let sw = unit(j) * (l[bw] + g[bw].dot(d));
                    let v = -nu2 * gw.sym().apply(nt).dot(gd)
                        + pen * sw.dot(gd)
                        + tan * grad_apply(&gw, q.tangent).dot(dgd);
                    rhs[vdof(tri[bw], j)] += w * v;
                }
                rhs[pdof(tri[bw])] += w * gd.dot(nt) * l[bw];
            }
        }
    }

    let mut active = vec![false; FIELDS * n];
    for v in 0..n {
        for c in 0..FIELDS {
            active[c * n + v] = sur.active[v];
        }
    }
    let (dirichlet, open_facets) = outer_conditions(mesh, sur, &data.outer);
    for (fct, pressure) in open_facets {
        let facet = &mesh.facets[fct];
        let nrm = mesh.facet_normal(fct, facet.triangles[0])?;
        let half = 0.5 * mesh.facet_length(fct);
        for &v in &facet.vertices {
            rhs[vdof(v, 0)] -= half * pressure * nrm.x;
            rhs[vdof(v, 1)] -= half * pressure * nrm.y;
        }
    }
    let mut dirichlet = dirichlet;
    if let Some((p, value)) = data.pressure_pin {
        let v = (0..n)
            .filter(|&v| sur.active[v])
            .min_by(|&a, &b| {
                (mesh.vertices[a] - p)
                    .norm_sq()
                    .total_cmp(&(mesh.vertices[b] - p).norm_sq())
            })
            .expect("surrogate domain is nonempty");
        dirichlet.push((pdof(v), value));
    }
    Ok(AssembledSystem::from_full(
        &full, &rhs, active, dirichlet, false,
    ))
}

/// (∇g) τ at `p`, by central differences with a step tied to the mesh size.
fn tangential_derivative(g: &VecFn, p: Point, tau: Vec2, h: f64) -> Vec2 {
    let e = 1e-3 * h;
    (g(p + tau * e) - g(p - tau * e)) * (0.5 / e)
}

type OpenFacet = (usize, f64);

fn outer_conditions(
    mesh: &BackgroundMesh,
    sur: &SurrogateGeometry,
    outer: &OuterBc,
) -> (Vec<(usize, f64)>, Vec<OpenFacet>) {
    let n = mesh.n_vertices();
    let b = mesh.bounds;
    let sides: [(&SideBc, Box<dyn Fn(Point) -> bool>); 4] = [
        (&outer.left, Box::new(move |p: Point| p.x == b.xmin)),
        (&outer.right, Box::new(move |p: Point| p.x == b.xmax)),
        (&outer.bottom, Box::new(move |p: Point| p.y == b.ymin)),
        (&outer.top, Box::new(move |p: Point| p.y == b.ymax)),
    ];
    let mut dirichlet = Vec::new();
    // full Dirichlet sides take precedence over slip at shared corners
    for (bc, on) in &sides {
        if let SideBc::Dirichlet(u) = bc {
            for v in (0..n).filter(|&v| sur.active[v] && on(mesh.vertices[v])) {
                let val = u(mesh.vertices[v]);
                dirichlet.push((v, val.x));
                dirichlet.push((n + v, val.y));
            }
        }
    }
    for (bc, on) in &sides {
        if let SideBc::Slip = bc {
            let vertical = on(Point::new(b.xmin, 0.5 * (b.ymin + b.ymax)))
                || on(Point::new(b.xmax, 0.5 * (b.ymin + b.ymax)));
            let comp = if vertical { 0 } else { 1 };
            for v in (0..n).filter(|&v| sur.active[v] && on(mesh.vertices[v])) {
                dirichlet.push((comp * n + v, 0.0));
            }
        }
    }
    let mut open = Vec::new();
    for (bc, on) in &sides {
        if let SideBc::Open { pressure } = bc {
            for (f, facet) in mesh.facets.iter().enumerate() {
                if facet.is_boundary()
                    && sur.in_surrogate[facet.triangles[0]]
                    && facet.vertices.iter().all(|&v| on(mesh.vertices[v]))
                {
                    open.push((f, *pressure));
                }
            }
        }
    }
    (dirichlet, open)
}

/// Force exerted by the fluid on the embedded body, −∫_Γ̃ σ(u, p) ñ ds.
pub fn drag(mesh: &BackgroundMesh, sur: &SurrogateGeometry, nu: f64, state: &[f64]) -> Vec2 {
    let n = mesh.n_vertices();
    let mut force = Vec2::ZERO;
    for f in &sur.facets {
        let t = f.element;
        let g = mesh.p1_gradients(t);
        let tri = mesh.triangles[t];
        let mut grad = [[0.0; 2]; 2];
        for k in 0..3 {
            for i in 0..2 {
                let u = state[i * n + tri[k]];
                grad[i][0] += u * g[k].x;
                grad[i][1] += u * g[k].y;
            }
        }
        let strain = Mat2(grad).sym();
        for q in &f.points {
            let l = mesh.barycentric(t, q.x);
            let p: f64 = (0..3).map(|k| l[k] * state[2 * n + tri[k]]).sum();
            let traction = strain.apply(f.normal) * (2.0 * nu) - f.normal * p;
            force = force - traction * q.weight;
        }
    }
    force
}
