//! CutFEM Poisson: integration on the cut geometry, Nitsche terms on Γ and
//! ghost-penalty stabilization on the faces around cut elements.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fem::{assemble_elements, EmbeddedBc, PoissonData};
use crate::geometry::{CutClassification, Tag};
use crate::linalg::SparseMatrix;
use crate::mesh::BackgroundMesh;
use crate::point::Point;
use crate::system::AssembledSystem;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CutfemOptions {
    pub gamma_d: f64,
    pub gamma_n: f64,
    /// Ghost-penalty weight; zero disables the stabilization.
    pub gamma_1: f64,
}

impl Default for CutfemOptions {
    fn default() -> Self {
        Self {
            gamma_d: 10.0,
            gamma_n: 0.1,
            gamma_1: 0.1,
        }
    }
}

impl CutfemOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_d > 0.0 && self.gamma_n >= 0.0 && self.gamma_1 >= 0.0) {
            return invalid(format!("CutFEM coefficients out of range: {self:?}"));
        }
        Ok(())
    }
}

/// Local dofs and gradient-jump coefficients of a ghost face: for each of the
/// (up to four) vertices, n_F·∇φ|_K − n_F·∇φ|_K'.
fn face_jump(mesh: &BackgroundMesh, f: usize) -> Result<(Vec<(usize, f64)>, f64)> {
    let facet = &mesh.facets[f];
    let [k, kp] = facet.triangles;
    let n = mesh.facet_normal(f, k)?;
    let mut jump: Vec<(usize, f64)> = Vec::with_capacity(4);
    for (t, sign) in [(k, 1.0), (kp, -1.0)] {
        let g = mesh.p1_gradients(t);
        for (a, &v) in mesh.triangles[t].iter().enumerate() {
            let c = sign * n.dot(g[a]);
            match jump.iter_mut().find(|e| e.0 == v) {
                Some(e) => e.1 += c,
                None => jump.push((v, c)),
            }
        }
    }
    Ok((jump, mesh.facet_length(f)))
}

/// Ghost-penalty matrix j(·,·) over the background vertices.
pub fn ghost_penalty(
    mesh: &BackgroundMesh,
    cut: &CutClassification,
    gamma_1: f64,
) -> Result<SparseMatrix> {
    let mut t = Vec::new();
    for &f in &cut.ghost_faces {
        let (jump, len) = face_jump(mesh, f)?;
        let s = gamma_1 * mesh.h * len;
        for &(i, ci) in &jump {
            for &(j, cj) in &jump {
                t.push((i, j, s * ci * cj));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.n_vertices(), mesh.n_vertices(), &t)
}

pub fn assemble_poisson_cutfem(
    mesh: &BackgroundMesh,
    cut: &CutClassification,
    data: &PoissonData,
    opts: &CutfemOptions,
) -> Result<AssembledSystem> {
    opts.validate()?;
    let n = mesh.n_vertices();
    let h = mesh.h;
    let pen = opts.gamma_d / h;
    let neu = opts.gamma_n * h;
    let dirichlet_bc = data.embedded == EmbeddedBc::Dirichlet;

    let bulk = assemble_elements(n, &cut.domain, |t, b| {
        let g = mesh.p1_gradients(t);
        let tri = mesh.triangles[t];
        let area = match cut.tags[t] {
            Tag::Inside => mesh.area(t),
            _ => cut.cut_element(t).map_or(0.0, |e| e.inside_area),
        };
        for i in 0..3 {
            for j in 0..3 {
                b.push(tri[i], tri[j], area * g[i].dot(g[j]));
            }
        }
        let Some(e) = cut.cut_element(t) else { return };
        for q in &e.interface {
            let l = mesh.barycentric(t, q.x);
            for bi in 0..3 {
                for a in 0..3 {
                    let dn_a = q.normal.dot(g[a]);
                    let dn_b = q.normal.dot(g[bi]);
                    let v = if dirichlet_bc {
                        -dn_a * l[bi] - l[a] * dn_b + pen * l[a] * l[bi]
                    } else {
                        neu * dn_a * dn_b
                    };
                    b.push(tri[bi], tri[a], q.weight * v);
                }
            }
        }
    });
    let full = if opts.gamma_1 > 0.0 {
        let j = ghost_penalty(mesh, cut, opts.gamma_1)?;
        bulk.add(&j)?
    } else {
        bulk
    };

    let mut rhs = vec![0.0; n];
    for &t in &cut.domain {
        let tri = mesh.triangles[t];
        let g = mesh.p1_gradients(t);
        for (p, w) in cut.volume_rule(mesh, t) {
            let l = mesh.barycentric(t, p);
            let fw = (data.source)(p) * w;
            for k in 0..3 {
                rhs[tri[k]] += fw * l[k];
            }
        }
        if let Some(e) = cut.cut_element(t) {
            for q in &e.interface {
                let l = mesh.barycentric(t, q.x);
                let gb = (data.boundary)(q.x);
                for k in 0..3 {
                    let dn = q.normal.dot(g[k]);
                    rhs[tri[k]] += q.weight
                        * if dirichlet_bc {
                            -gb * dn + pen * gb * l[k]
                        } else {
                            gb * (l[k] + neu * dn)
                        };
                }
            }
        }
    }
    let on_boundary = mesh.boundary_vertices();
    let dirichlet = (0..n)
        .filter(|&v| on_boundary[v] && cut.active[v])
        .map(|v| (v, (data.outer)(mesh.vertices[v])))
        .collect();
    Ok(AssembledSystem::from_full(
        &full,
        &rhs,
        cut.active.clone(),
        dirichlet,
        true,
    ))
}

/// max |u_h − g_D| over the interface quadrature points.
pub fn interface_trace_error(
    mesh: &BackgroundMesh,
    cut: &CutClassification,
    field: &[f64],
    g_d: impl Fn(Point) -> f64,
) -> f64 {
    cut.cut
        .iter()
        .flat_map(|e| e.interface.iter().map(move |q| (e.element, q.x)))
        .map(|(t, x)| (crate::fem::eval_p1(mesh, t, field, x) - g_d(x)).abs())
        .fold(0.0, f64::max)
}
