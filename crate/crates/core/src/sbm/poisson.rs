use crate::error::Result;
use crate::fem::{assemble_elements, eval_p1, load, EmbeddedBc, PoissonData, ScalarFn};
use crate::geometry::SurrogateGeometry;
use crate::mesh::BackgroundMesh;
use crate::point::Vec2;
use crate::system::AssembledSystem;

use super::SbmOptions;

/// Assembles the SBM Poisson system over D̃ and Γ̃ with strong Dirichlet
/// rows on the background boundary eliminated.
pub fn assemble_poisson_sbm(
    mesh: &BackgroundMesh,
    sur: &SurrogateGeometry,
    data: &PoissonData,
    opts: &SbmOptions,
) -> Result<AssembledSystem> {
    opts.validate()?;
    let n = mesh.n_vertices();
    let eta = opts.c / mesh.h;
    let ne = sur.elements.len();
    let items: Vec<usize> = (0..ne + sur.facets.len()).collect();
    let full = assemble_elements(n, &items, |k, b| {
        if k < ne {
            let t = sur.elements[k];
            let g = mesh.p1_gradients(t);
            let area = mesh.area(t);
            let tri = mesh.triangles[t];
            for i in 0..3 {
                for j in 0..3 {
                    b.push(tri[i], tri[j], area * g[i].dot(g[j]));
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
            let l = mesh.barycentric(t, q.x);
            let d = if opts.shift { q.d } else { Vec2::ZERO };
            for bi in 0..3 {
                for a in 0..3 {
                    let v = match data.embedded {
                        EmbeddedBc::Dirichlet => {
                            let shifted = l[a] + g[a].dot(d);
                            -nt.dot(g[a]) * l[bi] - shifted * nt.dot(g[bi]) + eta * shifted * l[bi]
                        }
                        EmbeddedBc::Neumann => {
                            let nn = q.normal.dot(nt);
                            -(nt.dot(g[a]) - nn * q.normal.dot(g[a])) * l[bi]
                        }
                    };
                    b.push(tri[bi], tri[a], q.weight * v);
                }
            }
        }
    });

    let mut rhs = load(mesh, &sur.elements, data.source.as_ref());
    for f in &sur.facets {
        let t = f.element;
        let g = mesh.p1_gradients(t);
        let tri = mesh.triangles[t];
        for q in &f.points {
            let l = mesh.barycentric(t, q.x);
            let gb = (data.boundary)(q.closest);
            for bi in 0..3 {
                let v = match data.embedded {
                    EmbeddedBc::Dirichlet => -gb * f.normal.dot(g[bi]) + eta * gb * l[bi],
                    EmbeddedBc::Neumann => q.normal.dot(f.normal) * gb * l[bi],
                };
                rhs[tri[bi]] += q.weight * v;
            }
        }
    }
    let on_boundary = mesh.boundary_vertices();
    let dirichlet = (0..n)
        .filter(|&v| on_boundary[v] && sur.active[v])
        .map(|v| (v, (data.outer)(mesh.vertices[v])))
        .collect();
    Ok(AssembledSystem::from_full(
        &full,
        &rhs,
        sur.active.clone(),
        dirichlet,
        false,
    ))
}

/// ∫_Γ̃ (T + ∇T·d − g_D∘M)² ds for a full nodal field `t`.
pub fn boundary_mismatch(
    mesh: &BackgroundMesh,
    sur: &SurrogateGeometry,
    g_d: &ScalarFn,
    field: &[f64],
) -> f64 {
    let mut s = 0.0;
    for f in &sur.facets {
        let t = f.element;
        let g = mesh.p1_gradients(t);
        let tri = mesh.triangles[t];
        let grad = (0..3).fold(Vec2::ZERO, |acc, k| acc + g[k] * field[tri[k]]);
        for q in &f.points {
            let v = eval_p1(mesh, t, field, q.x) + grad.dot(q.d) - g_d(q.closest);
            s += q.weight * v * v;
        }
    }
    s
}
