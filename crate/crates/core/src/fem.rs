//! P1 element kernels and global scalar matrices.

use rayon::prelude::*;

use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::mesh::BackgroundMesh;
use crate::point::Point;
use crate::quadrature::TRI_DEG5;

pub type ScalarFn = std::sync::Arc<dyn Fn(Point) -> f64 + Send + Sync>;

pub fn scalar_fn(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> ScalarFn {
    std::sync::Arc::new(f)
}

pub fn constant(c: f64) -> ScalarFn {
    scalar_fn(move |_| c)
}

/// Condition imposed on the embedded boundary Γ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbeddedBc {
    Dirichlet,
    Neumann,
}

#[derive(Clone)]
pub struct PoissonData {
    /// Volumetric source g.
    pub source: ScalarFn,
    /// g_D, or g_N for a Neumann embedded boundary. SBM evaluates it at M(x̃).
    pub boundary: ScalarFn,
    pub embedded: EmbeddedBc,
    /// Strong Dirichlet value on the background boundary.
    pub outer: ScalarFn,
}

/// Elements per parallel assembly chunk; fixed so the triplet order never
/// depends on the number of workers.
pub const CHUNK: usize = 256;

/// Assembles element-local triplets in parallel and concatenates them in
/// element order.
pub fn assemble_elements<F>(n: usize, elements: &[usize], local: F) -> SparseMatrix
where
    F: Fn(usize, &mut TripletBuilder) + Sync,
{
    assemble_rect(n, n, elements, local)
}

pub fn assemble_rect<F>(rows: usize, cols: usize, elements: &[usize], local: F) -> SparseMatrix
where
    F: Fn(usize, &mut TripletBuilder) + Sync,
{
    let parts: Vec<TripletBuilder> = elements
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut b = TripletBuilder::with_capacity(rows, cols, chunk.len() * 9);
            for &t in chunk {
                local(t, &mut b);
            }
            b
        })
        .collect();
    let slices: Vec<&[(usize, usize, f64)]> = parts.iter().map(TripletBuilder::entries).collect();
    SparseMatrix::from_triplet_parts(rows, cols, &slices)
        .expect("builder indices are checked on push")
}

/// P1 stiffness matrix over the listed elements.
pub fn stiffness(mesh: &BackgroundMesh, elements: &[usize]) -> SparseMatrix {
    assemble_elements(mesh.n_vertices(), elements, |t, b| {
        let g = mesh.p1_gradients(t);
        let area = mesh.area(t);
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                b.push(tri[i], tri[j], area * g[i].dot(g[j]));
            }
        }
    })
}

/// Consistent P1 mass matrix over the listed elements.
pub fn mass(mesh: &BackgroundMesh, elements: &[usize]) -> SparseMatrix {
    assemble_elements(mesh.n_vertices(), elements, |t, b| {
        let area = mesh.area(t);
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                b.push(tri[i], tri[j], area / 12.0 * if i == j { 2.0 } else { 1.0 });
            }
        }
    })
}

/// Value of the P1 field at a point of element `t`.
pub fn eval_p1(mesh: &BackgroundMesh, t: usize, field: &[f64], p: Point) -> f64 {
    let l = mesh.barycentric(t, p);
    let tri = mesh.triangles[t];
    l[0] * field[tri[0]] + l[1] * field[tri[1]] + l[2] * field[tri[2]]
}

/// ∫ (u_h − f)² over the listed elements with the degree-5 rule.
pub fn l2_error_sq(
    mesh: &BackgroundMesh,
    elements: &[usize],
    u: &[f64],
    f: impl Fn(Point) -> f64,
) -> f64 {
    elements
        .iter()
        .map(|&t| {
            TRI_DEG5
                .map(mesh.triangle_points(t))
                .map(|(p, w)| {
                    let e = eval_p1(mesh, t, u, p) - f(p);
                    w * e * e
                })
                .sum::<f64>()
        })
        .sum()
}

/// Load vector ∫ f φ_i over the listed elements.
pub fn load(
    mesh: &BackgroundMesh,
    elements: &[usize],
    f: &(dyn Fn(Point) -> f64 + Sync),
) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_vertices()];
    for &t in elements {
        let tri = mesh.triangles[t];
        let v = mesh.triangle_points(t);
        let area = mesh.area(t);
        for (b, &w) in TRI_DEG5.points.iter().zip(TRI_DEG5.weights) {
            let p = v[0] * b[0] + v[1] * b[1] + v[2] * b[2];
            let fw = f(p) * w * area;
            for k in 0..3 {
                out[tri[k]] += fw * b[k];
            }
        }
    }
    out
}
