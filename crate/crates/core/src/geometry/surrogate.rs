use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::BackgroundMesh;
use crate::point::{Point, Vec2};
use crate::quadrature::segment_rule;

use super::level_set::LevelSet;

/// Quadrature point on a surrogate facet together with its image on Γ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MappedPoint {
    pub x: Point,
    pub weight: f64,
    /// Closest point M(x) on the true boundary.
    pub closest: Point,
    /// d = M(x) − x.
    pub d: Vec2,
    /// True unit normal at M(x), pointing out of the physical domain.
    pub normal: Vec2,
    /// 90° counterclockwise rotation of `normal`.
    pub tangent: Vec2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateFacet {
    pub facet: usize,
    /// The surrogate element owning the facet.
    pub element: usize,
    /// Unit normal pointing out of the surrogate domain.
    pub normal: Vec2,
    pub tangent: Vec2,
    pub length: f64,
    pub points: Vec<MappedPoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateGeometry {
    /// Per vertex: snapped oriented φ is negative.
    pub physical_vertex: Vec<bool>,
    /// Per element: all three vertices physical.
    pub in_surrogate: Vec<bool>,
    pub elements: Vec<usize>,
    pub facets: Vec<SurrogateFacet>,
    /// Vertices of the surrogate domain.
    pub active: Vec<bool>,
}

/// Gauss points per surrogate facet.
pub const FACET_POINTS: usize = 3;

impl SurrogateGeometry {
    pub fn build(mesh: &BackgroundMesh, ls: &LevelSet) -> Result<Self> {
        let physical_vertex: Vec<bool> = mesh
            .vertices
            .iter()
            .map(|&p| ls.snapped(p, mesh.h) < 0.0)
            .collect();
        let in_surrogate: Vec<bool> = mesh
            .triangles
            .iter()
            .map(|tri| tri.iter().all(|&v| physical_vertex[v]))
            .collect();
        let elements: Vec<usize> = (0..mesh.n_triangles())
            .filter(|&t| in_surrogate[t])
            .collect();
        if elements.is_empty() {
            return Err(Error::GeometryDegenerate(
                "surrogate domain has no elements".into(),
            ));
        }
        let mut active = vec![false; mesh.n_vertices()];
        for &t in &elements {
            for &v in &mesh.triangles[t] {
                active[v] = true;
            }
        }
        let mut candidates = Vec::new();
        for &t in &elements {
            for &f in &mesh.triangle_facets[t] {
                let facet = &mesh.facets[f];
                if !facet.is_boundary() && !in_surrogate[facet.other(t)] {
                    candidates.push((f, t));
                }
            }
        }
        let facets = candidates
            .par_iter()
            .map(|&(f, t)| surrogate_facet(mesh, ls, f, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            physical_vertex,
            in_surrogate,
            elements,
            facets,
            active,
        })
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

fn surrogate_facet(
    mesh: &BackgroundMesh,
    ls: &LevelSet,
    f: usize,
    t: usize,
) -> Result<SurrogateFacet> {
    let normal = mesh.facet_normal(f, t)?;
    let [a, b] = mesh.facet_points(f);
    let points = segment_rule(a, b, FACET_POINTS)
        .map(|(x, weight)| {
            let (closest, n) = ls.project(x)?;
            Ok(MappedPoint {
                x,
                weight,
                closest,
                d: closest - x,
                normal: n,
                tangent: n.perp(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurrogateFacet {
        facet: f,
        element: t,
        normal,
        tangent: normal.perp(),
        length: (b - a).norm(),
        points,
    })
}
