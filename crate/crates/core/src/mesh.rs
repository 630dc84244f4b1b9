//! Structured triangular background mesh.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::point::{Point, Vec2};

pub const NO_TRIANGLE: usize = usize::MAX;

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub const fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Self {
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p.x >= self.xmin - tol
            && p.x <= self.xmax + tol
            && p.y >= self.ymin - tol
            && p.y <= self.ymax + tol
    }
}

/// An edge with one (boundary) or two (interior) incident triangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Facet {
    pub vertices: [usize; 2],
    /// Second entry is [`NO_TRIANGLE`] on the boundary.
    pub triangles: [usize; 2],
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.triangles[1] == NO_TRIANGLE
    }

    /// The incident triangle that is not `t`.
    pub fn other(&self, t: usize) -> usize {
        if self.triangles[0] == t {
            self.triangles[1]
        } else {
            self.triangles[0]
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundMesh {
    pub bounds: Rect,
    pub nx: usize,
    pub ny: usize,
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub facets: Vec<Facet>,
    /// `triangle_facets[t][k]` is the edge from local vertex k to k+1.
    pub triangle_facets: Vec<[usize; 3]>,
    pub h: f64,
}

impl BackgroundMesh {
    /// Regular `nx × ny` grid, each cell cut along its lower-left to upper-right diagonal.
    pub fn structured(bounds: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return invalid(format!("cell counts must be positive, got {nx}x{ny}"));
        }
        if !(bounds.xmax > bounds.xmin && bounds.ymax > bounds.ymin) {
            return invalid(format!("degenerate or inverted rectangle {bounds:?}"));
        }
        let dx = bounds.width() / nx as f64;
        let dy = bounds.height() / ny as f64;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            let y = if j == ny {
                bounds.ymax
            } else {
                bounds.ymin + j as f64 * dy
            };
            for i in 0..=nx {
                let x = if i == nx {
                    bounds.xmax
                } else {
                    bounds.xmin + i as f64 * dx
                };
                vertices.push(Vec2::new(x, y));
            }
        }
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v11, v01) =
                    (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        let mut lookup: HashMap<(usize, usize), usize> =
            HashMap::with_capacity(3 * nx * ny + nx + ny);
        let mut facets: Vec<Facet> = Vec::with_capacity(3 * nx * ny + nx + ny);
        let mut triangle_facets = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut tf = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let f = *lookup.entry(key).or_insert_with(|| {
                    facets.push(Facet {
                        vertices: [a, b],
                        triangles: [t, NO_TRIANGLE],
                    });
                    facets.len() - 1
                });
                if facets[f].triangles[0] != t {
                    facets[f].triangles[1] = t;
                }
                tf[k] = f;
            }
            triangle_facets.push(tf);
        }
        let h = dx.hypot(dy).max(dx).max(dy);
        Ok(Self {
            bounds,
            nx,
            ny,
            vertices,
            triangles,
            facets,
            triangle_facets,
            h,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            self.bounds.width() / self.nx as f64,
            self.bounds.height() / self.ny as f64,
        )
    }

    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn area(&self, t: usize) -> f64 {
        self.signed_area(t).abs()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        (a + b + c) * (1.0 / 3.0)
    }

    pub fn facet_points(&self, f: usize) -> [Point; 2] {
        self.facets[f].vertices.map(|v| self.vertices[v])
    }

    pub fn facet_length(&self, f: usize) -> f64 {
        let [a, b] = self.facet_points(f);
        (b - a).norm()
    }

    /// Unit normal of `facet` pointing out of `from_triangle`.
    pub fn facet_normal(&self, facet: usize, from_triangle: usize) -> Result<Vec2> {
        let f = self
            .facets
            .get(facet)
            .ok_or_else(|| Error::InvalidArgument(format!("no facet {facet}")))?;
        if from_triangle == NO_TRIANGLE || !f.triangles.contains(&from_triangle) {
            return invalid(format!(
                "facet {facet} is not incident to triangle {from_triangle}"
            ));
        }
        let [a, b] = self.facet_points(facet);
        let n = Vec2::new(b.y - a.y, a.x - b.x).normalized();
        let mid = a.lerp(b, 0.5);
        Ok(if n.dot(self.centroid(from_triangle) - mid) > 0.0 {
            -n
        } else {
            n
        })
    }

    /// Gradients of the three barycentric (P1 hat) functions on triangle `t`.
    pub fn p1_gradients(&self, t: usize) -> [Vec2; 3] {
        let [p0, p1, p2] = self.triangle_points(t);
        let two_a = (p1 - p0).cross(p2 - p0);
        let g = |a: Point, b: Point| Vec2::new(a.y - b.y, b.x - a.x) * (1.0 / two_a);
        [g(p1, p2), g(p2, p0), g(p0, p1)]
    }

    /// Barycentric coordinates of `p` in triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [p0, p1, p2] = self.triangle_points(t);
        let two_a = (p1 - p0).cross(p2 - p0);
        let l1 = (p - p0).cross(p2 - p0) / two_a;
        let l2 = (p1 - p0).cross(p - p0) / two_a;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Triangle containing `p`, or `None` outside the background rectangle.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let b = &self.bounds;
        let tol = 1e-12 * b.diameter();
        if !b.contains(p, tol) {
            return None;
        }
        let (dx, dy) = self.cell_size();
        let fx = (p.x - b.xmin) / dx;
        let fy = (p.y - b.ymin) / dy;
        let i = (fx.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (fy.floor().max(0.0) as usize).min(self.ny - 1);
        let (xi, eta) = (fx - i as f64, fy - j as f64);
        let cell = j * self.nx + i;
        Some(if xi >= eta { 2 * cell } else { 2 * cell + 1 })
    }

    /// P1 interpolant of a nodal field at `p`; `None` outside the mesh.
    pub fn interpolate(&self, field: &[f64], p: Point) -> Option<f64> {
        let t = self.locate(p)?;
        let l = self.barycentric(t, p);
        let tri = self.triangles[t];
        Some(l[0] * field[tri[0]] + l[1] * field[tri[1]] + l[2] * field[tri[2]])
    }

    /// Vertices on the outer rectangle.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut on = vec![false; self.n_vertices()];
        for f in self.facets.iter().filter(|f| f.is_boundary()) {
            on[f.vertices[0]] = true;
            on[f.vertices[1]] = true;
        }
        on
    }

    /// Plain-text listing: a `vertices` block then a `triangles` block, one record per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {}", self.n_vertices());
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "{i} {:.17e} {:.17e}", v.x, v.y);
        }
        let _ = writeln!(s, "triangles {}", self.n_triangles());
        for (t, [a, b, c]) in self.triangles.iter().enumerate() {
            let _ = writeln!(s, "{t} {a} {b} {c}");
        }
        s
    }
}
