use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::mesh::BackgroundMesh;
use crate::point::{Point, Vec2};
use crate::quadrature::{segment_rule, TriangleRule, TRI_DEG2};

use super::level_set::LevelSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tag {
    Inside,
    Cut,
    Outside,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Inside => "INSIDE",
            Tag::Cut => "CUT",
            Tag::Outside => "OUTSIDE",
        }
    }
}

/// Sub-triangulation of one triangle along the zero line of a linear φ.
#[derive(Clone, Debug, PartialEq)]
pub struct Clip {
    /// Pieces where φ < 0.
    pub negative: Vec<[Point; 3]>,
    /// Pieces where φ > 0.
    pub positive: Vec<[Point; 3]>,
    pub segment: Option<[Point; 2]>,
}

fn area(t: &[Point; 3]) -> f64 {
    0.5 * (t[1] - t[0]).cross(t[2] - t[0]).abs()
}

/// Splits a counterclockwise triangle by the zero set of the linear
/// interpolant of the vertex values `phi` (none of which may be zero).
pub fn clip_triangle(v: [Point; 3], phi: [f64; 3]) -> Clip {
    let neg = phi.map(|p| p < 0.0);
    let n_neg = neg.iter().filter(|&&b| b).count();
    if n_neg == 3 {
        return Clip {
            negative: vec![v],
            positive: vec![],
            segment: None,
        };
    }
    if n_neg == 0 {
        return Clip {
            negative: vec![],
            positive: vec![v],
            segment: None,
        };
    }
    let lone_is_neg = n_neg == 1;
    let k = (0..3).find(|&i| neg[i] == lone_is_neg).unwrap();
    let (k1, k2) = ((k + 1) % 3, (k + 2) % 3);
    let cross = |i: usize, j: usize| {
        let t = phi[i] / (phi[i] - phi[j]);
        v[i].lerp(v[j], t)
    };
    let p1 = cross(k, k1);
    let p2 = cross(k, k2);
    let lone = vec![[v[k], p1, p2]];
    let quad = vec![[p1, v[k1], v[k2]], [p1, v[k2], p2]];
    let segment = Some([p1, p2]);
    if lone_is_neg {
        Clip {
            negative: lone,
            positive: quad,
            segment,
        }
    } else {
        Clip {
            negative: quad,
            positive: lone,
            segment,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfacePoint {
    pub x: Point,
    pub weight: f64,
    /// Unit normal from the analytic gradient, pointing out of the physical domain.
    pub normal: Vec2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutElement {
    pub element: usize,
    /// Sub-triangles of the physical part.
    pub pieces: Vec<[Point; 3]>,
    /// Degree-2 rule on the physical part.
    pub inside: Vec<(Point, f64)>,
    pub inside_area: f64,
    pub outside_area: f64,
    pub segment: [Point; 2],
    pub interface: Vec<InterfacePoint>,
}

/// Interface points per cut segment.
pub const SEGMENT_POINTS: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct CutClassification {
    pub tags: Vec<Tag>,
    /// Snapped oriented φ per vertex.
    pub vertex_phi: Vec<f64>,
    pub cut: Vec<CutElement>,
    /// Element index to position in `cut`, `usize::MAX` when not cut.
    pub cut_index: Vec<usize>,
    /// INSIDE ∪ CUT elements.
    pub domain: Vec<usize>,
    /// Interior facets between two elements of the domain, at least one of them cut.
    pub ghost_faces: Vec<usize>,
    /// Vertices of the domain.
    pub active: Vec<bool>,
}

impl CutClassification {
    pub fn build(mesh: &BackgroundMesh, ls: &LevelSet) -> Result<Self> {
        let vertex_phi: Vec<f64> = mesh
            .vertices
            .iter()
            .map(|&p| ls.snapped(p, mesh.h))
            .collect();
        let tags: Vec<Tag> = mesh
            .triangles
            .iter()
            .map(|tri| {
                let n = tri.iter().filter(|&&v| vertex_phi[v] < 0.0).count();
                match n {
                    3 => Tag::Inside,
                    0 => Tag::Outside,
                    _ => Tag::Cut,
                }
            })
            .collect();
        let cut_ids: Vec<usize> = (0..tags.len()).filter(|&t| tags[t] == Tag::Cut).collect();
        let cut = cut_ids
            .par_iter()
            .map(|&t| cut_element(mesh, ls, &vertex_phi, t))
            .collect::<Result<Vec<_>>>()?;
        let mut cut_index = vec![usize::MAX; tags.len()];
        for (k, &t) in cut_ids.iter().enumerate() {
            cut_index[t] = k;
        }
        let domain: Vec<usize> = (0..tags.len())
            .filter(|&t| tags[t] != Tag::Outside)
            .collect();
        let ghost_faces = mesh
            .facets
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                !f.is_boundary()
                    && f.triangles.iter().all(|&t| tags[t] != Tag::Outside)
                    && f.triangles.iter().any(|&t| tags[t] == Tag::Cut)
            })
            .map(|(i, _)| i)
            .collect();
        let mut active = vec![false; mesh.n_vertices()];
        for &t in &domain {
            for &v in &mesh.triangles[t] {
                active[v] = true;
            }
        }
        Ok(Self {
            tags,
            vertex_phi,
            cut,
            cut_index,
            domain,
            ghost_faces,
            active,
        })
    }

    pub fn cut_element(&self, t: usize) -> Option<&CutElement> {
        self.cut.get(self.cut_index[t])
    }

    /// Fraction of element `t` lying in the physical domain.
    pub fn inside_fraction(&self, mesh: &BackgroundMesh, t: usize) -> f64 {
        match self.tags[t] {
            Tag::Inside => 1.0,
            Tag::Outside => 0.0,
            Tag::Cut => self.cut_element(t).unwrap().inside_area / mesh.area(t),
        }
    }

    /// Quadrature for ∫ over the physical part of element `t`.
    pub fn volume_rule(&self, mesh: &BackgroundMesh, t: usize) -> Vec<(Point, f64)> {
        match self.tags[t] {
            Tag::Inside => TRI_DEG2.map(mesh.triangle_points(t)).collect(),
            Tag::Outside => Vec::new(),
            Tag::Cut => self.cut_element(t).unwrap().inside.clone(),
        }
    }

    /// Quadrature of degree `rule` on the physical part of element `t`.
    pub fn volume_rule_with(
        &self,
        mesh: &BackgroundMesh,
        t: usize,
        rule: &TriangleRule,
    ) -> Vec<(Point, f64)> {
        match self.tags[t] {
            Tag::Inside => rule.map(mesh.triangle_points(t)).collect(),
            Tag::Outside => Vec::new(),
            Tag::Cut => self
                .cut_element(t)
                .unwrap()
                .pieces
                .iter()
                .flat_map(|p| rule.map(*p).collect::<Vec<_>>())
                .collect(),
        }
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// CSV with columns element_id, tag, inside_area_fraction.
    pub fn to_csv(&self, mesh: &BackgroundMesh) -> String {
        let mut s = String::from("element_id,tag,inside_area_fraction\n");
        for t in 0..self.tags.len() {
            let _ = writeln!(
                s,
                "{t},{},{:.17e}",
                self.tags[t].as_str(),
                self.inside_fraction(mesh, t)
            );
        }
        s
    }
}

fn cut_element(
    mesh: &BackgroundMesh,
    ls: &LevelSet,
    vertex_phi: &[f64],
    t: usize,
) -> Result<CutElement> {
    let pts = mesh.triangle_points(t);
    let phi = mesh.triangles[t].map(|v| vertex_phi[v]);
    let clip = clip_triangle(pts, phi);
    let inside = clip
        .negative
        .iter()
        .flat_map(|tri| TRI_DEG2.map(*tri).collect::<Vec<_>>())
        .collect();
    let inside_area = clip.negative.iter().map(area).sum();
    let outside_area = clip.positive.iter().map(area).sum();
    let segment = clip.segment.expect("cut element has a segment");
    let interface = segment_rule(segment[0], segment[1], SEGMENT_POINTS)
        .map(|(x, weight)| {
            Ok(InterfacePoint {
                x,
                weight,
                normal: ls.oriented_grad(x)?.normalized(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CutElement {
        element: t,
        pieces: clip.negative.clone(),
        inside,
        inside_area,
        outside_area,
        segment,
        interface,
    })
}
