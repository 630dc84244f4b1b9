//! Reference quadrature rules on triangles and segments.

use crate::point::Point;

/// Barycentric rule on the reference triangle; weights sum to one.
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

/// Degree-2 rule with three interior points.
pub const TRI_DEG2: TriangleRule = TriangleRule {
    points: &[
        [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    ],
    weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
};

const A1: f64 = 0.059_715_871_789_769_82;
const B1: f64 = 0.470_142_064_105_115_1;
const A2: f64 = 0.797_426_985_353_087_3;
const B2: f64 = 0.101_286_507_323_456_3;
const W1: f64 = 0.132_394_152_788_506_1;
const W2: f64 = 0.125_939_180_544_827_1;

/// Degree-5 seven-point rule, used for error norms.
pub const TRI_DEG5: TriangleRule = TriangleRule {
    points: &[
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [A1, B1, B1],
        [B1, A1, B1],
        [B1, B1, A1],
        [A2, B2, B2],
        [B2, A2, B2],
        [B2, B2, A2],
    ],
    weights: &[0.225, W1, W1, W1, W2, W2, W2],
};

impl TriangleRule {
    /// Physical points and weights on the triangle `v` (weights sum to its area).
    pub fn map(&self, v: [Point; 3]) -> impl Iterator<Item = (Point, f64)> + '_ {
        let area = 0.5 * (v[1] - v[0]).cross(v[2] - v[0]).abs();
        self.points
            .iter()
            .zip(self.weights)
            .map(move |(b, &w)| (v[0] * b[0] + v[1] * b[1] + v[2] * b[2], w * area))
    }
}

/// Gauss-Legendre abscissae on [0, 1] with weights summing to one.
pub fn gauss_segment(n: usize) -> &'static [(f64, f64)] {
    const G2: [(f64, f64); 2] = [
        (0.211_324_865_405_187_1, 0.5),
        (0.788_675_134_594_812_9, 0.5),
    ];
    const G3: [(f64, f64); 3] = [
        (0.112_701_665_379_258_3, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.887_298_334_620_741_7, 5.0 / 18.0),
    ];
    match n {
        2 => &G2,
        3 => &G3,
        _ => panic!("no {n}-point Gauss rule"),
    }
}

/// Points and weights of an `n`-point Gauss rule on the segment `a`-`b`.
pub fn segment_rule(a: Point, b: Point, n: usize) -> impl Iterator<Item = (Point, f64)> {
    let len = (b - a).norm();
    gauss_segment(n)
        .iter()
        .map(move |&(t, w)| (a.lerp(b, t), w * len))
}
