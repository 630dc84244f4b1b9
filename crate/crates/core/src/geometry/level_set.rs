use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::point::{Point, Vec2};

/// Analytic shapes. The ellipse uses the implicit form
/// `μ2²(x−μ3)² + μ1²(y−μ4)² − μ1²μ2²R`, whose zero set has semi-axes `μ1√R`, `μ2√R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Circle {
        center: Point,
        radius: f64,
    },
    /// φ is the signed L∞ distance to the box.
    Box {
        center: Point,
        half: Vec2,
    },
    Ellipse {
        mu: [f64; 4],
        r: f64,
    },
}

/// Which side of φ = 0 is the physical domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Physical domain is {φ < 0}.
    Interior,
    /// Physical domain is {φ > 0}.
    Exterior,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Interior => 1.0,
            Orientation::Exterior => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Interior => Orientation::Exterior,
            Orientation::Exterior => Orientation::Interior,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub shape: Shape,
    pub orientation: Orientation,
}

const NEWTON_CAP: usize = 100;
const NEWTON_TOL: f64 = 1e-12;

fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

impl LevelSet {
    pub fn new(shape: Shape, orientation: Orientation) -> Result<Self> {
        let ok = match shape {
            Shape::Circle { radius, .. } => radius > 0.0,
            Shape::Box { half, .. } => half.x > 0.0 && half.y > 0.0,
            Shape::Ellipse { mu, r } => mu[0] > 0.0 && mu[1] > 0.0 && r > 0.0,
        };
        if !ok {
            return invalid(format!("non-positive extent in {shape:?}"));
        }
        Ok(Self { shape, orientation })
    }

    pub fn circle(center: Point, radius: f64, orientation: Orientation) -> Result<Self> {
        Self::new(Shape::Circle { center, radius }, orientation)
    }

    pub fn rect(center: Point, half: Vec2, orientation: Orientation) -> Result<Self> {
        Self::new(Shape::Box { center, half }, orientation)
    }

    pub fn ellipse(mu: [f64; 4], r: f64, orientation: Orientation) -> Result<Self> {
        Self::new(Shape::Ellipse { mu, r }, orientation)
    }

    pub fn flipped(&self) -> Self {
        Self {
            orientation: self.orientation.flipped(),
            ..*self
        }
    }

    pub fn translated(&self, v: Vec2) -> Self {
        let shape = match self.shape {
            Shape::Circle { center, radius } => Shape::Circle {
                center: center + v,
                radius,
            },
            Shape::Box { center, half } => Shape::Box {
                center: center + v,
                half,
            },
            Shape::Ellipse { mu, r } => Shape::Ellipse {
                mu: [mu[0], mu[1], mu[2] + v.x, mu[3] + v.y],
                r,
            },
        };
        Self { shape, ..*self }
    }

    /// Typical magnitude of φ variations, for relative tolerances.
    pub fn scale(&self) -> f64 {
        match self.shape {
            Shape::Circle { radius, .. } => radius,
            Shape::Box { half, .. } => half.x.max(half.y),
            Shape::Ellipse { mu, r } => mu[0] * mu[0] * mu[1] * mu[1] * r,
        }
    }

    /// Raw level-set value, independent of orientation.
    pub fn phi(&self, p: Point) -> f64 {
        match self.shape {
            Shape::Circle { center, radius } => (p - center).norm() - radius,
            Shape::Box { center, half } => {
                let q = p - center;
                (q.x.abs() - half.x).max(q.y.abs() - half.y)
            }
            Shape::Ellipse { mu, r } => {
                let (dx, dy) = (p.x - mu[2], p.y - mu[3]);
                let (a2, b2) = (mu[0] * mu[0], mu[1] * mu[1]);
                b2 * dx * dx + a2 * dy * dy - a2 * b2 * r
            }
        }
    }

    /// Raw gradient of φ.
    pub fn grad(&self, p: Point) -> Result<Vec2> {
        let degenerate = || Error::DegenerateGradient { x: p.x, y: p.y };
        match self.shape {
            Shape::Circle { center, .. } => {
                let q = p - center;
                let n = q.norm();
                if n == 0.0 {
                    return Err(degenerate());
                }
                Ok(q * (1.0 / n))
            }
            Shape::Box { center, half } => {
                let q = p - center;
                Ok(if q.x.abs() - half.x >= q.y.abs() - half.y {
                    Vec2::new(sign(q.x), 0.0)
                } else {
                    Vec2::new(0.0, sign(q.y))
                })
            }
            Shape::Ellipse { mu, .. } => {
                let (dx, dy) = (p.x - mu[2], p.y - mu[3]);
                if dx == 0.0 && dy == 0.0 {
                    return Err(degenerate());
                }
                Ok(Vec2::new(
                    2.0 * mu[1] * mu[1] * dx,
                    2.0 * mu[0] * mu[0] * dy,
                ))
            }
        }
    }

    /// φ signed so that the physical domain is negative.
    pub fn oriented(&self, p: Point) -> f64 {
        self.orientation.sign() * self.phi(p)
    }

    pub fn oriented_grad(&self, p: Point) -> Result<Vec2> {
        Ok(self.grad(p)? * self.orientation.sign())
    }

    pub fn is_physical(&self, p: Point) -> bool {
        self.oriented(p) < 0.0
    }

    /// Oriented φ after moving near-zero raw values to `+1e-10·h`.
    pub fn snapped(&self, p: Point, h: f64) -> f64 {
        let eps = 1e-10 * h;
        let raw = self.phi(p);
        let raw = if raw.abs() < eps { eps } else { raw };
        self.orientation.sign() * raw
    }

    /// Closest point on Γ.
    pub fn closest_point(&self, p: Point) -> Result<Point> {
        Ok(self.project(p)?.0)
    }

    /// Closest point on Γ and the unit normal there pointing out of the physical domain.
    pub fn project(&self, p: Point) -> Result<(Point, Vec2)> {
        let (m, raw_normal) = match self.shape {
            Shape::Circle { center, radius } => {
                let q = p - center;
                let n = q.norm();
                let dir = if n == 0.0 {
                    Vec2::new(1.0, 0.0)
                } else {
                    q * (1.0 / n)
                };
                (center + dir * radius, dir)
            }
            Shape::Box { center, half } => {
                let q = p - center;
                let (ex, ey) = (q.x.abs() - half.x, q.y.abs() - half.y);
                let (local, n) = if ex > 0.0 || ey > 0.0 {
                    let c = Vec2::new(q.x.clamp(-half.x, half.x), q.y.clamp(-half.y, half.y));
                    let n = if ex >= ey {
                        Vec2::new(sign(q.x), 0.0)
                    } else {
                        Vec2::new(0.0, sign(q.y))
                    };
                    (c, n)
                } else if -ex <= -ey {
                    (
                        Vec2::new(sign(q.x) * half.x, q.y),
                        Vec2::new(sign(q.x), 0.0),
                    )
                } else {
                    (
                        Vec2::new(q.x, sign(q.y) * half.y),
                        Vec2::new(0.0, sign(q.y)),
                    )
                };
                (center + local, n)
            }
            Shape::Ellipse { mu, r } => {
                let c = Point::new(mu[2], mu[3]);
                let (a, b) = (mu[0] * r.sqrt(), mu[1] * r.sqrt());
                let local = closest_on_ellipse(a, b, p - c)?;
                let m = c + local;
                (m, self.grad(m)?.normalized())
            }
        };
        Ok((m, raw_normal * self.orientation.sign()))
    }
}

/// Closest point on the axis-aligned ellipse with semi-axes `a`, `b`
/// centred at the origin, by reduction to a monotone secular equation.
fn closest_on_ellipse(a: f64, b: f64, q: Vec2) -> Result<Vec2> {
    let swap = b > a;
    let (e0, e1) = if swap { (b, a) } else { (a, b) };
    let (y0, y1) = if swap {
        (q.y.abs(), q.x.abs())
    } else {
        (q.x.abs(), q.y.abs())
    };
    let (x0, x1) = if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (e0 / e1) * (e0 / e1);
                let s = secular_root(r0, z0, z1, g)?;
                (r0 * y0 / (s + r0), y1 / (s + 1.0))
            } else {
                (y0, y1)
            }
        } else {
            (0.0, e1)
        }
    } else {
        let numer = e0 * y0;
        let denom = e0 * e0 - e1 * e1;
        if numer < denom {
            let t = numer / denom;
            (e0 * t, e1 * (1.0 - t * t).sqrt())
        } else {
            (e0, 0.0)
        }
    };
    let (x0, x1) = (
        x0.copysign(if swap { q.y } else { q.x }),
        x1.copysign(if swap { q.x } else { q.y }),
    );
    Ok(if swap {
        Vec2::new(x1, x0)
    } else {
        Vec2::new(x0, x1)
    })
}

/// Root of F(s) = (r0 z0 / (s + r0))² + (z1 / (s + 1))² − 1 on its bracket,
/// by Newton steps safeguarded with bisection.
fn secular_root(r0: f64, z0: f64, z1: f64, g: f64) -> Result<f64> {
    let n0 = r0 * z0;
    let f = |s: f64| {
        let (u, v) = (n0 / (s + r0), z1 / (s + 1.0));
        let val = u * u + v * v - 1.0;
        let der = -2.0 * (u * u / (s + r0) + v * v / (s + 1.0));
        (val, der)
    };
    let mut lo = z1 - 1.0;
    let mut hi = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.5 * (lo + hi);
    for _ in 0..NEWTON_CAP {
        let (val, der) = f(s);
        if val == 0.0 {
            return Ok(s);
        }
        if val > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        if hi - lo <= NEWTON_TOL * (1.0 + s.abs()) {
            return Ok(0.5 * (lo + hi));
        }
        let newton = s - val / der;
        let next = if der < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - s).abs() <= NEWTON_TOL * (1.0 + s.abs()) {
            return Ok(next);
        }
        s = next;
    }
    Err(Error::ProjectionFailure {
        iterations: NEWTON_CAP,
    })
}
