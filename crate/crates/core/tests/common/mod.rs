//! Independent dense oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urm::linalg::DenseMatrix;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}

/// One-sided Jacobi SVD: rotates column pairs of S until mutually
/// orthogonal. Returns (σ², unit left singular vectors), descending.
pub fn hestenes(s: &DenseMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = s.cols();
    let mut u: Vec<Vec<f64>> = (0..n).map(|j| s.column(j)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (a, b, g) = (dot(&u[p], &u[p]), dot(&u[q], &u[q]), dot(&u[p], &u[q]));
                if g.abs() <= 1e-15 * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for k in 0..u[p].len() {
                    let (x, y) = (u[p][k], u[q][k]);
                    u[p][k] = c * x - sn * y;
                    u[q][k] = sn * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = u
        .into_iter()
        .map(|c| {
            let s2 = dot(&c, &c);
            let norm = s2.sqrt();
            (s2, c.into_iter().map(|x| x / norm).collect())
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.into_iter().unzip()
}

/// ‖(I − AAᵀ)B‖_F for orthonormal columns: bounds the sine of the largest
/// principal angle between the spans.
pub fn subspace_gap(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let c = a.t_matmul(b).unwrap();
    let r = a.matmul(&c).unwrap();
    let mut s = 0.0;
    for i in 0..b.rows() {
        for j in 0..b.cols() {
            s += (b[(i, j)] - r[(i, j)]).powi(2);
        }
    }
    s.sqrt()
}
