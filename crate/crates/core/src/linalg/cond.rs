use crate::error::{invalid, Result};

use super::banded::BandedLu;
use super::dense::{dot, norm2, DenseMatrix};
use super::eig::sym_eig;
use super::sparse::SparseMatrix;

/// Largest size handled by the dense eigensolver.
const DENSE_LIMIT: usize = 400;
const ITERATIONS: usize = 300;

/// Spectral condition number λ_max / λ_min of a symmetric positive definite
/// matrix: exact through the dense eigensolver for small matrices, otherwise
/// estimated by power and inverse iteration.
pub fn spd_condition(a: &SparseMatrix) -> Result<f64> {
    let n = a.rows();
    if n == 0 || a.cols() != n {
        return invalid("condition number of an empty or non-square matrix");
    }
    if n <= DENSE_LIMIT {
        let mut d: DenseMatrix = a.to_dense();
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (d[(i, j)] + d[(j, i)]);
                d[(i, j)] = m;
                d[(j, i)] = m;
            }
        }
        let e = sym_eig(&d)?;
        return Ok(e.values[0] / e.values[n - 1]);
    }
    let lu = BandedLu::factor(a)?;
    let start: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0)
        .collect();
    let lmax = rayleigh_iteration(&start, |x| a.matvec(x), a);
    let lmin = rayleigh_iteration(&start, |x| lu.solve(x), a);
    Ok(lmax / lmin)
}

fn rayleigh_iteration(start: &[f64], op: impl Fn(&[f64]) -> Vec<f64>, a: &SparseMatrix) -> f64 {
    let mut x = start.to_vec();
    let mut prev = 0.0;
    for _ in 0..ITERATIONS {
        let nrm = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nrm);
        let rq = dot(&x, &a.matvec(&x));
        if (rq - prev).abs() <= 1e-10 * rq.abs() {
            return rq;
        }
        prev = rq;
        x = op(&x);
    }
    prev
}
