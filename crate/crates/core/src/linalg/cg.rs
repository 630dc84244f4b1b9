use crate::error::{Error, Result};

use super::dense::{axpy, dot, norm2};
use super::sparse::SparseMatrix;

#[derive(Clone, Copy, Debug)]
pub struct CgOptions {
    /// Relative residual target: stop when ‖r‖ ≤ tol · max(1, ‖b‖).
    pub tol: f64,
    /// Iteration cap; `None` means 20·n.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
pub fn pcg(a: &SparseMatrix, b: &[f64], opts: CgOptions) -> Result<CgOutcome> {
    pcg_monitored(a, b, opts, |_, _| {})
}

/// As [`pcg`], calling `monitor(k, x_k)` after every iterate update.
pub fn pcg_monitored(
    a: &SparseMatrix,
    b: &[f64],
    opts: CgOptions,
    mut monitor: impl FnMut(usize, &[f64]),
) -> Result<CgOutcome> {
    let n = a.rows();
    assert_eq!(b.len(), n);
    let cap = opts.max_iter.unwrap_or(20 * n.max(1));
    let target = opts.tol * norm2(b).max(1.0);
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut rnorm = norm2(&r);
    if rnorm <= target {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual: rnorm,
        });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for k in 1..=cap {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::SolverFailure {
                reason: "matrix is not positive definite along a search direction".into(),
                residual: rnorm,
            });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        monitor(k, &x);
        rnorm = norm2(&r);
        if rnorm <= target {
            return Ok(CgOutcome {
                x,
                iterations: k,
                residual: rnorm,
            });
        }
        for ((zi, ri), di) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zi = ri * di;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::SolverFailure {
        reason: format!("CG did not converge in {cap} iterations"),
        residual: rnorm,
    })
}
