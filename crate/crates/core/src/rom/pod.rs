use crate::error::{Error, Result};
use crate::fem::mass;
use crate::linalg::{dot, orthonormalize_columns, sym_eig, DenseMatrix, SparseMatrix};
use crate::mesh::BackgroundMesh;
use crate::scenario::InnerProduct;

/// Eigenvalues below this fraction of λ₁ are treated as numerically zero.
pub const RANK_CUTOFF: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct PodBasis {
    /// Orthonormal modes as columns.
    pub modes: DenseMatrix,
    /// All eigenvalues of the correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
    pub inner: InnerProduct,
}

impl PodBasis {
    pub fn n_modes(&self) -> usize {
        self.modes.cols()
    }

    /// Number of eigenvalues above the rank cutoff.
    pub fn rank(&self) -> usize {
        numerical_rank(&self.eigenvalues)
    }
}

pub fn numerical_rank(eigenvalues: &[f64]) -> usize {
    let l1 = eigenvalues.first().copied().unwrap_or(0.0);
    if !(l1 > 0.0) {
        return 0;
    }
    eigenvalues
        .iter()
        .take_while(|&&l| l >= RANK_CUTOFF * l1)
        .count()
}

/// Inner product on snapshot vectors: euclidean, or weighted by an SPD matrix.
#[derive(Clone, Copy, Debug)]
pub struct Inner<'a> {
    pub weight: Option<&'a SparseMatrix>,
}

impl<'a> Inner<'a> {
    pub const EUCLIDEAN: Inner<'static> = Inner { weight: None };

    pub fn weighted(w: &'a SparseMatrix) -> Self {
        Self { weight: Some(w) }
    }

    pub fn tag(&self) -> InnerProduct {
        if self.weight.is_some() {
            InnerProduct::Mass
        } else {
            InnerProduct::Euclidean
        }
    }

    pub fn apply(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.weight {
            None => dot(a, b),
            Some(w) => dot(a, &w.matvec(b)),
        }
    }

    /// Gram matrix Aᵀ W B.
    pub fn gram(&self, a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
        match self.weight {
            None => a.t_matmul(b),
            Some(w) => a.t_matmul(&w.mul_dense(b)?),
        }
    }
}

/// Block-diagonal background mass matrix for `fields` stacked scalar fields.
pub fn background_mass(mesh: &BackgroundMesh, fields: usize) -> SparseMatrix {
    let all: Vec<usize> = (0..mesh.n_triangles()).collect();
    super::report::block_diagonal(&mass(mesh, &all), fields)
}

fn symmetrized(mut c: DenseMatrix) -> DenseMatrix {
    let n = c.rows();
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = m;
            c[(j, i)] = m;
        }
    }
    c
}

/// POD by the method of snapshots: eigen-decomposition of C = SᵀWS, modes
/// S q_i / (N_s λ_i)^{1/2} re-normalized and re-orthogonalized.
pub fn pod(s: &DenseMatrix, n_modes: usize, inner: Inner<'_>) -> Result<PodBasis> {
    let n_s = s.cols();
    if n_s == 0 {
        return Err(Error::InvalidArgument(
            "POD of an empty snapshot matrix".into(),
        ));
    }
    if let Some(w) = inner.weight {
        if w.rows() != s.rows() || w.cols() != s.rows() {
            return Err(Error::InvalidArgument(format!(
                "weight {}x{} does not match snapshots with {} rows",
                w.rows(),
                w.cols(),
                s.rows()
            )));
        }
    }
    let c = symmetrized(inner.gram(s, s)?);
    let eig = sym_eig(&c)?;
    let rank = numerical_rank(&eig.values);
    if n_modes > rank {
        return Err(Error::RankDeficient {
            requested: n_modes,
            available: rank,
            cutoff: RANK_CUTOFF * eig.values[0].max(0.0),
        });
    }
    let q = eig.vectors.leading_columns(n_modes);
    let mut raw = s.matmul(&q)?;
    for j in 0..n_modes {
        let mut col = raw.column(j);
        let scale = 1.0 / (n_s as f64 * eig.values[j]).sqrt();
        col.iter_mut().for_each(|x| *x *= scale);
        let norm = inner.apply(&col, &col).sqrt();
        col.iter_mut().for_each(|x| *x /= norm);
        raw.set_column(j, &col);
    }
    let modes = orthonormalize_columns(&raw, |a, b| inner.apply(a, b), 1e-8);
    if modes.cols() < n_modes {
        return Err(Error::RankDeficient {
            requested: n_modes,
            available: modes.cols(),
            cutoff: RANK_CUTOFF * eig.values[0],
        });
    }
    Ok(PodBasis {
        modes,
        eigenvalues: eig.values,
        inner: inner.tag(),
    })
}

/// Σ_i ‖T_i − Σ_{k<n} (T_i, φ_k) φ_k‖² in the given inner product.
pub fn pod_energy(s: &DenseMatrix, modes: &DenseMatrix, n: usize, inner: Inner<'_>) -> Result<f64> {
    if n > modes.cols() {
        return Err(Error::InvalidArgument(format!(
            "{n} modes requested from a basis of {}",
            modes.cols()
        )));
    }
    let l = modes.leading_columns(n);
    let mut total = 0.0;
    for i in 0..s.cols() {
        let t = s.column(i);
        let mut r = t.clone();
        for k in 0..n {
            let phi = l.column(k);
            let c = inner.apply(&phi, &t);
            crate::linalg::axpy(-c, &phi, &mut r);
        }
        total += inner.apply(&r, &r);
    }
    Ok(total)
}
