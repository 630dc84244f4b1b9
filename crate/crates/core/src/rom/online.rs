use crate::error::{Error, Result};
use crate::linalg::{axpy, DenseLu, DenseMatrix};
use crate::scenario::{Discretization, Scenario};
use crate::snapshots::TransportPlan;
use crate::system::AssembledSystem;

use super::StateBasis;

/// A^r a = F^r.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSystem {
    pub matrix: DenseMatrix,
    pub rhs: Vec<f64>,
}

/// Galerkin projection with the basis given on the free unknowns of `system`.
pub fn project_free(system: &AssembledSystem, rows: &DenseMatrix) -> Result<ReducedSystem> {
    if rows.rows() != system.n_free() {
        return Err(Error::InvalidArgument(format!(
            "basis has {} rows, system has {} free unknowns",
            rows.rows(),
            system.n_free()
        )));
    }
    Ok(project_with(system, rows.cols(), |k| rows.row(k)))
}

/// Rows per block of the fused projection.
const PROJECTION_CHUNK: usize = 512;

/// Accumulates LᵀAL and LᵀF over row blocks, where `row(k)` is the basis row
/// of free unknown `k`. Only block-sized buffers are materialized.
fn project_with<'a>(
    system: &AssembledSystem,
    n: usize,
    row: impl Fn(usize) -> &'a [f64],
) -> ReducedSystem {
    let a = &system.matrix;
    let m = a.rows();
    let mut ar = DenseMatrix::zeros(n, n);
    let mut fr = vec![0.0; n];
    let mut lc = DenseMatrix::zeros(PROJECTION_CHUNK.min(m), n);
    let mut alc = DenseMatrix::zeros(PROJECTION_CHUNK.min(m), n);
    for start in (0..m).step_by(PROJECTION_CHUNK) {
        let len = PROJECTION_CHUNK.min(m - start);
        if len != lc.rows() {
            lc = DenseMatrix::zeros(len, n);
            alc = DenseMatrix::zeros(len, n);
        }
        for r in 0..len {
            let i = start + r;
            let li = row(i);
            lc.row_mut(r).copy_from_slice(li);
            axpy(system.rhs[i], li, &mut fr);
            let out = alc.row_mut(r);
            out.iter_mut().for_each(|x| *x = 0.0);
            let (idx, val) = a.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                axpy(v, row(j), out);
            }
        }
        lc.add_t_matmul_to(&alc, &mut ar)
            .expect("chunk shapes agree");
    }
    ReducedSystem {
        matrix: ar,
        rhs: fr,
    }
}

/// A^r = LᵀAL and F^r = LᵀF for a basis over the full state vector.
pub fn project(system: &AssembledSystem, basis: &DenseMatrix) -> Result<ReducedSystem> {
    if basis.rows() != system.state_len {
        return Err(Error::InvalidArgument(format!(
            "basis has {} rows, state has {}",
            basis.rows(),
            system.state_len
        )));
    }
    Ok(project_with(system, basis.cols(), |k| {
        basis.row(system.dofs[k])
    }))
}

/// Dense LU solve of the reduced system.
pub fn solve_online(red: &ReducedSystem) -> Result<Vec<f64>> {
    let lu = DenseLu::new(&red.matrix).map_err(|e| match e {
        Error::SingularReduced { .. } => Error::SingularReduced {
            condition: condition_estimate(&red.matrix),
        },
        other => other,
    })?;
    let a = lu.solve(&red.rhs);
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularReduced {
            condition: condition_estimate(&red.matrix),
        });
    }
    Ok(a)
}

/// Directions of the restricted basis whose Gram eigenvalue falls below this
/// fraction of the largest one are treated as null.
const RESTRICTED_RANK_CUTOFF: f64 = 1e-12;

/// Solves the reduced system; if it is singular, retries on an orthonormal
/// basis of the span of the free rows. Restricting a basis built on other
/// geometries to the unknowns at μ can make its columns (nearly) dependent,
/// which leaves the Galerkin solution in that span well defined but LᵀAL
/// singular.
fn solve_or_compress(red: &ReducedSystem, rows: impl FnOnce() -> DenseMatrix) -> Result<Vec<f64>> {
    match solve_online(red) {
        Err(Error::SingularReduced { .. }) => {}
        other => return other,
    }
    let rows = rows();
    let gram = sym(rows.t_matmul(&rows)?);
    let eig = crate::linalg::sym_eig(&gram)?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    let keep = eig
        .values
        .iter()
        .take_while(|&&l| l > RESTRICTED_RANK_CUTOFF * top && l > 0.0)
        .count();
    let n = red.rhs.len();
    if keep == n || keep == 0 {
        return solve_online(red);
    }
    log::debug!("restricted basis has rank {keep} of {n}; solving on the compressed span");
    // Q = V_k Λ_k^{-1/2} has LQ orthonormal on the free unknowns.
    let mut q = DenseMatrix::zeros(n, keep);
    for i in 0..n {
        for j in 0..keep {
            q[(i, j)] = eig.vectors[(i, j)] / eig.values[j].sqrt();
        }
    }
    let aq = red.matrix.matmul(&q)?;
    let compressed = ReducedSystem {
        matrix: q.t_matmul(&aq)?,
        rhs: q.t_matvec(&red.rhs),
    };
    Ok(q.matvec(&solve_online(&compressed)?))
}

/// 2-norm condition number from the eigenvalues of AᵀA.
fn condition_estimate(a: &DenseMatrix) -> f64 {
    let Ok(ata) = a.t_matmul(a) else {
        return f64::INFINITY;
    };
    let Ok(e) = crate::linalg::sym_eig(&sym(ata)) else {
        return f64::INFINITY;
    };
    let max = e.values.first().copied().unwrap_or(0.0);
    let min = e.values.last().copied().unwrap_or(0.0);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        (max / min).sqrt()
    }
}

pub(crate) fn sym(mut c: DenseMatrix) -> DenseMatrix {
    for i in 0..c.rows() {
        for j in 0..i {
            let m = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = m;
            c[(j, i)] = m;
        }
    }
    c
}

/// L a.
pub fn reconstruct(basis: &DenseMatrix, a: &[f64]) -> Vec<f64> {
    basis.matvec(a)
}

/// Rows of the inverse-transported basis L(Φ_μ⁻¹(x)) at the state indices `dofs`.
pub fn transported_rows(basis: &DenseMatrix, plan: &TransportPlan, dofs: &[usize]) -> DenseMatrix {
    let n_h = plan.n_vertices();
    let n = basis.cols();
    let mut out = DenseMatrix::zeros(dofs.len(), n);
    for (r, &i) in dofs.iter().enumerate() {
        let (field, v) = (i / n_h, i % n_h);
        if let Some((tri, l)) = plan.target(v) {
            let row = out.row_mut(r);
            for k in 0..3 {
                let src = basis.row(field * n_h + tri[k]);
                for (o, s) in row.iter_mut().zip(src) {
                    *o += l[k] * s;
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct OnlineSolution {
    pub state: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub system: AssembledSystem,
    pub discretization: Discretization,
}

/// The basis on the free unknowns of `system` at μ, inverse-transported when
/// the basis lives on the reference configuration.
pub fn free_rows(
    scenario: &Scenario,
    basis: &StateBasis,
    system: &AssembledSystem,
    mu: &[f64],
) -> Result<DenseMatrix> {
    Ok(if basis.transported {
        let plan = TransportPlan::new(&scenario.mesh, &scenario.transport_map(mu)?.inverse());
        transported_rows(&basis.matrix, &plan, &system.dofs)
    } else {
        basis.matrix.select_rows(&system.dofs)
    })
}

/// Full online stage at μ: classification, full-order assembly, basis
/// evaluation, projection, reduced solve and reconstruction.
pub fn solve_at(scenario: &Scenario, basis: &StateBasis, mu: &[f64]) -> Result<OnlineSolution> {
    let discretization = scenario.discretize(mu)?;
    let system = scenario.assemble(&discretization)?;
    let n = basis.n();
    let (coefficients, free) = if basis.transported {
        let rows = free_rows(scenario, basis, &system, mu)?;
        let a = solve_or_compress(&project_with(&system, n, |k| rows.row(k)), || rows.clone())?;
        let free = rows.matvec(&a);
        (a, free)
    } else {
        let l = &basis.matrix;
        let a = solve_or_compress(&project_with(&system, n, |k| l.row(system.dofs[k])), || {
            l.select_rows(&system.dofs)
        })?;
        let free = system
            .dofs
            .iter()
            .map(|&i| crate::linalg::dot(l.row(i), &a))
            .collect::<Vec<_>>();
        (a, free)
    };
    let state = system.embed(&free);
    Ok(OnlineSolution {
        state,
        coefficients,
        system,
        discretization,
    })
}
