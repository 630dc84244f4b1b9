//! Linear systems over the active degrees of freedom of the background mesh.

use crate::error::Result;
use crate::linalg::{solve_sparse, SparseMatrix};

/// `A(μ) x = F(μ)` restricted to the free unknowns, with strong Dirichlet
/// values lifted to the right-hand side.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// State index of each free unknown.
    pub dofs: Vec<usize>,
    /// Length of the full state vector (N_h per scalar field).
    pub state_len: usize,
    /// Strongly imposed values as (state index, value).
    pub dirichlet: Vec<(usize, f64)>,
    /// Free or Dirichlet, per state index.
    pub active: Vec<bool>,
    pub symmetric: bool,
}

impl AssembledSystem {
    /// Restricts a full-state system to the free unknowns of `active`.
    pub fn from_full(
        full: &SparseMatrix,
        full_rhs: &[f64],
        active: Vec<bool>,
        mut dirichlet: Vec<(usize, f64)>,
        symmetric: bool,
    ) -> Self {
        let state_len = active.len();
        dirichlet.retain(|&(i, _)| active[i]);
        dirichlet.sort_by_key(|e| e.0);
        dirichlet.dedup_by_key(|e| e.0);
        let mut fixed = vec![false; state_len];
        let mut lift = vec![0.0; state_len];
        for &(i, v) in &dirichlet {
            fixed[i] = true;
            lift[i] = v;
        }
        let dofs: Vec<usize> = (0..state_len).filter(|&i| active[i] && !fixed[i]).collect();
        let matrix = full.submatrix(&dofs, &dofs);
        let rhs = dofs
            .iter()
            .map(|&i| {
                let (idx, val) = full.row(i);
                let coupled: f64 = idx
                    .iter()
                    .zip(val)
                    .filter(|(j, _)| fixed[**j])
                    .map(|(&j, v)| v * lift[j])
                    .sum();
                full_rhs[i] - coupled
            })
            .collect();
        Self {
            matrix,
            rhs,
            dofs,
            state_len,
            dirichlet,
            active,
            symmetric,
        }
    }

    pub fn n_free(&self) -> usize {
        self.dofs.len()
    }

    /// Places free values and the Dirichlet lift into a full state vector;
    /// inactive entries are zero.
    pub fn embed(&self, free: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.state_len];
        for (&i, &v) in self.dofs.iter().zip(free) {
            x[i] = v;
        }
        for &(i, v) in &self.dirichlet {
            x[i] = v;
        }
        x
    }

    /// Free part of a full state vector.
    pub fn restrict(&self, state: &[f64]) -> Vec<f64> {
        self.dofs.iter().map(|&i| state[i]).collect()
    }
}

/// Solves the system and re-embeds the solution into the full state vector.
pub fn solve_fom(system: &AssembledSystem) -> Result<Vec<f64>> {
    let x = solve_sparse(&system.matrix, &system.rhs, system.symmetric)?;
    Ok(system.embed(&x))
}
