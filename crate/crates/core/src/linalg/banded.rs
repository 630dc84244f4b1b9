//! Bandwidth-reducing ordering and banded LU with partial pivoting.

use std::collections::VecDeque;

use crate::error::{Error, Result};

use super::sparse::SparseMatrix;

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm(a: &SparseMatrix) -> Vec<usize> {
    let n = a.rows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut level = vec![usize::MAX; n];
    for seed in 0..n {
        if placed[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree, &mut level);
        let mut queue = VecDeque::from([start]);
        placed[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !placed[w]).collect();
            nb.sort_by_key(|&w| (degree[w], w));
            for w in nb {
                placed[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(start: usize, adj: &[Vec<usize>], level: &mut [usize]) -> Vec<usize> {
    let mut visited = vec![start];
    level[start] = 0;
    let mut k = 0;
    while k < visited.len() {
        let v = visited[k];
        k += 1;
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                visited.push(w);
            }
        }
    }
    visited
}

fn pseudo_peripheral(
    seed: usize,
    adj: &[Vec<usize>],
    degree: &[usize],
    level: &mut [usize],
) -> usize {
    let mut v = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let visited = bfs_levels(v, adj, level);
        let depth = visited.iter().map(|&w| level[w]).max().unwrap_or(0);
        let cand = visited
            .iter()
            .copied()
            .filter(|&w| level[w] == depth)
            .min_by_key(|&w| (degree[w], w))
            .unwrap_or(v);
        for &w in &visited {
            level[w] = usize::MAX;
        }
        if depth <= ecc {
            break;
        }
        ecc = depth;
        v = cand;
    }
    v
}

/// (lower, upper) bandwidth of `a` under the symmetric permutation `perm[new] = old`.
pub fn bandwidth(a: &SparseMatrix, perm: &[usize]) -> (usize, usize) {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let (mut kl, mut ku) = (0, 0);
    for i in 0..a.rows() {
        for &j in a.row(i).0 {
            let (pi, pj) = (inv[i], inv[j]);
            if pi > pj {
                kl = kl.max(pi - pj);
            } else {
                ku = ku.max(pj - pi);
            }
        }
    }
    (kl, ku)
}

/// LU factors of a permuted banded matrix, stored column-major with
/// `2·kl + ku + 1` rows per column as in the LAPACK band layout.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
    perm: Vec<usize>,
}

impl BandedLu {
    /// Factors `a` after a bandwidth-reducing symmetric permutation.
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::InvalidArgument(
                "banded LU of a non-square matrix".into(),
            ));
        }
        let natural: Vec<usize> = (0..n).collect();
        let reordered = rcm(a);
        let bw_nat = bandwidth(a, &natural);
        let bw_rcm = bandwidth(a, &reordered);
        let (perm, (kl, ku)) = if bw_rcm.0 + bw_rcm.1 < bw_nat.0 + bw_nat.1 {
            (reordered, bw_rcm)
        } else {
            (natural, bw_nat)
        };
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let ld = 2 * kl + ku + 1;
        let kv = kl + ku;
        let mut ab = vec![0.0; ld * n];
        for i in 0..n {
            let (idx, val) = a.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                let (pi, pj) = (inv[i], inv[j]);
                ab[pj * ld + kv + pi - pj] += v;
            }
        }
        let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut ipiv = vec![0; n];
        let mut ju = 0;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = &ab[j * ld + kv..j * ld + kv + km + 1];
            let mut jp = 0;
            for (r, v) in col.iter().enumerate() {
                if v.abs() > col[jp].abs() {
                    jp = r;
                }
            }
            ipiv[j] = j + jp;
            let pivot = col[jp];
            if pivot == 0.0 || pivot.abs() < 1e-300 * scale.max(1.0) {
                return Err(Error::SolverFailure {
                    reason: format!("zero pivot in column {j} of banded LU"),
                    residual: f64::INFINITY,
                });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    ab.swap(c * ld + kv + j + jp - c, c * ld + kv + j - c);
                }
            }
            if km > 0 {
                let inv_p = 1.0 / pivot;
                for v in &mut ab[j * ld + kv + 1..j * ld + kv + km + 1] {
                    *v *= inv_p;
                }
                let (left, right) = ab.split_at_mut((j + 1) * ld);
                let mult = &left[j * ld + kv + 1..j * ld + kv + km + 1];
                for c in j + 1..=ju {
                    let base = (c - j - 1) * ld;
                    let u = right[base + kv + j - c];
                    if u != 0.0 {
                        let target = &mut right[base + kv + j + 1 - c..base + kv + j + 1 - c + km];
                        for (t, m) in target.iter_mut().zip(mult) {
                            *t -= m * u;
                        }
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            ab,
            ipiv,
            perm,
        })
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let ld = 2 * self.kl + self.ku + 1;
        let kv = self.kl + self.ku;
        let mut x: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            x.swap(j, self.ipiv[j]);
            let xj = x[j];
            if xj != 0.0 {
                for r in 1..=km {
                    x[j + r] -= self.ab[j * ld + kv + r] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.ab[j * ld + kv];
            let xj = x[j];
            if xj != 0.0 {
                for i in j.saturating_sub(kv)..j {
                    x[i] -= self.ab[j * ld + kv + i - j] * xj;
                }
            }
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}
