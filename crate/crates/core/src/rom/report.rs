use std::fmt::Write as _;
use std::ops::Range;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{dot, sym_eig, DenseMatrix, SparseMatrix};
use crate::scenario::Scenario;

use super::online::{free_rows, solve_at, sym};
use super::{ReducedModel, StateBasis};

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationOptions {
    pub modes: Vec<usize>,
    /// Timing repetitions per solve; the median is kept.
    pub repeats: usize,
    /// Stokes: enrich the velocity basis with supremizers.
    pub enrich: bool,
}

/// One row per (mode count, field block). Errors are means over the test set
/// of per-parameter relative L2 errors on the physical region; times are
/// means over the test set of per-parameter medians.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub modes: usize,
    pub proj_err: f64,
    pub galerkin_err: f64,
    pub t_rb_seconds: f64,
    pub t_fom_seconds: f64,
    pub savings_pct: f64,
    pub speedup: f64,
    /// Best approximation in the euclidean norm of the free values, measured in L2.
    pub proj_err_euclidean: f64,
    pub block: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub n_test: usize,
    pub rows: Vec<ReportRow>,
}

pub const REPORT_HEADER: &str =
    "modes,proj_err,galerkin_err,t_rb_seconds,t_fom_seconds,savings_pct,speedup,proj_err_euclidean,block";

impl Report {
    pub fn rows_for(&self, block: &str) -> impl Iterator<Item = &ReportRow> {
        let block = block.to_string();
        self.rows.iter().filter(move |r| r.block == block)
    }

    pub fn row(&self, modes: usize, block: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.modes == modes && r.block == block)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# errors: mean over {} test parameters of relative L2 errors on the physical region; \
             times: mean of per-parameter medians\n{REPORT_HEADER}\n",
            self.n_test
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.10e},{:.10e},{:.10e},{:.10e},{:.6},{:.6},{:.10e},{}",
                r.modes,
                r.proj_err,
                r.galerkin_err,
                r.t_rb_seconds,
                r.t_fom_seconds,
                r.savings_pct,
                r.speedup,
                r.proj_err_euclidean,
                r.block
            );
        }
        s
    }
}

/// Parses a report written by [`Report::to_csv`].
pub fn read_report_csv(text: &str) -> Result<Report> {
    let mut n_test = 0;
    let mut lines = text.lines().peekable();
    while let Some(l) = lines.peek() {
        if let Some(rest) = l.strip_prefix('#') {
            if let Some(k) = rest.split_whitespace().position(|w| w == "over") {
                n_test = rest
                    .split_whitespace()
                    .nth(k + 1)
                    .and_then(|w| w.parse().ok())
                    .unwrap_or(0);
            }
            lines.next();
        } else {
            break;
        }
    }
    match lines.next() {
        Some(h) if h.trim() == REPORT_HEADER => {}
        other => return Err(Error::Format(format!("unexpected report header {other:?}"))),
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Format(format!("bad number '{s}': {e}")))
    };
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 9 {
                return Err(Error::Format(format!(
                    "report row with {} fields: {l}",
                    f.len()
                )));
            }
            Ok(ReportRow {
                modes: f[0]
                    .parse()
                    .map_err(|e| Error::Format(format!("bad mode count: {e}")))?,
                proj_err: num(f[1])?,
                galerkin_err: num(f[2])?,
                t_rb_seconds: num(f[3])?,
                t_fom_seconds: num(f[4])?,
                savings_pct: num(f[5])?,
                speedup: num(f[6])?,
                proj_err_euclidean: num(f[7])?,
                block: f[8].to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report { n_test, rows })
}

pub(crate) fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs `f` `repeats` times and returns the last result with the median time.
pub(crate) fn timed<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let r = f()?;
        times.push(start.elapsed().as_secs_f64());
        last = Some(r);
    }
    Ok((last.unwrap(), median(times)))
}

/// `fields` copies of the scalar matrix `m` on the diagonal.
pub(crate) fn block_diagonal(m: &SparseMatrix, fields: usize) -> SparseMatrix {
    let n = m.rows();
    let mut t = Vec::with_capacity(m.nnz() * fields);
    for c in 0..fields {
        for i in 0..n {
            let (idx, val) = m.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                t.push((c * n + i, c * n + j, v));
            }
        }
    }
    SparseMatrix::from_triplets(n * fields, n * fields, &t).expect("indices in range")
}

/// Minimizer of ‖u − L a‖_W via the eigen-decomposition of LᵀWL, with
/// directions below 1e-12 of the largest eigenvalue dropped.
fn best_approximation(l: &DenseMatrix, w: Option<&SparseMatrix>, u: &[f64]) -> Result<Vec<f64>> {
    let (g, r) = match w {
        Some(w) => {
            let wl = w.mul_dense(l)?;
            (l.t_matmul(&wl)?, wl.t_matvec(u))
        }
        None => (l.t_matmul(l)?, l.t_matvec(u)),
    };
    let e = sym_eig(&sym(g))?;
    let top = e.values.first().copied().unwrap_or(0.0);
    let mut a = vec![0.0; l.cols()];
    for (k, &lam) in e.values.iter().enumerate() {
        if lam <= 1e-12 * top || lam <= 0.0 {
            continue;
        }
        let v = e.vectors.column(k);
        let c = dot(&v, &r) / lam;
        crate::linalg::axpy(c, &v, &mut a);
    }
    Ok(a)
}

fn w_norm(w: &SparseMatrix, v: &[f64]) -> f64 {
    dot(v, &w.matvec(v)).max(0.0).sqrt()
}

struct BlockErrors {
    proj: f64,
    proj_euclid: f64,
    galerkin: f64,
}

/// Relative errors of one field block at one parameter.
#[allow(clippy::too_many_arguments)]
fn block_errors(
    fom_state: &[f64],
    rom_state: &[f64],
    dofs: &[usize],
    rows: &DenseMatrix,
    state_range: Range<usize>,
    cols: Range<usize>,
    m_state: &SparseMatrix,
) -> Result<BlockErrors> {
    let pos: Vec<usize> = (0..dofs.len())
        .filter(|&k| state_range.contains(&dofs[k]))
        .collect();
    let idx: Vec<usize> = pos.iter().map(|&k| dofs[k]).collect();
    let mut l = DenseMatrix::zeros(pos.len(), cols.len());
    for (r, &k) in pos.iter().enumerate() {
        l.row_mut(r).copy_from_slice(&rows.row(k)[cols.clone()]);
    }
    let m_ff = m_state.submatrix(&idx, &idx);
    let u_f: Vec<f64> = idx.iter().map(|&i| fom_state[i]).collect();

    let range: Vec<usize> = state_range.collect();
    let m_block = m_state.submatrix(&range, &range);
    let u_block: Vec<f64> = range.iter().map(|&i| fom_state[i]).collect();
    let e_block: Vec<f64> = range.iter().map(|&i| fom_state[i] - rom_state[i]).collect();
    let norm = w_norm(&m_block, &u_block);
    let denom = if norm > 0.0 { norm } else { 1.0 };

    let residual = |a: &[f64]| -> f64 {
        let la = l.matvec(a);
        let e: Vec<f64> = u_f.iter().zip(&la).map(|(u, v)| u - v).collect();
        w_norm(&m_ff, &e)
    };
    let proj = residual(&best_approximation(&l, Some(&m_ff), &u_f)?) / denom;
    let proj_euclid = residual(&best_approximation(&l, None, &u_f)?) / denom;
    let galerkin = w_norm(&m_block, &e_block) / denom;
    Ok(BlockErrors {
        proj,
        proj_euclid,
        galerkin,
    })
}

/// Error and timing table over a test set. FOM timing covers
/// classification, assembly and solve; reduced timing covers classification,
/// full-order assembly, basis evaluation, projection, reduced solve and
/// reconstruction. Test parameters are processed sequentially so that the
/// wall-clock measurements do not compete for cores.
pub fn evaluate(
    scenario: &Scenario,
    model: &ReducedModel,
    test: &[Vec<f64>],
    opts: &EvaluationOptions,
) -> Result<Report> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let n_h = scenario.n_h();
    let fields = scenario.id().fields();
    let bases: Vec<(usize, StateBasis)> = opts
        .modes
        .iter()
        .map(|&n| Ok((n, model.state_basis(scenario, n, opts.enrich)?)))
        .collect::<Result<_>>()?;
    let blocks = scenario.id().blocks();
    let nb = blocks.len();
    let mut sums = vec![[0.0f64; 5]; bases.len() * nb];
    for mu in test {
        let (fom, t_fom) = timed(opts.repeats, || scenario.solve(mu))?;
        let m_state = block_diagonal(&fom.discretization.physical_mass(&scenario.mesh), fields);
        for (bi, (_, basis)) in bases.iter().enumerate() {
            let (rom, t_rb) = timed(opts.repeats, || solve_at(scenario, basis, mu))?;
            let rows = free_rows(scenario, basis, &rom.system, mu)?;
            for (k, b) in blocks.iter().enumerate() {
                let e = block_errors(
                    &fom.state,
                    &rom.state,
                    &rom.system.dofs,
                    &rows,
                    b.state_range(n_h),
                    basis.columns[k].clone(),
                    &m_state,
                )?;
                let s = &mut sums[bi * nb + k];
                s[0] += e.proj;
                s[1] += e.galerkin;
                s[2] += e.proj_euclid;
                s[3] += t_rb;
                s[4] += t_fom;
            }
        }
    }
    let nt = test.len() as f64;
    let mut rows = Vec::new();
    for (bi, (n, _)) in bases.iter().enumerate() {
        for (k, b) in blocks.iter().enumerate() {
            let s = sums[bi * nb + k];
            let (t_rb, t_fom) = (s[3] / nt, s[4] / nt);
            rows.push(ReportRow {
                modes: *n,
                proj_err: s[0] / nt,
                galerkin_err: s[1] / nt,
                t_rb_seconds: t_rb,
                t_fom_seconds: t_fom,
                savings_pct: 100.0 * (t_fom - t_rb) / t_fom,
                speedup: t_fom / t_rb,
                proj_err_euclidean: s[2] / nt,
                block: b.name.to_string(),
            });
        }
    }
    Ok(Report {
        n_test: test.len(),
        rows,
    })
}
