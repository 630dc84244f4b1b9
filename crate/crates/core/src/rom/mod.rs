//! POD-Galerkin reduced models: basis construction, supremizer enrichment,
//! projection, online solves and error/timing reports.

pub mod online;
pub mod pod;
pub mod report;

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::{mass, stiffness};
use crate::linalg::io::{read_dense, write_dense};
use crate::linalg::{orthonormalize_columns, solve_sparse, sym_eig, DenseMatrix, SparseMatrix};
use crate::scenario::{Discretization, Scenario, ScenarioConfig};
use crate::snapshots::{manifest_get, parse_manifest, SnapshotSet, CONFIG, MANIFEST};
use crate::system::AssembledSystem;

pub use online::{
    free_rows, project, project_free, reconstruct, solve_at, solve_online, transported_rows,
    OnlineSolution, ReducedSystem,
};
pub use pod::{background_mass, numerical_rank, pod, pod_energy, Inner, PodBasis, RANK_CUTOFF};
pub use report::{evaluate, read_report_csv, EvaluationOptions, Report, ReportRow};

/// Supremizers whose norm falls below this are skipped.
pub const SUPREMIZER_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockBasis {
    pub name: String,
    /// Scalar fields of the state covered by this block.
    pub fields: Range<usize>,
    pub pod: PodBasis,
}

/// Offline product: per-block POD bases and, for Stokes, the supremizers of
/// the pressure modes.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedModel {
    pub config: ScenarioConfig,
    pub transported: bool,
    pub blocks: Vec<BlockBasis>,
    /// Velocity-block supremizers, one column per pressure mode (zero columns
    /// mark skipped supremizers).
    pub supremizers: Option<DenseMatrix>,
}

/// Block-diagonal basis over the full state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateBasis {
    pub matrix: DenseMatrix,
    /// Column range of each block.
    pub columns: Vec<Range<usize>>,
    pub transported: bool,
}

impl StateBasis {
    pub fn n(&self) -> usize {
        self.matrix.cols()
    }
}

fn block_inner_weight(scenario: &Scenario, fields: usize) -> Option<SparseMatrix> {
    match scenario.config.inner {
        crate::scenario::InnerProduct::Euclidean => None,
        crate::scenario::InnerProduct::Mass => Some(background_mass(&scenario.mesh, fields)),
    }
}

impl ReducedModel {
    /// POD of every block with `n_modes` modes; Stokes bases also get the
    /// supremizers of all pressure modes when enabled in the configuration.
    pub fn build(scenario: &Scenario, set: &SnapshotSet, n_modes: usize) -> Result<Self> {
        let mut blocks = Vec::new();
        for b in scenario.id().blocks() {
            let s = set
                .block(b.name)
                .ok_or_else(|| Error::Format(format!("snapshot set has no block '{}'", b.name)))?;
            let w = block_inner_weight(scenario, b.fields.len());
            let inner = w.as_ref().map_or(Inner::EUCLIDEAN, Inner::weighted);
            let basis = pod(&s.data, n_modes, inner)?;
            blocks.push(BlockBasis {
                name: b.name.to_string(),
                fields: b.fields.clone(),
                pod: basis,
            });
        }
        let mut model = Self {
            config: scenario.config.clone(),
            transported: set.transported,
            blocks,
            supremizers: None,
        };
        if scenario.id().is_stokes() && scenario.config.supremizers {
            let p = &model
                .block("p")
                .expect("stokes has a pressure block")
                .pod
                .modes;
            model.supremizers = Some(supremizers(scenario, p)?);
        }
        Ok(model)
    }

    pub fn block(&self, name: &str) -> Option<&BlockBasis> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Largest mode count available in every block.
    pub fn max_modes(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.pod.n_modes())
            .min()
            .unwrap_or(0)
    }

    /// Basis with `n` modes per block; for Stokes with `enrich`, the velocity
    /// block is [L_u, L_sup] re-orthonormalized.
    pub fn state_basis(&self, scenario: &Scenario, n: usize, enrich: bool) -> Result<StateBasis> {
        if n == 0 || n > self.max_modes() {
            return Err(Error::RankDeficient {
                requested: n,
                available: self.max_modes(),
                cutoff: RANK_CUTOFF,
            });
        }
        let n_h = scenario.n_h();
        let mut parts: Vec<(Range<usize>, DenseMatrix)> = Vec::new();
        for b in &self.blocks {
            let mut m = b.pod.modes.leading_columns(n);
            if enrich && b.name == "u" {
                let sup = self
                    .supremizers
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("model has no supremizers".into()))?
                    .leading_columns(n);
                let w = block_inner_weight(scenario, b.fields.len());
                let inner = w.as_ref().map_or(Inner::EUCLIDEAN, Inner::weighted);
                m = orthonormalize_columns(&m.hstack(&sup)?, |x, y| inner.apply(x, y), 1e-10);
            }
            parts.push((b.fields.start * n_h..b.fields.end * n_h, m));
        }
        let total: usize = parts.iter().map(|(_, m)| m.cols()).sum();
        let mut matrix = DenseMatrix::zeros(scenario.state_len(), total);
        let mut columns = Vec::new();
        let mut c0 = 0;
        for (rows, m) in parts {
            for (k, i) in rows.enumerate() {
                matrix.row_mut(i)[c0..c0 + m.cols()].copy_from_slice(m.row(k));
            }
            columns.push(c0..c0 + m.cols());
            c0 += m.cols();
        }
        Ok(StateBasis {
            matrix,
            columns,
            transported: self.transported,
        })
    }
}

/// Positions (into `system.dofs`) of the free velocity and pressure unknowns.
fn stokes_positions(system: &AssembledSystem, n_h: usize) -> (Vec<usize>, Vec<usize>) {
    let mut vel = Vec::new();
    let mut pres = Vec::new();
    for (k, &i) in system.dofs.iter().enumerate() {
        if i < 2 * n_h {
            vel.push(k);
        } else {
            pres.push(k);
        }
    }
    (vel, pres)
}

/// Supremizers at μ̄: K_u s_i = Bᵀ χ_i with K_u the velocity H¹ matrix on
/// D̃(μ̄) and Bᵀ the momentum-pressure block of the assembled system. Returned
/// as velocity-block vectors (2 N_h rows), zero off the free velocity dofs.
pub fn supremizers(scenario: &Scenario, pressure_modes: &DenseMatrix) -> Result<DenseMatrix> {
    let n_h = scenario.n_h();
    if !scenario.id().is_stokes() {
        return Err(Error::InvalidArgument(
            "supremizers need a Stokes scenario".into(),
        ));
    }
    if pressure_modes.rows() != n_h {
        return Err(Error::InvalidArgument(format!(
            "pressure modes have {} rows, expected {n_h}",
            pressure_modes.rows()
        )));
    }
    let disc = scenario.discretize(&scenario.config.reference)?;
    let system = scenario.assemble(&disc)?;
    let (vel, pres) = stokes_positions(&system, n_h);
    let b_t = system.matrix.submatrix(&vel, &pres);
    let h1 = velocity_h1(scenario, &disc);
    let vel_dofs: Vec<usize> = vel.iter().map(|&k| system.dofs[k]).collect();
    let k_u = h1.submatrix(&vel_dofs, &vel_dofs);
    let mut out = DenseMatrix::zeros(2 * n_h, pressure_modes.cols());
    for j in 0..pressure_modes.cols() {
        let chi = pressure_modes.column(j);
        let chi_free: Vec<f64> = pres
            .iter()
            .map(|&k| chi[system.dofs[k] - 2 * n_h])
            .collect();
        let rhs = b_t.matvec(&chi_free);
        let s = solve_sparse(&k_u, &rhs, true)?;
        if crate::linalg::norm2(&s) < SUPREMIZER_TOL {
            log::warn!("supremizer {j} is numerically zero; skipped");
            continue;
        }
        let mut col = vec![0.0; 2 * n_h];
        for (&i, v) in vel_dofs.iter().zip(s) {
            col[i] = v;
        }
        out.set_column(j, &col);
    }
    Ok(out)
}

/// (∇u, ∇v) + (u, v) on the physical elements, per velocity component.
fn velocity_h1(scenario: &Scenario, disc: &Discretization) -> SparseMatrix {
    let mesh = &scenario.mesh;
    let els = disc.elements();
    let k = stiffness(mesh, els)
        .add(&mass(mesh, els))
        .expect("same shape");
    let n = mesh.n_vertices();
    let mut t = Vec::with_capacity(2 * k.nnz());
    for c in 0..2 {
        for i in 0..n {
            let (idx, val) = k.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                t.push((c * n + i, c * n + j, v));
            }
        }
    }
    SparseMatrix::from_triplets(2 * n, 2 * n, &t).expect("indices in range")
}

/// Smallest singular value of the reduced coupling block L_uᵀ Bᵀ L_p of a
/// Stokes system, with the basis given on its free unknowns.
pub fn coupling_singular_value(
    system: &AssembledSystem,
    rows: &DenseMatrix,
    basis: &StateBasis,
    n_h: usize,
) -> Result<f64> {
    let (vel, pres) = stokes_positions(system, n_h);
    let (cu, cp) = (basis.columns[0].clone(), basis.columns[1].clone());
    let pick = |pos: &[usize], cols: &Range<usize>| -> DenseMatrix {
        let mut m = DenseMatrix::zeros(pos.len(), cols.len());
        for (r, &k) in pos.iter().enumerate() {
            m.row_mut(r).copy_from_slice(&rows.row(k)[cols.clone()]);
        }
        m
    };
    let lu = pick(&vel, &cu);
    let lp = pick(&pres, &cp);
    let b_t = system.matrix.submatrix(&vel, &pres);
    let g = lu.t_matmul(&b_t.mul_dense(&lp)?)?;
    let gtg = online::sym(g.t_matmul(&g)?);
    let e = sym_eig(&gtg)?;
    Ok(e.values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

impl ReducedModel {
    /// Writes manifest, configuration, and per block the modes
    /// (`<block>_modes.urm`) and eigenvalues (`<block>_eigenvalues.urm`), plus
    /// `eigenvalues.csv` for decay plots.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut m = String::new();
        let _ = writeln!(m, "kind=basis");
        let _ = writeln!(m, "scenario={}", self.config.scenario.as_str());
        let _ = writeln!(m, "inner={}", self.config.inner.as_str());
        let _ = writeln!(m, "transported={}", self.transported);
        let _ = writeln!(
            m,
            "blocks={}",
            self.blocks
                .iter()
                .map(|b| b.name.as_str())
                .collect::<Vec<_>>()
                .join(",")
        );
        for b in &self.blocks {
            let _ = writeln!(m, "modes.{}={}", b.name, b.pod.n_modes());
        }
        let _ = writeln!(
            m,
            "supremizers={}",
            self.supremizers.as_ref().map_or(0, |s| s.cols())
        );
        fs::write(dir.join(MANIFEST), m)?;
        fs::write(dir.join(CONFIG), self.config.to_json())?;
        for b in &self.blocks {
            write_dense(dir.join(format!("{}_modes.urm", b.name)), &b.pod.modes)?;
            let ev = DenseMatrix::from_vec(b.pod.eigenvalues.len(), 1, b.pod.eigenvalues.clone())?;
            write_dense(dir.join(format!("{}_eigenvalues.urm", b.name)), &ev)?;
        }
        if let Some(s) = &self.supremizers {
            write_dense(dir.join("u_supremizers.urm"), s)?;
        }
        fs::write(dir.join("eigenvalues.csv"), self.eigenvalue_csv())?;
        Ok(())
    }

    /// `index,<block>...` with one row per eigenvalue.
    pub fn eigenvalue_csv(&self) -> String {
        let mut s = String::from("index");
        for b in &self.blocks {
            let _ = write!(s, ",{}", b.name);
        }
        s.push('\n');
        let n = self
            .blocks
            .iter()
            .map(|b| b.pod.eigenvalues.len())
            .max()
            .unwrap_or(0);
        for i in 0..n {
            let _ = write!(s, "{}", i + 1);
            for b in &self.blocks {
                match b.pod.eigenvalues.get(i) {
                    Some(v) => {
                        let _ = write!(s, ",{v:.17e}");
                    }
                    None => s.push(','),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = parse_manifest(&fs::read_to_string(dir.join(MANIFEST))?)?;
        if manifest_get(&manifest, "kind")? != "basis" {
            return Err(Error::Format(format!(
                "{} is not a basis store",
                dir.display()
            )));
        }
        let config = ScenarioConfig::from_json(&fs::read_to_string(dir.join(CONFIG))?)?;
        let transported = manifest_get(&manifest, "transported")? == "true";
        let specs = config.scenario.blocks();
        let blocks = manifest_get(&manifest, "blocks")?
            .split(',')
            .map(|name| {
                let spec = specs
                    .iter()
                    .find(|b| b.name == name)
                    .ok_or_else(|| Error::Format(format!("unknown block '{name}'")))?;
                let modes = read_dense(dir.join(format!("{name}_modes.urm")))?;
                let eigenvalues =
                    read_dense(dir.join(format!("{name}_eigenvalues.urm")))?.into_vec();
                Ok(BlockBasis {
                    name: name.to_string(),
                    fields: spec.fields.clone(),
                    pod: PodBasis {
                        modes,
                        eigenvalues,
                        inner: config.inner,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let n_sup: usize = manifest_get(&manifest, "supremizers")?
            .parse()
            .map_err(|e| Error::Format(format!("bad supremizer count: {e}")))?;
        let supremizers = if n_sup > 0 {
            Some(read_dense(dir.join("u_supremizers.urm"))?)
        } else {
            None
        };
        Ok(Self {
            config,
            transported,
            blocks,
            supremizers,
        })
    }
}
