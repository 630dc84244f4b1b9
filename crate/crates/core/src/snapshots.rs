//! Parameter sampling, full-order sweeps, extension of solutions to the whole
//! background mesh, transport to the reference configuration, and the
//! on-disk snapshot store.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::stiffness;
use crate::linalg::io::{read_dense, write_dense};
use crate::linalg::{solve_lu, DenseMatrix, SparseMatrix};
use crate::mesh::BackgroundMesh;
use crate::scenario::{AffineMap, Extension, Sampler, Scenario, ScenarioConfig, ScenarioId};

/// RNG stream of the training set; the test set uses [`TEST_STREAM`].
pub const TRAIN_STREAM: u64 = 0;
pub const TEST_STREAM: u64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSpace {
    pub ranges: Vec<[f64; 2]>,
}

impl ParameterSpace {
    pub fn new(ranges: Vec<[f64; 2]>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::InvalidArgument(
                "parameter space needs at least one axis".into(),
            ));
        }
        for r in &ranges {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                return Err(Error::InvalidArgument(format!(
                    "degenerate parameter range {r:?}"
                )));
            }
        }
        Ok(Self { ranges })
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.dim()
            && mu
                .iter()
                .zip(&self.ranges)
                .all(|(m, r)| *m >= r[0] && *m <= r[1])
    }

    pub fn random(&self, n: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        (0..n)
            .map(|_| {
                self.ranges
                    .iter()
                    .map(|r| rng.gen_range(r[0]..=r[1]))
                    .collect()
            })
            .collect()
    }

    /// Tensor grid with `m` points per axis, endpoints included (the midpoint when m = 1).
    pub fn grid(&self, m: usize) -> Vec<Vec<f64>> {
        let axis = |r: &[f64; 2]| -> Vec<f64> {
            if m == 1 {
                vec![0.5 * (r[0] + r[1])]
            } else {
                (0..m)
                    .map(|i| r[0] + (r[1] - r[0]) * i as f64 / (m - 1) as f64)
                    .collect()
            }
        };
        let mut out = vec![Vec::new()];
        for r in &self.ranges {
            let pts = axis(r);
            out = out
                .into_iter()
                .flat_map(|head| {
                    pts.iter().map(move |&x| {
                        let mut v = head.clone();
                        v.push(x);
                        v
                    })
                })
                .collect();
        }
        out
    }

    /// `n` samples: seeded random, or the largest tensor grid with at most `n` points.
    pub fn sample(&self, sampler: Sampler, n: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
        match sampler {
            Sampler::Random => self.random(n, seed, stream),
            Sampler::Grid => {
                if n == 0 {
                    return Vec::new();
                }
                let mut m = (n as f64).powf(1.0 / self.dim() as f64).round() as usize;
                while m.pow(self.dim() as u32) > n {
                    m -= 1;
                }
                self.grid(m.max(1))
            }
        }
    }
}

/// Training and test parameters of a configuration.
pub fn training_set(config: &ScenarioConfig) -> Result<Vec<Vec<f64>>> {
    let space = ParameterSpace::new(config.ranges.clone())?;
    Ok(space.sample(config.sampler, config.n_train, config.seed, TRAIN_STREAM))
}

pub fn test_set(config: &ScenarioConfig) -> Result<Vec<Vec<f64>>> {
    let space = ParameterSpace::new(config.ranges.clone())?;
    Ok(space.random(config.n_test, config.seed, TEST_STREAM))
}

/// Inactive entries set to zero; active entries untouched.
pub fn extend_zero(field: &[f64], active: &[bool]) -> Vec<f64> {
    field
        .iter()
        .zip(active)
        .map(|(&v, &a)| if a { v } else { 0.0 })
        .collect()
}

/// Discrete harmonic extension with the background stiffness matrix
/// assembled once.
#[derive(Clone, Debug)]
pub struct Extender {
    stiffness: SparseMatrix,
    on_boundary: Vec<bool>,
}

impl Extender {
    pub fn new(mesh: &BackgroundMesh) -> Self {
        let all: Vec<usize> = (0..mesh.n_triangles()).collect();
        Self {
            stiffness: stiffness(mesh, &all),
            on_boundary: mesh.boundary_vertices(),
        }
    }

    /// Fills inactive vertices with the P1 harmonic function equal to the
    /// field on active vertices and zero on inactive ∂B vertices.
    pub fn extend_smooth(&self, field: &[f64], active: &[bool]) -> Result<Vec<f64>> {
        let n = self.stiffness.rows();
        if field.len() != n || active.len() != n {
            return Err(Error::InvalidArgument(format!(
                "extension of field {} with mask {} on {n} vertices",
                field.len(),
                active.len()
            )));
        }
        if !active.iter().any(|&a| a) {
            return Err(Error::InvalidArgument(
                "smooth extension needs a nonempty active set".into(),
            ));
        }
        let mut out = extend_zero(field, active);
        let free: Vec<usize> = (0..n)
            .filter(|&v| !active[v] && !self.on_boundary[v])
            .collect();
        if free.is_empty() {
            return Ok(out);
        }
        let known: Vec<usize> = (0..n).filter(|&v| active[v]).collect();
        let k_ii = self.stiffness.submatrix(&free, &free);
        let k_ia = self.stiffness.submatrix(&free, &known);
        let xa: Vec<f64> = known.iter().map(|&v| field[v]).collect();
        let rhs: Vec<f64> = k_ia.matvec(&xa).into_iter().map(|v| -v).collect();
        let x = solve_lu(&k_ii, &rhs)?;
        for (&v, xi) in free.iter().zip(x) {
            out[v] = xi;
        }
        Ok(out)
    }
}

/// One-shot smooth extension; see [`Extender::extend_smooth`].
pub fn extend_smooth(field: &[f64], active: &[bool], mesh: &BackgroundMesh) -> Result<Vec<f64>> {
    Extender::new(mesh).extend_smooth(field, active)
}

/// Evaluation of P1 fields at the images Φ(x_v) of all background vertices.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    /// Per vertex: source triangle vertices and barycentric weights, or
    /// `None` when Φ(x_v) falls outside B.
    targets: Vec<Option<([usize; 3], [f64; 3])>>,
}

impl TransportPlan {
    pub fn new(mesh: &BackgroundMesh, map: &AffineMap) -> Self {
        let targets = mesh
            .vertices
            .iter()
            .map(|&x| {
                let y = map.apply(x);
                mesh.locate(y)
                    .map(|t| (mesh.triangles[t], mesh.barycentric(t, y)))
            })
            .collect();
        Self { targets }
    }

    pub fn n_vertices(&self) -> usize {
        self.targets.len()
    }

    pub fn target(&self, v: usize) -> Option<([usize; 3], [f64; 3])> {
        self.targets[v]
    }

    /// Value at vertex `v` of the pulled-back field `f ∘ Φ`.
    pub fn value(&self, field: &[f64], v: usize) -> f64 {
        match &self.targets[v] {
            Some((tri, l)) => l[0] * field[tri[0]] + l[1] * field[tri[1]] + l[2] * field[tri[2]],
            None => 0.0,
        }
    }

    pub fn apply(&self, field: &[f64]) -> Vec<f64> {
        (0..self.targets.len())
            .map(|v| self.value(field, v))
            .collect()
    }
}

/// T̂(x̂) = T(Φ_μ(x̂)) for a nodal field; points mapped outside B give 0.
pub fn transport_snapshot(mesh: &BackgroundMesh, field: &[f64], map: &AffineMap) -> Vec<f64> {
    TransportPlan::new(mesh, map).apply(field)
}

/// T(x) = T̂(Φ_μ⁻¹(x)), the inverse of [`transport_snapshot`] up to interpolation.
pub fn inverse_transport(mesh: &BackgroundMesh, field: &[f64], map: &AffineMap) -> Vec<f64> {
    TransportPlan::new(mesh, &map.inverse()).apply(field)
}

/// Full-order solutions of a sweep before extension and transport.
#[derive(Clone, Debug)]
pub struct RawSnapshots {
    pub params: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
    /// Active background vertices per column.
    pub active: Vec<Vec<bool>>,
    pub fom_seconds: Vec<f64>,
    /// Parameters whose solve failed, with the error message.
    pub failed: Vec<(Vec<f64>, String)>,
}

/// Solves the full-order problem at every parameter, in parallel with the
/// results kept in parameter order. Failed solves are logged and skipped.
pub fn run_raw_sweep(scenario: &Scenario, params: &[Vec<f64>]) -> RawSnapshots {
    let results: Vec<(Vec<f64>, Result<(Vec<f64>, Vec<bool>)>, f64)> = params
        .par_iter()
        .map(|mu| {
            let start = Instant::now();
            let r = scenario
                .solve(mu)
                .map(|s| (s.state, s.discretization.active().to_vec()));
            (mu.clone(), r, start.elapsed().as_secs_f64())
        })
        .collect();
    let mut raw = RawSnapshots {
        params: Vec::new(),
        states: Vec::new(),
        active: Vec::new(),
        fom_seconds: Vec::new(),
        failed: Vec::new(),
    };
    for (mu, r, secs) in results {
        match r {
            Ok((state, active)) => {
                log::debug!("snapshot mu={mu:?} in {secs:.3}s");
                raw.params.push(mu);
                raw.states.push(state);
                raw.active.push(active);
                raw.fom_seconds.push(secs);
            }
            Err(e) => {
                log::warn!("snapshot mu={mu:?} failed: {e}");
                raw.failed.push((mu, e.to_string()));
            }
        }
    }
    raw
}

/// Snapshot matrix of one field block: each column holds the block's fields
/// stacked, N_h entries per field.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotMatrix {
    pub block: String,
    pub data: DenseMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSet {
    pub config: ScenarioConfig,
    pub n_h: usize,
    pub params: Vec<Vec<f64>>,
    pub fom_seconds: Vec<f64>,
    pub extension: Extension,
    pub transported: bool,
    pub blocks: Vec<SnapshotMatrix>,
}

impl SnapshotSet {
    pub fn n_s(&self) -> usize {
        self.params.len()
    }

    pub fn block(&self, name: &str) -> Option<&SnapshotMatrix> {
        self.blocks.iter().find(|b| b.block == name)
    }
}

/// Extends and optionally transports one full-order state, field by field.
pub fn prepare_state(
    scenario: &Scenario,
    extender: Option<&Extender>,
    state: &[f64],
    active: &[bool],
    mu: &[f64],
    extension: Extension,
    transport: bool,
) -> Result<Vec<f64>> {
    let n_h = scenario.n_h();
    let plan = if transport {
        Some(TransportPlan::new(
            &scenario.mesh,
            &scenario.transport_map(mu)?,
        ))
    } else {
        None
    };
    let mut out = Vec::with_capacity(state.len());
    for field in state.chunks(n_h) {
        let ext = match (extension, extender) {
            (Extension::Zero, _) => extend_zero(field, active),
            (Extension::Smooth, Some(e)) => e.extend_smooth(field, active)?,
            (Extension::Smooth, None) => extend_smooth(field, active, &scenario.mesh)?,
        };
        out.extend(match &plan {
            Some(p) => p.apply(&ext),
            None => ext,
        });
    }
    Ok(out)
}

impl RawSnapshots {
    /// Applies an extension policy and optional transport and splits the
    /// states into the scenario's field blocks.
    pub fn finish(
        &self,
        scenario: &Scenario,
        extension: Extension,
        transport: bool,
    ) -> Result<SnapshotSet> {
        let n_h = scenario.n_h();
        let extender = (extension == Extension::Smooth).then(|| Extender::new(&scenario.mesh));
        let columns = (0..self.states.len())
            .into_par_iter()
            .map(|i| {
                prepare_state(
                    scenario,
                    extender.as_ref(),
                    &self.states[i],
                    &self.active[i],
                    &self.params[i],
                    extension,
                    transport,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let blocks = scenario
            .id()
            .blocks()
            .into_iter()
            .map(|b| {
                let range = b.state_range(n_h);
                let cols: Vec<Vec<f64>> =
                    columns.iter().map(|c| c[range.clone()].to_vec()).collect();
                Ok(SnapshotMatrix {
                    block: b.name.to_string(),
                    data: DenseMatrix::from_columns(range.len(), &cols)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SnapshotSet {
            config: scenario.config.clone(),
            n_h,
            params: self.params.clone(),
            fom_seconds: self.fom_seconds.clone(),
            extension,
            transported: transport,
            blocks,
        })
    }
}

/// Training sweep of a configuration with its extension and transport settings.
pub fn run_sweep(scenario: &Scenario, params: &[Vec<f64>]) -> Result<SnapshotSet> {
    let raw = run_raw_sweep(scenario, params);
    if raw.params.is_empty() {
        return Err(Error::SolverFailure {
            reason: "every snapshot solve failed".into(),
            residual: f64::NAN,
        });
    }
    raw.finish(
        scenario,
        scenario.config.extension,
        scenario.config.transport,
    )
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| {
            x.parse::<f64>()
                .map_err(|e| Error::Format(format!("bad number '{x}': {e}")))
        })
        .collect()
}

/// Reads a `key=value` manifest into ordered pairs.
pub fn parse_manifest(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Format(format!("manifest line without '=': {l}")))
        })
        .collect()
}

pub(crate) fn manifest_get<'a>(m: &'a [(String, String)], key: &str) -> Result<&'a str> {
    m.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::Format(format!("manifest has no '{key}'")))
}

pub const MANIFEST: &str = "manifest.txt";
pub const CONFIG: &str = "config.json";
pub const TIMINGS: &str = "timings.csv";

impl SnapshotSet {
    /// Writes manifest, configuration, one URM1 matrix per block and the
    /// per-column solve times. Everything except `timings.csv` is a
    /// deterministic function of the configuration.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let c = &self.config;
        let mut m = String::new();
        let _ = writeln!(m, "kind=snapshots");
        let _ = writeln!(m, "scenario={}", c.scenario.as_str());
        let _ = writeln!(m, "k={}", c.scenario.dim());
        let _ = writeln!(m, "n_h={}", self.n_h);
        let _ = writeln!(m, "n_s={}", self.n_s());
        let _ = writeln!(m, "mesh={}x{}", c.nx, c.ny);
        let _ = writeln!(m, "extension={}", self.extension.as_str());
        let _ = writeln!(m, "transported={}", self.transported);
        let _ = writeln!(m, "reference={}", fmt_list(&c.reference));
        let _ = writeln!(m, "seed={}", c.seed);
        let _ = writeln!(
            m,
            "blocks={}",
            self.blocks
                .iter()
                .map(|b| b.block.as_str())
                .collect::<Vec<_>>()
                .join(",")
        );
        for (i, mu) in self.params.iter().enumerate() {
            let _ = writeln!(m, "mu.{i}={}", fmt_list(mu));
        }
        fs::write(dir.join(MANIFEST), m)?;
        fs::write(dir.join(CONFIG), c.to_json())?;
        for b in &self.blocks {
            write_dense(dir.join(format!("{}.urm", b.block)), &b.data)?;
        }
        let mut t = String::from("column,fom_seconds\n");
        for (i, s) in self.fom_seconds.iter().enumerate() {
            let _ = writeln!(t, "{i},{s:?}");
        }
        fs::write(dir.join(TIMINGS), t)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = parse_manifest(&fs::read_to_string(dir.join(MANIFEST))?)?;
        if manifest_get(&manifest, "kind")? != "snapshots" {
            return Err(Error::Format(format!(
                "{} is not a snapshot store",
                dir.display()
            )));
        }
        let config = ScenarioConfig::from_json(&fs::read_to_string(dir.join(CONFIG))?)?;
        if ScenarioId::parse(manifest_get(&manifest, "scenario")?)? != config.scenario {
            return Err(Error::Format(
                "manifest and config disagree on the scenario".into(),
            ));
        }
        let num = |k: &str| -> Result<usize> {
            manifest_get(&manifest, k)?
                .parse()
                .map_err(|e| Error::Format(format!("bad {k}: {e}")))
        };
        let n_h = num("n_h")?;
        let n_s = num("n_s")?;
        let extension = match manifest_get(&manifest, "extension")? {
            "zero" => Extension::Zero,
            "smooth" => Extension::Smooth,
            other => return Err(Error::Format(format!("unknown extension '{other}'"))),
        };
        let transported = manifest_get(&manifest, "transported")? == "true";
        let params = (0..n_s)
            .map(|i| parse_list(manifest_get(&manifest, &format!("mu.{i}"))?))
            .collect::<Result<_>>()?;
        let blocks = manifest_get(&manifest, "blocks")?
            .split(',')
            .map(|name| {
                let data = read_dense(dir.join(format!("{name}.urm")))?;
                if data.cols() != n_s {
                    return Err(Error::Format(format!(
                        "block {name} has {} columns, manifest says {n_s}",
                        data.cols()
                    )));
                }
                Ok(SnapshotMatrix {
                    block: name.to_string(),
                    data,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let fom_seconds = match fs::read_to_string(dir.join(TIMINGS)) {
            Ok(text) => text
                .lines()
                .skip(1)
                .filter_map(|l| l.split_once(',').and_then(|(_, s)| s.parse().ok()))
                .collect(),
            Err(_) => vec![f64::NAN; n_s],
        };
        Ok(Self {
            config,
            n_h,
            params,
            fom_seconds,
            extension,
            transported,
            blocks,
        })
    }
}
