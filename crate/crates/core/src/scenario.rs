//! The shipped parametrized problems: geometry family, data, discretization
//! and configuration map per parameter value.

use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cutfem::{assemble_poisson_cutfem, CutfemOptions};
use crate::error::{Error, Result};
use crate::fem::{assemble_elements, constant, mass, scalar_fn, EmbeddedBc, PoissonData};
use crate::geometry::{CutClassification, LevelSet, Orientation, SurrogateGeometry, Tag};
use crate::linalg::SparseMatrix;
use crate::mesh::{BackgroundMesh, Rect};
use crate::point::{Point, Vec2};
use crate::sbm::{assemble_poisson_sbm, assemble_stokes_sbm, OuterBc, SbmOptions, StokesData};
use crate::system::{solve_fom, AssembledSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioId {
    Heat,
    Stokes1p,
    Stokes2p,
    Ellipse,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [Self::Heat, Self::Stokes1p, Self::Stokes2p, Self::Ellipse];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Heat => "heat",
            Self::Stokes1p => "stokes1p",
            Self::Stokes2p => "stokes2p",
            Self::Ellipse => "ellipse",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scenario '{s}' (heat, stokes1p, stokes2p, ellipse)"
                ))
            })
    }

    /// Parameter dimension k.
    pub fn dim(self) -> usize {
        match self {
            Self::Heat | Self::Stokes1p => 1,
            Self::Stokes2p => 2,
            Self::Ellipse => 4,
        }
    }

    pub fn bounds(self) -> Rect {
        match self {
            Self::Heat => Rect::new(-2.0, 2.0, -1.0, 1.0),
            Self::Stokes1p | Self::Stokes2p => Rect::new(-2.0, 0.0, -1.0, 1.0),
            Self::Ellipse => Rect::new(-1.2, 1.2, -1.2, 1.2),
        }
    }

    pub fn method(self) -> Method {
        match self {
            Self::Ellipse => Method::Cutfem,
            _ => Method::Sbm,
        }
    }

    pub fn is_stokes(self) -> bool {
        matches!(self, Self::Stokes1p | Self::Stokes2p)
    }

    /// Scalar fields in the state vector.
    pub fn fields(self) -> usize {
        if self.is_stokes() {
            3
        } else {
            1
        }
    }

    /// Named field groups that get their own snapshot matrix and basis.
    pub fn blocks(self) -> Vec<Block> {
        match self {
            Self::Heat => vec![Block {
                name: "T",
                fields: 0..1,
            }],
            Self::Ellipse => vec![Block {
                name: "u",
                fields: 0..1,
            }],
            Self::Stokes1p | Self::Stokes2p => {
                vec![
                    Block {
                        name: "u",
                        fields: 0..2,
                    },
                    Block {
                        name: "p",
                        fields: 2..3,
                    },
                ]
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Sbm,
    Cutfem,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub name: &'static str,
    pub fields: Range<usize>,
}

impl Block {
    pub fn len(&self, n_h: usize) -> usize {
        self.fields.len() * n_h
    }

    /// State index range of the block.
    pub fn state_range(&self, n_h: usize) -> Range<usize> {
        self.fields.start * n_h..self.fields.end * n_h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extension {
    Zero,
    Smooth,
}

impl Extension {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Smooth => "smooth",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Random,
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerProduct {
    Euclidean,
    Mass,
}

impl InnerProduct {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Euclidean => "euclidean",
            Self::Mass => "mass",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    pub nx: usize,
    pub ny: usize,
    pub ranges: Vec<[f64; 2]>,
    /// Reference parameter μ̄ for transport and supremizers.
    pub reference: Vec<f64>,
    pub sampler: Sampler,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub extension: Extension,
    pub transport: bool,
    pub inner: InnerProduct,
    pub modes: Vec<usize>,
    /// Stokes only: enrich the velocity basis with supremizers.
    pub supremizers: bool,
    pub sbm: SbmOptions,
    pub cutfem: CutfemOptions,
    /// Timing repetitions; the median is reported.
    pub repeats: usize,
}

impl ScenarioConfig {
    pub fn default_for(id: ScenarioId) -> Self {
        let (nx, ny, ranges, reference, n_train, modes) = match id {
            ScenarioId::Heat => (
                120,
                60,
                vec![[-0.5, 0.5]],
                vec![0.0],
                400,
                vec![2, 10, 20, 30, 40, 50, 100],
            ),
            ScenarioId::Stokes1p => (
                80,
                80,
                vec![[-0.65, 0.65]],
                vec![0.0],
                256,
                vec![5, 10, 20, 30, 50],
            ),
            ScenarioId::Stokes2p => (
                80,
                80,
                vec![[-1.5, -1.0], [-0.15, 0.15]],
                vec![-1.25, 0.0],
                256,
                vec![5, 10, 20, 30, 50],
            ),
            ScenarioId::Ellipse => (
                96,
                96,
                vec![[0.3, 1.8], [0.3, 1.8], [-0.85, 0.85], [-0.85, 0.85]],
                vec![1.0, 1.0, 0.0, 0.0],
                200,
                vec![5, 10, 20, 40, 60],
            ),
        };
        Self {
            scenario: id,
            nx,
            ny,
            ranges,
            reference,
            sampler: Sampler::Random,
            seed: 2024,
            n_train,
            n_test: if id == ScenarioId::Heat { 50 } else { 20 },
            extension: Extension::Smooth,
            transport: id == ScenarioId::Ellipse,
            inner: InnerProduct::Euclidean,
            modes,
            supremizers: id.is_stokes(),
            sbm: SbmOptions::default(),
            cutfem: CutfemOptions::default(),
            repeats: 5,
        }
    }

    /// Parses a JSON object; missing keys take the scenario defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        let Value::Object(user) = v else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        let id = match user.get("scenario") {
            Some(Value::String(s)) => ScenarioId::parse(s)?,
            Some(_) => return Err(Error::Config("'scenario' must be a string".into())),
            None => return Err(Error::Config("config has no 'scenario'".into())),
        };
        let mut merged = serde_json::to_value(Self::default_for(id)).expect("config serializes");
        let obj = merged.as_object_mut().expect("object");
        for (k, val) in user {
            obj.insert(k, val);
        }
        let cfg: Self = serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.scenario.dim();
        let bad = |m: String| Err(Error::Config(m));
        if self.ranges.len() != k {
            return bad(format!(
                "{} expects {k} parameter ranges, got {}",
                self.scenario.as_str(),
                self.ranges.len()
            ));
        }
        if self.reference.len() != k {
            return bad(format!(
                "{} expects a {k}-dimensional reference parameter",
                self.scenario.as_str()
            ));
        }
        for (i, r) in self.ranges.iter().enumerate() {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                return bad(format!("parameter range {i} is degenerate: {r:?}"));
            }
        }
        if self.nx == 0 || self.ny == 0 {
            return bad("mesh resolution must be positive".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.modes.contains(&0) {
            return bad("mode counts must be positive".into());
        }
        if self.scenario == ScenarioId::Ellipse && self.ranges[..2].iter().any(|r| r[0] <= 0.0) {
            return bad("ellipse scale parameters must be positive".into());
        }
        self.sbm
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.cutfem
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// Φ(x̂) = shift + scale ⊙ x̂.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub scale: Vec2,
    pub shift: Vec2,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        scale: Vec2::new(1.0, 1.0),
        shift: Vec2::ZERO,
    };

    pub fn apply(&self, p: Point) -> Point {
        Point::new(
            self.shift.x + self.scale.x * p.x,
            self.shift.y + self.scale.y * p.y,
        )
    }

    pub fn inverse(&self) -> AffineMap {
        AffineMap {
            scale: Vec2::new(1.0 / self.scale.x, 1.0 / self.scale.y),
            shift: Vec2::new(-self.shift.x / self.scale.x, -self.shift.y / self.scale.y),
        }
    }
}

/// Discrete geometry of one parameter value.
#[derive(Clone, Debug)]
pub enum Discretization {
    Sbm(SurrogateGeometry),
    Cut(CutClassification),
}

impl Discretization {
    /// Active background vertices.
    pub fn active(&self) -> &[bool] {
        match self {
            Self::Sbm(s) => &s.active,
            Self::Cut(c) => &c.active,
        }
    }

    /// Elements carrying the physical domain (D̃ for SBM, INSIDE ∪ CUT for CutFEM).
    pub fn elements(&self) -> &[usize] {
        match self {
            Self::Sbm(s) => &s.elements,
            Self::Cut(c) => &c.domain,
        }
    }

    /// Mass matrix of the region on which errors are measured: D̃ for SBM,
    /// the cut physical domain for CutFEM.
    pub fn physical_mass(&self, mesh: &BackgroundMesh) -> SparseMatrix {
        match self {
            Self::Sbm(s) => mass(mesh, &s.elements),
            Self::Cut(c) => assemble_elements(mesh.n_vertices(), &c.domain, |t, b| {
                let tri = mesh.triangles[t];
                if c.tags[t] == Tag::Inside {
                    let area = mesh.area(t);
                    for i in 0..3 {
                        for j in 0..3 {
                            b.push(tri[i], tri[j], area / 12.0 * if i == j { 2.0 } else { 1.0 });
                        }
                    }
                    return;
                }
                for (p, w) in c.volume_rule(mesh, t) {
                    let l = mesh.barycentric(t, p);
                    for i in 0..3 {
                        for j in 0..3 {
                            b.push(tri[i], tri[j], w * l[i] * l[j]);
                        }
                    }
                }
            }),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FomSolution {
    pub mu: Vec<f64>,
    pub state: Vec<f64>,
    pub system: AssembledSystem,
    pub discretization: Discretization,
}

/// A configured scenario with its background mesh.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub mesh: BackgroundMesh,
}

const HEAT_HALF: Vec2 = Vec2::new(0.4, 0.35);
const CYLINDER_RADIUS: f64 = 0.2;
const STOKES1P_X: f64 = -1.0;
const ELLIPSE_R: f64 = 0.05;
const ELLIPSE_SOURCE: f64 = 20.0;

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let mesh = BackgroundMesh::structured(config.scenario.bounds(), config.nx, config.ny)?;
        Ok(Self { config, mesh })
    }

    pub fn id(&self) -> ScenarioId {
        self.config.scenario
    }

    pub fn n_h(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn state_len(&self) -> usize {
        self.id().fields() * self.n_h()
    }

    fn check_mu(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.id().dim() {
            return Err(Error::InvalidArgument(format!(
                "{} takes {} parameters, got {}",
                self.id().as_str(),
                self.id().dim(),
                mu.len()
            )));
        }
        Ok(())
    }

    pub fn level_set(&self, mu: &[f64]) -> Result<LevelSet> {
        self.check_mu(mu)?;
        match self.id() {
            ScenarioId::Heat => {
                LevelSet::rect(Point::new(0.0, mu[0]), HEAT_HALF, Orientation::Exterior)
            }
            ScenarioId::Stokes1p => LevelSet::circle(
                Point::new(STOKES1P_X, mu[0]),
                CYLINDER_RADIUS,
                Orientation::Exterior,
            ),
            ScenarioId::Stokes2p => LevelSet::circle(
                Point::new(mu[0], mu[1]),
                CYLINDER_RADIUS,
                Orientation::Exterior,
            ),
            ScenarioId::Ellipse => LevelSet::ellipse(
                [mu[0], mu[1], mu[2], mu[3]],
                ELLIPSE_R,
                Orientation::Interior,
            ),
        }
    }

    /// Configuration map Φ_μ taking the μ̄ geometry onto the μ geometry.
    pub fn transport_map(&self, mu: &[f64]) -> Result<AffineMap> {
        self.check_mu(mu)?;
        let r = &self.config.reference;
        Ok(match self.id() {
            ScenarioId::Heat | ScenarioId::Stokes1p => AffineMap {
                scale: Vec2::new(1.0, 1.0),
                shift: Vec2::new(0.0, mu[0] - r[0]),
            },
            ScenarioId::Stokes2p => AffineMap {
                scale: Vec2::new(1.0, 1.0),
                shift: Vec2::new(mu[0] - r[0], mu[1] - r[1]),
            },
            ScenarioId::Ellipse => {
                let scale = Vec2::new(mu[0] / r[0], mu[1] / r[1]);
                AffineMap {
                    scale,
                    shift: Vec2::new(mu[2] - scale.x * r[2], mu[3] - scale.y * r[3]),
                }
            }
        })
    }

    pub fn discretize(&self, mu: &[f64]) -> Result<Discretization> {
        let ls = self.level_set(mu)?;
        Ok(match self.id().method() {
            Method::Sbm => Discretization::Sbm(SurrogateGeometry::build(&self.mesh, &ls)?),
            Method::Cutfem => Discretization::Cut(CutClassification::build(&self.mesh, &ls)?),
        })
    }

    pub fn poisson_data(&self) -> Option<PoissonData> {
        match self.id() {
            ScenarioId::Heat => Some(PoissonData {
                source: constant(0.0),
                boundary: constant(1.0),
                embedded: EmbeddedBc::Dirichlet,
                outer: constant(0.0),
            }),
            ScenarioId::Ellipse => {
                let g = scalar_fn(|p: Point| 0.5 + p.x * p.y);
                Some(PoissonData {
                    source: constant(ELLIPSE_SOURCE),
                    boundary: g.clone(),
                    embedded: EmbeddedBc::Dirichlet,
                    outer: g,
                })
            }
            _ => None,
        }
    }

    pub fn stokes_data(&self) -> Option<StokesData> {
        self.id().is_stokes().then(|| StokesData {
            nu: 1.0,
            force: Arc::new(|_| Vec2::new(1.0, 0.0)),
            boundary: Arc::new(|_| Vec2::ZERO),
            outer: OuterBc::channel(1.0, 0.0),
            pressure_pin: None,
        })
    }

    pub fn assemble(&self, disc: &Discretization) -> Result<AssembledSystem> {
        match (disc, self.id()) {
            (Discretization::Sbm(s), id) if id.is_stokes() => assemble_stokes_sbm(
                &self.mesh,
                s,
                &self.stokes_data().unwrap(),
                &self.config.sbm,
            ),
            (Discretization::Sbm(s), _) => assemble_poisson_sbm(
                &self.mesh,
                s,
                &self.poisson_data().unwrap(),
                &self.config.sbm,
            ),
            (Discretization::Cut(c), _) => assemble_poisson_cutfem(
                &self.mesh,
                c,
                &self.poisson_data().unwrap(),
                &self.config.cutfem,
            ),
        }
    }

    pub fn solve(&self, mu: &[f64]) -> Result<FomSolution> {
        let discretization = self.discretize(mu)?;
        let system = self.assemble(&discretization)?;
        let state = solve_fom(&system)?;
        Ok(FomSolution {
            mu: mu.to_vec(),
            state,
            system,
            discretization,
        })
    }
}
