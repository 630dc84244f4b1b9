//! Shifted Boundary Method: Taylor-corrected Nitsche terms on the surrogate boundary.

pub mod poisson;
pub mod stokes;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use crate::fem::{EmbeddedBc, PoissonData};
pub use poisson::{assemble_poisson_sbm, boundary_mismatch};
pub use stokes::{assemble_stokes_sbm, drag, OuterBc, SideBc, StokesData, VecFn};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SbmOptions {
    /// Poisson penalty η = c / h.
    pub c: f64,
    /// Stokes velocity penalty.
    pub alpha: f64,
    /// Stokes tangential-gradient stabilization.
    pub beta: f64,
    /// Pressure stabilization δh²(∇p, ∇q).
    pub delta: f64,
    /// Apply the Taylor shift d in the boundary terms; off gives the classical
    /// Nitsche form on the surrogate boundary.
    pub shift: bool,
}

impl Default for SbmOptions {
    fn default() -> Self {
        Self {
            c: 10.0,
            alpha: 10.0,
            beta: 1.0,
            delta: 0.1,
            shift: true,
        }
    }
}

impl SbmOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.alpha > 0.0 && self.beta > 0.0 && self.delta > 0.0) {
            return invalid(format!("SBM coefficients must be positive: {self:?}"));
        }
        Ok(())
    }
}
