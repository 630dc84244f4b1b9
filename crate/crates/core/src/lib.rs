//! Unfitted finite elements on a fixed background mesh (Shifted Boundary
//! Method, CutFEM) and POD-Galerkin reduced models built from their snapshots.

pub mod cutfem;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod point;
pub mod quadrature;
pub mod rom;
pub mod sbm;
pub mod scenario;
pub mod snapshots;
pub mod studies;
pub mod system;

pub use error::{Error, Result};
pub use point::{Mat2, Point, Vec2};
