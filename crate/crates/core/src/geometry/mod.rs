//! Level-set geometry, the SBM surrogate boundary and CutFEM cut cells.

pub mod cut;
pub mod level_set;
pub mod surrogate;

pub use cut::{clip_triangle, CutClassification, CutElement, InterfacePoint, Tag};
pub use level_set::{LevelSet, Orientation, Shape};
pub use surrogate::{MappedPoint, SurrogateFacet, SurrogateGeometry};
