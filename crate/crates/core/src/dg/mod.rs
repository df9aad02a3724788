//! Nodal discontinuous Galerkin discretization of the TM system.

pub mod material;
pub mod operator;
pub mod reference;
pub mod space;

pub use material::{Coefficients, MaterialField};
pub use operator::{BoundarySource, DgOperator, Forcing, SourceSpec, VolumeSource};
pub use reference::RefElement;
pub use space::{DgSpace, FaceLink, FIELDS};
