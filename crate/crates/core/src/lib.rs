//! Potential theory of confocal ellipsoids.
//!
//! Homeoids, focaloids, homogeneous ellipsoids and thick layers in `ℝᵈ`, and
//! homeoids on the unit 3-sphere with the `cot ρ` kernel. The [`verify`]
//! module turns the classical confocal attraction theorems (Ivory's
//! correspondence, equality of exterior attraction of confocal shells,
//! constancy of the potential on confocal surfaces) into executable checks.

pub mod error;
pub mod geometry;
pub mod ivory;
pub mod measure;
pub mod potential;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Classification, ConfocalShift, EuclideanEllipsoid, Region, Sheet, Side, SphericalEllipsoid};
pub use ivory::DiagonalMap;
pub use measure::{FocaloidSurface, LayerRelation, MassKind, MassSurface, ThickLayer};
pub use potential::{FieldValue, Kernel};
pub use quadrature::{QuadratureMethod, QuadratureSpec};
