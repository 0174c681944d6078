//! Grid fields and discrete calculus.
//!
//! Two backends implement [`Operators`]: a pseudo-spectral one for periodic
//! grids and a second-order finite-difference one for periodic or Dirichlet
//! grids. The free functions in [`calculus`] lift the plane operators to
//! scalar, vector and tensor fields.

pub mod calculus;
pub mod fd;
pub mod field;
pub mod fourier;
pub mod grid;
pub mod ops;
pub mod spectral;

pub use calculus::*;
pub use field::{
    CellValue, Field, ScalarField, SkewField, StressField, TensorField, VectorField,
};
pub use grid::{Boundary, Grid2D};
pub use ops::{make_operators, Axis, BackendKind, Operators, PlaneOp};
