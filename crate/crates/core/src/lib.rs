//! Numerical laboratory for the co-rotational Beris-Edwards system of
//! nematic liquid crystals.
//!
//! The crate is layered bottom-up:
//!
//! * [`tensor`]: symmetric traceless 3x3 algebra and closed-form eigenvalues.
//! * [`bulk`]: Landau-de Gennes bulk potential, molecular field and the
//!   preserved eigenvalue interval.
//! * [`verifier`]: brute-force sweeps over the scalar inequalities behind the
//!   eigenvalue bounds.
//! * [`fields`]: grid fields with pseudo-spectral (periodic) and
//!   finite-difference (periodic or Dirichlet) calculus.
//! * [`solver`]: IMEX time stepping of the coupled flow/order-parameter system.
//! * [`experiments`]: monitors and scripted scenario drivers.
//! * [`config`] and [`io`]: run configuration and output formats.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bulk;
pub mod config;
pub mod eigcheck;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod io;
pub mod solver;
pub mod tensor;
pub mod verifier;

pub use bulk::{EigenInterval, MaterialParams};
pub use error::{Error, Result};
pub use tensor::{EigenTriple, QTensor, SkewTensor};
