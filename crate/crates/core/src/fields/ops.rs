use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::fd::FdOps;
use super::grid::{Boundary, Grid2D};
use super::spectral::SpectralOps;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Spectral,
    Fd,
}

/// Linear real operator applied plane by plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlaneOp {
    Dx,
    Dy,
    Laplacian,
    Dealias,
    /// `(I - alpha Lap)^{-1}`.
    Helmholtz(f64),
    /// Heat flow for the given time.
    Diffuse(f64),
    /// Gaussian smoothing at the given scale.
    Mollify(f64),
}

/// Scalar-plane calculus on one grid. Planes are row-major `nx * ny` slices.
pub trait Operators: Send + Sync {
    fn grid(&self) -> &Grid2D;
    fn kind(&self) -> BackendKind;

    fn derivative(&self, f: &[f64], axis: Axis) -> Vec<f64>;
    fn laplacian(&self, f: &[f64]) -> Vec<f64>;

    /// Removes modes that would alias under quadratic products (no-op for FD).
    fn dealias(&self, _f: &mut [f64]) {}

    /// Solves `(I - alpha Lap) x = rhs`. On Dirichlet grids the boundary
    /// nodes of `rhs` are kept as boundary values of `x`.
    fn helmholtz(&self, rhs: &[f64], alpha: f64) -> Vec<f64>;

    /// Advances the heat equation `x' = Lap x` by time `kappa_dt`.
    fn diffuse(&self, f: &[f64], kappa_dt: f64) -> Vec<f64>;

    /// Projects `(u1, u2)` onto divergence-free fields.
    fn leray(&self, u1: &[f64], u2: &[f64]) -> (Vec<f64>, Vec<f64>);

    /// Gaussian smoothing at length scale `delta` (`delta > 0`).
    fn mollify_plane(&self, f: &[f64], delta: f64) -> Vec<f64>;

    fn apply(&self, op: PlaneOp, f: &[f64]) -> Vec<f64> {
        match op {
            PlaneOp::Dx => self.derivative(f, Axis::X),
            PlaneOp::Dy => self.derivative(f, Axis::Y),
            PlaneOp::Laplacian => self.laplacian(f),
            PlaneOp::Dealias => {
                let mut v = f.to_vec();
                self.dealias(&mut v);
                v
            }
            PlaneOp::Helmholtz(alpha) => self.helmholtz(f, alpha),
            PlaneOp::Diffuse(kt) => self.diffuse(f, kt),
            PlaneOp::Mollify(delta) => self.mollify_plane(f, delta),
        }
    }

    /// Every operator applied to every plane; `out[op][plane]`. Backends may
    /// share transforms across the batch.
    fn apply_batch(&self, planes: &[&[f64]], ops: &[PlaneOp]) -> Vec<Vec<Vec<f64>>> {
        ops.iter()
            .map(|&op| planes.iter().map(|p| self.apply(op, p)).collect())
            .collect()
    }
}

/// Builds the operator backend for `grid`.
///
/// The spectral backend is only available on periodic grids.
pub fn make_operators(grid: Grid2D, kind: BackendKind) -> Result<Box<dyn Operators>> {
    match (kind, grid.boundary) {
        (BackendKind::Spectral, Boundary::Periodic) => Ok(Box::new(SpectralOps::new(grid)?)),
        (BackendKind::Spectral, Boundary::Dirichlet) => crate::error::domain(
            "spectral backend requires a periodic grid; use backend = \"fd\"",
        ),
        (BackendKind::Fd, _) => Ok(Box::new(FdOps::new(grid)?)),
    }
}
