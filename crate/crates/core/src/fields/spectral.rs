use rustfft::num_complex::Complex64;

use crate::error::{domain, Result};

use super::fourier::Fourier2D;
use super::grid::{Boundary, Grid2D};
use super::ops::{Axis, BackendKind, Operators, PlaneOp};

/// Pseudo-spectral operators on a periodic grid.
///
/// Odd derivatives zero the Nyquist mode so real fields stay real.
pub struct SpectralOps {
    grid: Grid2D,
    four: Fourier2D,
    kx: Vec<f64>,
    ky: Vec<f64>,
    kx_odd: Vec<f64>,
    ky_odd: Vec<f64>,
}

impl SpectralOps {
    pub fn new(grid: Grid2D) -> Result<Self> {
        if grid.boundary != Boundary::Periodic {
            return domain("spectral backend requires a periodic grid");
        }
        let v = grid.violations();
        if !v.is_empty() {
            return domain(v.join("; "));
        }
        let four = Fourier2D::new(&grid);
        let (kx, ky) = four.wavenumbers(grid.lx, grid.ly);
        let kx_odd = kx
            .iter()
            .enumerate()
            .map(|(i, &k)| if four.is_nyquist_x(i) { 0.0 } else { k })
            .collect();
        let ky_odd = ky
            .iter()
            .enumerate()
            .map(|(j, &k)| if four.is_nyquist_y(j) { 0.0 } else { k })
            .collect();
        Ok(SpectralOps {
            grid,
            four,
            kx,
            ky,
            kx_odd,
            ky_odd,
        })
    }

    #[inline]
    fn k2(&self, i: usize, j: usize) -> f64 {
        self.kx[i] * self.kx[i] + self.ky[j] * self.ky[j]
    }

    fn keep(&self, i: usize, j: usize) -> bool {
        let cx = (self.grid.nx / 3) as i64;
        let cy = (self.grid.ny / 3) as i64;
        self.four.mx[i].abs() <= cx && self.four.my[j].abs() <= cy
    }

    fn symbol(&self, op: PlaneOp, i: usize, j: usize) -> Complex64 {
        let re = |x: f64| Complex64::new(x, 0.0);
        match op {
            PlaneOp::Dx => Complex64::new(0.0, self.kx_odd[i]),
            PlaneOp::Dy => Complex64::new(0.0, self.ky_odd[j]),
            PlaneOp::Laplacian => re(-self.k2(i, j)),
            PlaneOp::Dealias => re(if self.keep(i, j) { 1.0 } else { 0.0 }),
            PlaneOp::Helmholtz(alpha) => re(1.0 / (1.0 + alpha * self.k2(i, j))),
            PlaneOp::Diffuse(kt) => re((-kt * self.k2(i, j)).exp()),
            PlaneOp::Mollify(delta) => re((-0.5 * delta * delta * self.k2(i, j)).exp()),
        }
    }
}

impl Operators for SpectralOps {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Spectral
    }

    fn derivative(&self, f: &[f64], axis: Axis) -> Vec<f64> {
        let op = match axis {
            Axis::X => PlaneOp::Dx,
            Axis::Y => PlaneOp::Dy,
        };
        self.apply(op, f)
    }

    fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.apply(PlaneOp::Laplacian, f)
    }

    fn dealias(&self, f: &mut [f64]) {
        let out = self.apply(PlaneOp::Dealias, f);
        f.copy_from_slice(&out);
    }

    fn helmholtz(&self, rhs: &[f64], alpha: f64) -> Vec<f64> {
        self.apply(PlaneOp::Helmholtz(alpha), rhs)
    }

    /// Exact integrating factor `exp(-kappa_dt |k|^2)`.
    fn diffuse(&self, f: &[f64], kappa_dt: f64) -> Vec<f64> {
        self.apply(PlaneOp::Diffuse(kappa_dt), f)
    }

    fn leray(&self, u1: &[f64], u2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.four.project(u1, u2, &self.kx_odd, &self.ky_odd)
    }

    fn mollify_plane(&self, f: &[f64], delta: f64) -> Vec<f64> {
        self.apply(PlaneOp::Mollify(delta), f)
    }

    fn apply(&self, op: PlaneOp, f: &[f64]) -> Vec<f64> {
        self.four.apply_symbol(f, |i, j| self.symbol(op, i, j))
    }

    fn apply_batch(&self, planes: &[&[f64]], ops: &[PlaneOp]) -> Vec<Vec<Vec<f64>>> {
        let tables: Vec<_> = ops
            .iter()
            .map(|&op| self.four.table(|i, j| self.symbol(op, i, j)))
            .collect();
        self.four.apply_tables(planes, &tables)
    }
}
