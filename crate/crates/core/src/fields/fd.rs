//! Second-order finite differences.
//!
//! Periodic grids use wrapped central stencils; their linear solves and the
//! projection are diagonal in Fourier space, so they are done exactly with
//! the stencil symbols. Dirichlet grids use one-sided second-order stencils
//! at the walls and conjugate-gradient solves.

use rustfft::num_complex::Complex64;

use crate::error::{domain, Result};

use super::fourier::Fourier2D;
use super::grid::{Boundary, Grid2D};
use super::ops::{Axis, BackendKind, Operators};

const CG_TOL: f64 = 1e-13;
/// Backward-Euler substeps used to approximate the heat semigroup.
const MOLLIFY_STEPS: usize = 16;

pub struct FdOps {
    grid: Grid2D,
    /// Present for periodic grids only.
    four: Option<Fourier2D>,
}

impl FdOps {
    pub fn new(grid: Grid2D) -> Result<Self> {
        let v = grid.violations();
        if !v.is_empty() {
            return domain(v.join("; "));
        }
        let four = (grid.boundary == Boundary::Periodic).then(|| Fourier2D::new(&grid));
        Ok(FdOps { grid, four })
    }

    /// Symbol of `-Lap_5` for mode `(i, j)`.
    fn neg_lap_symbol(&self, four: &Fourier2D, i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let tx = std::f64::consts::TAU * four.mx[i] as f64 / g.nx as f64;
        let ty = std::f64::consts::TAU * four.my[j] as f64 / g.ny as f64;
        (2.0 - 2.0 * tx.cos()) / (g.hx() * g.hx()) + (2.0 - 2.0 * ty.cos()) / (g.hy() * g.hy())
    }

    /// 5-point Laplacian evaluated at interior nodes only (walls left at 0).
    fn lap5_interior(&self, f: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (ix2, iy2) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let k = j * nx + i;
                out[k] = (f[k - 1] - 2.0 * f[k] + f[k + 1]) * ix2
                    + (f[k - nx] - 2.0 * f[k] + f[k + nx]) * iy2;
            }
        }
    }

    fn dirichlet_helmholtz(&self, rhs: &[f64], alpha: f64) -> Vec<f64> {
        let g = self.grid;
        let n = g.len();
        let interior = |k: usize| !g.is_boundary_node(k % g.nx, k / g.nx);
        // Lift the boundary data into the right-hand side.
        let mut lifted = vec![0.0; n];
        for k in 0..n {
            if !interior(k) {
                lifted[k] = rhs[k];
            }
        }
        let mut lap = vec![0.0; n];
        self.lap5_interior(&lifted, &mut lap);
        let b: Vec<f64> = (0..n)
            .map(|k| if interior(k) { rhs[k] + alpha * lap[k] } else { 0.0 })
            .collect();
        let apply = |x: &[f64], y: &mut [f64]| {
            let mut l = vec![0.0; n];
            self.lap5_interior(x, &mut l);
            for k in 0..n {
                y[k] = if interior(k) { x[k] - alpha * l[k] } else { 0.0 };
            }
        };
        let x0: Vec<f64> = (0..n).map(|k| if interior(k) { rhs[k] } else { 0.0 }).collect();
        let mut x = conjugate_gradient(apply, &b, x0, false);
        for k in 0..n {
            if !interior(k) {
                x[k] = rhs[k];
            }
        }
        x
    }

    /// Neumann 5-point Laplacian with mirrored ghosts, multiplied by the
    /// trapezoidal weights so the operator is symmetric.
    fn weighted_neumann_lap(&self, p: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (ix2, iy2) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let xm = if i == 0 { p[k + 1] } else { p[k - 1] };
                let xp = if i == nx - 1 { p[k - 1] } else { p[k + 1] };
                let ym = if j == 0 { p[k + nx] } else { p[k - nx] };
                let yp = if j == ny - 1 { p[k - nx] } else { p[k + nx] };
                let l = (xm - 2.0 * p[k] + xp) * ix2 + (ym - 2.0 * p[k] + yp) * iy2;
                out[k] = l * g.weight(i, j);
            }
        }
    }

    fn dirichlet_leray(&self, u1: &[f64], u2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = self.grid;
        let n = g.len();
        let d1 = self.derivative(u1, Axis::X);
        let d2 = self.derivative(u2, Axis::Y);
        // Solve -W L p = -W div u, made compatible with the constant kernel.
        let mut b: Vec<f64> = (0..n)
            .map(|k| -(d1[k] + d2[k]) * g.weight(k % g.nx, k / g.nx))
            .collect();
        let mean = b.iter().sum::<f64>() / n as f64;
        b.iter_mut().for_each(|v| *v -= mean);
        let apply = |x: &[f64], y: &mut [f64]| {
            self.weighted_neumann_lap(x, y);
            y.iter_mut().for_each(|v| *v = -*v);
        };
        let p = conjugate_gradient(apply, &b, vec![0.0; n], true);
        let px = self.derivative(&p, Axis::X);
        let py = self.derivative(&p, Axis::Y);
        let mut v1: Vec<f64> = u1.iter().zip(&px).map(|(u, q)| u - q).collect();
        let mut v2: Vec<f64> = u2.iter().zip(&py).map(|(u, q)| u - q).collect();
        for k in 0..n {
            if g.is_boundary_node(k % g.nx, k / g.nx) {
                v1[k] = 0.0;
                v2[k] = 0.0;
            }
        }
        (v1, v2)
    }
}

/// Conjugate gradients for a symmetric positive (semi-)definite operator.
/// With `deflate_mean` the iterates are kept orthogonal to constants.
fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    mut x: Vec<f64>,
    deflate_mean: bool,
) -> Vec<f64> {
    let n = b.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let demean = |v: &mut [f64]| {
        if deflate_mean {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|x| *x -= m);
        }
    };
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return vec![0.0; n];
    }
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    demean(&mut r);
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; n];
    for _ in 0..(10 * n).max(100) {
        if rr.sqrt() <= CG_TOL * bnorm {
            break;
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        demean(&mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
        rr = rr_new;
    }
    demean(&mut x);
    x
}

impl Operators for FdOps {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Fd
    }

    fn derivative(&self, f: &[f64], axis: Axis) -> Vec<f64> {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (n, stride, h) = match axis {
            Axis::X => (nx, 1, g.hx()),
            Axis::Y => (ny, nx, g.hy()),
        };
        let periodic = g.boundary == Boundary::Periodic;
        let inv2h = 0.5 / h;
        let mut out = vec![0.0; f.len()];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let pos = if axis == Axis::X { i } else { j };
                let at = |p: usize| f[k - pos * stride + p * stride];
                out[k] = if periodic {
                    (at((pos + 1) % n) - at((pos + n - 1) % n)) * inv2h
                } else if pos == 0 {
                    (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv2h
                } else if pos == n - 1 {
                    (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) * inv2h
                } else {
                    (at(pos + 1) - at(pos - 1)) * inv2h
                };
            }
        }
        out
    }

    fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let periodic = g.boundary == Boundary::Periodic;
        let second = |k: usize, pos: usize, n: usize, stride: usize, h: f64| {
            let at = |p: usize| f[k - pos * stride + p * stride];
            let v = if periodic {
                at((pos + n - 1) % n) - 2.0 * at(pos) + at((pos + 1) % n)
            } else if pos == 0 {
                2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)
            } else if pos == n - 1 {
                2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)
            } else {
                at(pos - 1) - 2.0 * at(pos) + at(pos + 1)
            };
            v / (h * h)
        };
        let mut out = vec![0.0; f.len()];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                out[k] = second(k, i, nx, 1, g.hx()) + second(k, j, ny, nx, g.hy());
            }
        }
        out
    }

    fn helmholtz(&self, rhs: &[f64], alpha: f64) -> Vec<f64> {
        match &self.four {
            Some(four) => four.apply_symbol(rhs, |i, j| {
                Complex64::new(1.0 / (1.0 + alpha * self.neg_lap_symbol(four, i, j)), 0.0)
            }),
            None => self.dirichlet_helmholtz(rhs, alpha),
        }
    }

    /// One backward-Euler step.
    fn diffuse(&self, f: &[f64], kappa_dt: f64) -> Vec<f64> {
        self.helmholtz(f, kappa_dt)
    }

    fn leray(&self, u1: &[f64], u2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match &self.four {
            Some(four) => {
                // Symbol of the wrapped central difference: i sin(k h) / h.
                let g = &self.grid;
                let dx: Vec<f64> = four
                    .mx
                    .iter()
                    .map(|&m| (std::f64::consts::TAU * m as f64 / g.nx as f64).sin() / g.hx())
                    .collect();
                let dy: Vec<f64> = four
                    .my
                    .iter()
                    .map(|&m| (std::f64::consts::TAU * m as f64 / g.ny as f64).sin() / g.hy())
                    .collect();
                four.project(u1, u2, &dx, &dy)
            }
            None => self.dirichlet_leray(u1, u2),
        }
    }

    fn mollify_plane(&self, f: &[f64], delta: f64) -> Vec<f64> {
        match &self.four {
            Some(four) => {
                let (kx, ky) = four.wavenumbers(self.grid.lx, self.grid.ly);
                let d2 = 0.5 * delta * delta;
                four.apply_symbol(f, |i, j| {
                    Complex64::new((-d2 * (kx[i] * kx[i] + ky[j] * ky[j])).exp(), 0.0)
                })
            }
            None => {
                let alpha = 0.5 * delta * delta / MOLLIFY_STEPS as f64;
                let mut x = f.to_vec();
                for _ in 0..MOLLIFY_STEPS {
                    super::field::set_boundary_plane(&self.grid, &mut x, 0.0);
                    x = self.dirichlet_helmholtz(&x, alpha);
                }
                x
            }
        }
    }
}
