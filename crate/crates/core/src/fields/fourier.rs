//! 2-D real-to-complex transforms on periodic grids, shared by both periodic
//! backends (spectral symbols and finite-difference symbols).

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::Grid2D;

pub struct Fourier2D {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    /// Signed integer mode numbers along each axis.
    pub mx: Vec<i64>,
    pub my: Vec<i64>,
}

fn modes(n: usize) -> Vec<i64> {
    (0..n)
        .map(|i| if i <= n / 2 { i as i64 } else { i as i64 - n as i64 })
        .collect()
}

impl Fourier2D {
    pub fn new(grid: &Grid2D) -> Self {
        let mut planner = FftPlanner::new();
        Fourier2D {
            nx: grid.nx,
            ny: grid.ny,
            fwd_x: planner.plan_fft_forward(grid.nx),
            inv_x: planner.plan_fft_inverse(grid.nx),
            fwd_y: planner.plan_fft_forward(grid.ny),
            inv_y: planner.plan_fft_inverse(grid.ny),
            mx: modes(grid.nx),
            my: modes(grid.ny),
        }
    }

    /// Physical wavenumbers `2 pi m / l`.
    pub fn wavenumbers(&self, lx: f64, ly: f64) -> (Vec<f64>, Vec<f64>) {
        (
            self.mx.iter().map(|&m| TAU * m as f64 / lx).collect(),
            self.my.iter().map(|&m| TAU * m as f64 / ly).collect(),
        )
    }

    pub fn is_nyquist_x(&self, i: usize) -> bool {
        i == self.nx / 2
    }

    pub fn is_nyquist_y(&self, j: usize) -> bool {
        j == self.ny / 2
    }

    fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); src.len()];
        for r in 0..rows {
            for c in 0..cols {
                out[c * rows + r] = src[r * cols + c];
            }
        }
        out
    }

    fn forward_complex(&self, mut buf: Vec<Complex64>) -> Vec<Complex64> {
        self.fwd_x.process(&mut buf);
        let mut t = Self::transpose(&buf, self.ny, self.nx);
        self.fwd_y.process(&mut t);
        Self::transpose(&t, self.nx, self.ny)
    }

    /// Normalised inverse transform.
    fn inverse_complex(&self, mut buf: Vec<Complex64>) -> Vec<Complex64> {
        self.inv_x.process(&mut buf);
        let mut t = Self::transpose(&buf, self.ny, self.nx);
        self.inv_y.process(&mut t);
        let scale = 1.0 / (self.nx * self.ny) as f64;
        let mut out = Self::transpose(&t, self.nx, self.ny);
        out.iter_mut().for_each(|z| *z *= scale);
        out
    }

    /// Unnormalised forward transform; output is row-major like the input.
    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        self.forward_complex(f.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Normalised inverse transform, keeping the real part.
    pub fn inverse(&self, spec: Vec<Complex64>) -> Vec<f64> {
        self.inverse_complex(spec).into_iter().map(|z| z.re).collect()
    }

    /// Multiplies every mode `(i, j)` by `symbol(i, j)`.
    pub fn apply_symbol(&self, f: &[f64], symbol: impl Fn(usize, usize) -> Complex64) -> Vec<f64> {
        let mut s = self.forward(f);
        for j in 0..self.ny {
            for i in 0..self.nx {
                s[j * self.nx + i] *= symbol(i, j);
            }
        }
        self.inverse(s)
    }

    /// Applies each real symbol table (`nx * ny`, row-major) to every plane.
    /// Planes are transformed in pairs as `f + i g`; a real operator maps
    /// that to `Lf + i Lg`, so one complex transform serves two planes.
    pub fn apply_tables(&self, planes: &[&[f64]], tables: &[Vec<Complex64>]) -> Vec<Vec<Vec<f64>>> {
        let n = self.nx * self.ny;
        let mut out: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(planes.len()); tables.len()];
        for pair in planes.chunks(2) {
            let z: Vec<Complex64> = match pair {
                [f, g] => f.iter().zip(g.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect(),
                [f] => f.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
                _ => unreachable!(),
            };
            let spec = self.forward_complex(z);
            for (t, table) in tables.iter().enumerate() {
                let mut s = spec.clone();
                for k in 0..n {
                    s[k] *= table[k];
                }
                let back = self.inverse_complex(s);
                out[t].push(back.iter().map(|z| z.re).collect());
                if pair.len() == 2 {
                    out[t].push(back.iter().map(|z| z.im).collect());
                }
            }
        }
        out
    }

    /// Tabulates `symbol` over all modes.
    pub fn table(&self, symbol: impl Fn(usize, usize) -> Complex64) -> Vec<Complex64> {
        let mut t = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                t.push(symbol(i, j));
            }
        }
        t
    }

    /// Orthogonal projection of `(u1, u2)` onto the kernel of the divergence
    /// whose symbol is `i (dx(i), dy(j))`.
    pub fn project(
        &self,
        u1: &[f64],
        u2: &[f64],
        dx: &[f64],
        dy: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let mut a = self.forward(u1);
        let mut b = self.forward(u2);
        for (j, &ky) in dy.iter().enumerate() {
            for (i, &kx) in dx.iter().enumerate() {
                let k = j * self.nx + i;
                let d2 = kx * kx + ky * ky;
                if d2 > 0.0 {
                    let proj = (a[k] * kx + b[k] * ky) / d2;
                    a[k] -= proj * kx;
                    b[k] -= proj * ky;
                }
            }
        }
        (self.inverse(a), self.inverse(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let g = Grid2D::new(8, 12, 1.0, 2.0, super::super::grid::Boundary::Periodic).unwrap();
        let four = Fourier2D::new(&g);
        let f: Vec<f64> = (0..g.len()).map(|k| ((k * 7919) % 31) as f64 - 15.0).collect();
        let back = four.inverse(four.forward(&f));
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
