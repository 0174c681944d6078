use crate::error::{Error, Result};
use crate::tensor::{QTensor, SkewTensor};

use super::grid::Grid2D;

/// Per-cell value type of a grid field, packed as `NCOMP` reals.
pub trait CellValue: Copy + Default + Send + Sync + 'static {
    const NCOMP: usize;
    fn get(&self, c: usize) -> f64;
    fn set(&mut self, c: usize, v: f64);
    /// Squared pointwise norm (Frobenius for tensors).
    fn norm_sq(&self) -> f64;
}

impl CellValue for f64 {
    const NCOMP: usize = 1;
    fn get(&self, _: usize) -> f64 {
        *self
    }
    fn set(&mut self, _: usize, v: f64) {
        *self = v;
    }
    fn norm_sq(&self) -> f64 {
        self * self
    }
}

macro_rules! array_cell {
    ($($n:literal),*) => {$(
        impl CellValue for [f64; $n] {
            const NCOMP: usize = $n;
            fn get(&self, c: usize) -> f64 {
                self[c]
            }
            fn set(&mut self, c: usize, v: f64) {
                self[c] = v;
            }
            fn norm_sq(&self) -> f64 {
                self.iter().map(|x| x * x).sum()
            }
        }
    )*};
}

array_cell!(2, 4);

impl CellValue for QTensor {
    const NCOMP: usize = 5;
    fn get(&self, c: usize) -> f64 {
        self.components()[c]
    }
    fn set(&mut self, c: usize, v: f64) {
        match c {
            0 => self.q11 = v,
            1 => self.q12 = v,
            2 => self.q13 = v,
            3 => self.q22 = v,
            4 => self.q23 = v,
            _ => panic!("QTensor component {c} out of range"),
        }
    }
    fn norm_sq(&self) -> f64 {
        QTensor::norm_sq(self)
    }
}

impl CellValue for SkewTensor {
    const NCOMP: usize = 3;
    fn get(&self, c: usize) -> f64 {
        [self.w12, self.w13, self.w23][c]
    }
    fn set(&mut self, c: usize, v: f64) {
        match c {
            0 => self.w12 = v,
            1 => self.w13 = v,
            2 => self.w23 = v,
            _ => panic!("SkewTensor component {c} out of range"),
        }
    }
    fn norm_sq(&self) -> f64 {
        2.0 * (self.w12 * self.w12 + self.w13 * self.w13 + self.w23 * self.w23)
    }
}

/// Grid-sampled field, row-major (`x` fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T: CellValue> {
    grid: Grid2D,
    data: Vec<T>,
}

pub type ScalarField = Field<f64>;
/// In-plane velocity `(u1, u2)`.
pub type VectorField = Field<[f64; 2]>;
pub type TensorField = Field<QTensor>;
pub type SkewField = Field<SkewTensor>;
/// In-plane 2x2 block `(s11, s12, s21, s22)`.
pub type StressField = Field<[f64; 4]>;

impl<T: CellValue> Field<T> {
    pub fn filled(grid: Grid2D, value: T) -> Self {
        Field {
            grid,
            data: vec![value; grid.len()],
        }
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self::filled(grid, T::default())
    }

    pub fn from_vec(grid: Grid2D, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} cells for a {}x{} grid",
                data.len(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Field { grid, data })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> T) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.coords(i, j);
                data.push(f(x, y));
            }
        }
        Field { grid, data }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.grid.index(i, j);
        self.data[k] = v;
    }

    pub fn ensure_same_grid<U: CellValue>(&self, other: &Field<U>) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Component `c` of every cell as a contiguous plane.
    pub fn plane(&self, c: usize) -> Vec<f64> {
        self.data.iter().map(|v| v.get(c)).collect()
    }

    pub fn set_plane(&mut self, c: usize, plane: &[f64]) {
        assert_eq!(plane.len(), self.data.len());
        for (v, &x) in self.data.iter_mut().zip(plane) {
            v.set(c, x);
        }
    }

    pub fn planes(&self) -> Vec<Vec<f64>> {
        (0..T::NCOMP).map(|c| self.plane(c)).collect()
    }

    pub fn from_planes(grid: Grid2D, planes: &[Vec<f64>]) -> Self {
        assert_eq!(planes.len(), T::NCOMP);
        let mut f = Self::zeros(grid);
        for (c, p) in planes.iter().enumerate() {
            f.set_plane(c, p);
        }
        f
    }

    /// Applies `op` to every component plane.
    pub fn map_planes(&self, mut op: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let planes: Vec<Vec<f64>> = (0..T::NCOMP).map(|c| op(&self.plane(c))).collect();
        Self::from_planes(self.grid, &planes)
    }

    pub fn map<U: CellValue>(&self, f: impl Fn(&T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// `self += alpha * other`, componentwise.
    pub fn axpy(&mut self, alpha: f64, other: &Field<T>) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            for c in 0..T::NCOMP {
                a.set(c, a.get(c) + alpha * b.get(c));
            }
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = Self::zeros(self.grid);
        out.axpy(alpha, self);
        out
    }

    pub fn difference(&self, other: &Field<T>) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// `sqrt(sum |F|^2 w)` with the grid quadrature weights.
    pub fn l2(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                s += self.at(i, j).norm_sq() * self.grid.weight(i, j);
            }
        }
        s.sqrt()
    }

    /// Largest pointwise norm.
    pub fn linf(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.norm_sq())
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|v| (0..T::NCOMP).all(|c| v.get(c).is_finite()))
    }

    /// Copies boundary-node values of `src` into `self` (Dirichlet grids).
    pub fn impose_boundary(&mut self, src: &Field<T>) {
        let g = self.grid;
        for j in 0..g.ny {
            for i in 0..g.nx {
                if g.is_boundary_node(i, j) {
                    let k = g.index(i, j);
                    self.data[k] = src.data[k];
                }
            }
        }
    }
}

/// Sets the boundary ring of a plane to `value` on Dirichlet grids.
pub fn set_boundary_plane(grid: &Grid2D, plane: &mut [f64], value: f64) {
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_boundary_node(i, j) {
                plane[grid.index(i, j)] = value;
            }
        }
    }
}
