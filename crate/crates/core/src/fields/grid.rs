use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

/// Uniform 2-D grid.
///
/// Periodic grids place `nx` nodes at `x_i = i lx / nx` on `[0, lx)`.
/// Dirichlet grids place nodes on both walls, `x_i = i lx / (nx - 1)`, and
/// the outermost ring of nodes carries boundary data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub boundary: Boundary,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, boundary: Boundary) -> Result<Self> {
        let g = Grid2D {
            nx,
            ny,
            lx,
            ly,
            boundary,
        };
        let v = g.violations();
        if v.is_empty() {
            Ok(g)
        } else {
            domain(v.join("; "))
        }
    }

    /// `n x n` periodic grid on `[0, 2 pi)^2`.
    pub fn periodic_square(n: usize) -> Self {
        let l = std::f64::consts::TAU;
        Grid2D::new(n, n, l, l, Boundary::Periodic).expect("valid periodic grid")
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, n) in [("nx", self.nx), ("ny", self.ny)] {
            if n < 8 || n % 2 != 0 {
                v.push(format!("{name} must be even and >= 8 (got {n})"));
            }
        }
        for (name, l) in [("lx", self.lx), ("ly", self.ly)] {
            if !(l > 0.0) || !l.is_finite() {
                v.push(format!("{name} must be positive (got {l})"));
            }
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.lx / self.nx as f64,
            Boundary::Dirichlet => self.lx / (self.nx - 1) as f64,
        }
    }

    pub fn hy(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.ly / self.ny as f64,
            Boundary::Dirichlet => self.ly / (self.ny - 1) as f64,
        }
    }

    /// Quadrature weight per node; boundary nodes of a Dirichlet grid get
    /// the trapezoidal half (quarter at corners) weights.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let base = self.hx() * self.hy();
        match self.boundary {
            Boundary::Periodic => base,
            Boundary::Dirichlet => {
                let wx = if i == 0 || i == self.nx - 1 { 0.5 } else { 1.0 };
                let wy = if j == 0 || j == self.ny - 1 { 0.5 } else { 1.0 };
                base * wx * wy
            }
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), j as f64 * self.hy())
    }

    pub fn is_boundary_node(&self, i: usize, j: usize) -> bool {
        self.boundary == Boundary::Dirichlet
            && (i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1)
    }

    /// Smallest spacing.
    pub fn h(&self) -> f64 {
        self.hx().min(self.hy())
    }
}
