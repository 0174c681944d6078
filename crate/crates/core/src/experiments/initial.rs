//! Initial-data generators. Every generator is an analytic function of
//! `(x, y)`, so nested grids sample the same continuous field.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bulk::EigenInterval;
use crate::error::{domain, Result};
use crate::fields::{Grid2D, TensorField, VectorField};
use crate::tensor::{eigenvalues, uniaxial, QTensor};

/// Side of the reference sampling used when fitting eigenvalue ranges.
pub const REFERENCE_SAMPLES: usize = 256;

/// How a random order-parameter field is rescaled after sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Fit {
    /// Use the raw field.
    None,
    /// Shrink (never grow) so every eigenvalue lies in
    /// `[lo + eps, hi - eps]`, `eps = margin * (hi - lo)`.
    Interval {
        #[serde(default = "default_margin")]
        margin: f64,
    },
    /// Scale so the largest eigenvalue over the domain equals `value`.
    L1Max { value: f64 },
}

fn default_margin() -> f64 {
    0.05
}

fn default_max_mode() -> u32 {
    3
}

fn one() -> f64 {
    1.0
}

fn fit_none() -> Fit {
    Fit::None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QInit {
    Zero,
    Uniaxial {
        s: f64,
        director: [f64; 3],
    },
    /// Band-limited random Fourier field, modes `|m_x|, |m_y| <= max_mode`,
    /// coefficients decaying like `1 / (1 + |m|^2)`.
    RandomFourier {
        #[serde(default = "default_max_mode")]
        max_mode: u32,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "fit_none")]
        fit: Fit,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum UInit {
    Zero,
    /// `A (sin kx cos ky, -cos kx sin ky)` with `k = 2 pi / l` per axis.
    TaylorGreen {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Divergence-free field `(d_y psi, -d_x psi)` of a random stream function.
    RandomFourier {
        #[serde(default = "default_max_mode")]
        max_mode: u32,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

/// Sum of `cos` / `sin` modes on a `lx x ly` box, with `NC` components.
#[derive(Clone, Debug)]
pub struct FourierSeries<const NC: usize> {
    lx: f64,
    ly: f64,
    terms: Vec<([f64; 2], [f64; NC], [f64; NC])>,
}

impl<const NC: usize> FourierSeries<NC> {
    pub fn random(seed: u64, stream: u64, max_mode: u32, amplitude: f64, lx: f64, ly: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let m = max_mode as i64;
        let mut terms = Vec::new();
        for my in -m..=m {
            for mx in -m..=m {
                // One representative of each +-k pair.
                if my < 0 || (my == 0 && mx <= 0) {
                    continue;
                }
                let decay = amplitude / (1.0 + (mx * mx + my * my) as f64);
                let mut a = [0.0; NC];
                let mut b = [0.0; NC];
                for c in 0..NC {
                    a[c] = decay * rng.gen_range(-1.0..1.0);
                    b[c] = decay * rng.gen_range(-1.0..1.0);
                }
                terms.push(([TAU * mx as f64 / lx, TAU * my as f64 / ly], a, b));
            }
        }
        FourierSeries { lx, ly, terms }
    }

    pub fn eval(&self, x: f64, y: f64) -> [f64; NC] {
        let mut out = [0.0; NC];
        for (k, a, b) in &self.terms {
            let (s, c) = (k[0] * x + k[1] * y).sin_cos();
            for i in 0..NC {
                out[i] += a[i] * c + b[i] * s;
            }
        }
        out
    }

    /// `(d_x, d_y)` of component `i`.
    pub fn gradient(&self, x: f64, y: f64, i: usize) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (k, a, b) in &self.terms {
            let (s, c) = (k[0] * x + k[1] * y).sin_cos();
            let d = -a[i] * s + b[i] * c;
            g[0] += k[0] * d;
            g[1] += k[1] * d;
        }
        g
    }

    pub fn lengths(&self) -> (f64, f64) {
        (self.lx, self.ly)
    }
}

/// Analytic order-parameter profile before fitting.
pub enum QProfile {
    Constant(QTensor),
    Series(FourierSeries<5>),
}

impl QProfile {
    pub fn eval(&self, x: f64, y: f64) -> QTensor {
        match self {
            QProfile::Constant(q) => *q,
            QProfile::Series(s) => QTensor::from_components(s.eval(x, y)),
        }
    }
}

/// Extremal eigenvalues of `profile` over `grid` nodes and a
/// `REFERENCE_SAMPLES^2` lattice of the same box.
fn extremal_eigenvalues(profile: &QProfile, grid: &Grid2D) -> (f64, f64) {
    let (mut l1, mut l3) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut visit = |x: f64, y: f64| {
        let e = eigenvalues(&profile.eval(x, y));
        l1 = l1.max(e.l1);
        l3 = l3.min(e.l3);
    };
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (x, y) = grid.coords(i, j);
            visit(x, y);
        }
    }
    let n = REFERENCE_SAMPLES;
    for j in 0..=n {
        for i in 0..=n {
            visit(grid.lx * i as f64 / n as f64, grid.ly * j as f64 / n as f64);
        }
    }
    (l1, l3)
}

/// Scale factor realising `fit` for `profile`.
pub fn fit_factor(
    profile: &QProfile,
    grid: &Grid2D,
    fit: Fit,
    interval: Option<&EigenInterval>,
) -> Result<f64> {
    match fit {
        Fit::None => Ok(1.0),
        Fit::Interval { margin } => {
            let Some(iv) = interval else {
                return domain("interval fit needs parameters with an eigenvalue interval");
            };
            let eps = margin * iv.width();
            let (l1, l3) = extremal_eigenvalues(profile, grid);
            let mut gamma: f64 = 1.0;
            if l1 > 0.0 {
                gamma = gamma.min((iv.hi - eps) / l1);
            }
            if l3 < 0.0 {
                gamma = gamma.min((iv.lo + eps) / l3);
            }
            Ok(gamma.max(0.0))
        }
        Fit::L1Max { value } => {
            let (l1, _) = extremal_eigenvalues(profile, grid);
            if !(l1 > 0.0) {
                return domain("cannot scale a field without positive eigenvalues");
            }
            Ok(value / l1)
        }
    }
}

/// Samples the initial order parameter on `grid`. Random fields draw from
/// stream 0 of `seed`.
pub fn initial_q(
    spec: &QInit,
    grid: &Grid2D,
    seed: u64,
    interval: Option<&EigenInterval>,
) -> Result<TensorField> {
    let (profile, fit) = match spec {
        QInit::Zero => (QProfile::Constant(QTensor::ZERO), Fit::None),
        QInit::Uniaxial { s, director } => {
            let n = *director;
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            if !(norm > 0.0) {
                return domain("uniaxial director must be nonzero");
            }
            let q = uniaxial(*s, [n[0] / norm, n[1] / norm, n[2] / norm])?;
            (QProfile::Constant(q), Fit::None)
        }
        QInit::RandomFourier {
            max_mode,
            amplitude,
            fit,
        } => (
            QProfile::Series(FourierSeries::random(seed, 0, *max_mode, *amplitude, grid.lx, grid.ly)),
            *fit,
        ),
    };
    let gamma = fit_factor(&profile, grid, fit, interval)?;
    Ok(TensorField::from_fn(*grid, |x, y| profile.eval(x, y) * gamma))
}

/// Samples the initial velocity on `grid`. Random fields draw from stream 1
/// of `seed`. Fields are divergence-free analytically; on Dirichlet grids
/// the caller still projects and zeroes the walls.
pub fn initial_u(spec: &UInit, grid: &Grid2D, seed: u64) -> VectorField {
    match spec {
        UInit::Zero => VectorField::zeros(*grid),
        UInit::TaylorGreen { amplitude } => {
            let (kx, ky) = (TAU / grid.lx, TAU / grid.ly);
            VectorField::from_fn(*grid, |x, y| {
                [
                    amplitude * (kx * x).sin() * (ky * y).cos(),
                    -amplitude * kx / ky * (kx * x).cos() * (ky * y).sin(),
                ]
            })
        }
        UInit::RandomFourier {
            max_mode,
            amplitude,
        } => {
            let psi = FourierSeries::<1>::random(seed, 1, *max_mode, *amplitude, grid.lx, grid.ly);
            VectorField::from_fn(*grid, |x, y| {
                let g = psi.gradient(x, y, 0);
                [g[1], -g[0]]
            })
        }
    }
}
