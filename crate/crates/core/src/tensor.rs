//! Symmetric traceless 3x3 tensors.
//!
//! A [`QTensor`] stores five independent components; the remaining entries
//! are reconstructed as `q21 = q12`, `q31 = q13`, `q32 = q23` and
//! `q33 = -q11 - q22`, so symmetry and tracelessness hold by construction.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Lower and upper bounds on the eigenvalues of a Q-tensor obtained as the
/// second moment of a probability measure on the sphere.
pub const PHYSICAL_MIN: f64 = -1.0 / 3.0;
pub const PHYSICAL_MAX: f64 = 2.0 / 3.0;
const PHYSICAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QTensor {
    pub q11: f64,
    pub q12: f64,
    pub q13: f64,
    pub q22: f64,
    pub q23: f64,
}

impl QTensor {
    pub const ZERO: QTensor = QTensor {
        q11: 0.0,
        q12: 0.0,
        q13: 0.0,
        q22: 0.0,
        q23: 0.0,
    };

    pub const fn new(q11: f64, q12: f64, q13: f64, q22: f64, q23: f64) -> Self {
        QTensor {
            q11,
            q12,
            q13,
            q22,
            q23,
        }
    }

    /// Diagonal tensor `diag(d1, d2, -d1-d2)`.
    pub const fn diag(d1: f64, d2: f64) -> Self {
        QTensor::new(d1, 0.0, 0.0, d2, 0.0)
    }

    #[inline]
    pub fn q33(&self) -> f64 {
        -self.q11 - self.q22
    }

    pub fn matrix(&self) -> Mat3 {
        [
            [self.q11, self.q12, self.q13],
            [self.q12, self.q22, self.q23],
            [self.q13, self.q23, self.q33()],
        ]
    }

    /// Symmetric traceless part of an arbitrary 3x3 matrix.
    pub fn from_matrix(m: &Mat3) -> Self {
        let tr3 = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
        QTensor {
            q11: m[0][0] - tr3,
            q12: 0.5 * (m[0][1] + m[1][0]),
            q13: 0.5 * (m[0][2] + m[2][0]),
            q22: m[1][1] - tr3,
            q23: 0.5 * (m[1][2] + m[2][1]),
        }
    }

    #[inline]
    pub fn components(&self) -> [f64; 5] {
        [self.q11, self.q12, self.q13, self.q22, self.q23]
    }

    #[inline]
    pub fn from_components(c: [f64; 5]) -> Self {
        QTensor::new(c[0], c[1], c[2], c[3], c[4])
    }

    /// Frobenius inner product `tr(A B)`.
    #[inline]
    pub fn dot(&self, other: &QTensor) -> f64 {
        self.q11 * other.q11
            + self.q22 * other.q22
            + self.q33() * other.q33()
            + 2.0 * (self.q12 * other.q12 + self.q13 * other.q13 + self.q23 * other.q23)
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// Frobenius norm `sqrt(tr(Q^T Q))`.
    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `Q^2 - tr(Q^2)/3 I`, the traceless part of the square.
    pub fn square_traceless(&self) -> QTensor {
        let m = self.matrix();
        QTensor::from_matrix(&mat_mul(&m, &m))
    }

    /// `R Q R^T`.
    pub fn conjugate(&self, r: &Mat3) -> QTensor {
        let m = mat_mul(&mat_mul(r, &self.matrix()), &transpose(r));
        QTensor::from_matrix(&m)
    }

    pub fn invariants(&self) -> Invariants {
        invariants(self)
    }

    pub fn eigenvalues(&self) -> EigenTriple {
        eigenvalues(self)
    }

    pub fn is_physical(&self) -> bool {
        is_physical(self)
    }
}

impl Add for QTensor {
    type Output = QTensor;
    fn add(self, o: QTensor) -> QTensor {
        QTensor::new(
            self.q11 + o.q11,
            self.q12 + o.q12,
            self.q13 + o.q13,
            self.q22 + o.q22,
            self.q23 + o.q23,
        )
    }
}

impl Sub for QTensor {
    type Output = QTensor;
    fn sub(self, o: QTensor) -> QTensor {
        QTensor::new(
            self.q11 - o.q11,
            self.q12 - o.q12,
            self.q13 - o.q13,
            self.q22 - o.q22,
            self.q23 - o.q23,
        )
    }
}

impl Mul<f64> for QTensor {
    type Output = QTensor;
    fn mul(self, s: f64) -> QTensor {
        QTensor::new(
            self.q11 * s,
            self.q12 * s,
            self.q13 * s,
            self.q22 * s,
            self.q23 * s,
        )
    }
}

impl Mul<QTensor> for f64 {
    type Output = QTensor;
    fn mul(self, q: QTensor) -> QTensor {
        q * self
    }
}

impl Neg for QTensor {
    type Output = QTensor;
    fn neg(self) -> QTensor {
        self * -1.0
    }
}

impl AddAssign for QTensor {
    fn add_assign(&mut self, o: QTensor) {
        *self = *self + o;
    }
}

impl SubAssign for QTensor {
    fn sub_assign(&mut self, o: QTensor) {
        *self = *self - o;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Invariants {
    pub tr_q2: f64,
    pub tr_q3: f64,
    pub det: f64,
}

/// Ordered eigenvalues, `l1 >= l2 >= l3`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EigenTriple {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl EigenTriple {
    pub fn as_array(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn max(&self) -> f64 {
        self.l1
    }

    pub fn min(&self) -> f64 {
        self.l3
    }
}

/// Antisymmetric 3x3 tensor with `w_ij = -w_ji`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SkewTensor {
    pub w12: f64,
    pub w13: f64,
    pub w23: f64,
}

impl SkewTensor {
    pub const ZERO: SkewTensor = SkewTensor {
        w12: 0.0,
        w13: 0.0,
        w23: 0.0,
    };

    pub const fn new(w12: f64, w13: f64, w23: f64) -> Self {
        SkewTensor { w12, w13, w23 }
    }

    pub fn matrix(&self) -> Mat3 {
        [
            [0.0, self.w12, self.w13],
            [-self.w12, 0.0, self.w23],
            [-self.w13, -self.w23, 0.0],
        ]
    }

    /// Rotation `exp(t W)` by the Rodrigues formula.
    pub fn exp(&self, t: f64) -> Mat3 {
        // W = [k]_x with k = (-w23, w13, -w12)
        let theta = t * (self.w12 * self.w12 + self.w13 * self.w13 + self.w23 * self.w23).sqrt();
        if theta == 0.0 {
            return IDENTITY;
        }
        let w = self.matrix();
        let w2 = mat_mul(&w, &w);
        let (s1, s2) = if theta.abs() < 1e-4 {
            let th2 = theta * theta;
            (t * (1.0 - th2 / 6.0), t * t * (0.5 - th2 / 24.0))
        } else {
            let scale = theta / t;
            (
                theta.sin() / scale,
                (1.0 - theta.cos()) / (scale * scale),
            )
        };
        let mut r = IDENTITY;
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] += s1 * w[i][j] + s2 * w2[i][j];
            }
        }
        r
    }
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// `s (n n^T - I/3)` for a unit vector `n`.
pub fn uniaxial(s: f64, n: [f64; 3]) -> Result<QTensor> {
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !((len - 1.0).abs() <= 1e-12) {
        return domain(format!("director must be a unit vector, |n| = {len}"));
    }
    let third = 1.0 / 3.0;
    Ok(QTensor::new(
        s * (n[0] * n[0] - third),
        s * n[0] * n[1],
        s * n[0] * n[2],
        s * (n[1] * n[1] - third),
        s * n[1] * n[2],
    ))
}

pub fn invariants(q: &QTensor) -> Invariants {
    let (a, b, c, d, e, f) = (q.q11, q.q12, q.q13, q.q22, q.q23, q.q33());
    let tr_q2 = a * a + d * d + f * f + 2.0 * (b * b + c * c + e * e);
    let det = a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c);
    // tr(Q^3) = sum_ijk Q_ij Q_jk Q_ki
    let m = q.matrix();
    let m2 = mat_mul(&m, &m);
    let mut tr_q3 = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            tr_q3 += m2[i][k] * m[k][i];
        }
    }
    Invariants { tr_q2, tr_q3, det }
}

/// Closed-form ordered eigenvalues.
///
/// Roots of `x^3 - (tr Q^2 / 2) x - det Q` via the trigonometric formula.
/// Near a repeated root the simple eigenvalue is kept and the pair is
/// recomputed from the 2x2 block orthogonal to its eigenvector, since the
/// arccosine loses half the digits there.
pub fn eigenvalues(q: &QTensor) -> EigenTriple {
    let inv = invariants(q);
    if inv.tr_q2 < 1e-300 {
        return EigenTriple::default();
    }
    let p = (inv.tr_q2 / 6.0).sqrt();
    let r = (inv.det / (2.0 * p * p * p)).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l1 = 2.0 * p * phi.cos();
    let l3 = 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let l2 = -l1 - l3;

    let triple = if r > 1.0 - 1e-3 {
        deflate(q, l1).map(|(pair_hi, pair_lo, simple)| EigenTriple {
            l1: simple,
            l2: pair_hi,
            l3: pair_lo,
        })
    } else if r < -1.0 + 1e-3 {
        deflate(q, l3).map(|(pair_hi, pair_lo, simple)| EigenTriple {
            l1: pair_hi,
            l2: pair_lo,
            l3: simple,
        })
    } else {
        None
    };
    let mut t = triple.unwrap_or(EigenTriple { l1, l2, l3 });
    // the trig formula already yields l1 >= l2 >= l3; the deflated branch
    // can swap neighbours by an ulp
    let mut v = t.as_array();
    v.sort_by(|a, b| b.total_cmp(a));
    t = EigenTriple {
        l1: v[0],
        l2: v[1],
        l3: v[2],
    };
    t
}

/// Returns (larger, smaller, simple) for a well separated eigenvalue `mu`.
fn deflate(q: &QTensor, mu: f64) -> Option<(f64, f64, f64)> {
    let m = q.matrix();
    let rows = [
        [m[0][0] - mu, m[0][1], m[0][2]],
        [m[1][0], m[1][1] - mu, m[1][2]],
        [m[2][0], m[2][1], m[2][2] - mu],
    ];
    let mut best = [0.0; 3];
    let mut best_n = 0.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = cross(&rows[i], &rows[j]);
        let n = dot3(&c, &c);
        if n > best_n {
            best_n = n;
            best = c;
        }
    }
    if !(best_n > 0.0) || !best_n.is_finite() {
        return None;
    }
    let v = scale3(&best, 1.0 / best_n.sqrt());
    let axis = {
        let a = [v[0].abs(), v[1].abs(), v[2].abs()];
        if a[0] <= a[1] && a[0] <= a[2] {
            [1.0, 0.0, 0.0]
        } else if a[1] <= a[2] {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        }
    };
    let e = cross(&v, &axis);
    let e = scale3(&e, 1.0 / dot3(&e, &e).sqrt());
    let f = cross(&v, &e);
    let qe = mat_vec(&m, &e);
    let qf = mat_vec(&m, &f);
    let m11 = dot3(&e, &qe);
    let m22 = dot3(&f, &qf);
    let m12 = dot3(&e, &qf);
    let mean = 0.5 * (m11 + m22);
    let rad = (0.25 * (m11 - m22) * (m11 - m22) + m12 * m12).sqrt();
    Some((mean + rad, mean - rad, -(m11 + m22)))
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale3(a: &[f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn mat_vec(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [dot3(&m[0], v), dot3(&m[1], v), dot3(&m[2], v)]
}

/// `w Q - Q w`.
pub fn corotation(w: &SkewTensor, q: &QTensor) -> QTensor {
    let wm = w.matrix();
    let qm = q.matrix();
    let a = mat_mul(&wm, &qm);
    let b = mat_mul(&qm, &wm);
    // a - b is symmetric and traceless for antisymmetric w, symmetric q
    QTensor::new(
        a[0][0] - b[0][0],
        a[0][1] - b[0][1],
        a[0][2] - b[0][2],
        a[1][1] - b[1][1],
        a[1][2] - b[1][2],
    )
}

pub fn is_physical(q: &QTensor) -> bool {
    let e = eigenvalues(q);
    e.l3 >= PHYSICAL_MIN - PHYSICAL_TOL && e.l1 <= PHYSICAL_MAX + PHYSICAL_TOL
}
