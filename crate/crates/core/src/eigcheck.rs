//! On-demand property sweeps for the eigenvalue solver.
//!
//! Used by the `eig-check` subcommand and the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::tensor::{eigenvalues, invariants, Mat3, QTensor};

pub fn random_qtensor<R: Rng>(rng: &mut R, scale: f64) -> QTensor {
    let mut c = [0.0; 5];
    for x in c.iter_mut() {
        *x = scale * rng.gen_range(-1.0..1.0);
    }
    QTensor::from_components(c)
}

/// Uniformly distributed rotation from a random unit quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Mat3 {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
        b * (tau * u3).cos(),
    );
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
        ],
        [
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
        ],
        [
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Worst observed value of each check, each normalised so that `<= 1` passes.
#[derive(Clone, Debug, Serialize)]
pub struct EigCheckReport {
    pub samples: usize,
    /// max of residual / (1e-10 max(1, |Q|^3))
    pub char_poly_residual: f64,
    /// max of |l1+l2+l3| / (1e-12 max(1, |Q|))
    pub zero_sum: f64,
    /// max of |l_i(A) - l_i(B)| / |A - B|_F
    pub weyl_ratio: f64,
    /// max of |tr Q^3 - 3 det Q| / (1e-12 max(1, |Q|^3))
    pub trace_det: f64,
    /// max of |l_i(R^T Q R) - l_i(Q)| / 1e-10
    pub rotation: f64,
    pub pass: bool,
}

pub fn run_eig_checks(samples: usize, seed: u64) -> EigCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut char_poly: f64 = 0.0;
    let mut zero_sum: f64 = 0.0;
    let mut weyl: f64 = 0.0;
    let mut trace_det: f64 = 0.0;
    let mut rotation: f64 = 0.0;
    let scales = [1e-3, 0.1, 1.0, 10.0];
    let gaps = [1.0, 1e-3, 1e-7];
    for k in 0..samples {
        let scale = scales[k % scales.len()];
        let q = random_qtensor(&mut rng, scale);
        let nq = q.norm();
        let inv = invariants(&q);
        let e = eigenvalues(&q);
        for l in e.as_array() {
            let res = l * l * l - 0.5 * inv.tr_q2 * l - inv.det;
            char_poly = char_poly.max(res.abs() / (1e-10 * nq.powi(3).max(1.0)));
        }
        zero_sum = zero_sum.max((e.l1 + e.l2 + e.l3).abs() / (1e-12 * nq.max(1.0)));
        trace_det =
            trace_det.max((inv.tr_q3 - 3.0 * inv.det).abs() / (1e-12 * nq.powi(3).max(1.0)));

        let d = random_qtensor(&mut rng, scale * gaps[k % gaps.len()]);
        let b = q + d;
        let eb = eigenvalues(&b);
        let dist = d.norm();
        if dist > 0.0 {
            for (x, y) in e.as_array().iter().zip(eb.as_array()) {
                weyl = weyl.max((x - y).abs() / dist);
            }
        }

        let r = random_rotation(&mut rng);
        let er = eigenvalues(&q.conjugate(&r));
        for (x, y) in e.as_array().iter().zip(er.as_array()) {
            rotation = rotation.max((x - y).abs() / 1e-10);
        }
    }
    let pass = char_poly <= 1.0
        && zero_sum <= 1.0
        && weyl <= 1.0 + 1e-9
        && trace_det <= 1.0
        && rotation <= 1.0;
    EigCheckReport {
        samples,
        char_poly_residual: char_poly,
        zero_sum,
        weyl_ratio: weyl,
        trace_det,
        rotation,
        pass,
    }
}
