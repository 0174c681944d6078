//! Landau-de Gennes bulk potential and material constants.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::tensor::{invariants, QTensor};

/// Material constants of the co-rotational system.
///
/// `l` is the elastic constant, `a`, `b`, `c` the bulk coefficients, `nu`
/// the viscosity, `lambda` the fluid/elastic coupling and `gamma` the
/// relaxation rate of the order parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    #[serde(default = "one")]
    pub l: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub gamma: f64,
}

fn one() -> f64 {
    1.0
}

impl MaterialParams {
    /// Unit transport constants with the given bulk coefficients.
    pub fn with_bulk(a: f64, b: f64, c: f64) -> Self {
        MaterialParams {
            l: 1.0,
            a,
            b,
            c,
            nu: 1.0,
            lambda: 1.0,
            gamma: 1.0,
        }
    }

    /// Upper end of the admissible `a` range, `b^2 / (24 c)`.
    pub fn a_max(&self) -> f64 {
        self.b * self.b / (24.0 * self.c)
    }

    pub fn validate(&self, require_thm_regime: bool) -> Vec<String> {
        validate(self, require_thm_regime)
    }

    pub fn eigen_interval(&self) -> Result<EigenInterval> {
        eigen_interval(self)
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams::with_bulk(0.0, 1.0, 1.0)
    }
}

/// Closed interval `[lo, hi]` preserved by the flow; `hi = -2 lo`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenInterval {
    pub lo: f64,
    pub hi: f64,
}

impl EigenInterval {
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Lists every violated constraint; an empty list means the parameters are usable.
pub fn validate(p: &MaterialParams, require_thm_regime: bool) -> Vec<String> {
    let mut v = Vec::new();
    let positive = [
        ("l", p.l, "L > 0"),
        ("b", p.b, "b > 0"),
        ("c", p.c, "c > 0"),
        ("nu", p.nu, "nu > 0"),
        ("lambda", p.lambda, "lambda > 0"),
        ("gamma", p.gamma, "gamma > 0"),
    ];
    for (_, value, rule) in positive {
        if !(value > 0.0) || !value.is_finite() {
            v.push(format!("{rule} violated (got {value})"));
        }
    }
    if !p.a.is_finite() {
        v.push(format!("a must be finite (got {})", p.a));
    }
    if require_thm_regime && p.b > 0.0 && p.c > 0.0 {
        if p.a < 0.0 {
            v.push(format!("0 <= a violated (got a = {})", p.a));
        }
        let a_max = p.a_max();
        if p.a > a_max {
            v.push(format!("a <= b^2/24c violated (a = {}, b^2/24c = {a_max})", p.a));
        }
    }
    v
}

/// `b^2 - 24ac`, with rounding residue at `a = b^2/24c` flushed to zero.
pub fn discriminant(p: &MaterialParams) -> f64 {
    let d = p.b * p.b - 24.0 * p.a * p.c;
    if d < 0.0 && d > -1e-14 * p.b * p.b {
        0.0
    } else {
        d
    }
}

pub fn eigen_interval(p: &MaterialParams) -> Result<EigenInterval> {
    if !(p.b > 0.0 && p.c > 0.0) {
        return domain("eigen interval needs b > 0 and c > 0");
    }
    let disc = discriminant(p);
    if disc < 0.0 {
        return domain(format!("b^2 - 24ac = {disc} < 0"));
    }
    let root = p.b + disc.sqrt();
    let lo = -root / (12.0 * p.c);
    Ok(EigenInterval { lo, hi: -2.0 * lo })
}

/// `(a/2) tr Q^2 - (b/3) tr Q^3 + (c/4) (tr Q^2)^2`.
pub fn bulk_density(q: &QTensor, p: &MaterialParams) -> f64 {
    let inv = invariants(q);
    0.5 * p.a * inv.tr_q2 - p.b / 3.0 * inv.tr_q3 + 0.25 * p.c * inv.tr_q2 * inv.tr_q2
}

/// Reaction term `-a Q + b (Q^2 - tr(Q^2)/3 I) - c Q tr(Q^2)`, the negative
/// gradient of [`bulk_density`] on symmetric traceless tensors.
pub fn molecular_field(q: &QTensor, p: &MaterialParams) -> QTensor {
    let tr_q2 = q.norm_sq();
    *q * (-p.a - p.c * tr_q2) + q.square_traceless() * p.b
}

/// Scalar reaction for the uniaxial ansatz `Q = s (n n^T - I/3)`:
/// `molecular_field(Q) = g(s) (n n^T - I/3)` with
/// `g(s) = -a s + (b/3) s^2 - (2c/3) s^3`.
pub fn uniaxial_reaction(s: f64, p: &MaterialParams) -> f64 {
    -p.a * s + p.b / 3.0 * s * s - 2.0 * p.c / 3.0 * s * s * s
}

/// Positive order `s+ = (b + sqrt(b^2 - 24ac)) / (4c)` of the stationary uniaxial state.
pub fn stationary_order(p: &MaterialParams) -> Result<f64> {
    let disc = discriminant(p);
    if !(p.c > 0.0) || disc < 0.0 {
        return domain("stationary uniaxial order needs c > 0 and b^2 >= 24ac");
    }
    Ok((p.b + disc.sqrt()) / (4.0 * p.c))
}

/// Radius beyond which `-a|M|^2 + b tr(M^3) - c|M|^4 <= 0` on traceless
/// symmetric `M`, from the sharp bound `tr(M^3) <= |M|^3 / sqrt(6)`.
pub fn coercivity_radius(p: &MaterialParams) -> Result<f64> {
    if !(p.b > 0.0 && p.c > 0.0) {
        return domain("coercivity radius needs b > 0 and c > 0");
    }
    let bs = p.b / 6f64.sqrt();
    let disc = p.b * p.b / 6.0 - 4.0 * p.a * p.c;
    if disc <= 0.0 {
        return Ok(0.0);
    }
    Ok((bs + disc.sqrt()) / (2.0 * p.c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::uniaxial;

    fn unit() -> MaterialParams {
        MaterialParams::with_bulk(0.0, 1.0, 1.0)
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&unit(), true).is_empty());

        let p = MaterialParams::with_bulk(1.0, 1.0, 1.0);
        let v = validate(&p, true);
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("a <= b^2/24c"), "{v:?}");

        let p = MaterialParams::with_bulk(0.0, 1.0, -1.0);
        let v = validate(&p, false);
        assert!(v.iter().any(|s| s.contains("c > 0")), "{v:?}");

        // deep nematic regime is allowed outside the theorem checks
        let p = MaterialParams::with_bulk(-0.5, 1.0, 1.0);
        assert!(validate(&p, false).is_empty());
        assert!(!validate(&p, true).is_empty());
    }

    #[test]
    fn validate_lists_every_violation() {
        let p = MaterialParams {
            l: -1.0,
            a: 0.0,
            b: 0.0,
            c: -2.0,
            nu: 0.0,
            lambda: 1.0,
            gamma: 1.0,
        };
        assert_eq!(validate(&p, true).len(), 4);
    }

    #[test]
    fn interval_examples() {
        let i = eigen_interval(&unit()).unwrap();
        assert!((i.lo + 1.0 / 6.0).abs() < 1e-15);
        assert!((i.hi - 1.0 / 3.0).abs() < 1e-15);

        let i = eigen_interval(&MaterialParams::with_bulk(1.0 / 24.0, 1.0, 1.0)).unwrap();
        assert!((i.lo + 1.0 / 12.0).abs() < 1e-15);
        assert!((i.hi - 1.0 / 6.0).abs() < 1e-15);

        assert!(eigen_interval(&MaterialParams::with_bulk(1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn interval_endpoints_are_roots_of_the_step_quadratics() {
        for &(b, c) in &[(0.5, 0.5), (1.0, 2.0), (2.0, 0.5), (1.3, 0.7)] {
            for frac in [0.0, 0.5, 1.0] {
                let a = frac * b * b / (24.0 * c);
                let p = MaterialParams::with_bulk(a, b, c);
                let i = eigen_interval(&p).unwrap();
                assert_eq!(i.hi, -2.0 * i.lo);
                let upper = i.hi * i.hi - b / (3.0 * c) * i.hi + 2.0 * a / (3.0 * c);
                let lower = i.lo * i.lo + b / (6.0 * c) * i.lo + a / (6.0 * c);
                assert!(upper.abs() <= 1e-12, "{upper}");
                assert!(lower.abs() <= 1e-12, "{lower}");
                // hi is the larger root and lo the smaller one
                let other_hi = b / (3.0 * c) - i.hi;
                let other_lo = -b / (6.0 * c) - i.lo;
                assert!(other_hi <= i.hi + 1e-15);
                assert!(other_lo >= i.lo - 1e-15);
            }
        }
    }

    #[test]
    fn bulk_density_examples() {
        assert_eq!(bulk_density(&QTensor::ZERO, &unit()), 0.0);
        let q = uniaxial(1.0, [0.0, 0.0, 1.0]).unwrap();
        assert!((bulk_density(&q, &unit()) - 1.0 / 27.0).abs() < 1e-15);
        let q = QTensor::diag(2.0 / 3.0, -1.0 / 3.0);
        let p = MaterialParams::with_bulk(1.0, 0.0, 0.0);
        assert!((bulk_density(&q, &p) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn molecular_field_examples() {
        assert_eq!(molecular_field(&QTensor::ZERO, &unit()), QTensor::ZERO);

        for &(a, b, c) in &[(0.0, 1.0, 1.0), (0.02, 1.0, 1.0), (0.1, 2.0, 0.5)] {
            let p = MaterialParams::with_bulk(a, b, c);
            let s = stationary_order(&p).unwrap();
            let q = uniaxial(s, [0.36, 0.48, 0.8]).unwrap();
            assert!(molecular_field(&q, &p).norm() < 1e-15, "a={a}");
        }

        let p = MaterialParams::with_bulk(0.0, 3.0, 3.0);
        let n = [0.0, 0.6, 0.8];
        let h = molecular_field(&uniaxial(1.0, n).unwrap(), &p);
        let expected = -uniaxial(1.0, n).unwrap();
        assert!((h - expected).norm() < 1e-14);
    }

    #[test]
    fn uniaxial_reduction_matches_tensor_field() {
        let p = MaterialParams::with_bulk(0.03, 1.2, 0.8);
        let n = [0.48, 0.6, 0.64];
        let shape = uniaxial(1.0, n).unwrap();
        for s in [-0.7, -0.1, 0.0, 0.2, 0.55, 1.4] {
            let h = molecular_field(&uniaxial(s, n).unwrap(), &p);
            let expected = shape * uniaxial_reaction(s, &p);
            assert!((h - expected).norm() < 1e-14, "s = {s}");
        }
    }

    #[test]
    fn coercivity_examples() {
        let eta = coercivity_radius(&unit()).unwrap();
        assert!((eta - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            coercivity_radius(&MaterialParams::with_bulk(10.0, 1.0, 1.0)).unwrap(),
            0.0
        );
        assert!(coercivity_radius(&MaterialParams::with_bulk(0.0, -1.0, 1.0)).is_err());
    }

    #[test]
    fn coercivity_radius_is_sufficient_on_radial_sweep() {
        for &(a, b, c) in &[
            (0.0, 1.0, 1.0),
            (0.01, 1.0, 1.0),
            (-0.5, 2.0, 0.5),
            (0.02, 0.5, 2.0),
        ] {
            let p = MaterialParams::with_bulk(a, b, c);
            let eta0 = coercivity_radius(&p).unwrap();
            for k in [1.0, 1.5, 10.0] {
                let t = eta0 * k;
                let worst = -a * t * t + b / 6f64.sqrt() * t.powi(3) - c * t.powi(4);
                assert!(worst <= 1e-15 * (1.0 + t.powi(4)), "a={a} k={k}: {worst}");
            }
        }
    }
}
