//! Brute-force sweeps over the scalar inequalities behind the eigenvalue
//! bounds.
//!
//! Every check is phrased as `margin >= 0` in eigenvalue coordinates
//! `l1 >= l2 >= l3`, `l1 + l2 + l3 = 0`, `S = l1^2 + l2^2 + l3^2`. A report
//! keeps the smallest normalised margin seen over the sweep together with
//! the sample that produced it.
//!
//! Sampling is a deterministic stratified grid (denser towards the
//! interval endpoint, where margins vanish) followed by a seeded random
//! fill. Random draws are generated per fixed-size chunk from a
//! `ChaCha8` stream keyed by the chunk index, so the report does not depend
//! on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bulk::{discriminant, eigen_interval, validate, EigenInterval, MaterialParams};
use crate::error::{domain, Error, Result};

/// `(sqrt(5) - 1) / 2`, the root of `x^2 + x - 1` separating cases 2 and 3.
pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Normalised margins below this fail.
pub const MARGIN_TOL: f64 = 1e-12;

const CHUNK: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSample {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub s: f64,
}

impl EigenSample {
    /// Sample with `l1 = -l2 - l3`.
    pub fn from_lower(l2: f64, l3: f64) -> Self {
        Self::from_triple(-l2 - l3, l2, l3)
    }

    /// Sample with `l3 = -l1 - l2`.
    pub fn from_upper(l1: f64, l2: f64) -> Self {
        Self::from_triple(l1, l2, -l1 - l2)
    }

    fn from_triple(l1: f64, l2: f64, l3: f64) -> Self {
        EigenSample {
            l1,
            l2,
            l3,
            s: l1 * l1 + l2 * l2 + l3 * l3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseId {
    Case1,
    Case2,
    Case3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Step1,
    Claim,
    CaseBounds,
    Case3Reduction,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifierReport {
    pub region: Region,
    pub samples_checked: usize,
    /// Smallest margin divided by the normalisation scale.
    pub worst_margin: f64,
    /// Name of the sub-check attaining `worst_margin`.
    pub worst_check: &'static str,
    pub worst_point: EigenSample,
    pub scale: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub n_samples: usize,
    pub seed: u64,
    /// The extremal eigenvalue is sampled in `(K * endpoint, endpoint)`.
    pub box_factor: f64,
}

impl SweepOptions {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        SweepOptions {
            n_samples,
            seed,
            box_factor: 20.0,
        }
    }
}

/// `max(1, b lo^2, c |lo|^3, b^3 / c^2)`: the magnitude of the polynomial
/// terms, so rounding in large-`b/c` regimes is not mistaken for failure.
pub fn margin_scale(p: &MaterialParams, interval: &EigenInterval) -> f64 {
    let lo = interval.lo.abs();
    1f64.max(p.b * lo * lo)
        .max(p.c * lo * lo * lo)
        .max(p.b.powi(3) / (p.c * p.c))
}

/// Case split of the claim at the negative minimum eigenvalue.
pub fn classify_case(l2: f64, l3: f64) -> Result<CaseId> {
    if !(l3 < 0.0) {
        return domain(format!("classify_case needs l3 < 0, got {l3}"));
    }
    // wedge: l3 <= l2 <= l1 = -l2 - l3
    if !(l2 >= l3 && l2 <= -0.5 * l3) {
        return domain(format!("(l2, l3) = ({l2}, {l3}) is not an ordered traceless pair"));
    }
    Ok(if l2 >= 0.0 {
        CaseId::Case1
    } else if l2 >= GOLDEN * l3 {
        CaseId::Case2
    } else {
        CaseId::Case3
    })
}

fn theorem_interval(p: &MaterialParams) -> Result<EigenInterval> {
    let v = validate(p, true);
    if !v.is_empty() {
        return Err(Error::Domain(v.join("; ")));
    }
    eigen_interval(p)
}

#[derive(Clone, Copy)]
struct Worst {
    margin: f64,
    index: usize,
    check: &'static str,
    point: EigenSample,
}

impl Worst {
    fn none() -> Self {
        Worst {
            margin: f64::INFINITY,
            index: usize::MAX,
            check: "",
            point: EigenSample::from_lower(0.0, 0.0),
        }
    }

    fn merge(self, other: Worst) -> Worst {
        // NaN margins are treated as failures
        let key = |w: &Worst| if w.margin.is_nan() { f64::NEG_INFINITY } else { w.margin };
        match key(&self).total_cmp(&key(&other)) {
            std::cmp::Ordering::Less => self,
            std::cmp::Ordering::Greater => other,
            std::cmp::Ordering::Equal => {
                if self.index <= other.index {
                    self
                } else {
                    other
                }
            }
        }
    }
}

/// Drives a sweep. `eval(u, t, v)` maps unit-box coordinates to a sample and
/// returns `None` if the sample falls outside the region, otherwise the
/// sample and its list of (check name, raw margin).
fn sweep<F>(opts: &SweepOptions, scale: f64, eval: F) -> (usize, Worst)
where
    F: Fn(f64, f64, f64) -> Option<(EigenSample, Vec<(&'static str, f64)>)> + Sync,
{
    let n = opts.n_samples;
    // stratified grid on about half of the budget
    let m = (((n / 2) as f64).sqrt() as usize).max(2);
    let n_grid = (m * m).min(n);
    let n_chunks = n.div_ceil(CHUNK);
    let results: Vec<(usize, Worst)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(chunk as u64);
            let mut count = 0;
            let mut worst = Worst::none();
            for k in start..end {
                let (u, t, v) = if k < n_grid {
                    let (i, j) = (k / m, k % m);
                    let u = ((i + 1) as f64 / m as f64).powi(2);
                    let t = j as f64 / (m - 1) as f64;
                    // second abscissa for pairwise checks: neighbouring grid line
                    let v = ((j + 1).min(m - 1)) as f64 / (m - 1) as f64;
                    (u, t, v)
                } else {
                    (1.0 - rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>())
                };
                if let Some((point, checks)) = eval(u, t, v) {
                    count += 1;
                    for (name, margin) in checks {
                        worst = worst.merge(Worst {
                            margin: margin / scale,
                            index: k,
                            check: name,
                            point,
                        });
                    }
                }
            }
            (count, worst)
        })
        .collect();
    results
        .into_iter()
        .fold((0, Worst::none()), |(c, w), (c2, w2)| (c + c2, w.merge(w2)))
}

fn report(region: Region, scale: f64, (count, w): (usize, Worst)) -> VerifierReport {
    VerifierReport {
        region,
        samples_checked: count,
        worst_margin: w.margin,
        worst_check: w.check,
        worst_point: w.point,
        scale,
        pass: count > 0 && w.margin >= -MARGIN_TOL,
    }
}

/// Right-hand side of the scalar equation for `<Q v, v>` at an eigenvector
/// with eigenvalue `x`, without the Laplacian:
/// `-x (a + c S) + b (x^2 - S/3)`.
pub fn reaction_along(x: f64, s: f64, p: &MaterialParams) -> f64 {
    -x * (p.a + p.c * s) + p.b * (x * x - s / 3.0)
}

/// `l1^2 - (b/3c) l1 + 2a/(3c)`; its larger root is the upper endpoint.
pub fn upper_quadratic(l1: f64, p: &MaterialParams) -> f64 {
    l1 * l1 - p.b / (3.0 * p.c) * l1 + 2.0 * p.a / (3.0 * p.c)
}

/// `l3^2 + (b/6c) l3 + a/(6c)`; its smaller root is the lower endpoint.
pub fn lower_quadratic(l3: f64, p: &MaterialParams) -> f64 {
    l3 * l3 + p.b / (6.0 * p.c) * l3 + p.a / (6.0 * p.c)
}

/// Lower bound claimed for the time derivative at the minimum:
/// `-(3c/2) l3 (l3^2 + (b/6c) l3 + a/(6c))`.
pub fn claim_target(l3: f64, p: &MaterialParams) -> f64 {
    -1.5 * p.c * l3 * lower_quadratic(l3, p)
}

/// `l2^2 + l2 l3 - l3^2`.
pub fn mu(l2: f64, l3: f64) -> f64 {
    l2 * l2 + l2 * l3 - l3 * l3
}

/// Upper bound: over samples with `l1 > hi`, checks `S >= (3/2) l1^2`,
/// positivity of the upper quadratic and the resulting chain
/// `reaction <= -(3c/2) l1 (quadratic) <= 0`.
pub fn verify_step1(p: &MaterialParams, opts: &SweepOptions) -> Result<VerifierReport> {
    let interval = theorem_interval(p)?;
    let scale = margin_scale(p, &interval);
    let hi = interval.hi;
    let k = opts.box_factor;
    let p = *p;
    let out = sweep(opts, scale, move |u, t, _| {
        let l1 = hi * (1.0 + (k - 1.0) * u);
        if !(l1 > hi) {
            return None;
        }
        let l2 = -0.5 * l1 + t * 1.5 * l1;
        let smp = EigenSample::from_upper(l1, l2);
        let quad = upper_quadratic(l1, &p);
        let bound = -1.5 * p.c * l1 * quad;
        let rhs = reaction_along(l1, smp.s, &p);
        Some((
            smp,
            vec![
                ("S >= 3/2 l1^2", smp.s - 1.5 * l1 * l1),
                ("upper quadratic > 0", quad),
                ("reaction <= -(3c/2) l1 q(l1)", bound - rhs),
                ("-(3c/2) l1 q(l1) < 0", -bound),
            ],
        ))
    });
    Ok(report(Region::Step1, scale, out))
}

/// Lower bound claim: over samples with `l3 < lo`, checks
/// `reaction(l3) >= -(3c/2) l3 (l3^2 + (b/6c) l3 + a/(6c))` and that this
/// target is positive.
pub fn verify_claim(p: &MaterialParams, opts: &SweepOptions) -> Result<VerifierReport> {
    let interval = theorem_interval(p)?;
    let scale = margin_scale(p, &interval);
    let lo = interval.lo;
    let k = opts.box_factor;
    let p = *p;
    let out = sweep(opts, scale, move |u, t, _| {
        let l3 = lo * (1.0 + (k - 1.0) * u);
        if !(l3 < lo) {
            return None;
        }
        let l2 = l3 - t * 1.5 * l3;
        let smp = EigenSample::from_lower(l2, l3);
        let r = reaction_along(l3, smp.s, &p);
        let target = claim_target(l3, &p);
        Some((
            smp,
            vec![("reaction >= claim target", r - target), ("claim target > 0", target)],
        ))
    });
    Ok(report(Region::Claim, scale, out))
}

/// Parameter-free trace bounds per case, on `l3 in [-1, 0)`:
/// case 1 `3/2 l3^2 <= S <= 2 l3^2`, case 2 `2 l3^2 < S <= 4 l3^2`,
/// case 3 `4 l3^2 < S`; in all cases `|l2| <= |l3|`.
pub fn verify_case_bounds(opts: &SweepOptions) -> VerifierReport {
    let scale = 1.0;
    let out = sweep(opts, scale, |u, t, v| {
        let l3 = -u;
        // v picks one of the case boundaries every few samples
        let l2 = match (v * 8.0) as usize {
            0 => 0.0,
            1 => GOLDEN * l3,
            _ => l3 - t * 1.5 * l3,
        };
        let case = classify_case(l2, l3).ok()?;
        let smp = EigenSample::from_lower(l2, l3);
        let q = l3 * l3;
        let mut checks = vec![("|l2| <= |l3|", q - l2 * l2)];
        match case {
            CaseId::Case1 => {
                checks.push(("case1: S >= 3/2 l3^2", smp.s - 1.5 * q));
                checks.push(("case1: S <= 2 l3^2", 2.0 * q - smp.s));
            }
            CaseId::Case2 => {
                checks.push(("case2: S > 2 l3^2", smp.s - 2.0 * q));
                checks.push(("case2: S <= 4 l3^2", 4.0 * q - smp.s));
            }
            CaseId::Case3 => {
                checks.push(("case3: S > 4 l3^2", smp.s - 4.0 * q));
            }
        }
        Some((smp, checks))
    });
    report(Region::CaseBounds, scale, out)
}

/// Case-3 reduction on samples with `l3 < lo`: bounds on `mu`, on the
/// bracket `B = 1 + (b/3c)/l3`, the reduced inequality
/// `B mu + l3^2 + a/(3c) >= 0`, and monotonicity of `mu` in `l2`.
pub fn verify_case3_reduction(p: &MaterialParams, opts: &SweepOptions) -> Result<VerifierReport> {
    let interval = theorem_interval(p)?;
    let scale = margin_scale(p, &interval);
    let lo = interval.lo;
    let k = opts.box_factor;
    let p = *p;
    let disc = discriminant(&p).max(0.0).sqrt();
    let b_min = 1.0 - 4.0 * p.b / (p.b + disc);
    let out = sweep(opts, scale, move |u, t, v| {
        let l3 = lo * (1.0 + (k - 1.0) * u);
        if !(l3 < lo) {
            return None;
        }
        let span = (GOLDEN - 1.0) * l3;
        let l2 = l3 + t * span;
        if classify_case(l2, l3).ok()? != CaseId::Case3 {
            return None;
        }
        let smp = EigenSample::from_lower(l2, l3);
        let m = mu(l2, l3);
        let bracket = 1.0 + p.b / (3.0 * p.c) / l3;
        let reduced = bracket * m + l3 * l3 + p.a / (3.0 * p.c);
        // pairwise monotonicity against a second point at the same l3
        let l2b = l3 + v * span;
        let (lo2, hi2) = if l2b <= l2 { (l2b, l2) } else { (l2, l2b) };
        Some((
            smp,
            vec![
                ("mu > 0", m),
                ("mu <= l3^2", l3 * l3 - m),
                ("bracket >= 1 - 4b/(b + sqrt(b^2-24ac))", bracket - b_min),
                ("bracket <= 1", 1.0 - bracket),
                ("1 - 4b/(b + sqrt(b^2-24ac)) >= -3", b_min + 3.0),
                ("B mu + l3^2 + a/(3c) >= 0", reduced),
                ("mu non-increasing in l2", mu(lo2, l3) - mu(hi2, l3)),
            ],
        ))
    });
    Ok(report(Region::Case3Reduction, scale, out))
}

/// Runs all four regions.
pub fn verify_all(p: &MaterialParams, opts: &SweepOptions) -> Result<Vec<VerifierReport>> {
    Ok(vec![
        verify_step1(p, opts)?,
        verify_claim(p, opts)?,
        verify_case_bounds(opts),
        verify_case3_reduction(p, opts)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> MaterialParams {
        MaterialParams::with_bulk(0.0, 1.0, 1.0)
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_case(0.5, -1.0).unwrap(), CaseId::Case1);
        assert_eq!(classify_case(-0.5, -1.0).unwrap(), CaseId::Case2);
        assert_eq!(classify_case(-0.8, -1.0).unwrap(), CaseId::Case3);
        assert!(classify_case(0.1, 0.0).is_err());
        assert!(classify_case(0.6, -1.0).is_err());
        assert!(classify_case(-1.1, -1.0).is_err());
    }

    #[test]
    fn golden_ratio_constant() {
        assert_eq!(GOLDEN, (5f64.sqrt() - 1.0) / 2.0);
        assert!((GOLDEN * GOLDEN + GOLDEN - 1.0).abs() < 1e-16);
    }

    #[test]
    fn step1_arithmetic_example() {
        let p = unit();
        let q = upper_quadratic(0.4, &p);
        assert!((q - (0.16 - 0.4 / 3.0)).abs() < 1e-16);
        assert!((q - 0.026_666_666_666_666_67).abs() < 1e-15);
        assert!((-1.5 * 0.4 * q + 0.016).abs() < 1e-15);
        let hi = eigen_interval(&p).unwrap().hi;
        assert!(upper_quadratic(hi, &p).abs() < 1e-16);
    }

    #[test]
    fn claim_arithmetic_example() {
        let p = unit();
        let s = EigenSample::from_lower(0.1, -0.3);
        assert!((s.l1 - 0.2).abs() < 1e-16);
        assert!((s.s - 0.14).abs() < 1e-15);
        let r = reaction_along(-0.3, s.s, &p);
        assert!((r - 0.085_333_333_333_333_33).abs() < 1e-15, "{r}");
        let t = claim_target(-0.3, &p);
        assert!((t - 0.018).abs() < 1e-15, "{t}");
        assert!(r >= t);
        let lo = eigen_interval(&p).unwrap().lo;
        assert!(claim_target(lo, &p).abs() < 1e-16);
    }

    #[test]
    fn case_bound_arithmetic_examples() {
        let s = EigenSample::from_lower(0.1, -0.3);
        assert!(s.s >= 1.5 * 0.09 - 1e-16 && s.s <= 2.0 * 0.09);
        let s = EigenSample::from_lower(0.0, -0.7);
        assert!((s.s - 2.0 * 0.49).abs() < 1e-15);
        let l3 = -0.7;
        let s = EigenSample::from_lower(GOLDEN * l3, l3);
        assert!((s.s - 4.0 * l3 * l3).abs() < 1e-15);
        assert!(mu(GOLDEN * l3, l3).abs() < 1e-16);
    }

    #[test]
    fn case3_arithmetic_examples() {
        let m = mu(-0.18, -0.2);
        assert!((m - 0.0284).abs() < 1e-15);
        assert!(m > 0.0 && m <= 0.04);
        assert!((mu(-0.2, -0.2) - 0.04).abs() < 1e-16);
        let bracket: f64 = 1.0 + 1.0 / 3.0 / -0.2;
        assert!((bracket + 2.0 / 3.0).abs() < 1e-15);
        assert!((-3.0..=1.0).contains(&bracket));
    }

    #[test]
    fn regime_violation_is_an_error() {
        let p = MaterialParams::with_bulk(1.0, 1.0, 1.0);
        let o = SweepOptions::new(100, 0);
        assert!(verify_step1(&p, &o).is_err());
        assert!(verify_claim(&p, &o).is_err());
        assert!(verify_case3_reduction(&p, &o).is_err());
    }

    #[test]
    fn sweeps_pass_at_unit_params() {
        let o = SweepOptions::new(50_000, 11);
        for r in verify_all(&unit(), &o).unwrap() {
            assert!(r.pass, "{r:?}");
            assert!(r.samples_checked > 10_000, "{r:?}");
        }
    }

    #[test]
    fn sweep_is_thread_count_independent() {
        let o = SweepOptions::new(3 * CHUNK + 17, 5);
        let a = verify_claim(&unit(), &o).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| verify_claim(&unit(), &o).unwrap());
        assert_eq!(a.worst_margin.to_bits(), b.worst_margin.to_bits());
        assert_eq!(a.worst_point, b.worst_point);
        assert_eq!(a.samples_checked, b.samples_checked);
    }

    #[test]
    fn claim_margin_tightens_at_uniaxial_corner() {
        let p = unit();
        let lo = eigen_interval(&p).unwrap().lo;
        let mut prev = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-6] {
            let l3 = lo * (1.0 + eps);
            let s = EigenSample::from_lower(l3, l3);
            let m = reaction_along(l3, s.s, &p) - claim_target(l3, &p);
            assert!(m >= 0.0);
            assert!(m < prev);
            prev = m;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn a_broken_inequality_is_caught() {
        // with the wrong sign on b the upper bound no longer holds
        let p = unit();
        let o = SweepOptions::new(10_000, 1);
        let out = sweep(&o, 1.0, |u, t, _| {
            let l1 = 0.34 + u;
            let smp = EigenSample::from_upper(l1, -0.5 * l1 + 1.5 * t * l1);
            let bad = -1.5 * p.c * l1 * (l1 * l1 + p.b / (3.0 * p.c) * l1);
            Some((smp, vec![("bad", bad - reaction_along(l1, smp.s, &p))]))
        });
        let r = report(Region::Step1, 1.0, out);
        assert!(!r.pass);
    }
}
