use crate::error::{domain, Error, Result};
use crate::tensor::SkewTensor;

use super::field::{CellValue, Field, ScalarField, SkewField, StressField, VectorField};
use super::ops::{Operators, PlaneOp};

fn check<T: CellValue>(ops: &dyn Operators, f: &Field<T>) -> Result<()> {
    if f.grid() != ops.grid() {
        return Err(Error::GridMismatch(format!(
            "field on {:?}, operators on {:?}",
            f.grid(),
            ops.grid()
        )));
    }
    Ok(())
}

/// Applies every operator in `list` to every component of `f`.
pub fn apply_many<T: CellValue>(ops: &dyn Operators, f: &Field<T>, list: &[PlaneOp]) -> Vec<Field<T>> {
    let planes = f.planes();
    let refs: Vec<&[f64]> = planes.iter().map(|p| p.as_slice()).collect();
    ops.apply_batch(&refs, list)
        .into_iter()
        .map(|out| Field::from_planes(*f.grid(), &out))
        .collect()
}

/// Applies one plane operator to every component.
pub fn per_plane<T: CellValue>(ops: &dyn Operators, f: &Field<T>, op: PlaneOp) -> Field<T> {
    apply_many(ops, f, &[op]).pop().expect("one operator")
}

pub fn grad(ops: &dyn Operators, f: &ScalarField) -> Result<VectorField> {
    check(ops, f)?;
    let (dx, dy) = partials(ops, f)?;
    let planes = vec![dx.plane(0), dy.plane(0)];
    Ok(Field::from_planes(*f.grid(), &planes))
}

/// Componentwise partial derivatives `(d_x F, d_y F)`.
pub fn partials<T: CellValue>(ops: &dyn Operators, f: &Field<T>) -> Result<(Field<T>, Field<T>)> {
    check(ops, f)?;
    let mut v = apply_many(ops, f, &[PlaneOp::Dx, PlaneOp::Dy]);
    let dy = v.pop().expect("dy");
    let dx = v.pop().expect("dx");
    Ok((dx, dy))
}

/// First partials and Laplacian of one field, sharing transforms.
pub struct Derivatives<T: CellValue> {
    pub dx: Field<T>,
    pub dy: Field<T>,
    pub lap: Field<T>,
}

pub fn derivatives<T: CellValue>(ops: &dyn Operators, f: &Field<T>) -> Result<Derivatives<T>> {
    check(ops, f)?;
    let mut v = apply_many(ops, f, &[PlaneOp::Dx, PlaneOp::Dy, PlaneOp::Laplacian]);
    let lap = v.pop().expect("lap");
    let dy = v.pop().expect("dy");
    let dx = v.pop().expect("dx");
    Ok(Derivatives { dx, dy, lap })
}

pub fn laplacian<T: CellValue>(ops: &dyn Operators, f: &Field<T>) -> Result<Field<T>> {
    check(ops, f)?;
    Ok(per_plane(ops, f, PlaneOp::Laplacian))
}

pub fn div(ops: &dyn Operators, u: &VectorField) -> Result<ScalarField> {
    let (dx, dy) = partials(ops, u)?;
    let (a, b) = (dx.plane(0), dy.plane(1));
    let d = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    Field::from_vec(*u.grid(), d)
}

/// Divergence over the first index: `(div s)_i = sum_j d_j s_ji`.
pub fn div_tensor(ops: &dyn Operators, s: &StressField) -> Result<VectorField> {
    let (dx, dy) = partials(ops, s)?;
    let (s11x, s12x, s21y, s22y) = (dx.plane(0), dx.plane(1), dy.plane(2), dy.plane(3));
    let v1 = s11x.iter().zip(&s21y).map(|(a, b)| a + b).collect();
    let v2 = s12x.iter().zip(&s22y).map(|(a, b)| a + b).collect();
    Ok(Field::from_planes(*s.grid(), &[v1, v2]))
}

/// `u1 dx + u2 dy` from precomputed partials.
pub fn advect_with<T: CellValue>(u: &VectorField, dx: &Field<T>, dy: &Field<T>) -> Field<T> {
    let (u1, u2) = (u.plane(0), u.plane(1));
    let (px, py) = (dx.planes(), dy.planes());
    let planes: Vec<Vec<f64>> = px
        .iter()
        .zip(&py)
        .map(|(a, b)| (0..a.len()).map(|k| u1[k] * a[k] + u2[k] * b[k]).collect())
        .collect();
    Field::from_planes(*u.grid(), &planes)
}

/// `(u . grad) F`, componentwise.
pub fn advect<T: CellValue>(ops: &dyn Operators, u: &VectorField, f: &Field<T>) -> Result<Field<T>> {
    check(ops, u)?;
    let (dx, dy) = partials(ops, f)?;
    Ok(advect_with(u, &dx, &dy))
}

/// Skew part of the velocity gradient from its partials.
pub fn vorticity_with(ux: &VectorField, uy: &VectorField) -> SkewField {
    let (a, b) = (ux.plane(1), uy.plane(0));
    let w = a
        .iter()
        .zip(&b)
        .map(|(x, y)| SkewTensor {
            w12: 0.5 * (x - y),
            w13: 0.0,
            w23: 0.0,
        })
        .collect();
    Field::from_vec(*ux.grid(), w).expect("same grid")
}

/// Skew part of the velocity gradient; only `w12 = (d_x u2 - d_y u1) / 2`
/// is nonzero for in-plane flow.
pub fn vorticity_skew(ops: &dyn Operators, u: &VectorField) -> Result<SkewField> {
    let (ux, uy) = partials(ops, u)?;
    Ok(vorticity_with(&ux, &uy))
}

pub fn leray_project(ops: &dyn Operators, u: &VectorField) -> Result<VectorField> {
    check(ops, u)?;
    let (a, b) = ops.leray(&u.plane(0), &u.plane(1));
    Ok(Field::from_planes(*u.grid(), &[a, b]))
}

/// Gaussian mollification; `delta = 0` is the identity.
pub fn mollify<T: CellValue>(ops: &dyn Operators, f: &Field<T>, delta: f64) -> Result<Field<T>> {
    check(ops, f)?;
    if !(delta >= 0.0) || !delta.is_finite() {
        return domain(format!("mollification scale must be >= 0 (got {delta})"));
    }
    if delta == 0.0 {
        return Ok(f.clone());
    }
    Ok(per_plane(ops, f, PlaneOp::Mollify(delta)))
}

/// `L2` norm of the discrete divergence.
pub fn divergence_residual(ops: &dyn Operators, u: &VectorField) -> Result<f64> {
    Ok(div(ops, u)?.l2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::{Boundary, Grid2D};
    use crate::fields::ops::{make_operators, BackendKind};
    use crate::tensor::QTensor;

    fn spectral(n: usize) -> Box<dyn Operators> {
        make_operators(Grid2D::periodic_square(n), BackendKind::Spectral).unwrap()
    }

    fn linf_diff<T: CellValue>(a: &Field<T>, b: &Field<T>) -> f64 {
        a.difference(b).linf()
    }

    #[test]
    fn grad_of_sin_x_is_cos_x() {
        let ops = spectral(16);
        let g = *ops.grid();
        let f = ScalarField::from_fn(g, |x, _| x.sin());
        let got = grad(ops.as_ref(), &f).unwrap();
        let want = VectorField::from_fn(g, |x, _| [x.cos(), 0.0]);
        assert!(linf_diff(&got, &want) < 1e-13);
    }

    #[test]
    fn laplacian_of_product_mode() {
        let ops = spectral(16);
        let g = *ops.grid();
        let f = ScalarField::from_fn(g, |x, y| x.sin() * y.sin());
        let got = laplacian(ops.as_ref(), &f).unwrap();
        assert!(linf_diff(&got, &f.scaled(-2.0)) < 1e-13);
    }

    #[test]
    fn advect_by_constant_flow() {
        let ops = spectral(16);
        let g = *ops.grid();
        let u = VectorField::filled(g, [1.0, 0.0]);
        let f = ScalarField::from_fn(g, |x, _| x.sin());
        let got = advect(ops.as_ref(), &u, &f).unwrap();
        let want = ScalarField::from_fn(g, |x, _| x.cos());
        assert!(linf_diff(&got, &want) < 1e-13);
    }

    fn fd_advect_error(n: usize) -> f64 {
        let g = Grid2D::periodic_square(n);
        let ops = make_operators(g, BackendKind::Fd).unwrap();
        let u = VectorField::filled(g, [1.0, 0.0]);
        let f = ScalarField::from_fn(g, |x, _| x.sin());
        let got = advect(ops.as_ref(), &u, &f).unwrap();
        linf_diff(&got, &ScalarField::from_fn(g, |x, _| x.cos()))
    }

    #[test]
    fn fd_advection_converges_at_second_order() {
        let ratio = fd_advect_error(32) / fd_advect_error(64);
        assert!((ratio - 4.0).abs() <= 0.4, "ratio {ratio}");
    }

    #[test]
    fn gradients_project_to_zero_and_solenoidal_fields_are_kept() {
        for kind in [BackendKind::Spectral, BackendKind::Fd] {
            let g = Grid2D::periodic_square(32);
            let ops = make_operators(g, kind).unwrap();
            let phi = ScalarField::from_fn(g, |x, y| x.sin() * y.sin());
            let gu = grad(ops.as_ref(), &phi).unwrap();
            let p = leray_project(ops.as_ref(), &gu).unwrap();
            assert!(p.linf() < 1e-12, "{kind:?}: {}", p.linf());
            // u = (d_y psi, -d_x psi) with psi = sin x sin y.
            let u = VectorField::from_fn(g, |x, y| [x.sin() * y.cos(), -x.cos() * y.sin()]);
            let p = leray_project(ops.as_ref(), &u).unwrap();
            let tol = if kind == BackendKind::Spectral { 1e-12 } else { 1e-2 };
            assert!(linf_diff(&p, &u) < tol, "{kind:?}");
        }
    }

    #[test]
    fn vorticity_of_rotation_mode() {
        let ops = spectral(16);
        let g = *ops.grid();
        let u = VectorField::from_fn(g, |x, y| [-y.sin(), x.sin()]);
        let w = vorticity_skew(ops.as_ref(), &u).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = g.coords(i, j);
                let c = w.at(i, j);
                assert!((c.w12 - 0.5 * (x.cos() + y.cos())).abs() < 1e-13);
                assert_eq!((c.w13, c.w23), (0.0, 0.0));
            }
        }
        let phi = ScalarField::from_fn(g, |x, y| (x + 2.0 * y).cos());
        let w = vorticity_skew(ops.as_ref(), &grad(ops.as_ref(), &phi).unwrap()).unwrap();
        assert!(w.linf() < 1e-12);
    }

    #[test]
    fn mollify_damps_single_mode_by_gaussian_multiplier() {
        let ops = spectral(32);
        let g = *ops.grid();
        let u = VectorField::from_fn(g, |x, _| [(3.0 * x).sin(), 0.0]);
        assert_eq!(mollify(ops.as_ref(), &u, 0.0).unwrap(), u);
        let delta: f64 = 0.3;
        let m = mollify(ops.as_ref(), &u, delta).unwrap();
        let want = u.scaled((-delta * delta * 9.0 / 2.0).exp());
        assert!(linf_diff(&m, &want) < 1e-13);
        assert!(mollify(ops.as_ref(), &u, -1.0).is_err());
    }

    #[test]
    fn dirichlet_mollify_converges_monotonically() {
        let g = Grid2D::new(24, 24, 1.0, 1.0, Boundary::Dirichlet).unwrap();
        let ops = make_operators(g, BackendKind::Fd).unwrap();
        let pi = std::f64::consts::PI;
        let u = VectorField::from_fn(g, |x, y| {
            let s = (pi * x).sin() * (pi * y).sin();
            [s, s * (3.0 * pi * x).cos()]
        });
        let mut last = f64::INFINITY;
        for delta in [0.2, 0.1, 0.05, 0.025] {
            let e = mollify(ops.as_ref(), &u, delta).unwrap().difference(&u).l2();
            assert!(e < last);
            last = e;
        }
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let ops = spectral(16);
        let f = ScalarField::zeros(Grid2D::periodic_square(8));
        assert!(matches!(grad(ops.as_ref(), &f), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn tensor_laplacian_commutes_with_packing() {
        let ops = spectral(16);
        let g = *ops.grid();
        let q = crate::fields::TensorField::from_fn(g, |x, y| {
            QTensor::new(x.sin(), (x + y).cos(), y.sin() * x.cos(), (2.0 * y).cos(), x.cos())
        });
        let lap = laplacian(ops.as_ref(), &q).unwrap();
        // Laplacian of every matrix entry, including the derived q33.
        for r in 0..3 {
            for c in 0..3 {
                let entry = ScalarField::from_vec(g, q.data().iter().map(|t| t.matrix()[r][c]).collect())
                    .unwrap();
                let le = laplacian(ops.as_ref(), &entry).unwrap();
                for (k, t) in lap.data().iter().enumerate() {
                    assert!((t.matrix()[r][c] - le.data()[k]).abs() < 1e-12);
                }
            }
        }
    }
}
