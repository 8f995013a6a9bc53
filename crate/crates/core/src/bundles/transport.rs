//! Parallel transport for the projection connection.
//!
//! Along a curve `x(t)` the horizontal lift satisfies `χ' = Q'(t) χ`. We
//! integrate with classical RK4 and project onto the fiber once at the end.
//! Projecting after every step adds a rounding error per step that does not
//! cancel, which caps the accuracy near `1e-12`; the state update uses
//! compensated summation for the same reason.

use super::{BundleModel, FiberVector};
use crate::error::{Error, Result};
use crate::manifolds::{Curve, Point};
use crate::numkernel::{Matrix, Vector};
use crate::tolerance::{DEFAULT_STEPS, FD_STEP};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    pub steps: usize,
    /// Step for central differences in the path parameter.
    pub fd_step: f64,
    /// Use `dQ_x[ẋ]` when both the bundle and the curve provide it.
    pub exact_derivative: bool,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions {
            steps: DEFAULT_STEPS,
            fd_step: FD_STEP,
            exact_derivative: true,
        }
    }
}

impl TransportOptions {
    pub fn with_steps(steps: usize) -> Self {
        TransportOptions {
            steps,
            ..Default::default()
        }
    }
}

const MIN_STEPS: usize = 16;

fn q_rate(bundle: &BundleModel, curve: &Curve, t: f64, opts: &TransportOptions) -> Matrix {
    if opts.exact_derivative && bundle.has_exact_derivative() {
        if let Some(v) = curve.velocity(t) {
            return bundle.projector_derivative(&curve.at(t), &v).expect("derivative");
        }
    }
    let d = opts.fd_step;
    (bundle.projector(&curve.at(t + d)) - bundle.projector(&curve.at(t - d))) / (2.0 * d)
}

fn integrate(bundle: &BundleModel, curve: &Curve, mut x: Matrix, steps: usize, opts: &TransportOptions) -> Matrix {
    let h = 1.0 / steps as f64;
    let mut rate0 = q_rate(bundle, curve, 0.0, opts);
    let mut carry = Matrix::zeros(x.nrows(), x.ncols());
    for k in 0..steps {
        let t = k as f64 * h;
        let t1 = if k + 1 == steps { 1.0 } else { t + h };
        let rate_mid = q_rate(bundle, curve, t + 0.5 * h, opts);
        let rate1 = q_rate(bundle, curve, t1, opts);
        let k1 = &rate0 * &x;
        let k2 = &rate_mid * (&x + &k1 * (0.5 * h));
        let k3 = &rate_mid * (&x + &k2 * (0.5 * h));
        let k4 = &rate1 * (&x + &k3 * h);
        let dx = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0) - &carry;
        let next = &x + &dx;
        carry = (&next - &x) - dx;
        x = next;
        rate0 = rate1;
    }
    bundle.projector(&curve.at(1.0)) * x
}

/// Transports every column of `columns` (each in the fiber over `curve(0)`)
/// to the fiber over `curve(1)`. Concatenated curves are integrated piece by
/// piece so that kinks fall on step boundaries.
pub fn transport_columns(bundle: &BundleModel, curve: &Curve, columns: &Matrix, opts: &TransportOptions) -> Result<Matrix> {
    if opts.steps < MIN_STEPS {
        return Err(Error::TooFewSteps(opts.steps));
    }
    if columns.nrows() != bundle.ambient_fiber_dim {
        return Err(Error::DimensionMismatch(format!(
            "fiber vectors have {} rows, bundle ambient dimension is {}",
            columns.nrows(),
            bundle.ambient_fiber_dim
        )));
    }
    let q0 = bundle.projector(&curve.at(0.0));
    let residual = (&q0 * columns - columns).norm();
    if residual > 1e-8 {
        return Err(Error::NotInFiber(residual));
    }
    match curve.pieces() {
        Some(pieces) => {
            let per = (opts.steps / pieces.len()).max(MIN_STEPS);
            let mut x = columns.clone();
            for p in pieces {
                x = integrate(bundle, p, x, per, opts);
            }
            Ok(x)
        }
        None => Ok(integrate(bundle, curve, columns.clone(), opts.steps, opts)),
    }
}

/// Parallel transport of a single fiber vector along `curve`.
pub fn transport(bundle: &BundleModel, curve: &Curve, v0: &FiberVector, opts: &TransportOptions) -> Result<FiberVector> {
    let start = curve.at(0.0);
    let offset = bundle.base.distance(&start, &v0.base_point);
    if offset > 1e-8 {
        return Err(Error::BadParams(format!(
            "fiber vector sits {offset:e} away from the start of the curve"
        )));
    }
    let cols = Matrix::from_column_slice(v0.ambient.len(), 1, v0.ambient.as_slice());
    let out = transport_columns(bundle, curve, &cols, opts)?;
    Ok(FiberVector {
        base_point: curve.at(1.0),
        ambient: out.column(0).clone_owned(),
    })
}

/// `t ↦ t·eᵢ` on `Tⁿ`, a closed loop of the `i`-th circle.
pub fn coordinate_loop(n: usize, i: usize) -> Curve {
    let mut e = Point::zeros(n);
    e[i] = 1.0;
    let e2 = e.clone();
    Curve::with_velocity(move |t| &e * t, move |_| e2.clone())
}

/// Holonomy `±1` of a real line bundle around a closed loop.
pub fn holonomy_sign(bundle: &BundleModel, loop_curve: &Curve, opts: &TransportOptions) -> Result<i8> {
    if bundle.real_rank != 1 || bundle.is_complex() {
        return Err(Error::BadParams(format!(
            "holonomy sign needs a real line bundle, got rank {}",
            bundle.real_rank
        )));
    }
    let start = loop_curve.at(0.0);
    let gap = bundle.base.distance(&start, &loop_curve.at(1.0));
    if gap > 1e-8 {
        return Err(Error::BadParams(format!("curve is not closed (gap {gap:e})")));
    }
    let v0: Vector = bundle.fiber_basis(&start).column(0).clone_owned();
    let cols = Matrix::from_column_slice(v0.len(), 1, v0.as_slice());
    let out = transport_columns(bundle, loop_curve, &cols, opts)?;
    let w = out.column(0);
    let inner = w.dot(&v0) / w.norm();
    if inner.abs() <= 0.9 {
        return Err(Error::Ambiguous(inner));
    }
    Ok(if inner > 0.0 { 1 } else { -1 })
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use crate::manifolds::{rotation_homotopy, ManifoldModel};
    use std::f64::consts::PI;

    fn great_circle() -> Curve {
        Curve::with_velocity(
            |t| Point::from_vec(vec![(2.0 * PI * t).cos(), (2.0 * PI * t).sin(), 0.0]),
            |t| Point::from_vec(vec![-2.0 * PI * (2.0 * PI * t).sin(), 2.0 * PI * (2.0 * PI * t).cos(), 0.0]),
        )
    }

    #[test]
    fn equator_transport_is_trivial() {
        let b = tangent_sphere(2);
        let c = great_circle();
        for exact in [true, false] {
            let opts = TransportOptions {
                exact_derivative: exact,
                ..Default::default()
            };
            let z = b.fiber_vector(&c.at(0.0), Vector::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
            let out = transport(&b, &c, &z, &opts).unwrap();
            assert!((out.ambient - Vector::from_vec(vec![0.0, 0.0, 1.0])).norm() < 1e-6);
            let tv = b.fiber_vector(&c.at(0.0), Vector::from_vec(vec![0.0, 1.0, 0.0])).unwrap();
            let out = transport(&b, &c, &tv, &opts).unwrap();
            assert!((out.ambient - Vector::from_vec(vec![0.0, 1.0, 0.0])).norm() < 1e-6);
        }
    }

    #[test]
    fn latitude_holonomy_matches_enclosed_area() {
        // Transport around the circle at polar angle θ rotates by the enclosed
        // area 2π(1 − cos θ).
        let b = tangent_sphere(2);
        let theta: f64 = 1.0;
        let (s, z) = (theta.sin(), theta.cos());
        let c = Curve::with_velocity(
            move |t| Point::from_vec(vec![s * (2.0 * PI * t).cos(), s * (2.0 * PI * t).sin(), z]),
            move |t| Point::from_vec(vec![-2.0 * PI * s * (2.0 * PI * t).sin(), 2.0 * PI * s * (2.0 * PI * t).cos(), 0.0]),
        );
        let east = Vector::from_vec(vec![0.0, 1.0, 0.0]);
        let north = Vector::from_vec(vec![-z, 0.0, s]);
        let v = b.fiber_vector(&c.at(0.0), east.clone()).unwrap();
        let out = transport(&b, &c, &v, &TransportOptions::with_steps(2048)).unwrap().ambient;
        let angle = out.dot(&north).atan2(out.dot(&east));
        let expected = (2.0 * PI * (1.0 - z)).rem_euclid(2.0 * PI);
        let got = angle.rem_euclid(2.0 * PI);
        let diff = (got - expected).abs().min(2.0 * PI - (got - expected).abs());
        assert!(diff < 1e-8, "{got} vs {expected}");
    }

    #[test]
    fn transport_preserves_norms() {
        let b = tautological_complex(1);
        let h = crate::manifolds::cpn_phase_homotopy(1, 0, 1.3).unwrap();
        let x = b.base.random_point(4);
        let basis = b.fiber_basis(&x);
        let out = transport_columns(&b, &h.track(&x), &basis, &TransportOptions::default()).unwrap();
        let gram = out.transpose() * &out;
        assert!((gram - Matrix::identity(2, 2)).norm() < 1e-8);
    }

    #[test]
    fn rejects_bad_input() {
        let b = tangent_sphere(2);
        let c = great_circle();
        let v = b.fiber_vector(&c.at(0.0), Vector::from_vec(vec![0.0, 1.0, 0.0])).unwrap();
        assert!(matches!(
            transport(&b, &c, &v, &TransportOptions::with_steps(8)),
            Err(Error::TooFewSteps(8))
        ));
        let off = Matrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        assert!(matches!(
            transport_columns(&b, &c, &off, &TransportOptions::default()),
            Err(Error::NotInFiber(_))
        ));
    }

    #[test]
    fn torus_line_holonomies() {
        let b = torus_line(&[1, 0]).unwrap();
        let opts = TransportOptions::default();
        assert_eq!(holonomy_sign(&b, &coordinate_loop(2, 0), &opts).unwrap(), -1);
        assert_eq!(holonomy_sign(&b, &coordinate_loop(2, 1), &opts).unwrap(), 1);
        let b = torus_line(&[1, 1, 0]).unwrap();
        assert_eq!(holonomy_sign(&b, &coordinate_loop(3, 1), &opts).unwrap(), -1);
        assert_eq!(holonomy_sign(&b, &coordinate_loop(3, 2), &opts).unwrap(), 1);
        let diag = Curve::with_velocity(|t| Point::from_vec(vec![t, t, 0.0]), |_| Point::from_vec(vec![1.0, 1.0, 0.0]));
        assert_eq!(holonomy_sign(&b, &diag, &opts).unwrap(), 1);
    }

    #[test]
    fn concatenated_rotations_return_home() {
        let b = tangent_sphere(2);
        let s2 = ManifoldModel::Sphere(2);
        let x = Point::from_vec(vec![0.6, 0.0, 0.8]);
        let h = rotation_homotopy(&s2, (0, 1), 1.1).unwrap();
        let c = Curve::concat(vec![h.track(&x), h.track(&x).reversed()]);
        let basis = b.fiber_basis(&x);
        let out = transport_columns(&b, &c, &basis, &TransportOptions::default()).unwrap();
        assert!((out - basis).norm() < 1e-9);
    }
}
