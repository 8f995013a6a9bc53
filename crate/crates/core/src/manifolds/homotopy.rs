use std::sync::Arc;

use super::maps::{cp_phase_matrix, named_diffeo, Diffeo, DiffeoParams};
use super::{Curve, ManifoldModel, Point};
use crate::error::{Error, Result};
use crate::numkernel::{flatten, plane_rotation, unflatten, Matrix};

type FamilyFn = Arc<dyn Fn(f64, &Point) -> Point + Send + Sync>;

/// A smooth family `φ_t` with `φ₀ = id` and `φ₁ = endpoint`.
#[derive(Clone)]
pub struct Homotopy {
    pub name: String,
    pub model: ManifoldModel,
    family: FamilyFn,
    velocity: Option<FamilyFn>,
    endpoint: Diffeo,
}

impl std::fmt::Debug for Homotopy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Homotopy({} on {})", self.name, self.model)
    }
}

impl Homotopy {
    pub fn new(
        name: impl Into<String>,
        model: ManifoldModel,
        family: impl Fn(f64, &Point) -> Point + Send + Sync + 'static,
        velocity: Option<FamilyFn>,
        endpoint: Diffeo,
    ) -> Self {
        Homotopy {
            name: name.into(),
            model,
            family: Arc::new(family),
            velocity,
            endpoint,
        }
    }

    pub fn at(&self, t: f64, x: &Point) -> Point {
        (self.family)(t, x)
    }

    pub fn endpoint(&self) -> &Diffeo {
        &self.endpoint
    }

    /// The track `t ↦ φ_t(x)` of a point.
    pub fn track(&self, x: &Point) -> Curve {
        let fam = self.family.clone();
        let x0 = x.clone();
        match &self.velocity {
            Some(vel) => {
                let vel = vel.clone();
                let x1 = x.clone();
                Curve::with_velocity(move |t| fam(t, &x0), move |t| vel(t, &x1))
            }
            None => Curve::new(move |t| fam(t, &x0)),
        }
    }
}

pub fn constant_homotopy(model: ManifoldModel) -> Homotopy {
    let dim = model.ambient_dim();
    Homotopy::new(
        "constant",
        model.clone(),
        |_, x| x.clone(),
        Some(Arc::new(move |_, _| Point::zeros(dim))),
        Diffeo::identity(model),
    )
}

/// Generator of rotations in the `(a, b)` plane.
fn plane_generator(dim: usize, a: usize, b: usize) -> Matrix {
    let mut g = Matrix::zeros(dim, dim);
    g[(b, a)] = 1.0;
    g[(a, b)] = -1.0;
    g
}

/// `φ_t(x) = R(tθ) x` for the rotation `R` in the `(a, b)` coordinate plane.
pub fn rotation_homotopy(model: &ManifoldModel, plane: (usize, usize), angle: f64) -> Result<Homotopy> {
    let ManifoldModel::Sphere(n) = model else {
        return Err(Error::BadParams(format!("rotation homotopy needs a sphere, got {model}")));
    };
    let dim = n + 1;
    let (a, b) = plane;
    if a >= dim || b >= dim || a == b {
        return Err(Error::BadPlane(a, b, dim));
    }
    let endpoint = named_diffeo(
        model,
        "sphere_rotation",
        &DiffeoParams {
            plane: Some(plane),
            angle: Some(angle),
            ..Default::default()
        },
    )?;
    let g = plane_generator(dim, a, b) * angle;
    Ok(Homotopy::new(
        format!("rotation({a},{b};{angle})"),
        model.clone(),
        move |t, x| plane_rotation(dim, a, b, t * angle) * x,
        Some(Arc::new(move |t, x| &g * plane_rotation(dim, a, b, t * angle) * x)),
        endpoint,
    ))
}

fn conjugation_family(generator: Matrix, side: usize, rotation: impl Fn(f64) -> Matrix + Send + Sync + Clone + 'static) -> (FamilyFn, FamilyFn) {
    let rot = rotation.clone();
    let family: FamilyFn = Arc::new(move |t, x| {
        let u = rot(t);
        let p = unflatten(x.as_slice(), side);
        flatten(&(&u * p * u.transpose()))
    });
    let velocity: FamilyFn = Arc::new(move |t, x| {
        let u = rotation(t);
        let p = unflatten(x.as_slice(), side);
        let pt = &u * p * u.transpose();
        flatten(&(&generator * &pt - &pt * &generator))
    });
    (family, velocity)
}

/// `φ_t(P) = U_t P U_t*` with `U_t = diag(…, e^{itθ}, …)` acting on `CP^n`.
/// On `CP¹ ≅ S²` with `index = 0` this is the rotation about the `x₃` axis.
pub fn cpn_phase_homotopy(n: usize, index: usize, angle: f64) -> Result<Homotopy> {
    let model = ManifoldModel::ComplexProjective(n);
    let endpoint = named_diffeo(
        &model,
        "cpn_phase",
        &DiffeoParams {
            index: Some(index),
            angle: Some(angle),
            ..Default::default()
        },
    )?;
    let side = 2 * (n + 1);
    let generator = plane_generator(side, 2 * index, 2 * index + 1) * angle;
    let (family, velocity) = conjugation_family(generator, side, move |t| cp_phase_matrix(n, index, t * angle));
    Ok(Homotopy {
        name: format!("cpn_phase({index};{angle})"),
        model,
        family,
        velocity: Some(velocity),
        endpoint,
    })
}

/// `φ_t(P) = R_t P R_tᵀ` with `R_t` the rotation by `tθ` in a coordinate plane.
pub fn grassmann_rotation_homotopy(k: usize, n: usize, plane: (usize, usize), angle: f64) -> Result<Homotopy> {
    let (a, b) = plane;
    if a >= n || b >= n || a == b {
        return Err(Error::BadPlane(a, b, n));
    }
    let model = ManifoldModel::GrassmannReal { k, n };
    let r = plane_rotation(n, a, b, angle);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| r[(i, j)]).collect()).collect();
    let endpoint = named_diffeo(
        &model,
        "grassmann_action",
        &DiffeoParams {
            matrix: Some(rows),
            ..Default::default()
        },
    )?;
    let generator = plane_generator(n, a, b) * angle;
    let (family, velocity) = conjugation_family(generator, n, move |t| plane_rotation(n, a, b, t * angle));
    Ok(Homotopy {
        name: format!("grassmann_rotation({a},{b};{angle})"),
        model,
        family,
        velocity: Some(velocity),
        endpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn registered() -> Vec<Homotopy> {
        vec![
            constant_homotopy(ManifoldModel::Sphere(2)),
            rotation_homotopy(&ManifoldModel::Sphere(2), (0, 1), PI / 2.0).unwrap(),
            rotation_homotopy(&ManifoldModel::Sphere(2), (0, 2), PI).unwrap(),
            rotation_homotopy(&ManifoldModel::Sphere(3), (1, 3), 2.0 * PI).unwrap(),
            cpn_phase_homotopy(1, 0, 2.0 * PI / 3.0).unwrap(),
            cpn_phase_homotopy(2, 1, 0.7).unwrap(),
            grassmann_rotation_homotopy(2, 4, (0, 3), 1.3).unwrap(),
        ]
    }

    #[test]
    fn endpoints_match_and_start_is_identity() {
        for h in registered() {
            for seed in 0..100 {
                let x = h.model.random_point(seed);
                assert!((h.at(0.0, &x) - &x).norm() <= 1e-10, "{}", h.name);
                assert!((h.at(1.0, &x) - h.endpoint().apply(&x)).norm() <= 1e-10, "{}", h.name);
                for t in [0.25, 0.5, 0.9] {
                    assert!(h.model.membership_residual(&h.at(t, &x)) <= 1e-10, "{}", h.name);
                }
            }
        }
    }

    #[test]
    fn velocities_match_finite_differences() {
        for h in registered() {
            let x = h.model.random_point(3);
            let c = h.track(&x);
            for t in [0.1, 0.5, 0.8] {
                let fd = (c.at(t + 1e-6) - c.at(t - 1e-6)) / 2e-6;
                assert!((fd - c.velocity(t).unwrap()).norm() < 1e-7, "{}", h.name);
            }
        }
    }

    #[test]
    fn quarter_turn_and_full_loop() {
        let s2 = ManifoldModel::Sphere(2);
        let e1 = Point::from_vec(vec![1.0, 0.0, 0.0]);
        let h = rotation_homotopy(&s2, (0, 1), PI / 2.0).unwrap();
        assert!((h.at(1.0, &e1) - Point::from_vec(vec![0.0, 1.0, 0.0])).norm() < 1e-15);

        let h = rotation_homotopy(&s2, (0, 1), 2.0 * PI).unwrap();
        assert!((h.endpoint().apply(&e1) - &e1).norm() < 1e-14);
        assert!((h.at(0.5, &e1) + &e1).norm() < 1e-15);

        let h = rotation_homotopy(&s2, (0, 1), 0.0).unwrap();
        let x = s2.random_point(5);
        assert_eq!(h.at(0.7, &x), x);
    }

    #[test]
    fn bad_plane() {
        assert!(matches!(
            rotation_homotopy(&ManifoldModel::Sphere(2), (1, 1), 1.0),
            Err(Error::BadPlane(1, 1, 3))
        ));
    }
}
