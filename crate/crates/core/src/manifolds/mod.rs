//! Concrete manifolds embedded in an ambient coordinate space.
//!
//! Points are plain coordinate vectors:
//!
//! * `Sphere(n)`: unit vectors in `ℝⁿ⁺¹`;
//! * `Torus(n)`: coordinates reduced to `[0, 1)ⁿ`;
//! * `GrassmannReal { k, n }`: rank-`k` orthogonal projectors, flattened
//!   row-major to `ℝ^{n²}`;
//! * `ComplexProjective(n)`: rank-one Hermitian projectors on `ℂⁿ⁺¹`,
//!   stored as their realification (a real `2(n+1)` square matrix,
//!   flattened row-major);
//! * `Product(l, r)`: concatenation of the two factors' coordinates.
//!
//! `S² ≅ CP¹` is the inverse stereographic map `z ↦ [z, 1]` with the north
//! pole going to `[1, 0]`; on projectors this is
//! `x ↦ (I + x₁σ_x − x₂σ_y + x₃σ_z) / 2`.

mod degree;
mod homotopy;
mod maps;
pub mod mesh;

pub use degree::{degree, degree_raw, signed_solid_angle};
pub use homotopy::{
    constant_homotopy, cpn_phase_homotopy, grassmann_rotation_homotopy, rotation_homotopy, Homotopy,
};
pub(crate) use maps::{rp1_angle_phase, s1xs2_model, torus_auto};
pub use maps::{
    named_diffeo, power_map_cp1, power_map_sphere, sphere_to_cp1_diffeo, Diffeo, DiffeoParams, SmoothMap,
    DIFFEO_NAMES,
};

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::numkernel::{
    ambient_complex_structure, flatten, max_abs, projector_basis, realify, unflatten, Matrix, Vector,
};

pub type Point = DVector<f64>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldModel {
    Sphere(usize),
    Torus(usize),
    GrassmannReal { k: usize, n: usize },
    ComplexProjective(usize),
    Product(Box<ManifoldModel>, Box<ManifoldModel>),
}

impl std::fmt::Display for ManifoldModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ManifoldModel::Sphere(n) => write!(f, "S^{n}"),
            ManifoldModel::Torus(n) => write!(f, "T^{n}"),
            ManifoldModel::GrassmannReal { k, n } => write!(f, "G_{k}(R^{n})"),
            ManifoldModel::ComplexProjective(n) => write!(f, "CP^{n}"),
            ManifoldModel::Product(l, r) => write!(f, "{l}x{r}"),
        }
    }
}

impl ManifoldModel {
    pub fn product(left: ManifoldModel, right: ManifoldModel) -> Self {
        ManifoldModel::Product(Box::new(left), Box::new(right))
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            ManifoldModel::Sphere(n) => n + 1,
            ManifoldModel::Torus(n) => *n,
            ManifoldModel::GrassmannReal { n, .. } => n * n,
            ManifoldModel::ComplexProjective(n) => 4 * (n + 1) * (n + 1),
            ManifoldModel::Product(l, r) => l.ambient_dim() + r.ambient_dim(),
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self {
            ManifoldModel::Sphere(n) | ManifoldModel::Torus(n) => *n,
            ManifoldModel::GrassmannReal { k, n } => k * (n - k),
            ManifoldModel::ComplexProjective(n) => 2 * n,
            ManifoldModel::Product(l, r) => l.intrinsic_dim() + r.intrinsic_dim(),
        }
    }

    /// Side length of the stored projector for matrix models.
    pub fn matrix_side(&self) -> Option<usize> {
        match self {
            ManifoldModel::GrassmannReal { n, .. } => Some(*n),
            ManifoldModel::ComplexProjective(n) => Some(2 * (n + 1)),
            _ => None,
        }
    }

    /// Splits a product point into its factors.
    pub fn split(&self, x: &Point) -> Option<(Point, Point)> {
        match self {
            ManifoldModel::Product(l, _) => {
                let a = l.ambient_dim();
                Some((x.rows(0, a).clone_owned(), x.rows(a, x.len() - a).clone_owned()))
            }
            _ => None,
        }
    }

    pub fn join(left: &Point, right: &Point) -> Point {
        Point::from_iterator(left.len() + right.len(), left.iter().chain(right.iter()).cloned())
    }

    /// Distance of `x` from the model; zero for a valid point.
    pub fn membership_residual(&self, x: &Point) -> f64 {
        if x.len() != self.ambient_dim() || x.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        match self {
            ManifoldModel::Sphere(_) => (x.norm() - 1.0).abs(),
            ManifoldModel::Torus(_) => x
                .iter()
                .map(|&c| if (0.0..1.0).contains(&c) { 0.0 } else { c.abs().max((c - 1.0).abs()) })
                .fold(0.0, f64::max),
            ManifoldModel::GrassmannReal { k, n } => projector_residual(&unflatten(x.as_slice(), *n), *k as f64),
            ManifoldModel::ComplexProjective(n) => {
                let side = 2 * (n + 1);
                let p = unflatten(x.as_slice(), side);
                let j = ambient_complex_structure(n + 1);
                projector_residual(&p, 2.0).max(max_abs(&(&j * &p - &p * &j)))
            }
            ManifoldModel::Product(l, r) => {
                let (a, b) = self.split(x).expect("product");
                l.membership_residual(&a).max(r.membership_residual(&b))
            }
        }
    }

    /// Nearest valid point (normalisation, reduction mod 1, or nearest
    /// projector of the right rank).
    pub fn retract(&self, x: &Point) -> Point {
        match self {
            ManifoldModel::Sphere(_) => x / x.norm(),
            ManifoldModel::Torus(_) => reduce_mod_one(x),
            ManifoldModel::GrassmannReal { k, n } => {
                let p = unflatten(x.as_slice(), *n);
                let p = (&p + p.transpose()) * 0.5;
                let b = projector_basis(&p, *k);
                flatten(&(&b * b.transpose()))
            }
            ManifoldModel::ComplexProjective(n) => {
                let side = 2 * (n + 1);
                let j = ambient_complex_structure(n + 1);
                let p = unflatten(x.as_slice(), side);
                let p = (&p + p.transpose()) * 0.5;
                let p = (&p - &j * &p * &j) * 0.5;
                let b = projector_basis(&p, 2);
                flatten(&(&b * b.transpose()))
            }
            ManifoldModel::Product(l, r) => {
                let (a, b) = self.split(x).expect("product");
                ManifoldModel::join(&l.retract(&a), &r.retract(&b))
            }
        }
    }

    /// Distance between two valid points; wraps around on tori.
    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        match self {
            ManifoldModel::Torus(_) => a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| {
                    let d = x - y;
                    let d = d - d.round();
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            ManifoldModel::Product(l, r) => {
                let (a1, a2) = self.split(a).expect("product");
                let (b1, b2) = self.split(b).expect("product");
                l.distance(&a1, &b1).hypot(r.distance(&a2, &b2))
            }
            _ => (a - b).norm(),
        }
    }

    /// Orthogonal projection of an ambient vector onto the tangent space at `x`.
    pub fn tangent_project(&self, x: &Point, xi: &Point) -> Point {
        match self {
            ManifoldModel::Sphere(_) => xi - x * x.dot(xi),
            ManifoldModel::Torus(_) => xi.clone(),
            ManifoldModel::GrassmannReal { n, .. } => {
                let p = unflatten(x.as_slice(), *n);
                flatten(&projector_tangent(&p, &unflatten(xi.as_slice(), *n)))
            }
            ManifoldModel::ComplexProjective(n) => {
                let side = 2 * (n + 1);
                let j = ambient_complex_structure(n + 1);
                let p = unflatten(x.as_slice(), side);
                let e = unflatten(xi.as_slice(), side);
                let e = (&e - &j * &e * &j) * 0.5;
                flatten(&projector_tangent(&p, &e))
            }
            ManifoldModel::Product(l, r) => {
                let (x1, x2) = self.split(x).expect("product");
                let (e1, e2) = self.split(xi).expect("product");
                ManifoldModel::join(&l.tangent_project(&x1, &e1), &r.tangent_project(&x2, &e2))
            }
        }
    }

    pub fn random_point(&self, seed: u64) -> Point {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.random_point_with(&mut rng)
    }

    pub fn random_point_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            ManifoldModel::Sphere(n) => {
                let v = gaussian_vector(rng, n + 1);
                &v / v.norm()
            }
            ManifoldModel::Torus(n) => Point::from_fn(*n, |_, _| rng.random_range(0.0..1.0)),
            ManifoldModel::GrassmannReal { k, n } => {
                let cols: Vec<Vector> = (0..*k).map(|_| gaussian_vector(rng, *n)).collect();
                let p = crate::numkernel::projector_from_span(&cols).expect("gaussian vectors are independent");
                flatten(p.matrix())
            }
            ManifoldModel::ComplexProjective(n) => {
                let w = DVector::from_fn(n + 1, |_, _| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                });
                cp_point_from_vector(&w)
            }
            ManifoldModel::Product(l, r) => {
                let a = l.random_point_with(rng);
                let b = r.random_point_with(rng);
                ManifoldModel::join(&a, &b)
            }
        }
    }
}

fn projector_residual(p: &Matrix, trace: f64) -> f64 {
    max_abs(&(p * p - p))
        .max(crate::numkernel::symmetry_defect(p))
        .max((p.trace() - trace).abs())
}

/// Tangent part `PΞ(I−P) + (I−P)ΞP` of a symmetric perturbation of `P`.
fn projector_tangent(p: &Matrix, xi: &Matrix) -> Matrix {
    let n = p.nrows();
    let s = (xi + xi.transpose()) * 0.5;
    let q = Matrix::identity(n, n) - p;
    p * &s * &q + &q * &s * p
}

pub(crate) fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn reduce_mod_one(x: &Point) -> Point {
    x.map(|c| {
        let r = c.rem_euclid(1.0);
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    })
}

/// Realified rank-one projector onto the complex line through `w`.
pub fn cp_point_from_vector(w: &DVector<Complex64>) -> Point {
    let norm2: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    let p = w * w.adjoint() / Complex64::new(norm2, 0.0);
    let p = (&p + p.adjoint()) * Complex64::new(0.5, 0.0);
    flatten(&realify(&p))
}

/// Unit homogeneous coordinates of a point of `CP^n`, with the first
/// coordinate of modulus above 1e-12 made real positive.
pub fn cp_homogeneous(x: &Point, n: usize) -> DVector<Complex64> {
    let side = 2 * (n + 1);
    let p = unflatten(x.as_slice(), side);
    let col = (0..=n)
        .max_by(|&a, &b| p[(2 * a, 2 * a)].total_cmp(&p[(2 * b, 2 * b)]).then(b.cmp(&a)))
        .expect("nonempty");
    let mut w = DVector::from_fn(n + 1, |j, _| Complex64::new(p[(2 * j, 2 * col)], p[(2 * j + 1, 2 * col)]));
    let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    w /= Complex64::new(norm, 0.0);
    if let Some(first) = w.iter().find(|z| z.norm() > 1e-12).cloned() {
        let phase = first.conj() / first.norm();
        w *= phase;
    }
    w
}

/// `S² → CP¹`, `x ↦ (I + x₁σ_x − x₂σ_y + x₃σ_z) / 2`.
pub fn sphere_to_cp1(x: &Point) -> Point {
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    let p = nalgebra::DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.5 * (1.0 + x3), 0.0),
            Complex64::new(0.5 * x1, 0.5 * x2),
            Complex64::new(0.5 * x1, -0.5 * x2),
            Complex64::new(0.5 * (1.0 - x3), 0.0),
        ],
    );
    flatten(&realify(&p))
}

/// Inverse of [`sphere_to_cp1`].
pub fn cp1_to_sphere(p: &Point) -> Point {
    let m = unflatten(p.as_slice(), 4);
    // P00 − P11, 2 Re P01, 2 Im P01
    Point::from_vec(vec![2.0 * m[(0, 2)], 2.0 * m[(1, 2)], m[(0, 0)] - m[(2, 2)]])
}

/// A parametrised curve with optional exact velocity.
#[derive(Clone)]
pub struct Curve {
    position: Arc<dyn Fn(f64) -> Point + Send + Sync>,
    velocity: Option<Arc<dyn Fn(f64) -> Point + Send + Sync>>,
    pieces: Option<Arc<Vec<Curve>>>,
}

impl Curve {
    /// The position map must be defined on a neighbourhood of `[0, 1]`
    /// when no velocity is given (central differences straddle the ends).
    pub fn new(position: impl Fn(f64) -> Point + Send + Sync + 'static) -> Self {
        Curve {
            position: Arc::new(position),
            velocity: None,
            pieces: None,
        }
    }

    pub fn with_velocity(
        position: impl Fn(f64) -> Point + Send + Sync + 'static,
        velocity: impl Fn(f64) -> Point + Send + Sync + 'static,
    ) -> Self {
        Curve {
            position: Arc::new(position),
            velocity: Some(Arc::new(velocity)),
            pieces: None,
        }
    }

    pub fn constant(x: Point) -> Self {
        let dim = x.len();
        Curve::with_velocity(move |_| x.clone(), move |_| Point::zeros(dim))
    }

    pub fn at(&self, t: f64) -> Point {
        (self.position)(t)
    }

    pub fn velocity(&self, t: f64) -> Option<Point> {
        self.velocity.as_ref().map(|v| v(t))
    }

    pub fn has_velocity(&self) -> bool {
        self.velocity.is_some()
    }

    /// Smooth pieces of a concatenated curve, in order.
    pub fn pieces(&self) -> Option<&[Curve]> {
        self.pieces.as_deref().map(|v| v.as_slice())
    }

    /// Same curve traversed backwards.
    pub fn reversed(&self) -> Curve {
        if let Some(pieces) = &self.pieces {
            return Curve::concat(pieces.iter().rev().map(Curve::reversed).collect());
        }
        let pos = self.position.clone();
        match &self.velocity {
            Some(vel) => {
                let vel = vel.clone();
                Curve::with_velocity(move |t| pos(1.0 - t), move |t| -vel(1.0 - t))
            }
            None => Curve::new(move |t| pos(1.0 - t)),
        }
    }

    /// Concatenation of curves, each traversed in an equal share of `[0, 1]`.
    pub fn concat(pieces: Vec<Curve>) -> Curve {
        let count = pieces.len() as f64;
        let locate = move |t: f64, pieces: &[Curve]| {
            let s = (t * count).clamp(0.0, count);
            let idx = (s.floor() as usize).min(pieces.len() - 1);
            (idx, s - idx as f64)
        };
        let pieces = Arc::new(pieces);
        let kept = pieces.clone();
        let mut joined = if pieces.iter().all(Curve::has_velocity) {
            let p2 = pieces.clone();
            Curve::with_velocity(
                move |t| {
                    let (i, s) = locate(t, &pieces);
                    pieces[i].at(s)
                },
                move |t| {
                    let (i, s) = locate(t, &p2);
                    p2[i].velocity(s).expect("velocity") * count
                },
            )
        } else {
            Curve::new(move |t| {
                let (i, s) = locate(t, &pieces);
                pieces[i].at(s)
            })
        };
        joined.pieces = Some(kept);
        joined
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_points_are_members() {
        let models = [
            ManifoldModel::Sphere(2),
            ManifoldModel::Sphere(4),
            ManifoldModel::Torus(3),
            ManifoldModel::GrassmannReal { k: 2, n: 4 },
            ManifoldModel::GrassmannReal { k: 1, n: 2 },
            ManifoldModel::ComplexProjective(1),
            ManifoldModel::ComplexProjective(2),
            ManifoldModel::product(ManifoldModel::GrassmannReal { k: 1, n: 2 }, ManifoldModel::Sphere(2)),
        ];
        for m in &models {
            for seed in 0..20 {
                let x = m.random_point(seed);
                assert_eq!(x.len(), m.ambient_dim());
                assert!(m.membership_residual(&x) <= 1e-12, "{m} seed {seed}");
            }
        }
    }

    #[test]
    fn sphere_points_have_unit_norm() {
        let x = ManifoldModel::Sphere(2).random_point(99);
        assert_eq!(x.len(), 3);
        assert!((x.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn grassmann_points_have_trace_k() {
        let x = ManifoldModel::GrassmannReal { k: 2, n: 4 }.random_point(3);
        assert!((unflatten(x.as_slice(), 4).trace() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn torus_points_are_reduced_and_repeatable() {
        let m = ManifoldModel::Torus(3);
        let a = m.random_point(17);
        let b = m.random_point(17);
        assert_eq!(a, b);
        assert!(a.iter().all(|c| (0.0..1.0).contains(c)));
        assert_ne!(a, m.random_point(18));
    }

    #[test]
    fn retract_recovers_perturbed_points() {
        let models = [
            ManifoldModel::Sphere(2),
            ManifoldModel::GrassmannReal { k: 2, n: 4 },
            ManifoldModel::ComplexProjective(1),
        ];
        for m in &models {
            let x = m.random_point(4);
            let y = m.retract(&(x.map(|c| c + 1e-7)));
            assert!(m.membership_residual(&y) < 1e-12);
            assert!(m.distance(&x, &y) < 1e-5);
        }
        let t = ManifoldModel::Torus(2);
        let r = t.retract(&Point::from_vec(vec![1.25, -0.25]));
        assert!((r - Point::from_vec(vec![0.25, 0.75])).norm() < 1e-15);
    }

    #[test]
    fn torus_distance_wraps() {
        let t = ManifoldModel::Torus(1);
        let d = t.distance(&Point::from_vec(vec![0.999_999]), &Point::from_vec(vec![0.0]));
        assert!(d < 1e-5);
    }

    #[test]
    fn cp1_identification_round_trip() {
        let s2 = ManifoldModel::Sphere(2);
        let cp1 = ManifoldModel::ComplexProjective(1);
        for seed in 0..20 {
            let x = s2.random_point(seed);
            let p = sphere_to_cp1(&x);
            assert!(cp1.membership_residual(&p) < 1e-14);
            assert!((cp1_to_sphere(&p) - &x).norm() < 1e-14);
        }
        // north pole ↦ [1, 0]
        let p = sphere_to_cp1(&Point::from_vec(vec![0.0, 0.0, 1.0]));
        let w = cp_homogeneous(&p, 1);
        assert!((w[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15 && w[1].norm() < 1e-15);
        // x on the equator at angle α ↦ [e^{iα}, 1]
        let a: f64 = 0.4;
        let p = sphere_to_cp1(&Point::from_vec(vec![a.cos(), a.sin(), 0.0]));
        let w = cp_homogeneous(&p, 1);
        let z = w[0] / w[1];
        assert!((z - Complex64::from_polar(1.0, a)).norm() < 1e-14);
    }

    #[test]
    fn tangent_projection_is_tangent() {
        let s = ManifoldModel::Sphere(2);
        let x = s.random_point(1);
        let t = s.tangent_project(&x, &Point::from_vec(vec![1.0, 2.0, 3.0]));
        assert!(t.dot(&x).abs() < 1e-15);

        let g = ManifoldModel::GrassmannReal { k: 1, n: 3 };
        let x = g.random_point(2);
        let xi = g.tangent_project(&x, &Point::from_fn(9, |i, _| i as f64));
        // first-order motion stays on the manifold
        let y = &x + &xi * 1e-5;
        assert!(g.membership_residual(&y) < 1e-8);
    }

    #[test]
    fn concatenated_curve_hits_the_joints() {
        let a = Curve::with_velocity(|t| Point::from_vec(vec![t]), |_| Point::from_vec(vec![1.0]));
        let b = Curve::with_velocity(|t| Point::from_vec(vec![1.0 + 2.0 * t]), |_| Point::from_vec(vec![2.0]));
        let c = Curve::concat(vec![a, b]);
        assert!((c.at(0.5)[0] - 1.0).abs() < 1e-15);
        assert!((c.at(1.0)[0] - 3.0).abs() < 1e-15);
        assert!((c.velocity(0.75).unwrap()[0] - 4.0).abs() < 1e-15);
        let r = c.reversed();
        assert!((r.at(0.0)[0] - 3.0).abs() < 1e-15);
    }
}
