use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{cp1_to_sphere, cp_homogeneous, cp_point_from_vector, reduce_mod_one, sphere_to_cp1, ManifoldModel, Point};
use crate::error::{Error, Result};
use crate::lattice::IntMatrix;
use crate::numkernel::{ambient_conjugation, flatten, max_abs, plane_rotation, unflatten, Matrix};

pub type PointFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// A smooth map between two models.
#[derive(Clone)]
pub struct SmoothMap {
    pub name: String,
    pub source: ManifoldModel,
    pub target: ManifoldModel,
    eval: PointFn,
}

impl std::fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SmoothMap({}: {} -> {})", self.name, self.source, self.target)
    }
}

impl SmoothMap {
    pub fn new(
        name: impl Into<String>,
        source: ManifoldModel,
        target: ManifoldModel,
        eval: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        SmoothMap {
            name: name.into(),
            source,
            target,
            eval: Arc::new(eval),
        }
    }

    pub fn apply(&self, x: &Point) -> Point {
        (self.eval)(x)
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &SmoothMap) -> SmoothMap {
        let outer = self.eval.clone();
        let first = inner.eval.clone();
        SmoothMap {
            name: format!("{}∘{}", self.name, inner.name),
            source: inner.source.clone(),
            target: self.target.clone(),
            eval: Arc::new(move |x| outer(&first(x))),
        }
    }
}

/// A diffeomorphism with an explicit inverse.
#[derive(Clone)]
pub struct Diffeo {
    pub name: String,
    pub source: ManifoldModel,
    pub target: ManifoldModel,
    forward: PointFn,
    inverse: PointFn,
}

impl std::fmt::Debug for Diffeo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Diffeo({}: {} -> {})", self.name, self.source, self.target)
    }
}

impl Diffeo {
    pub fn new(
        name: impl Into<String>,
        model: ManifoldModel,
        forward: impl Fn(&Point) -> Point + Send + Sync + 'static,
        inverse: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        Diffeo {
            name: name.into(),
            source: model.clone(),
            target: model,
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
        }
    }

    pub fn between(
        name: impl Into<String>,
        source: ManifoldModel,
        target: ManifoldModel,
        forward: impl Fn(&Point) -> Point + Send + Sync + 'static,
        inverse: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        Diffeo {
            name: name.into(),
            source,
            target,
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
        }
    }

    pub fn identity(model: ManifoldModel) -> Self {
        Diffeo::new("identity", model, |x| x.clone(), |x| x.clone())
    }

    pub fn apply(&self, x: &Point) -> Point {
        (self.forward)(x)
    }

    pub fn apply_inverse(&self, x: &Point) -> Point {
        (self.inverse)(x)
    }

    pub fn inverse(&self) -> Diffeo {
        Diffeo {
            name: format!("{}^-1", self.name),
            source: self.target.clone(),
            target: self.source.clone(),
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &Diffeo) -> Diffeo {
        let (f, g) = (self.forward.clone(), inner.forward.clone());
        let (fi, gi) = (self.inverse.clone(), inner.inverse.clone());
        Diffeo {
            name: format!("{}∘{}", self.name, inner.name),
            source: inner.source.clone(),
            target: self.target.clone(),
            forward: Arc::new(move |x| f(&g(x))),
            inverse: Arc::new(move |x| gi(&fi(x))),
        }
    }

    pub fn as_map(&self) -> SmoothMap {
        SmoothMap {
            name: self.name.clone(),
            source: self.source.clone(),
            target: self.target.clone(),
            eval: self.forward.clone(),
        }
    }

    /// Product map `self × other` on the product model.
    pub fn product(&self, other: &Diffeo) -> Diffeo {
        let model = ManifoldModel::product(self.source.clone(), other.source.clone());
        let split_at = self.source.ambient_dim();
        let (f, g) = (self.forward.clone(), other.forward.clone());
        let (fi, gi) = (self.inverse.clone(), other.inverse.clone());
        let split = move |x: &Point| {
            (
                x.rows(0, split_at).clone_owned(),
                x.rows(split_at, x.len() - split_at).clone_owned(),
            )
        };
        Diffeo::new(
            format!("{}×{}", self.name, other.name),
            model,
            move |x| {
                let (a, b) = split(x);
                ManifoldModel::join(&f(&a), &g(&b))
            },
            move |x| {
                let (a, b) = split(x);
                ManifoldModel::join(&fi(&a), &gi(&b))
            },
        )
    }
}

/// Parameters for [`named_diffeo`]. Only the fields a family needs are read.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffeoParams {
    /// Real matrix (orthogonal for `grassmann_action` and `sphere_linear`).
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Integer matrix for `torus_auto`.
    pub int_matrix: Option<Vec<Vec<i64>>>,
    /// Coordinate plane for rotations.
    pub plane: Option<(usize, usize)>,
    pub angle: Option<f64>,
    /// Complex coordinate index for `cpn_phase`.
    pub index: Option<usize>,
}

pub const DIFFEO_NAMES: &[&str] = &[
    "identity",
    "sphere_rotation",
    "sphere_linear",
    "sigma",
    "antipodal",
    "grassmann_action",
    "grassmann_involution",
    "cpn_conjugation",
    "cpn_phase",
    "torus_auto",
    "s1xs2_a",
    "s1xs2_r",
    "s1xs2_s",
];

fn dense(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::BadParams("matrix must be square and nonempty".into()));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn orthogonal_param(params: &DiffeoParams, n: usize) -> Result<Matrix> {
    let rows = params
        .matrix
        .as_ref()
        .ok_or_else(|| Error::BadParams("missing `matrix`".into()))?;
    let a = dense(rows)?;
    if a.nrows() != n {
        return Err(Error::BadParams(format!("matrix must be {n}x{n}")));
    }
    let defect = max_abs(&(&a * a.transpose() - Matrix::identity(n, n)));
    if defect > 1e-10 {
        return Err(Error::BadParams(format!("‖AAᵀ − I‖ = {defect:e} > 1e-10")));
    }
    Ok(a)
}

fn wrong_model(name: &str, model: &ManifoldModel) -> Error {
    Error::BadParams(format!("`{name}` is not defined on {model}"))
}

/// Conjugation `P ↦ A P Aᵀ` of flattened projectors.
fn conjugate_projector(a: &Matrix, x: &Point) -> Point {
    let n = a.nrows();
    let p = unflatten(x.as_slice(), n);
    let q = a * p * a.transpose();
    flatten(&((&q + q.transpose()) * 0.5))
}

/// Registry of the diffeomorphisms used throughout the crate.
pub fn named_diffeo(model: &ManifoldModel, name: &str, params: &DiffeoParams) -> Result<Diffeo> {
    match name {
        "identity" => Ok(Diffeo::identity(model.clone())),
        "sphere_rotation" => {
            let ManifoldModel::Sphere(n) = model else {
                return Err(wrong_model(name, model));
            };
            let (a, b) = params.plane.ok_or_else(|| Error::BadParams("missing `plane`".into()))?;
            let dim = n + 1;
            if a >= dim || b >= dim || a == b {
                return Err(Error::BadPlane(a, b, dim));
            }
            let angle = params.angle.unwrap_or(0.0);
            let r = plane_rotation(dim, a, b, angle);
            let rt = r.transpose();
            Ok(Diffeo::new(name, model.clone(), move |x| &r * x, move |x| &rt * x))
        }
        "sphere_linear" => {
            let ManifoldModel::Sphere(n) = model else {
                return Err(wrong_model(name, model));
            };
            let a = orthogonal_param(params, n + 1)?;
            let at = a.transpose();
            Ok(Diffeo::new(name, model.clone(), move |x| &a * x, move |x| &at * x))
        }
        "sigma" => {
            if *model != ManifoldModel::Sphere(2) {
                return Err(wrong_model(name, model));
            }
            let flip = |x: &Point| Point::from_vec(vec![x[0], -x[1], x[2]]);
            Ok(Diffeo::new(name, model.clone(), flip, flip))
        }
        "antipodal" => {
            let ManifoldModel::Sphere(_) = model else {
                return Err(wrong_model(name, model));
            };
            Ok(Diffeo::new(name, model.clone(), |x| -x, |x| -x))
        }
        "grassmann_action" => {
            let ManifoldModel::GrassmannReal { n, .. } = model else {
                return Err(wrong_model(name, model));
            };
            let a = orthogonal_param(params, *n)?;
            let at = a.transpose();
            Ok(Diffeo::new(
                name,
                model.clone(),
                move |x| conjugate_projector(&a, x),
                move |x| conjugate_projector(&at, x),
            ))
        }
        "grassmann_involution" => {
            let ManifoldModel::GrassmannReal { k, n } = model else {
                return Err(wrong_model(name, model));
            };
            if 2 * k != *n {
                return Err(Error::BadParams(format!(
                    "canonical involution needs n = 2k, got k = {k}, n = {n}"
                )));
            }
            let side = *n;
            let perp = move |x: &Point| flatten(&(Matrix::identity(side, side) - unflatten(x.as_slice(), side)));
            Ok(Diffeo::new(name, model.clone(), perp, perp))
        }
        "cpn_conjugation" => {
            let ManifoldModel::ComplexProjective(n) = model else {
                return Err(wrong_model(name, model));
            };
            let c = ambient_conjugation(n + 1);
            let side = 2 * (n + 1);
            let conj = move |x: &Point| flatten(&(&c * unflatten(x.as_slice(), side) * &c));
            Ok(Diffeo::new(name, model.clone(), conj.clone(), conj))
        }
        "cpn_phase" => {
            let ManifoldModel::ComplexProjective(n) = model else {
                return Err(wrong_model(name, model));
            };
            let index = params.index.unwrap_or(0);
            if index > *n {
                return Err(Error::BadParams(format!("phase index {index} out of range")));
            }
            let angle = params.angle.unwrap_or(0.0);
            let u = cp_phase_matrix(*n, index, angle);
            let ut = u.transpose();
            Ok(Diffeo::new(
                name,
                model.clone(),
                move |x| conjugate_projector(&u, x),
                move |x| conjugate_projector(&ut, x),
            ))
        }
        "torus_auto" => {
            let ManifoldModel::Torus(n) = model else {
                return Err(wrong_model(name, model));
            };
            let rows = params
                .int_matrix
                .clone()
                .ok_or_else(|| Error::BadParams("missing `int_matrix`".into()))?;
            let a = IntMatrix::from_rows(rows)?;
            if a.dim() != *n {
                return Err(Error::BadParams(format!("int_matrix must be {n}x{n}")));
            }
            torus_auto(&a)
        }
        "s1xs2_a" | "s1xs2_r" | "s1xs2_s" => {
            if *model != s1xs2_model() {
                return Err(wrong_model(name, model));
            }
            Ok(s1xs2_generator(name))
        }
        _ => Err(Error::UnknownName(name.to_string())),
    }
}

/// `φ_A(x) = A x mod 1` for `|det A| = 1`.
pub(crate) fn torus_auto(a: &IntMatrix) -> Result<Diffeo> {
    let inv = a.inverse_unimodular()?;
    let n = a.dim();
    let fwd = dense(&a.to_f64_rows())?;
    let bwd = dense(&inv.to_f64_rows())?;
    Ok(Diffeo::new(
        format!("torus_auto{:?}", a.rows()),
        ManifoldModel::Torus(n),
        move |x| reduce_mod_one(&(&fwd * x)),
        move |x| reduce_mod_one(&(&bwd * x)),
    ))
}

/// Realification of `diag(1, …, e^{iθ}, …, 1)` with the phase at `index`.
pub(crate) fn cp_phase_matrix(n: usize, index: usize, angle: f64) -> Matrix {
    plane_rotation(2 * (n + 1), 2 * index, 2 * index + 1, angle)
}

pub(crate) fn s1xs2_model() -> ManifoldModel {
    ManifoldModel::product(ManifoldModel::GrassmannReal { k: 1, n: 2 }, ManifoldModel::Sphere(2))
}

/// `e^{iθ}` for the line `P ∈ ℝP¹` at angle `θ/2`: `(P₀₀ − P₁₁) + 2iP₀₁`.
pub(crate) fn rp1_angle_phase(p: &[f64]) -> (f64, f64) {
    (p[0] - p[3], 2.0 * p[1])
}

fn s1xs2_generator(name: &str) -> Diffeo {
    let model = s1xs2_model();
    let s1 = ManifoldModel::GrassmannReal { k: 1, n: 2 };
    let s2 = ManifoldModel::Sphere(2);
    match name {
        "s1xs2_a" => {
            let id = Diffeo::identity(s1);
            let anti = Diffeo::new("antipodal", s2, |x| -x, |x| -x);
            rename(id.product(&anti), name)
        }
        "s1xs2_s" => {
            let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
            let refl = Diffeo::new("rp1_reflection", s1, move |x| conjugate_projector(&d, x), {
                let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
                move |x| conjugate_projector(&d, x)
            });
            rename(refl.product(&Diffeo::identity(s2)), name)
        }
        _ => {
            let twist = |x: &Point, sign: f64| {
                let (c, s) = rp1_angle_phase(&x.as_slice()[0..4]);
                let s = sign * s;
                let (y1, y2) = (x[4], x[5]);
                let mut out = x.clone();
                out[4] = c * y1 - s * y2;
                out[5] = s * y1 + c * y2;
                out
            };
            Diffeo::new(name, model, move |x| twist(x, 1.0), move |x| twist(x, -1.0))
        }
    }
}

fn rename(mut d: Diffeo, name: &str) -> Diffeo {
    d.name = name.to_string();
    d
}

/// `S² → CP¹` as a diffeomorphism between the two models.
pub fn sphere_to_cp1_diffeo() -> Diffeo {
    Diffeo::between(
        "sphere_to_cp1",
        ManifoldModel::Sphere(2),
        ManifoldModel::ComplexProjective(1),
        sphere_to_cp1,
        cp1_to_sphere,
    )
}

fn power_homogeneous(x: &Point, n: u32) -> Point {
    let w = cp_homogeneous(x, 1);
    let image = DVector::from_iterator(2, w.iter().map(|z| z.powu(n)));
    cp_point_from_vector(&image)
}

/// `f_n([z₀, z₁]) = [z₀ⁿ, z₁ⁿ]` on `CP¹`.
pub fn power_map_cp1(n: u32) -> SmoothMap {
    SmoothMap::new(
        format!("f_{n}"),
        ManifoldModel::ComplexProjective(1),
        ManifoldModel::ComplexProjective(1),
        move |x| power_homogeneous(x, n),
    )
}

/// `f_n` transported to `S²` through the identification.
pub fn power_map_sphere(n: u32) -> SmoothMap {
    SmoothMap::new(format!("f_{n}"), ManifoldModel::Sphere(2), ManifoldModel::Sphere(2), move |x| {
        cp1_to_sphere(&power_homogeneous(&sphere_to_cp1(x), n))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn all_diffeos() -> Vec<Diffeo> {
        let mut out = Vec::new();
        let s2 = ManifoldModel::Sphere(2);
        out.push(named_diffeo(&s2, "identity", &DiffeoParams::default()).unwrap());
        out.push(
            named_diffeo(
                &s2,
                "sphere_rotation",
                &DiffeoParams {
                    plane: Some((0, 2)),
                    angle: Some(0.9),
                    ..Default::default()
                },
            )
            .unwrap(),
        );
        out.push(named_diffeo(&s2, "sigma", &DiffeoParams::default()).unwrap());
        out.push(named_diffeo(&s2, "antipodal", &DiffeoParams::default()).unwrap());
        let r = plane_rotation(4, 1, 3, 0.3) * plane_rotation(4, 0, 2, -1.1);
        let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| r[(i, j)]).collect()).collect();
        out.push(
            named_diffeo(
                &ManifoldModel::GrassmannReal { k: 2, n: 4 },
                "grassmann_action",
                &DiffeoParams {
                    matrix: Some(rows),
                    ..Default::default()
                },
            )
            .unwrap(),
        );
        out.push(
            named_diffeo(&ManifoldModel::GrassmannReal { k: 1, n: 2 }, "grassmann_involution", &DiffeoParams::default())
                .unwrap(),
        );
        out.push(named_diffeo(&ManifoldModel::ComplexProjective(2), "cpn_conjugation", &DiffeoParams::default()).unwrap());
        out.push(
            named_diffeo(
                &ManifoldModel::ComplexProjective(1),
                "cpn_phase",
                &DiffeoParams {
                    angle: Some(2.0 * PI / 3.0),
                    ..Default::default()
                },
            )
            .unwrap(),
        );
        out.push(
            named_diffeo(
                &ManifoldModel::Torus(2),
                "torus_auto",
                &DiffeoParams {
                    int_matrix: Some(vec![vec![2, 1], vec![1, 1]]),
                    ..Default::default()
                },
            )
            .unwrap(),
        );
        for g in ["s1xs2_a", "s1xs2_r", "s1xs2_s"] {
            out.push(named_diffeo(&s1xs2_model(), g, &DiffeoParams::default()).unwrap());
        }
        out
    }

    #[test]
    fn registry_round_trips_and_preserves_membership() {
        for d in all_diffeos() {
            for seed in 0..100 {
                let x = d.source.random_point(seed);
                let y = d.apply(&x);
                assert!(d.target.membership_residual(&y) <= 1e-8, "{} seed {seed}", d.name);
                let back = d.apply_inverse(&y);
                assert!(d.source.distance(&back, &x) <= 1e-8, "{} seed {seed}", d.name);
            }
        }
    }

    #[test]
    fn conjugation_is_entrywise_conjugate() {
        let m = ManifoldModel::ComplexProjective(1);
        let d = named_diffeo(&m, "cpn_conjugation", &DiffeoParams::default()).unwrap();
        let w = DVector::from_vec(vec![Complex64::new(0.3, 0.8), Complex64::new(-0.2, 0.4)]);
        let x = cp_point_from_vector(&w);
        let y = d.apply(&x);
        let expected = cp_point_from_vector(&w.map(|z| z.conj()));
        assert!((y - expected).norm() < 1e-15);
    }

    #[test]
    fn identity_torus_auto() {
        let d = named_diffeo(
            &ManifoldModel::Torus(3),
            "torus_auto",
            &DiffeoParams {
                int_matrix: Some(IntMatrix::identity(3).0),
                ..Default::default()
            },
        )
        .unwrap();
        let x = ManifoldModel::Torus(3).random_point(1);
        assert_eq!(d.apply(&x), x);
    }

    #[test]
    fn involution_is_complement_and_squares_to_identity() {
        let m = ManifoldModel::GrassmannReal { k: 1, n: 2 };
        let d = named_diffeo(&m, "grassmann_involution", &DiffeoParams::default()).unwrap();
        let x = m.random_point(8);
        let y = d.apply(&x);
        let p = unflatten(x.as_slice(), 2);
        assert!((unflatten(y.as_slice(), 2) - (Matrix::identity(2, 2) - p)).norm() < 1e-15);
        assert!((d.apply(&y) - x).norm() < 1e-15);
    }

    #[test]
    fn grassmann_action_preserves_idempotence() {
        let m = ManifoldModel::GrassmannReal { k: 2, n: 4 };
        let d = &all_diffeos()[4];
        for seed in 0..20 {
            let y = d.apply(&m.random_point(seed));
            let p = unflatten(y.as_slice(), 4);
            assert!(max_abs(&(&p * &p - &p)) <= 1e-10);
        }
    }

    #[test]
    fn bad_params_are_rejected() {
        let m = ManifoldModel::GrassmannReal { k: 1, n: 2 };
        let r = named_diffeo(
            &m,
            "grassmann_action",
            &DiffeoParams {
                matrix: Some(vec![vec![1.0, 1.0], vec![0.0, 1.0]]),
                ..Default::default()
            },
        );
        assert!(matches!(r, Err(Error::BadParams(_))));
        let r = named_diffeo(
            &ManifoldModel::Torus(2),
            "torus_auto",
            &DiffeoParams {
                int_matrix: Some(vec![vec![2, 0], vec![0, 1]]),
                ..Default::default()
            },
        );
        assert!(matches!(r, Err(Error::BadParams(_))));
        let r = named_diffeo(&m, "no_such_map", &DiffeoParams::default());
        assert!(matches!(r, Err(Error::UnknownName(_))));
        let r = named_diffeo(
            &ManifoldModel::Sphere(2),
            "sphere_rotation",
            &DiffeoParams {
                plane: Some((0, 3)),
                ..Default::default()
            },
        );
        assert!(matches!(r, Err(Error::BadPlane(0, 3, 3))));
    }

    #[test]
    fn rp1_reflection_is_conjugation_of_the_angle() {
        let s = named_diffeo(&s1xs2_model(), "s1xs2_s", &DiffeoParams::default()).unwrap();
        let x = s1xs2_model().random_point(2);
        let y = s.apply(&x);
        let (c0, s0) = rp1_angle_phase(&x.as_slice()[0..4]);
        let (c1, s1) = rp1_angle_phase(&y.as_slice()[0..4]);
        assert!((c0 - c1).abs() < 1e-15 && (s0 + s1).abs() < 1e-15);
        assert!((s.apply(&y) - x).norm() < 1e-15);
    }

    #[test]
    fn power_map_on_chart() {
        let f3 = power_map_cp1(3);
        let z = Complex64::new(0.6, -0.3);
        let x = cp_point_from_vector(&DVector::from_vec(vec![z, Complex64::new(1.0, 0.0)]));
        let y = f3.apply(&x);
        let expected = cp_point_from_vector(&DVector::from_vec(vec![z.powu(3), Complex64::new(1.0, 0.0)]));
        assert!((y - expected).norm() < 1e-14);
        // north pole fixed
        let north = sphere_to_cp1(&Point::from_vec(vec![0.0, 0.0, 1.0]));
        assert!((f3.apply(&north) - &north).norm() < 1e-15);
    }
}
