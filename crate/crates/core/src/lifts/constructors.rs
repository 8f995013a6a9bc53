use std::sync::Arc;

use num_complex::Complex64;

use super::Lift;
use crate::bundles::{
    direct_sum, pullback, tangent_sphere, tautological_complex, tautological_real, torus_line, torus_line_section,
    transport_columns, BundleModel, TransportOptions,
};
use crate::error::{Error, Result};
use crate::lattice::{mod2_defect, IntMatrix};
use crate::manifolds::{
    named_diffeo, power_map_cp1, reduce_mod_one, rotation_homotopy, sphere_to_cp1_diffeo, Diffeo, DiffeoParams,
    Homotopy, ManifoldModel, Point,
};
use crate::manifolds::{rp1_angle_phase, s1xs2_model, torus_auto};
use crate::numkernel::{ambient_conjugation, flatten, max_abs, min_singular_value, unflatten, Matrix, Vector};
use crate::tolerance::{Tier, FD_STEP};

/// Seeded base points on which constructors certify their preconditions.
const CONSTRUCTION_PROBES: u64 = 64;

/// Transport along the tracks `t ↦ h(t, x)` of a homotopy from the identity.
pub fn lift_from_homotopy(bundle: Arc<BundleModel>, h: &Homotopy, steps: usize) -> Result<Lift> {
    lift_from_homotopy_with(bundle, h, TransportOptions::with_steps(steps))
}

pub fn lift_from_homotopy_with(bundle: Arc<BundleModel>, h: &Homotopy, opts: TransportOptions) -> Result<Lift> {
    if h.model != bundle.base {
        return Err(Error::BadParams(format!(
            "homotopy on {} cannot move the base {} of {}",
            h.model, bundle.base, bundle.descriptor
        )));
    }
    if opts.steps < 16 {
        return Err(Error::TooFewSteps(opts.steps));
    }
    let b = bundle.clone();
    let h2 = h.clone();
    Ok(Lift::new(
        bundle,
        h.endpoint().clone(),
        format!("lift_from_homotopy({}, steps = {})", h.name, opts.steps),
        Tier::Transport,
        move |x, v| {
            let out = transport_columns(&b, &h2.track(x), v, &opts)?;
            Ok((h2.at(1.0, x), out))
        },
    ))
}

fn sphere_jacobian(phi: &Diffeo, x: &Point, basis: &Matrix, delta: f64) -> Matrix {
    let y = phi.apply(x);
    let dim = x.len();
    let proj = Matrix::identity(dim, dim) - &y * y.transpose();
    let (c, s) = (delta.cos(), delta.sin());
    let cols: Vec<Vector> = basis
        .column_iter()
        .map(|e| {
            let plus = phi.apply(&(x * c + e * s));
            let minus = phi.apply(&(x * c - e * s));
            &proj * (plus - minus) / (2.0 * s)
        })
        .collect();
    Matrix::from_columns(&cols)
}

/// `dφ` on `TSⁿ` by central differences along great circles, projected to
/// the tangent plane at `φ(x)`.
pub fn differential_lift(phi: &Diffeo) -> Result<Lift> {
    differential_lift_with_step(phi, FD_STEP)
}

pub fn differential_lift_with_step(phi: &Diffeo, delta: f64) -> Result<Lift> {
    let ManifoldModel::Sphere(n) = phi.source else {
        return Err(Error::BadParams(format!("differential lift needs a sphere, got {}", phi.source)));
    };
    let bundle = Arc::new(tangent_sphere(n));
    let apply = {
        let phi = phi.clone();
        let b = bundle.clone();
        move |x: &Point| -> Result<(Point, Matrix, Matrix)> {
            let basis = b.fiber_basis(x);
            let jac = sphere_jacobian(&phi, x, &basis, delta);
            let sv = min_singular_value(&jac);
            if sv < 1e-6 {
                return Err(Error::DegenerateJacobian {
                    point: x.iter().copied().collect(),
                    singular_value: sv,
                });
            }
            Ok((phi.apply(x), jac, basis))
        }
    };
    for seed in 0..CONSTRUCTION_PROBES {
        apply(&bundle.base.random_point(seed))?;
    }
    Ok(Lift::new(
        bundle,
        phi.clone(),
        format!("differential_lift({})", phi.name),
        Tier::Transport,
        move |x, v| {
            let (y, jac, basis) = apply(x)?;
            Ok((y, jac * (basis.transpose() * v)))
        },
    ))
}

/// Where [`ambient_projection_lift`] sends a fiber vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionTarget {
    /// `v ↦ Q(φ(x)) v`, landing in the fiber over `φ(x)`.
    Fiber,
    /// `v ↦ (I − Q(φ(x))) v`. Lands in the orthogonal complement of the
    /// target fiber, so it is not a lift of the bundle itself; kept to
    /// compare against the fiber-correct variant.
    Complement,
}

/// Lift obtained by projecting the ambient vector onto the target fiber,
/// certified injective on seeded probes.
pub fn ambient_projection_lift(bundle: Arc<BundleModel>, phi: &Diffeo, target: ProjectionTarget) -> Result<Lift> {
    if phi.source != bundle.base {
        return Err(Error::BadParams(format!("{} does not act on {}", phi.name, bundle.base)));
    }
    let n = bundle.ambient_fiber_dim;
    let projection = {
        let b = bundle.clone();
        let phi = phi.clone();
        move |x: &Point| -> Result<(Point, Matrix)> {
            let y = phi.apply(x);
            let q = b.projector(&y);
            let p = match target {
                ProjectionTarget::Fiber => q,
                ProjectionTarget::Complement => Matrix::identity(n, n) - q,
            };
            let sv = min_singular_value(&(&p * b.fiber_basis(x)));
            if sv <= 1e-6 {
                return Err(Error::NonInjective {
                    point: x.iter().copied().collect(),
                    singular_value: sv,
                });
            }
            Ok((y, p))
        }
    };
    for seed in 0..CONSTRUCTION_PROBES {
        projection(&bundle.base.random_point(seed))?;
    }
    let tag = match target {
        ProjectionTarget::Fiber => "fiber",
        ProjectionTarget::Complement => "complement",
    };
    Ok(Lift::new(
        bundle,
        phi.clone(),
        format!("ambient_projection_lift({}, {tag})", phi.name),
        Tier::Exact,
        move |x, v| {
            let (y, p) = projection(x)?;
            Ok((y, p * v))
        },
    ))
}

fn matrix_rows(a: &Matrix) -> Vec<Vec<f64>> {
    a.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// `(S, v) ↦ (A S, A v)` on `γᵏ(ℝⁿ)` for orthogonal `A`.
pub fn grassmann_orthogonal_lift(a: &Matrix, k: usize) -> Result<Lift> {
    let n = a.nrows();
    if !a.is_square() || k == 0 || k >= n {
        return Err(Error::BadParams(format!("need a square A and 0 < k < n, got {:?}, k = {k}", a.shape())));
    }
    let defect = max_abs(&(a * a.transpose() - Matrix::identity(n, n)));
    if defect > 1e-10 {
        return Err(Error::BadParams(format!("A is not orthogonal (‖AAᵀ − I‖ = {defect:e})")));
    }
    let bundle = Arc::new(tautological_real(k, n));
    let base = named_diffeo(
        &bundle.base,
        "grassmann_action",
        &DiffeoParams {
            matrix: Some(matrix_rows(a)),
            ..Default::default()
        },
    )?;
    let a = a.clone();
    Ok(Lift::new(bundle, base, "grassmann_orthogonal_lift", Tier::Exact, move |x, v| {
        let p = unflatten(x.as_slice(), n);
        Ok((flatten(&(&a * p * a.transpose())), &a * v))
    }))
}

/// Entrywise conjugation `(P, w) ↦ (P̄, w̄)` on `γ¹(ℂⁿ⁺¹)`.
pub fn cpn_conjugation_lift(n: usize) -> Lift {
    let bundle = Arc::new(tautological_complex(n));
    let base = named_diffeo(&bundle.base, "cpn_conjugation", &DiffeoParams::default()).expect("registered");
    let c = ambient_conjugation(n + 1);
    let side = 2 * (n + 1);
    Lift::new(bundle, base, format!("cpn_conjugation_lift({n})"), Tier::Exact, move |x, v| {
        let p = unflatten(x.as_slice(), side);
        Ok((flatten(&(&c * p * &c)), &c * v))
    })
}

/// `(f_n ∘ ι)* γ¹(ℂ²)` over `S²`, where `ι : S² → CP¹` is the standard
/// identification and `f_n[z₀, z₁] = [z₀ⁿ, z₁ⁿ]`.
pub fn sphere_power_bundle(n: u32) -> BundleModel {
    let map = power_map_cp1(n).after(&sphere_to_cp1_diffeo().as_map());
    let mut b = pullback(&map, &tautological_complex(1)).expect("targets agree");
    b.descriptor = format!("sphere_power_bundle({n})");
    b
}

/// Lift of `σ(x₁, x₂, x₃) = (x₁, −x₂, x₃)` to [`sphere_power_bundle`] by
/// conjugating the ambient `ℂ²` vector; `f_n` commutes with conjugation.
pub fn pullback_conjugation_lift(n: u32) -> Lift {
    let bundle = Arc::new(sphere_power_bundle(n));
    let base = named_diffeo(&bundle.base, "sigma", &DiffeoParams::default()).expect("registered");
    let c = ambient_conjugation(2);
    Lift::new(bundle, base, format!("pullback_conjugation_lift({n})"), Tier::Exact, move |x, v| {
        Ok((Point::from_vec(vec![x[0], -x[1], x[2]]), &c * v))
    })
}

/// `s·u(x) ↦ s·u(Ax)` on `L_b`; refused unless `bᵀA ≡ bᵀ (mod 2)`.
pub fn torus_line_lift(a: &IntMatrix, bits: &[u8]) -> Result<Lift> {
    let bundle = Arc::new(torus_line(bits)?);
    let n = bits.len();
    if a.dim() != n {
        return Err(Error::BadParams(format!("A is {}x{}, b has {n} entries", a.dim(), a.dim())));
    }
    let defect = mod2_defect(a, bits);
    if let Some(i) = defect.iter().position(|&d| d == 1) {
        let mut shift = vec![0i64; n];
        shift[i] = 1;
        return Err(Error::CriterionFails {
            matrix: a.rows().to_vec(),
            bits: bits.to_vec(),
            witness_point: vec![0.0; n],
            witness_shift: shift,
        });
    }
    let base = torus_auto(a)?;
    let af = Matrix::from_row_iterator(n, n, a.to_f64_rows().into_iter().flatten());
    let b = Vector::from_iterator(n, bits.iter().map(|&x| x as f64));
    Ok(Lift::new(bundle, base, "torus_line_lift", Tier::Exact, move |x, v| {
        let y = &af * x;
        let (ux, uy) = (torus_line_section(&b, x), torus_line_section(&b, &y));
        Ok((reduce_mod_one(&y), uy * (ux.transpose() * v)))
    }))
}

/// The fiber map a torus lift would use on the representative `x + m`
/// instead of `x`, applied to `u(x)`; differs from the map on `x` by the sign
/// `(−1)^{b·(A − I)m}`.
pub fn torus_representative_image(a: &IntMatrix, bits: &[u8], x: &[f64], shift: &[i64]) -> (Vector, Vector) {
    let n = bits.len();
    let af = Matrix::from_row_iterator(n, n, a.to_f64_rows().into_iter().flatten());
    let b = Vector::from_iterator(n, bits.iter().map(|&v| v as f64));
    let x0 = Point::from_column_slice(x);
    let x1 = &x0 + Point::from_iterator(n, shift.iter().map(|&m| m as f64));
    let v = torus_line_section(&b, &x0);
    let via = |rep: &Point| {
        let y = &af * rep;
        torus_line_section(&b, &y) * torus_line_section(&b, rep).dot(&v)
    };
    (via(&x0), via(&x1))
}

/// `Φ₁ ⊕ Φ₂` over `φ₁ × φ₂`.
pub fn direct_sum_lift(l1: &Lift, l2: &Lift) -> Lift {
    let bundle = Arc::new(direct_sum(&l1.bundle, &l2.bundle));
    let split_at = l1.bundle.base.ambient_dim();
    let n1 = l1.bundle.ambient_fiber_dim;
    let (a, b) = (l1.clone(), l2.clone());
    Lift::new(
        bundle,
        l1.base_map.product(&l2.base_map),
        format!("direct_sum({},{})", l1.provenance, l2.provenance),
        l1.tier.max(l2.tier),
        move |x, v| {
            let x1 = x.rows(0, split_at).clone_owned();
            let x2 = x.rows(split_at, x.len() - split_at).clone_owned();
            let (y1, w1) = a.apply_columns(&x1, &v.rows(0, n1).clone_owned())?;
            let (y2, w2) = b.apply_columns(&x2, &v.rows(n1, v.nrows() - n1).clone_owned())?;
            let mut w = Matrix::zeros(v.nrows(), v.ncols());
            w.rows_mut(0, n1).copy_from(&w1);
            w.rows_mut(n1, v.nrows() - n1).copy_from(&w2);
            Ok((ManifoldModel::join(&y1, &y2), w))
        },
    )
}

/// `γ¹(ℝ²) ⊕ sphere_power_bundle(n)` over `ℝP¹ × S² ≅ S¹ × S²`.
pub fn s1xs2_bundle(n: u32) -> BundleModel {
    direct_sum(&tautological_real(1, 2), &sphere_power_bundle(n))
}

/// Lifts of the generators `a`, `r`, `s` of the diffeotopy group of
/// `S¹ × S²` to [`s1xs2_bundle`].
pub fn s1xs2_generator_lift(name: &str, n: u32, steps: usize) -> Result<Lift> {
    if n == 0 {
        return Err(Error::BadParams("power n must be at least 1".into()));
    }
    let model = s1xs2_model();
    let rp1 = Arc::new(tautological_real(1, 2));
    let sphere = Arc::new(sphere_power_bundle(n));
    let base = |g: &str| named_diffeo(&model, g, &DiffeoParams::default());
    let mut lift = match name {
        "s" => {
            let d = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]));
            direct_sum_lift(&grassmann_orthogonal_lift(&d, 1)?, &Lift::identity(sphere))
        }
        "a" => {
            let h = rotation_homotopy(&sphere.base, (0, 2), std::f64::consts::PI)?;
            let rot = lift_from_homotopy(sphere.clone(), &h, steps)?;
            let anti = super::compose(&pullback_conjugation_lift(n), &rot)?;
            direct_sum_lift(&Lift::identity(rp1), &anti)
        }
        "r" => {
            let bundle = Arc::new(s1xs2_bundle(n));
            let base_map = base("s1xs2_r")?;
            return Ok(Lift::new(bundle, base_map, format!("s1xs2_generator_lift(r, {n})"), Tier::Exact, move |x, v| {
                let (c, s) = rp1_angle_phase(&x.as_slice()[0..4]);
                let mut y = x.clone();
                y[4] = c * x[4] - s * x[5];
                y[5] = s * x[4] + c * x[5];
                let z = Complex64::new(c, s).powu(n);
                let mut w = v.clone();
                for k in 0..v.ncols() {
                    let (re, im) = (v[(2, k)], v[(3, k)]);
                    w[(2, k)] = z.re * re - z.im * im;
                    w[(3, k)] = z.im * re + z.re * im;
                }
                Ok((y, w))
            }));
        }
        other => return Err(Error::UnknownName(format!("S¹×S² generator `{other}`"))),
    };
    lift.base_map = base(&format!("s1xs2_{name}"))?;
    lift.provenance = format!("s1xs2_generator_lift({name}, {n})");
    Ok(lift)
}
