//! Compatibility of local lift data on two patches.
//!
//! On `U₁` and `U₂` with orthonormal frames `s₁`, `s₂ = s₁·α`, a lift that
//! preserves both patches acts as `Φ(sᵢ(x)) = sᵢ(φ(x))·αᵢ(x)`. The local data
//! glue to one lift exactly when `α₂(x) = α(φ(x))⁻¹ α₁(x) α(x)` on the overlap.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifts::Lift;
use crate::manifolds::{Diffeo, ManifoldModel, Point};
use crate::numkernel::{max_abs, op_norm, plane_rotation, Matrix};

type MatrixField = Arc<dyn Fn(&Point) -> Matrix + Send + Sync>;
type Membership = Arc<dyn Fn(&Point) -> bool + Send + Sync>;

/// Sample points where an `O(r)`-valued field is defined, with the rule for
/// deciding whether a point belongs to the patch.
#[derive(Clone)]
pub struct PatchField {
    pub samples: Vec<Point>,
    contains: Membership,
    field: MatrixField,
}

impl std::fmt::Debug for PatchField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PatchField({} samples)", self.samples.len())
    }
}

impl PatchField {
    pub fn new(
        samples: Vec<Point>,
        contains: impl Fn(&Point) -> bool + Send + Sync + 'static,
        field: impl Fn(&Point) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        PatchField {
            samples,
            contains: Arc::new(contains),
            field: Arc::new(field),
        }
    }

    /// A field known only at the listed points; membership means matching a
    /// listed point to within `1e-9`.
    pub fn from_samples(values: Vec<(Point, Matrix)>) -> Self {
        let table = Arc::new(values);
        let lookup = {
            let t = table.clone();
            move |x: &Point| t.iter().find(|(p, _)| (p - x).norm() <= 1e-9).map(|(_, m)| m.clone())
        };
        let lookup2 = lookup.clone();
        PatchField {
            samples: table.iter().map(|(p, _)| p.clone()).collect(),
            contains: Arc::new(move |x| lookup(x).is_some()),
            field: Arc::new(move |x| lookup2(x).expect("point outside the sampled patch")),
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        (self.contains)(x)
    }

    pub fn at(&self, x: &Point) -> Matrix {
        (self.field)(x)
    }

    /// Largest `‖MᵀM − I‖` over the samples.
    pub fn orthogonality_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|x| {
                let m = self.at(x);
                let r = m.ncols();
                max_abs(&(m.transpose() * &m - Matrix::identity(r, r)))
            })
            .fold(0.0, f64::max)
    }
}

/// `αᵢ` on patch `Uᵢ`.
#[derive(Debug, Clone)]
pub struct LocalLiftDatum {
    pub patch_id: String,
    pub alpha: PatchField,
}

/// `α` with `s₂ = s₁·α` on the overlap.
#[derive(Debug, Clone)]
pub struct TransitionDatum {
    pub alpha: PatchField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluingReport {
    pub max_residual: f64,
    pub compatible: bool,
    pub overlap_samples: usize,
}

pub const GLUING_TOLERANCE: f64 = 1e-6;

fn ensure_invariant(patch: &PatchField, phi: &Diffeo, x: &Point) -> Result<()> {
    if !patch.contains(&phi.apply(x)) {
        return Err(Error::PatchNotInvariant(x.iter().copied().collect()));
    }
    Ok(())
}

/// `max ‖α₂(x) − α(φ(x))⁻¹ α₁(x) α(x)‖` over the overlap samples.
pub fn cocycle_compat_check(
    d1: &LocalLiftDatum,
    d2: &LocalLiftDatum,
    t: &TransitionDatum,
    phi: &Diffeo,
) -> Result<GluingReport> {
    for d in [d1, d2] {
        for x in &d.alpha.samples {
            ensure_invariant(&d.alpha, phi, x)?;
        }
    }
    let mut worst: f64 = 0.0;
    for x in &t.alpha.samples {
        if !d1.alpha.contains(x) || !d2.alpha.contains(x) {
            return Err(Error::PatchNotInvariant(x.iter().copied().collect()));
        }
        ensure_invariant(&t.alpha, phi, x)?;
        let y = phi.apply(x);
        let a_y = t.alpha.at(&y);
        let a_y_inv = a_y.clone().try_inverse().ok_or(Error::Singular(0.0))?;
        let expected = a_y_inv * d1.alpha.at(x) * t.alpha.at(x);
        worst = worst.max(op_norm(&(d2.alpha.at(x) - expected)));
    }
    Ok(GluingReport {
        max_residual: worst,
        compatible: worst <= GLUING_TOLERANCE,
        overlap_samples: t.alpha.samples.len(),
    })
}

/// A frame field on a patch: `n × k` orthonormal columns spanning the fiber.
pub struct FrameField {
    pub patch_id: String,
    pub contains: Membership,
    pub frame: MatrixField,
}

impl FrameField {
    pub fn new(
        patch_id: impl Into<String>,
        contains: impl Fn(&Point) -> bool + Send + Sync + 'static,
        frame: impl Fn(&Point) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        FrameField {
            patch_id: patch_id.into(),
            contains: Arc::new(contains),
            frame: Arc::new(frame),
        }
    }
}

/// Reads off `α₁`, `α₂` and `α` from a lift and two local frames:
/// `αᵢ(x) = sᵢ(φ(x))ᵀ Φ(sᵢ(x))` and `α(x) = s₁(x)ᵀ s₂(x)`. Samples are split
/// among the patches by membership.
pub fn local_data_from_lift(
    lift: &Lift,
    f1: &FrameField,
    f2: &FrameField,
    samples: &[Point],
) -> Result<(LocalLiftDatum, LocalLiftDatum, TransitionDatum)> {
    let alpha_of = |f: &FrameField| -> Result<LocalLiftDatum> {
        let pts: Vec<Point> = samples.iter().filter(|x| (f.contains)(x)).cloned().collect();
        for x in &pts {
            lift.apply_columns(x, &(f.frame)(x))?;
        }
        let frame = f.frame.clone();
        let l = lift.clone();
        Ok(LocalLiftDatum {
            patch_id: f.patch_id.clone(),
            alpha: PatchField {
                samples: pts,
                contains: f.contains.clone(),
                field: Arc::new(move |x| {
                    let (y, image) = l.apply_columns(x, &frame(x)).expect("lift evaluates on the patch");
                    frame(&y).transpose() * image
                }),
            },
        })
    };
    let d1 = alpha_of(f1)?;
    let d2 = alpha_of(f2)?;
    let (c1, c2) = (f1.contains.clone(), f2.contains.clone());
    let (s1, s2) = (f1.frame.clone(), f2.frame.clone());
    let overlap: Vec<Point> = samples.iter().filter(|x| c1(x) && c2(x)).cloned().collect();
    let t = TransitionDatum {
        alpha: PatchField {
            samples: overlap,
            contains: Arc::new(move |x| c1(x) && c2(x)),
            field: Arc::new(move |x| s1(x).transpose() * s2(x)),
        },
    };
    Ok((d1, d2, t))
}

/// Cayley transform of a seeded skew field linear in the coordinates: a
/// smooth `O(r)`-valued map.
pub fn seeded_orthogonal_field(dim: usize, r: usize, seed: u64) -> impl Fn(&Point) -> Matrix + Send + Sync + Clone {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<Matrix> = (0..=dim)
        .map(|_| {
            let g = Matrix::from_fn(r, r, |_, _| StandardNormal.sample(&mut rng));
            (&g - g.transpose()) * 0.25
        })
        .collect();
    move |x: &Point| {
        let mut s = coeffs[dim].clone();
        for (k, c) in coeffs.iter().take(dim).enumerate() {
            s += c * x[k];
        }
        let id = Matrix::identity(r, r);
        (&id - &s).try_inverse().expect("I − S is invertible for skew S") * (id + s)
    }
}

/// Local data that satisfy the cocycle condition by construction, on a
/// sampled base `model` with `φ` preserving both patches (each patch is the
/// whole sample set). With `perturb = Some(angle)`, `α₂` at the first
/// overlap sample is post-multiplied by a rotation by `angle`.
pub fn synthetic_data(
    model: &ManifoldModel,
    phi: &Diffeo,
    r: usize,
    samples: usize,
    seed: u64,
    perturb: Option<f64>,
) -> (LocalLiftDatum, LocalLiftDatum, TransitionDatum) {
    let dim = model.ambient_dim();
    let a1 = seeded_orthogonal_field(dim, r, seed);
    let a = seeded_orthogonal_field(dim, r, seed.wrapping_add(1));
    let mut points: Vec<Point> = (0..samples as u64).map(|i| model.random_point(seed.wrapping_add(100 + i))).collect();
    let images: Vec<Point> = points.iter().map(|x| phi.apply(x)).collect();
    points.extend(images);
    let table = |f: &dyn Fn(&Point) -> Matrix| points.iter().map(|p| (p.clone(), f(p))).collect::<Vec<_>>();
    let alpha2 = |x: &Point| {
        let y = phi.apply(x);
        a(&y).transpose() * a1(x) * a(x)
    };
    let mut t2 = table(&alpha2);
    if let Some(angle) = perturb {
        t2[0].1 = &t2[0].1 * plane_rotation(r, 0, 1, angle);
    }
    let mut overlap = PatchField::from_samples(table(&a));
    overlap.samples.truncate(samples);
    (
        LocalLiftDatum {
            patch_id: "U1".into(),
            alpha: PatchField::from_samples(table(&a1)),
        },
        LocalLiftDatum {
            patch_id: "U2".into(),
            alpha: PatchField::from_samples(t2),
        },
        TransitionDatum { alpha: overlap },
    )
}

/// Frames of `γ¹(ℝ²)` on the two standard charts of `ℝP¹`:
/// `s₁ = Pe₁/|Pe₁|` where `P₀₀ > 1/10`, `s₂ = Pe₂/|Pe₂|` where `P₁₁ > 1/10`.
pub fn rp1_frames() -> (FrameField, FrameField) {
    let frame = |i: usize| {
        move |x: &Point| {
            let col = Matrix::from_column_slice(2, 1, &[x[i], x[2 + i]]);
            let n = col.norm();
            col / n
        }
    };
    (
        FrameField::new("P00>0.1", |x| x[0] > 0.1, frame(0)),
        FrameField::new("P11>0.1", |x| x[3] > 0.1, frame(1)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifts::grassmann_orthogonal_lift;
    use crate::numkernel::Vector;

    fn identity_data(model: &ManifoldModel) -> (LocalLiftDatum, LocalLiftDatum, TransitionDatum) {
        let pts: Vec<Point> = (0..10).map(|s| model.random_point(s)).collect();
        let field = || PatchField::new(pts.clone(), |_| true, |_| Matrix::identity(2, 2));
        (
            LocalLiftDatum {
                patch_id: "a".into(),
                alpha: field(),
            },
            LocalLiftDatum {
                patch_id: "b".into(),
                alpha: field(),
            },
            TransitionDatum { alpha: field() },
        )
    }

    #[test]
    fn identity_data_are_compatible() {
        let m = ManifoldModel::Sphere(2);
        let (d1, d2, t) = identity_data(&m);
        let r = cocycle_compat_check(&d1, &d2, &t, &Diffeo::identity(m)).unwrap();
        assert_eq!(r.max_residual, 0.0);
        assert!(r.compatible);
    }

    #[test]
    fn synthetic_data_and_perturbation() {
        let m = ManifoldModel::Sphere(2);
        let phi = Diffeo::new("antipodal", m.clone(), |x| -x, |x| -x);
        let (d1, d2, t) = synthetic_data(&m, &phi, 3, 30, 5, None);
        assert!(d1.alpha.orthogonality_defect() < 1e-12);
        let r = cocycle_compat_check(&d1, &d2, &t, &phi).unwrap();
        assert!(r.max_residual <= 1e-12 && r.compatible);
        let (d1, d2, t) = synthetic_data(&m, &phi, 3, 30, 5, Some(0.1));
        let r = cocycle_compat_check(&d1, &d2, &t, &phi).unwrap();
        assert!(!r.compatible);
        assert!((r.max_residual - 0.1).abs() <= 0.01, "{}", r.max_residual);
    }

    #[test]
    fn leaving_a_patch_is_an_error() {
        let m = ManifoldModel::Sphere(2);
        let phi = Diffeo::new("antipodal", m.clone(), |x| -x, |x| -x);
        let (d1, _, _) = synthetic_data(&m, &phi, 2, 5, 1, None);
        let north = PatchField::new(vec![Point::from_vec(vec![0.0, 0.0, 1.0])], |x| x[2] > 0.0, |_| Matrix::identity(2, 2));
        let d2 = LocalLiftDatum {
            patch_id: "north".into(),
            alpha: north.clone(),
        };
        let t = TransitionDatum { alpha: north };
        assert!(matches!(cocycle_compat_check(&d1, &d2, &t, &phi), Err(Error::PatchNotInvariant(_))));
    }

    #[test]
    fn rp1_reflection_glues() {
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]));
        let lift = grassmann_orthogonal_lift(&d, 1).unwrap();
        let (f1, f2) = rp1_frames();
        let samples: Vec<Point> = (0..40).map(|s| lift.bundle.base.random_point(s)).collect();
        let (d1, d2, t) = local_data_from_lift(&lift, &f1, &f2, &samples).unwrap();
        assert!(!t.alpha.samples.is_empty());
        let r = cocycle_compat_check(&d1, &d2, &t, &lift.base_map).unwrap();
        assert!(r.compatible && r.max_residual < 1e-12, "{r:?}");
        // Swapping the roles of the patches inverts the transition.
        let t_inv = TransitionDatum {
            alpha: PatchField::new(t.alpha.samples.clone(), |x| x[0] > 0.1 && x[3] > 0.1, move |x| {
                (f2.frame)(x).transpose() * (f1.frame)(x)
            }),
        };
        let r2 = cocycle_compat_check(&d2, &d1, &t_inv, &lift.base_map).unwrap();
        assert!((r2.max_residual - r.max_residual).abs() < 1e-12);
    }

    #[test]
    fn constant_frame_change_keeps_the_verdict() {
        let m = ManifoldModel::Sphere(2);
        let phi = Diffeo::new("antipodal", m.clone(), |x| -x, |x| -x);
        for perturb in [None, Some(0.1)] {
            let (d1, d2, t) = synthetic_data(&m, &phi, 2, 20, 3, perturb);
            let base = cocycle_compat_check(&d1, &d2, &t, &phi).unwrap();
            // s₁ ↦ s₁ g: α₁ ↦ g⁻¹ α₁ g and α ↦ g⁻¹ α.
            let g = plane_rotation(2, 0, 1, 0.7);
            let gt = g.transpose();
            let (a1, a1c) = (d1.alpha.clone(), d1.alpha.clone());
            let (a, ac) = (t.alpha.clone(), t.alpha.clone());
            let gt1 = gt.clone();
            let d1g = LocalLiftDatum {
                patch_id: "U1g".into(),
                alpha: PatchField::new(a1.samples.clone(), move |x| a1c.contains(x), move |x| &gt1 * a1.at(x) * &g),
            };
            let tg = TransitionDatum {
                alpha: PatchField::new(a.samples.clone(), move |x| ac.contains(x), move |x| &gt * a.at(x)),
            };
            let changed = cocycle_compat_check(&d1g, &d2, &tg, &phi).unwrap();
            assert_eq!(base.compatible, changed.compatible);
            assert!((base.max_residual - changed.max_residual).abs() < 1e-10);
        }
    }
}
