//! Lifts of diffeomorphisms to bundle automorphisms.
//!
//! A [`Lift`] is a closure: given a base point `x` and fiber vectors over `x`
//! (as ambient columns) it returns the image point and the image vectors over
//! `φ(x)`. Fiber matrices are extracted on demand in orthonormal fiber bases.

mod check;
mod complex;
mod constructors;
mod metric;

pub use check::{check_lift, check_lift_with, LiftReport, Verdicts};
pub use complex::{complex_linearity_defect, fiberwise_complex_correction, ComplexCorrection};
pub use constructors::{
    ambient_projection_lift, cpn_conjugation_lift, differential_lift, differential_lift_with_step, direct_sum_lift,
    grassmann_orthogonal_lift, lift_from_homotopy, lift_from_homotopy_with, pullback_conjugation_lift, s1xs2_bundle,
    s1xs2_generator_lift, sphere_power_bundle, torus_line_lift, torus_representative_image, ProjectionTarget,
};
pub use metric::{frame_lift_view, metrize, polar_factors, PolarFactors};

use std::sync::Arc;

use crate::bundles::{BundleModel, FiberVector};
use crate::error::{Error, Result};
use crate::manifolds::{Diffeo, Point};
use crate::numkernel::Matrix;
use crate::tolerance::Tier;

pub type FiberActionFn = Arc<dyn Fn(&Point, &Matrix) -> Result<(Point, Matrix)> + Send + Sync>;

#[derive(Clone)]
pub struct Lift {
    pub bundle: Arc<BundleModel>,
    pub base_map: Diffeo,
    action: FiberActionFn,
    pub provenance: String,
    pub tier: Tier,
}

impl std::fmt::Debug for Lift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Lift({} on {} over {})", self.provenance, self.bundle.descriptor, self.base_map.name)
    }
}

/// Fiber matrix of a lift at `x` in orthonormal bases of the source fiber
/// and of the fiber over `base_map(x)`.
#[derive(Debug, Clone)]
pub struct FiberMatrix {
    pub source_basis: Matrix,
    /// Point returned by the fiber action itself.
    pub action_point: Point,
    pub target_point: Point,
    pub target_basis: Matrix,
    pub matrix: Matrix,
}

impl Lift {
    pub fn new(
        bundle: Arc<BundleModel>,
        base_map: Diffeo,
        provenance: impl Into<String>,
        tier: Tier,
        action: impl Fn(&Point, &Matrix) -> Result<(Point, Matrix)> + Send + Sync + 'static,
    ) -> Self {
        Lift {
            bundle,
            base_map,
            action: Arc::new(action),
            provenance: provenance.into(),
            tier,
        }
    }

    pub fn identity(bundle: Arc<BundleModel>) -> Self {
        let base = Diffeo::identity(bundle.base.clone());
        Lift::new(bundle, base, "identity", Tier::Exact, |x, v| Ok((x.clone(), v.clone())))
    }

    /// Vertical automorphism `v ↦ Q(x) A v` for a fixed ambient matrix `A`.
    /// Invertible on fibers whenever `‖A − I‖ < 1`.
    pub fn vertical_ambient(bundle: Arc<BundleModel>, a: Matrix, provenance: impl Into<String>) -> Result<Self> {
        let n = bundle.ambient_fiber_dim;
        if a.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "vertical action must be {n}x{n}, got {:?}",
                a.shape()
            )));
        }
        let base = Diffeo::identity(bundle.base.clone());
        let b = bundle.clone();
        Ok(Lift::new(bundle, base, provenance, Tier::Exact, move |x, v| {
            Ok((x.clone(), b.projector(x) * (&a * v)))
        }))
    }

    /// Applies the lift to ambient columns in the fiber over `x`.
    pub fn apply_columns(&self, x: &Point, columns: &Matrix) -> Result<(Point, Matrix)> {
        (self.action)(x, columns)
    }

    pub fn apply(&self, v: &FiberVector) -> Result<FiberVector> {
        let cols = Matrix::from_column_slice(v.ambient.len(), 1, v.ambient.as_slice());
        let (y, out) = self.apply_columns(&v.base_point, &cols)?;
        Ok(FiberVector {
            base_point: y,
            ambient: out.column(0).clone_owned(),
        })
    }

    pub fn fiber_matrix(&self, x: &Point) -> Result<FiberMatrix> {
        let source_basis = self.bundle.fiber_basis(x);
        let (action_point, image) = self.apply_columns(x, &source_basis)?;
        let target_point = self.base_map.apply(x);
        let target_basis = self.bundle.fiber_basis(&target_point);
        let matrix = target_basis.transpose() * image;
        Ok(FiberMatrix {
            source_basis,
            action_point,
            target_point,
            target_basis,
            matrix,
        })
    }
}

/// `outer ∘ inner`.
pub fn compose(outer: &Lift, inner: &Lift) -> Result<Lift> {
    if outer.bundle.descriptor != inner.bundle.descriptor {
        return Err(Error::BundleMismatch(
            outer.bundle.descriptor.clone(),
            inner.bundle.descriptor.clone(),
        ));
    }
    let (f, g) = (outer.action.clone(), inner.action.clone());
    Ok(Lift {
        bundle: inner.bundle.clone(),
        base_map: outer.base_map.after(&inner.base_map),
        action: Arc::new(move |x, v| {
            let (y, w) = g(x, v)?;
            f(&y, &w)
        }),
        provenance: format!("compose({},{})", outer.provenance, inner.provenance),
        tier: outer.tier.max(inner.tier),
    })
}

/// Inverse lift: over `x` it solves `Φ_{φ⁻¹(x)} u = v` in fiber bases.
pub fn invert(lift: &Lift) -> Lift {
    let inner = lift.clone();
    Lift {
        bundle: lift.bundle.clone(),
        base_map: lift.base_map.inverse(),
        action: Arc::new(move |x, v| {
            let y = inner.base_map.apply_inverse(x);
            let b_y = inner.bundle.fiber_basis(&y);
            let b_x = inner.bundle.fiber_basis(x);
            let (_, image) = inner.apply_columns(&y, &b_y)?;
            let m = b_x.transpose() * image;
            let coords = b_x.transpose() * v;
            let lu = m.lu();
            let solved = lu.solve(&coords).ok_or(Error::Singular(0.0))?;
            Ok((y, b_y * solved))
        }),
        provenance: format!("invert({})", lift.provenance),
        tier: lift.tier,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::{tangent_sphere, tautological_real, trivial};
    use crate::manifolds::{named_diffeo, rotation_homotopy, DiffeoParams, ManifoldModel};
    use crate::numkernel::max_abs;

    #[test]
    fn identity_and_vertical_fiber_matrices() {
        let b = Arc::new(tautological_real(2, 4));
        let id = Lift::identity(b.clone());
        let x = b.base.random_point(3);
        let fm = id.fiber_matrix(&x).unwrap();
        assert!(max_abs(&(fm.matrix - Matrix::identity(2, 2))) < 1e-12);

        let t = Arc::new(trivial(ManifoldModel::Sphere(2), 3));
        let a = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 2.0, 2.0]));
        let v = Lift::vertical_ambient(t.clone(), a, "scale").unwrap();
        let fm = v.fiber_matrix(&t.base.random_point(1)).unwrap();
        assert!((fm.matrix.determinant().abs() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let b = Arc::new(tangent_sphere(2));
        let h = rotation_homotopy(&b.base, (0, 2), 0.8).unwrap();
        let l = lift_from_homotopy(b.clone(), &h, 256).unwrap();
        let round = compose(&l, &invert(&l)).unwrap();
        for seed in 0..10 {
            let x = b.base.random_point(seed);
            let fm = round.fiber_matrix(&x).unwrap();
            assert!((&fm.target_point - &x).norm() < 1e-12);
            assert!(max_abs(&(fm.matrix - Matrix::identity(2, 2))) < 1e-8);
        }
    }

    #[test]
    fn mismatched_bundles_are_rejected() {
        let a = Lift::identity(Arc::new(tangent_sphere(2)));
        let b = Lift::identity(Arc::new(trivial(ManifoldModel::Sphere(2), 2)));
        assert!(matches!(compose(&a, &b), Err(Error::BundleMismatch(_, _))));
    }

    #[test]
    fn base_maps_compose() {
        let b = Arc::new(tangent_sphere(2));
        let r1 = Lift::identity(b.clone());
        let mut r2 = r1.clone();
        r2.base_map = named_diffeo(
            &b.base,
            "sphere_rotation",
            &DiffeoParams {
                plane: Some((0, 1)),
                angle: Some(0.3),
                ..Default::default()
            },
        )
        .unwrap();
        let c = compose(&r2, &r1).unwrap();
        let x = b.base.random_point(2);
        assert!((c.base_map.apply(&x) - r2.base_map.apply(&x)).norm() < 1e-15);
    }
}
