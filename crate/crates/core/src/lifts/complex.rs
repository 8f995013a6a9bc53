use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Lift;
use crate::error::{Error, Result};
use crate::manifolds::Point;
use crate::numkernel::{complex_structure_conjugator, max_abs, Matrix};

/// `(max ‖Φ(Jv) − JΦ(v)‖, max ‖Φ(Jv) + JΦ(v)‖)` over seeded unit probes.
pub fn complex_linearity_defect(lift: &Lift, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let bundle = &lift.bundle;
    let j = bundle
        .ambient_j()
        .ok_or_else(|| Error::NoComplexStructure(bundle.descriptor.clone()))?;
    let mut c_res: f64 = 0.0;
    let mut a_res: f64 = 0.0;
    for i in 0..samples.max(1) as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        let x = bundle.base.random_point_with(&mut rng);
        let v = bundle.random_fiber_vector(&x, &mut rng);
        let input = Matrix::from_columns(&[v.clone(), &j * &v]);
        let (_, out) = lift.apply_columns(&x, &input)?;
        let j_phi = &j * out.column(0);
        c_res = c_res.max((out.column(1) - &j_phi).norm());
        a_res = a_res.max((out.column(1) + &j_phi).norm());
    }
    Ok((c_res, a_res))
}

/// Fiberwise correction of an ℝ-linear lift to a ℂ-linear one at `x`.
/// Everything is expressed in the orthonormal fiber bases of the bundle.
#[derive(Debug, Clone)]
pub struct ComplexCorrection {
    /// `y = φ⁻¹(x)`.
    pub preimage: Point,
    /// Fiber matrix `Φ_y : V_y → V_x`.
    pub fiber_matrix: Matrix,
    pub j_x: Matrix,
    /// `K_x = Φ_y J_y Φ_y⁻¹`.
    pub k: Matrix,
    /// `ψ_x` with `ψ_x⁻¹ J_x ψ_x = K_x`.
    pub psi: Matrix,
    /// `ψ_x` as an ambient endomorphism of the fiber over `x`.
    pub psi_ambient: Matrix,
    /// `‖ψ⁻¹ J_x ψ − K_x‖`.
    pub conjugation_residual: f64,
    /// `‖(ψ Φ_y) J_y − J_x (ψ Φ_y)‖`.
    pub commutation_residual: f64,
}

pub fn fiberwise_complex_correction(lift: &Lift, x: &Point) -> Result<ComplexCorrection> {
    let bundle = &lift.bundle;
    let j = bundle
        .ambient_j()
        .ok_or_else(|| Error::NoComplexStructure(bundle.descriptor.clone()))?;
    let y = lift.base_map.apply_inverse(x);
    let b_y = bundle.fiber_basis(&y);
    let b_x = bundle.fiber_basis(x);
    let (_, image) = lift.apply_columns(&y, &b_y)?;
    let m = b_x.transpose() * image;
    let m_inv = m.clone().try_inverse().ok_or(Error::Singular(0.0))?;
    let j_y = b_y.transpose() * &j * &b_y;
    let j_x = b_x.transpose() * &j * &b_x;
    let k = &m * &j_y * m_inv;
    let psi = complex_structure_conjugator(&j_x, &k)?;
    let psi_inv = psi.clone().try_inverse().ok_or(Error::Singular(0.0))?;
    let conjugation_residual = max_abs(&(&psi_inv * &j_x * &psi - &k));
    let corrected = &psi * &m;
    let commutation_residual = max_abs(&(&corrected * &j_y - &j_x * &corrected));
    let psi_ambient = &b_x * &psi * b_x.transpose();
    Ok(ComplexCorrection {
        preimage: y,
        fiber_matrix: m,
        j_x,
        k,
        psi,
        psi_ambient,
        conjugation_residual,
        commutation_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::{tangent_sphere, tautological_complex};
    use crate::lifts::{cpn_conjugation_lift, lift_from_homotopy};
    use crate::manifolds::cpn_phase_homotopy;
    use rand_distr::{Distribution, StandardNormal};
    use std::sync::Arc;

    #[test]
    fn identity_defects() {
        let id = Lift::identity(Arc::new(tautological_complex(1)));
        let (c, a) = complex_linearity_defect(&id, 20, 1).unwrap();
        assert!(c < 1e-14);
        assert!((a - 2.0).abs() < 1e-12);
        let id = Lift::identity(Arc::new(tangent_sphere(2)));
        assert!(matches!(
            complex_linearity_defect(&id, 5, 1),
            Err(Error::NoComplexStructure(_))
        ));
    }

    #[test]
    fn conjugation_is_anti_linear() {
        let l = cpn_conjugation_lift(1);
        let (c, a) = complex_linearity_defect(&l, 50, 4).unwrap();
        assert!((c - 2.0).abs() < 1e-10);
        assert!(a <= 1e-10);
        let x = l.bundle.base.random_point(3);
        let corr = fiberwise_complex_correction(&l, &x).unwrap();
        assert!(max_abs(&(&corr.k + &corr.j_x)) < 1e-10);
        assert!(corr.conjugation_residual <= 1e-8);
        assert!(corr.commutation_residual <= 1e-8);
    }

    #[test]
    fn linear_lift_needs_no_correction() {
        let b = Arc::new(tautological_complex(1));
        let h = cpn_phase_homotopy(1, 0, 2.0 * std::f64::consts::PI / 3.0).unwrap();
        let l = lift_from_homotopy(b.clone(), &h, 1024).unwrap();
        let (c, _) = complex_linearity_defect(&l, 20, 2).unwrap();
        assert!(c <= 1e-5);
        let id = Lift::identity(b);
        let corr = fiberwise_complex_correction(&id, &id.bundle.base.random_point(1)).unwrap();
        assert!(max_abs(&(&corr.psi - Matrix::identity(2, 2))) < 1e-10);
        assert!(corr.conjugation_residual <= 1e-10);
    }

    #[test]
    fn random_real_vertical_automorphism_is_corrected() {
        let b = Arc::new(tautological_complex(1));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = Matrix::identity(4, 4) + Matrix::from_fn(4, 4, |_, _| StandardNormal.sample(&mut rng)) * 0.2;
        let l = Lift::vertical_ambient(b.clone(), a, "random").unwrap();
        let (c, _) = complex_linearity_defect(&l, 10, 1).unwrap();
        assert!(c > 1e-3);
        for seed in 0..20 {
            let corr = fiberwise_complex_correction(&l, &b.base.random_point(seed)).unwrap();
            assert!(corr.conjugation_residual <= 1e-8);
            assert!(corr.commutation_residual <= 1e-8);
        }
    }
}
