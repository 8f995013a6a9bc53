use std::sync::Arc;

use super::Lift;
use crate::error::{Error, Result};
use crate::manifolds::Point;
use crate::numkernel::{max_abs, op_norm, polar_two_metric, Matrix};

/// Polar factors `M = Ξ Ψ` of a fiber matrix in orthonormal bases.
#[derive(Debug, Clone)]
pub struct PolarFactors {
    pub matrix: Matrix,
    pub psi: Matrix,
    pub xi: Matrix,
    /// `‖Ξ Ψ − M‖`.
    pub factorization_residual: f64,
}

pub fn polar_factors(lift: &Lift, x: &Point) -> Result<PolarFactors> {
    let fm = lift.fiber_matrix(x)?;
    let r = lift.bundle.real_rank;
    let id = Matrix::identity(r, r);
    let (psi, xi) = polar_two_metric(&fm.matrix, &id, &id)?;
    let factorization_residual = op_norm(&(&xi * &psi - &fm.matrix));
    Ok(PolarFactors {
        matrix: fm.matrix,
        psi,
        xi,
        factorization_residual,
    })
}

/// Replaces every fiber map by the isometric factor of its polar
/// decomposition; the base map is unchanged.
pub fn metrize(lift: &Lift) -> Lift {
    let inner = lift.clone();
    let r = lift.bundle.real_rank;
    Lift::new(
        lift.bundle.clone(),
        lift.base_map.clone(),
        format!("metrize({})", lift.provenance),
        lift.tier,
        move |x, v| {
            let fm = inner.fiber_matrix(x)?;
            let id = Matrix::identity(r, r);
            let (psi, _) = polar_two_metric(&fm.matrix, &id, &id)?;
            Ok((fm.action_point.clone(), &fm.target_basis * psi * (fm.source_basis.transpose() * v)))
        },
    )
}

/// Pushes an orthonormal frame of the fiber over `x` through an isometric
/// lift, giving an orthonormal frame over `φ(x)`.
pub fn frame_lift_view(lift: &Lift, x: &Point, frame: &Matrix) -> Result<Matrix> {
    let bundle: &Arc<_> = &lift.bundle;
    let r = frame.ncols();
    let gram = frame.transpose() * frame;
    let q = bundle.projector(x);
    let defect = max_abs(&(gram - Matrix::identity(r, r))).max(max_abs(&(&q * frame - frame)));
    if r != bundle.real_rank || defect > 1e-8 {
        return Err(Error::NotOrthonormal(defect));
    }
    let fm = lift.fiber_matrix(x)?;
    let iso = max_abs(&(fm.matrix.transpose() * &fm.matrix - Matrix::identity(r, r)));
    if iso > 1e-8 {
        return Err(Error::NotIsometric(iso));
    }
    let (_, out) = lift.apply_columns(x, frame)?;
    let out_defect = max_abs(&(out.transpose() * &out - Matrix::identity(r, r)));
    if out_defect > 1e-6 {
        return Err(Error::NotOrthonormal(out_defect));
    }
    Ok(out)
}
