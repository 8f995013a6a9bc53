use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::Lift;
use crate::numkernel::{min_singular_value, op_norm, Matrix};
use crate::tolerance::{Tolerances, MIN_SINGULAR};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    pub base: bool,
    pub fiber: bool,
    pub linearity: bool,
    pub invertible: bool,
    pub isometric: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complex_linear: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anti_linear: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftReport {
    pub samples: usize,
    pub tolerance: f64,
    /// Distance between the point returned by the fiber action and `φ(x)`.
    pub base_residual: f64,
    /// `‖Q(φ(x)) Φ(v) − Φ(v)‖` for unit `v`.
    pub fiber_residual: f64,
    pub linearity_residual: f64,
    pub min_singular_value: f64,
    /// `‖MᵀM − I‖` for the fiber matrix in orthonormal bases.
    pub isometry_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complex_linearity_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anti_linearity_residual: Option<f64>,
    /// Smallest `(c + a) / 2‖Φ(v)‖` over probes; the triangle inequality
    /// forces this to be at least 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complex_guard: Option<f64>,
    /// Probes whose fiber action returned an error.
    pub failed_probes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_error: Option<String>,
    pub verdicts: Verdicts,
}

impl LiftReport {
    /// Base, fiber, linearity and invertibility all pass.
    pub fn passes(&self) -> bool {
        let v = &self.verdicts;
        v.base && v.fiber && v.linearity && v.invertible && self.failed_probes == 0
    }

    /// Largest of the residuals that enter [`LiftReport::passes`].
    pub fn worst_residual(&self) -> f64 {
        self.base_residual.max(self.fiber_residual).max(self.linearity_residual)
    }
}

#[derive(Debug, Clone, Default)]
struct ProbeResult {
    base: f64,
    fiber: f64,
    linearity: f64,
    min_sv: f64,
    isometry: f64,
    complex: Option<(f64, f64, f64)>,
    error: Option<String>,
}

fn probe(lift: &Lift, seed: u64, index: u64) -> ProbeResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let bundle = &lift.bundle;
    let x = bundle.base.random_point_with(&mut rng);
    let v = bundle.random_fiber_vector(&x, &mut rng);
    let w = bundle.random_fiber_vector(&x, &mut rng);
    let a: f64 = rng.random_range(-1.0..1.0);
    let b: f64 = rng.random_range(-1.0..1.0);
    let basis = bundle.fiber_basis(&x);
    let r = bundle.real_rank;
    let j = bundle.ambient_j();

    let mut cols: Vec<_> = basis.column_iter().map(|c| c.clone_owned()).collect();
    cols.push(v.clone());
    cols.push(w.clone());
    cols.push(&v * a + &w * b);
    if let Some(j) = &j {
        cols.push(j * &v);
    }
    let input = Matrix::from_columns(&cols);
    let (y, out) = match lift.apply_columns(&x, &input) {
        Ok(res) => res,
        Err(e) => {
            return ProbeResult {
                base: f64::INFINITY,
                fiber: f64::INFINITY,
                linearity: f64::INFINITY,
                min_sv: 0.0,
                isometry: f64::INFINITY,
                complex: j.as_ref().map(|_| (f64::INFINITY, f64::INFINITY, 0.0)),
                error: Some(e.to_string()),
            }
        }
    };

    let target = lift.base_map.apply(&x);
    let base = bundle.base.distance(&y, &target).max(bundle.base.membership_residual(&y));
    let q_y = bundle.projector(&target);
    let fiber = (0..out.ncols())
        .map(|k| {
            let c = out.column(k);
            let scale = input.column(k).norm().max(1e-300);
            (&q_y * c - c).norm() / scale
        })
        .fold(0.0, f64::max);
    let (phi_v, phi_w, phi_sum) = (out.column(r), out.column(r + 1), out.column(r + 2));
    let linearity = (phi_sum - phi_v * a - phi_w * b).norm() / (a.abs() + b.abs()).max(1e-300);
    let target_basis = bundle.fiber_basis(&target);
    let m = target_basis.transpose() * out.columns(0, r);
    let min_sv = min_singular_value(&m);
    let isometry = op_norm(&(m.transpose() * &m - Matrix::identity(r, r)));
    let complex = j.as_ref().map(|j| {
        let phi_jv = out.column(r + 3);
        let j_phi_v = j * phi_v;
        let c = (phi_jv - &j_phi_v).norm();
        let an = (phi_jv + &j_phi_v).norm();
        (c, an, (c + an) / (2.0 * phi_v.norm()).max(1e-300))
    });
    ProbeResult {
        base,
        fiber,
        linearity,
        min_sv,
        isometry,
        complex,
        error: None,
    }
}

/// Universal lift check with the default tolerance ladder.
pub fn check_lift(lift: &Lift, samples: usize, seed: u64) -> LiftReport {
    check_lift_with(lift, samples, seed, &Tolerances::default())
}

/// Evaluates every residual on `samples` seeded probes. Probe `i` draws from
/// its own ChaCha stream, so the report does not depend on scheduling.
pub fn check_lift_with(lift: &Lift, samples: usize, seed: u64, tol: &Tolerances) -> LiftReport {
    let samples = samples.max(1);
    let results: Vec<ProbeResult> = (0..samples as u64).into_par_iter().map(|i| probe(lift, seed, i)).collect();
    let max_of = |f: fn(&ProbeResult) -> f64| results.iter().map(f).fold(0.0, f64::max);
    let complex = lift.bundle.is_complex();
    let c = complex.then(|| results.iter().map(|p| p.complex.map_or(0.0, |c| c.0)).fold(0.0, f64::max));
    let a = complex.then(|| results.iter().map(|p| p.complex.map_or(0.0, |c| c.1)).fold(0.0, f64::max));
    let guard = complex.then(|| {
        results
            .iter()
            .map(|p| p.complex.map_or(f64::INFINITY, |c| c.2))
            .fold(f64::INFINITY, f64::min)
    });
    let failed = results.iter().filter(|p| p.error.is_some()).count();
    let first_error = results.iter().find_map(|p| p.error.clone());
    let tolerance = lift.tier.tolerance(tol);
    let base_residual = max_of(|p| p.base);
    let fiber_residual = max_of(|p| p.fiber);
    let linearity_residual = max_of(|p| p.linearity);
    let isometry_residual = max_of(|p| p.isometry);
    let min_sv = results.iter().map(|p| p.min_sv).fold(f64::INFINITY, f64::min);
    LiftReport {
        samples,
        tolerance,
        base_residual,
        fiber_residual,
        linearity_residual,
        min_singular_value: min_sv,
        isometry_residual,
        complex_linearity_residual: c,
        anti_linearity_residual: a,
        complex_guard: guard,
        failed_probes: failed,
        first_error,
        verdicts: Verdicts {
            base: base_residual <= tolerance,
            fiber: fiber_residual <= tolerance,
            linearity: linearity_residual <= tolerance,
            invertible: min_sv > MIN_SINGULAR,
            isometric: isometry_residual <= tolerance,
            complex_linear: c.map(|c| c <= tolerance),
            anti_linear: a.map(|a| a <= tolerance),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::{tangent_sphere, tautological_complex, tautological_real};
    use crate::manifolds::{named_diffeo, DiffeoParams};
    use crate::tolerance::Tier;
    use std::sync::Arc;

    #[test]
    fn identity_lift_is_clean() {
        for b in [tangent_sphere(2), tautological_real(2, 4), tautological_complex(1)] {
            let r = check_lift(&Lift::identity(Arc::new(b)), 50, 7);
            assert!(r.passes());
            assert!(r.worst_residual() <= 1e-12);
            assert!(r.isometry_residual <= 1e-12);
            if let Some(c) = r.complex_linearity_residual {
                assert!(c <= 1e-12);
                assert!((r.anti_linearity_residual.unwrap() - 2.0).abs() < 1e-12);
                assert!(r.complex_guard.unwrap() >= 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn broken_lift_fails_fiber_membership() {
        let b = Arc::new(tautological_real(1, 2));
        let inv = named_diffeo(&b.base, "grassmann_involution", &DiffeoParams::default()).unwrap();
        let inv2 = inv.clone();
        let broken = Lift::new(b, inv, "broken", Tier::Exact, move |x, v| Ok((inv2.apply(x), v.clone())));
        let r = check_lift(&broken, 20, 1);
        assert!(!r.verdicts.fiber);
        assert!((r.fiber_residual - 1.0).abs() < 1e-12);
        assert!(!r.passes());
    }

    #[test]
    fn reports_are_deterministic() {
        let b = Arc::new(tautological_complex(1));
        let id = Lift::identity(b);
        assert_eq!(check_lift(&id, 30, 3), check_lift(&id, 30, 3));
    }
}
