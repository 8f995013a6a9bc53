use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::bundles::{pullback, BundleModel};
use crate::error::{Error, Result};
use crate::manifolds::mesh::Icosphere;
use crate::manifolds::{sphere_to_cp1, Diffeo, ManifoldModel, Point};
use crate::numkernel::{complex_trace, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChernResult {
    pub value: i64,
    /// Phase sum / 2π before rounding.
    pub raw: f64,
    pub mesh_level: usize,
    /// Same value at `mesh_level + 1`.
    pub stable: bool,
}

/// Calibration sign. With faces counter-clockwise from outside, the phase
/// sum for the tautological line over `CP¹` is already `−1`, which is the
/// convention we want (`c₁(γ¹(ℂ²)) = −1`).
const ORIENTATION: f64 = 1.0;

fn check_line_bundle(bundle: &BundleModel) -> Result<()> {
    if !bundle.is_complex() || bundle.real_rank != 2 {
        return Err(Error::BadParams(format!(
            "{} is not a complex line bundle",
            bundle.descriptor
        )));
    }
    match bundle.base {
        ManifoldModel::Sphere(2) | ManifoldModel::ComplexProjective(1) => Ok(()),
        ref other => Err(Error::BadParams(format!("Chern numbers need a base S² or CP¹, got {other}"))),
    }
}

/// Signed Bargmann phases `arg tr(Q_a Q_b Q_c)`, one per icosphere face in
/// face order, already multiplied by the orientation convention.
pub fn plaquette_phases(bundle: &BundleModel, mesh_level: usize) -> Result<Vec<f64>> {
    check_line_bundle(bundle)?;
    let mesh = Icosphere::new(mesh_level);
    let to_base = |v: &nalgebra::Vector3<f64>| {
        let x = Point::from_column_slice(v.as_slice());
        match bundle.base {
            ManifoldModel::ComplexProjective(1) => sphere_to_cp1(&x),
            _ => x,
        }
    };
    let projectors: Vec<Matrix> = mesh.vertices.par_iter().map(|v| bundle.projector(&to_base(v))).collect();
    let j = bundle.ambient_j().expect("complex");
    mesh.faces
        .par_iter()
        .enumerate()
        .map(|(idx, &[a, b, c])| {
            let prod = &projectors[a] * &projectors[b] * &projectors[c];
            let tr = complex_trace(&prod, &j);
            if tr.norm() < 1e-12 {
                return Err(Error::DegeneratePlaquette {
                    triangle: idx,
                    magnitude: tr.norm(),
                });
            }
            Ok(ORIENTATION * tr.arg())
        })
        .collect()
}

/// Raw first Chern number at one mesh level. The phases are summed in face
/// order so the value is bitwise reproducible.
pub fn chern_raw(bundle: &BundleModel, mesh_level: usize) -> Result<f64> {
    let phases = plaquette_phases(bundle, mesh_level)?;
    Ok(phases.iter().sum::<f64>() / (2.0 * PI))
}

/// First Chern number of a complex line bundle over `S²` or `CP¹` from
/// gauge-invariant plaquette phases on an icosphere.
pub fn lattice_chern_number(bundle: &BundleModel, mesh_level: usize) -> Result<ChernResult> {
    if mesh_level < 3 {
        return Err(Error::BadParams(format!("mesh level {mesh_level} < 3")));
    }
    let raw = chern_raw(bundle, mesh_level)?;
    let finer = chern_raw(bundle, mesh_level + 1)?;
    let value = raw.round() as i64;
    let stable = finer.round() as i64 == value && (raw - raw.round()).abs() <= 0.05;
    if !stable {
        return Err(Error::NonConvergent(format!(
            "Chern number raw values {raw} (level {mesh_level}) and {finer} (level {})",
            mesh_level + 1
        )));
    }
    Ok(ChernResult {
        value,
        raw,
        mesh_level,
        stable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullbackInvarianceReport {
    pub c1: i64,
    pub c1_pullback: i64,
    /// `c₁(V) ≠ c₁(φ*V)`: no ℂ-linear lift of `φ` exists.
    pub lift_obstructed: bool,
}

pub fn pullback_invariance_report(phi: &Diffeo, bundle: &BundleModel, mesh_level: usize) -> Result<PullbackInvarianceReport> {
    let c1 = lattice_chern_number(bundle, mesh_level)?.value;
    let pulled = pullback(&phi.as_map(), bundle)?;
    let c1_pullback = lattice_chern_number(&pulled, mesh_level)?.value;
    Ok(PullbackInvarianceReport {
        c1,
        c1_pullback,
        lift_obstructed: c1 != c1_pullback,
    })
}
