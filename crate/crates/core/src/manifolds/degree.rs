use std::f64::consts::PI;

use nalgebra::Vector3;

use super::mesh::Icosphere;
use super::Point;
use crate::error::{Error, Result};

/// Signed solid angle of the geodesic triangle `(a, b, c)` on the unit
/// sphere (positive when counter-clockwise seen from outside).
pub fn signed_solid_angle(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let num = a.dot(&b.cross(c));
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

fn to_vec3(p: &Point) -> Vector3<f64> {
    Vector3::new(p[0], p[1], p[2]).normalize()
}

/// Total signed area of the image triangulation divided by `4π`.
pub fn degree_raw(f: &dyn Fn(&Point) -> Point, mesh_level: usize) -> f64 {
    let mesh = Icosphere::new(mesh_level);
    let images: Vec<Vector3<f64>> = mesh
        .vertices
        .iter()
        .map(|v| to_vec3(&f(&Point::from_column_slice(v.as_slice()))))
        .collect();
    let total: f64 = mesh
        .faces
        .iter()
        .map(|&[a, b, c]| signed_solid_angle(&images[a], &images[b], &images[c]))
        .sum();
    total / (4.0 * PI)
}

/// Degree of a map `S² → S²` by pulling back the normalised area form over
/// an icosphere. Retries one level finer if the first value is not within
/// 0.1 of an integer.
pub fn degree(f: &dyn Fn(&Point) -> Point, mesh_level: usize) -> Result<i64> {
    if mesh_level < 3 {
        return Err(Error::BadParams(format!("mesh level {mesh_level} < 3")));
    }
    let mut last = f64::NAN;
    for level in [mesh_level, mesh_level + 1] {
        let raw = degree_raw(f, level);
        if (raw - raw.round()).abs() <= 0.1 {
            return Ok(raw.round() as i64);
        }
        last = raw;
    }
    Err(Error::NonConvergent(format!(
        "degree value {last} is not near an integer at levels {mesh_level} and {}",
        mesh_level + 1
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_reflection() {
        assert_eq!(degree(&|x: &Point| x.clone(), 3).unwrap(), 1);
        let sigma = |x: &Point| Point::from_vec(vec![x[0], -x[1], x[2]]);
        assert_eq!(degree(&sigma, 3).unwrap(), -1);
        assert_eq!(degree(&|x: &Point| -x, 3).unwrap(), -1);
    }

    #[test]
    fn constant_map_has_degree_zero() {
        let c = |_: &Point| Point::from_vec(vec![0.0, 0.0, 1.0]);
        assert_eq!(degree(&c, 3).unwrap(), 0);
    }

    #[test]
    fn coarse_mesh_is_rejected() {
        assert!(degree(&|x: &Point| x.clone(), 2).is_err());
    }

    #[test]
    fn solid_angle_of_octant() {
        let a = Vector3::x();
        let b = Vector3::y();
        let c = Vector3::z();
        assert!((signed_solid_angle(&a, &b, &c) - PI / 2.0).abs() < 1e-14);
        assert!((signed_solid_angle(&a, &c, &b) + PI / 2.0).abs() < 1e-14);
    }
}
