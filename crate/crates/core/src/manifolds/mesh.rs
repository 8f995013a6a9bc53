//! Icosphere triangulations of `S²`.

use std::collections::BTreeMap;

use nalgebra::Vector3;

/// Triangulated unit sphere; faces are counter-clockwise seen from outside.
#[derive(Debug, Clone)]
pub struct Icosphere {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
    pub level: usize,
}

impl Icosphere {
    /// Icosahedron refined `level` times (`20 · 4^level` faces).
    pub fn new(level: usize) -> Self {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let raw = [
            (-1.0, phi, 0.0),
            (1.0, phi, 0.0),
            (-1.0, -phi, 0.0),
            (1.0, -phi, 0.0),
            (0.0, -1.0, phi),
            (0.0, 1.0, phi),
            (0.0, -1.0, -phi),
            (0.0, 1.0, -phi),
            (phi, 0.0, -1.0),
            (phi, 0.0, 1.0),
            (-phi, 0.0, -1.0),
            (-phi, 0.0, 1.0),
        ];
        let mut vertices: Vec<Vector3<f64>> =
            raw.iter().map(|&(x, y, z)| Vector3::new(x, y, z).normalize()).collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for f in faces.iter_mut() {
            let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
            if (b - a).cross(&(c - a)).dot(&a) < 0.0 {
                f.swap(1, 2);
            }
        }
        for _ in 0..level {
            let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            let mut mid = |i: usize, j: usize, vertices: &mut Vec<Vector3<f64>>| {
                let key = (i.min(j), i.max(j));
                *midpoints.entry(key).or_insert_with(|| {
                    vertices.push(((vertices[i] + vertices[j]) * 0.5).normalize());
                    vertices.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for &[a, b, c] in &faces {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.push([a, ab, ca]);
                next.push([b, bc, ab]);
                next.push([c, ca, bc]);
                next.push([ab, bc, ca]);
            }
            faces = next;
        }
        Icosphere { vertices, faces, level }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_orientation() {
        for level in 0..4 {
            let m = Icosphere::new(level);
            assert_eq!(m.faces.len(), 20 * 4usize.pow(level as u32));
            assert_eq!(m.vertices.len(), 10 * 4usize.pow(level as u32) + 2);
            for f in &m.faces {
                let (a, b, c) = (m.vertices[f[0]], m.vertices[f[1]], m.vertices[f[2]]);
                assert!((b - a).cross(&(c - a)).dot(&(a + b + c)) > 0.0);
            }
        }
    }
}
