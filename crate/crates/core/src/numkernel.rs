//! Small dense linear algebra shared by every other module.
//!
//! Everything here is a pure function of its inputs. The symmetric
//! eigensolver is a cyclic Jacobi iteration with a fixed sweep order, so
//! results are bitwise reproducible; eigenvalues come back in ascending
//! order and each eigenvector is signed so that its first nonzero entry is
//! positive.
//!
//! Complex matrices are handled in their realification: the complex
//! coordinate `z_k = a + ib` occupies the real slots `2k` (real part) and
//! `2k + 1` (imaginary part), and multiplication by `i` is the block
//! rotation returned by [`ambient_complex_structure`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

const JACOBI_MAX_SWEEPS: usize = 64;
const EIGEN_FLOOR: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigendecomposition of a real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// Ascending eigenvalues.
    pub values: Vector,
    /// Orthonormal eigenvectors, one per column, matching `values`.
    pub vectors: Matrix,
}

/// A symmetric idempotent matrix together with its rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: Matrix,
    rank: usize,
}

impl Projector {
    /// Validates `P² = P`, `Pᵀ = P` (1e-10) and `tr P ≈ rank` (1e-8).
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "projector must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let idem = max_abs(&(&matrix * &matrix - &matrix));
        let sym = symmetry_defect(&matrix);
        if idem > 1e-10 || sym > 1e-10 {
            return Err(Error::BadParams(format!(
                "not an orthogonal projector (idempotence {idem:e}, symmetry {sym:e})"
            )));
        }
        let trace = matrix.trace();
        let rank = trace.round().max(0.0) as usize;
        if (trace - rank as f64).abs() > 1e-8 {
            return Err(Error::BadParams(format!("projector trace {trace} is not an integer")));
        }
        Ok(Projector { matrix, rank })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    /// Orthonormal basis of the image, one vector per column.
    pub fn basis(&self) -> Matrix {
        projector_basis(&self.matrix, self.rank)
    }
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn symmetry_defect(m: &Matrix) -> f64 {
    max_abs(&(m - m.transpose()))
}

/// Spectral norm.
pub fn op_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn min_singular_value(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().min()
}

/// Cyclic Jacobi eigensolver for real symmetric matrices.
pub fn symmetric_eigen(s: &Matrix) -> SymmetricEigen {
    let n = s.nrows();
    let mut a = (s + s.transpose()) * 0.5;
    let mut v = Matrix::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let values = Vector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut vectors = Matrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut e = v.column(i).clone_owned();
        if let Some(first) = e.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                e.neg_mut();
            }
        }
        vectors.set_column(col, &e);
    }
    SymmetricEigen { values, vectors }
}

/// Symmetric positive-definite square root.
pub fn sym_sqrt(s: &Matrix) -> Result<Matrix> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch("sym_sqrt needs a square matrix".into()));
    }
    let defect = symmetry_defect(s);
    if defect > SYMMETRY_TOL {
        return Err(Error::NotSpd(format!("symmetry defect {defect:e}")));
    }
    let eig = symmetric_eigen(s);
    let smallest = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
    if smallest <= EIGEN_FLOOR {
        return Err(Error::NotSpd(format!("eigenvalue {smallest:e}")));
    }
    let roots = Matrix::from_diagonal(&eig.values.map(f64::sqrt));
    let r = &eig.vectors * roots * eig.vectors.transpose();
    Ok((&r + r.transpose()) * 0.5)
}

/// Orthonormal basis (columns) of the image of a symmetric projector of
/// known rank, from pivoted Gram–Schmidt on the columns `Q eᵢ`. Pivots are
/// taken in index order unless a later column beats the current best by a
/// clear margin, so the basis does not jump under round-off perturbations
/// of `Q` (eigenvectors of the repeated eigenvalue 1 would).
pub fn projector_basis(q: &Matrix, rank: usize) -> Matrix {
    let n = q.nrows();
    let mut basis: Vec<Vector> = Vec::with_capacity(rank);
    let mut used = vec![false; n];
    while basis.len() < rank {
        let mut best: Option<(usize, f64, Vector)> = None;
        for i in (0..n).filter(|&i| !used[i]) {
            let mut r = q.column(i).clone_owned();
            for _ in 0..2 {
                for b in &basis {
                    let p = b.dot(&r);
                    r.axpy(-p, b, 1.0);
                }
            }
            let norm = r.norm();
            if best.as_ref().map_or(true, |(_, b, _)| norm > b + 1e-6) {
                best = Some((i, norm, r));
            }
        }
        let Some((i, norm, r)) = best else { break };
        used[i] = true;
        basis.push(r / norm);
    }
    Matrix::from_columns(&basis)
}

fn modified_gram_schmidt(cols: &Matrix) -> Matrix {
    let mut q = cols.clone();
    for _ in 0..2 {
        for j in 0..q.ncols() {
            let mut v = q.column(j).clone_owned();
            for i in 0..j {
                let qi = q.column(i);
                let proj = qi.dot(&v);
                v.axpy(-proj, &qi, 1.0);
            }
            let norm = v.norm();
            q.set_column(j, &(v / norm));
        }
    }
    q
}

/// Orthogonal projector onto the span of `vectors`.
pub fn projector_from_span(vectors: &[Vector]) -> Result<Projector> {
    let Some(first) = vectors.first() else {
        return Err(Error::RankDeficient(0.0));
    };
    let n = first.len();
    if vectors.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch("span vectors have different lengths".into()));
    }
    if vectors.len() > n {
        return Err(Error::RankDeficient(0.0));
    }
    let stacked = Matrix::from_columns(vectors);
    let sv = stacked.clone().singular_values();
    let largest = sv.max();
    let smallest = sv.min();
    let relative = if largest > 0.0 { smallest / largest } else { 0.0 };
    if !(relative > 1e-8) {
        return Err(Error::RankDeficient(relative));
    }
    let q = modified_gram_schmidt(&stacked);
    let p = &q * q.transpose();
    Ok(Projector {
        matrix: (&p + p.transpose()) * 0.5,
        rank: vectors.len(),
    })
}

/// Two-metric polar decomposition `F = Xi · Psi`.
///
/// `F` maps a space with metric `G_U` to a space with metric `G_W`. `Psi`
/// is a `(G_U, G_W)`-isometry and `Xi` is `G_W`-self-adjoint positive
/// definite. `Xi` is the `G_W`-square root of `F F^♯` with the metric
/// adjoint `F^♯ = G_U⁻¹ Fᵀ G_W`.
pub fn polar_two_metric(f: &Matrix, g_u: &Matrix, g_w: &Matrix) -> Result<(Matrix, Matrix)> {
    let (rows, cols) = f.shape();
    if rows != cols || g_u.shape() != (cols, cols) || g_w.shape() != (rows, rows) {
        return Err(Error::DimensionMismatch(format!(
            "polar_two_metric: F {rows}x{cols}, G_U {:?}, G_W {:?}",
            g_u.shape(),
            g_w.shape()
        )));
    }
    let sv = f.clone().singular_values();
    let smallest = sv.min();
    if !(smallest > 1e-10 * sv.max().max(1.0)) {
        return Err(Error::Singular(smallest));
    }
    let g_u_inv = sym_sqrt(g_u).and_then(|r| {
        let r_inv = r.try_inverse().ok_or(Error::Singular(0.0))?;
        Ok(&r_inv * &r_inv)
    })?;
    // Work in G_W-orthonormal coordinates, where the G_W-adjoint becomes the
    // ordinary transpose: S = G_W^{1/2}.
    let s = sym_sqrt(g_w)?;
    let s_inv = s.clone().try_inverse().ok_or(Error::Singular(0.0))?;
    let a = &s * f * &g_u_inv * f.transpose() * &s;
    let a = (&a + a.transpose()) * 0.5;
    let root = sym_sqrt(&a)?;
    let xi = &s_inv * root * &s;
    let xi_inv = xi.clone().try_inverse().ok_or(Error::Singular(0.0))?;
    let psi = xi_inv * f;
    Ok((psi, xi))
}

/// `max |J² + I|` for a would-be complex structure.
pub fn complex_structure_defect(j: &Matrix) -> f64 {
    let n = j.nrows();
    max_abs(&(j * j + Matrix::identity(n, n)))
}

/// Real basis `(c_1, J c_1, c_2, J c_2, ...)` adapted to the complex
/// structure `J`. Each new `c` is the standard basis vector with the largest
/// component outside the `J`-invariant span built so far.
fn complex_adapted_basis(j: &Matrix) -> Matrix {
    let n = j.nrows();
    let mut cols: Vec<Vector> = Vec::with_capacity(n);
    let mut ortho: Vec<Vector> = Vec::with_capacity(n);
    let push_ortho = |ortho: &mut Vec<Vector>, v: &Vector| {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in ortho.iter() {
                let p = q.dot(&w);
                w.axpy(-p, q, 1.0);
            }
        }
        let norm = w.norm();
        ortho.push(w / norm);
    };
    while cols.len() < n {
        let mut best: Option<(f64, Vector)> = None;
        for i in 0..n {
            let mut r = Vector::zeros(n);
            r[i] = 1.0;
            for q in ortho.iter() {
                let p = q.dot(&r);
                r.axpy(-p, q, 1.0);
            }
            let norm = r.norm();
            if best.as_ref().map_or(true, |(b, _)| norm > *b + 1e-12) {
                best = Some((norm, r));
            }
        }
        let (norm, r) = best.expect("nonempty");
        let c = r / norm;
        let jc = j * &c;
        push_ortho(&mut ortho, &c);
        push_ortho(&mut ortho, &jc);
        cols.push(c);
        cols.push(jc);
    }
    Matrix::from_columns(&cols)
}

/// Returns an invertible `psi` with `psi⁻¹ J psi = K`.
pub fn complex_structure_conjugator(j: &Matrix, k: &Matrix) -> Result<Matrix> {
    let n = j.nrows();
    if !j.is_square() || k.shape() != j.shape() || n % 2 != 0 {
        return Err(Error::DimensionMismatch(format!(
            "complex structures must be square of even size, got {:?} and {:?}",
            j.shape(),
            k.shape()
        )));
    }
    let dj = complex_structure_defect(j);
    let dk = complex_structure_defect(k);
    if dj > 1e-8 || dk > 1e-8 {
        return Err(Error::NotComplexStructure(dj.max(dk)));
    }
    let b_j = complex_adapted_basis(j);
    let b_k = complex_adapted_basis(k);
    let b_k_inv = b_k.try_inverse().ok_or(Error::Singular(0.0))?;
    Ok(b_j * b_k_inv)
}

/// Multiplication by `i` on `ℂⁿ ≅ ℝ²ⁿ` in the interleaved layout.
pub fn ambient_complex_structure(complex_dim: usize) -> Matrix {
    let mut j = Matrix::zeros(2 * complex_dim, 2 * complex_dim);
    for k in 0..complex_dim {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

/// Entrywise complex conjugation on `ℂⁿ ≅ ℝ²ⁿ`.
pub fn ambient_conjugation(complex_dim: usize) -> Matrix {
    Matrix::from_diagonal(&Vector::from_iterator(
        2 * complex_dim,
        (0..2 * complex_dim).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }),
    ))
}

/// Real `2m × 2n` matrix of a complex `m × n` matrix.
pub fn realify(m: &DMatrix<Complex64>) -> Matrix {
    let (rows, cols) = m.shape();
    let mut r = Matrix::zeros(2 * rows, 2 * cols);
    for i in 0..rows {
        for j in 0..cols {
            let z = m[(i, j)];
            r[(2 * i, 2 * j)] = z.re;
            r[(2 * i, 2 * j + 1)] = -z.im;
            r[(2 * i + 1, 2 * j)] = z.im;
            r[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    r
}

/// Inverse of [`realify`] for matrices commuting with the complex structure.
pub fn complexify(r: &Matrix) -> DMatrix<Complex64> {
    let rows = r.nrows() / 2;
    let cols = r.ncols() / 2;
    DMatrix::from_fn(rows, cols, |i, j| Complex64::new(r[(2 * i, 2 * j)], r[(2 * i + 1, 2 * j)]))
}

pub fn realify_vector(v: &DVector<Complex64>) -> Vector {
    Vector::from_iterator(2 * v.len(), v.iter().flat_map(|z| [z.re, z.im]))
}

pub fn complexify_vector(v: &Vector) -> DVector<Complex64> {
    DVector::from_iterator(v.len() / 2, v.as_slice().chunks(2).map(|c| Complex64::new(c[0], c[1])))
}

/// Complex trace of a realified matrix `m`, given the realified `i`.
///
/// For `m = realify(M)` this equals `tr M`; `tr_ℝ m = 2 Re tr M` and
/// `tr_ℝ (J m) = −2 Im tr M`.
pub fn complex_trace(m: &Matrix, j: &Matrix) -> Complex64 {
    Complex64::new(0.5 * m.trace(), -0.5 * (j * m).trace())
}

/// Rotation matrix by `angle` in the `(a, b)` coordinate plane.
pub fn plane_rotation(dim: usize, a: usize, b: usize, angle: f64) -> Matrix {
    let mut r = Matrix::identity(dim, dim);
    let (s, c) = angle.sin_cos();
    r[(a, a)] = c;
    r[(b, b)] = c;
    r[(b, a)] = s;
    r[(a, b)] = -s;
    r
}

/// Reshape a row-major flattened square matrix.
pub fn unflatten(data: &[f64], dim: usize) -> Matrix {
    Matrix::from_row_slice(dim, dim, data)
}

pub fn flatten(m: &Matrix) -> Vector {
    Vector::from_iterator(m.nrows() * m.ncols(), m.transpose().iter().cloned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        let a = random_matrix(rng, n, n);
        &a * a.transpose() + Matrix::identity(n, n) * 0.5
    }

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let id = Matrix::identity(3, 3);
        assert!(max_abs(&(sym_sqrt(&id).unwrap() - &id)) < 1e-15);
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 9.0]));
        let r = sym_sqrt(&d).unwrap();
        assert!(max_abs(&(r - Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 3.0])))) < 1e-14);
    }

    #[test]
    fn sqrt_squares_back_for_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=8 {
            let s = random_spd(&mut rng, n);
            let r = sym_sqrt(&s).unwrap();
            assert!(max_abs(&(&r * &r - &s)) <= 1e-10);
            assert!(symmetry_defect(&r) <= 1e-14);
            assert!(symmetric_eigen(&r).values.min() > 0.0);
        }
    }

    #[test]
    fn sqrt_rejects_indefinite_and_asymmetric() {
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(sym_sqrt(&d), Err(Error::NotSpd(_))));
        let mut a = Matrix::identity(2, 2);
        a[(0, 1)] = 1e-6;
        assert!(matches!(sym_sqrt(&a), Err(Error::NotSpd(_))));
        let z = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 1e-13]));
        assert!(matches!(sym_sqrt(&z), Err(Error::NotSpd(_))));
    }

    #[test]
    fn eigen_is_sorted_and_sign_normalised() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_spd(&mut rng, 5);
        let eig = symmetric_eigen(&s);
        for w in eig.values.as_slice().windows(2) {
            assert!(w[0] <= w[1]);
        }
        for col in eig.vectors.column_iter() {
            let first = col.iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
        let rebuilt = &eig.vectors * Matrix::from_diagonal(&eig.values) * eig.vectors.transpose();
        assert!(max_abs(&(rebuilt - s)) < 1e-12);
    }

    #[test]
    fn span_projectors() {
        let p = projector_from_span(&[Vector::from_vec(vec![1.0, 0.0])]).unwrap();
        assert!(max_abs(&(p.matrix() - Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]))) < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let p = projector_from_span(&[Vector::from_vec(vec![h, h])]).unwrap();
        assert!(p.matrix().iter().all(|x| (x - 0.5).abs() < 1e-15));
        assert_eq!(p.rank(), 1);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vs: Vec<Vector> = (0..2).map(|_| Vector::from_fn(4, |_, _| rng.random_range(-1.0..1.0))).collect();
        let p = projector_from_span(&vs).unwrap();
        let m = p.matrix();
        assert!(max_abs(&(m * m - m)) <= 1e-10);
        for v in &vs {
            assert!((m * v - v).norm() <= 1e-10);
        }
        assert!((m.trace() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn span_rejects_dependent_vectors() {
        let v = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        let r = projector_from_span(&[v.clone(), v * 2.0]);
        assert!(matches!(r, Err(Error::RankDeficient(_))));
        assert!(matches!(projector_from_span(&[]), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn polar_trivial_and_conformal() {
        let id = Matrix::identity(2, 2);
        let (psi, xi) = polar_two_metric(&id, &id, &id).unwrap();
        assert!(max_abs(&(psi - &id)) < 1e-14);
        assert!(max_abs(&(xi - &id)) < 1e-14);

        let r = plane_rotation(2, 0, 1, 0.7);
        let (psi, xi) = polar_two_metric(&(&r * 2.0), &id, &id).unwrap();
        assert!(max_abs(&(psi - r)) < 1e-14);
        assert!(max_abs(&(xi - id * 2.0)) < 1e-14);
    }

    #[test]
    fn polar_random_two_metric_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..20 {
            let f = random_matrix(&mut rng, 3, 3) + Matrix::identity(3, 3) * 1.5;
            let g_u = random_spd(&mut rng, 3);
            let g_w = random_spd(&mut rng, 3);
            let (psi, xi) = polar_two_metric(&f, &g_u, &g_w).unwrap();
            // (i) isometry
            assert!(max_abs(&(psi.transpose() * &g_w * &psi - &g_u)) <= 1e-8);
            // (ii) G_W-self-adjoint positive definite
            let gx = &g_w * &xi;
            assert!(symmetry_defect(&gx) <= 1e-8);
            assert!(symmetric_eigen(&gx).values.min() > 0.0);
            // (iii) factorisation
            assert!(max_abs(&(&xi * &psi - &f)) <= 1e-8);
            // determinism
            let again = polar_two_metric(&f, &g_u, &g_w).unwrap();
            assert_eq!(again.0, psi);
            assert_eq!(again.1, xi);
        }
    }

    #[test]
    fn polar_rejects_singular() {
        let f = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let id = Matrix::identity(2, 2);
        assert!(matches!(polar_two_metric(&f, &id, &id), Err(Error::Singular(_))));
    }

    #[test]
    fn conjugator_same_and_opposite_structure() {
        let j = ambient_complex_structure(1);
        let psi = complex_structure_conjugator(&j, &j).unwrap();
        let inv = psi.clone().try_inverse().unwrap();
        assert!(max_abs(&(&inv * &j * &psi - &j)) <= 1e-8);
        assert!(max_abs(&(&psi - Matrix::identity(2, 2))) <= 1e-14);

        let k = -&j;
        let psi = complex_structure_conjugator(&j, &k).unwrap();
        assert!(max_abs(&(&psi - Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]))) < 1e-14);
        let inv = psi.clone().try_inverse().unwrap();
        assert!(max_abs(&(inv * &j * &psi - k)) <= 1e-8);
    }

    #[test]
    fn conjugator_random_structures() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let j = ambient_complex_structure(3);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 6, 6) + Matrix::identity(6, 6) * 2.0;
            let a_inv = a.clone().try_inverse().unwrap();
            let k = &a * &j * a_inv;
            let psi = complex_structure_conjugator(&j, &k).unwrap();
            let inv = psi.clone().try_inverse().unwrap();
            assert!(max_abs(&(inv * &j * &psi - &k)) <= 1e-8);
        }
    }

    #[test]
    fn conjugator_rejects_non_structures() {
        let j = ambient_complex_structure(1);
        let id = Matrix::identity(2, 2);
        assert!(matches!(
            complex_structure_conjugator(&j, &id),
            Err(Error::NotComplexStructure(_))
        ));
    }

    #[test]
    fn realify_round_trip_and_trace() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.25), Complex64::new(0.0, 3.0), Complex64::new(4.0, -1.0)],
        );
        let r = realify(&m);
        assert_eq!(complexify(&r), m);
        let j = ambient_complex_structure(2);
        assert!(max_abs(&(&j * &r - &r * &j)) < 1e-15);
        let t = complex_trace(&r, &j);
        assert!((t - m.trace()).norm() < 1e-15);
    }
}
