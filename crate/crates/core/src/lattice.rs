//! Small integer matrices: determinants, exact unimodular inverses and
//! seeded generation of `GL(n, ℤ)` elements.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntMatrix(pub Vec<Vec<i64>>);

impl IntMatrix {
    pub fn identity(n: usize) -> Self {
        IntMatrix((0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect())
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::BadParams("integer matrix must be square and nonempty".into()));
        }
        Ok(IntMatrix(rows))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.0[i][j]
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> i64 {
        let n = self.dim();
        let mut m: Vec<Vec<i128>> = self.0.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if m[k][k] == 0 {
                let Some(swap) = (k + 1..n).find(|&i| m[i][k] != 0) else {
                    return 0;
                };
                m.swap(k, swap);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
                }
            }
            prev = m[k][k];
        }
        (sign * m[n - 1][n - 1]) as i64
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let n = self.dim();
        IntMatrix(
            (0..n)
                .map(|i| (0..n).map(|j| (0..n).map(|k| self.0[i][k] * other.0[k][j]).sum()).collect())
                .collect(),
        )
    }

    pub fn apply(&self, v: &[i64]) -> Vec<i64> {
        self.0.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// Row vector times matrix, `vᵀ A`.
    pub fn left_apply(&self, v: &[i64]) -> Vec<i64> {
        let n = self.dim();
        (0..n).map(|j| (0..n).map(|i| v[i] * self.0[i][j]).sum()).collect()
    }

    /// Exact inverse of a matrix with `|det| = 1`, via the adjugate.
    pub fn inverse_unimodular(&self) -> Result<IntMatrix> {
        let n = self.dim();
        let det = self.det();
        if det.abs() != 1 {
            return Err(Error::BadParams(format!("|det A| = {} ≠ 1", det.abs())));
        }
        if n == 1 {
            return Ok(IntMatrix(vec![vec![det]]));
        }
        let mut inv = vec![vec![0i64; n]; n];
        for i in 0..n {
            for j in 0..n {
                let minor = IntMatrix(
                    (0..n)
                        .filter(|&r| r != i)
                        .map(|r| (0..n).filter(|&c| c != j).map(|c| self.0[r][c]).collect())
                        .collect(),
                );
                let cof = if (i + j) % 2 == 0 { minor.det() } else { -minor.det() };
                // adj(A)[j][i] = cofactor(i, j); A⁻¹ = adj(A) / det
                inv[j][i] = cof * det;
            }
        }
        Ok(IntMatrix(inv))
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        self.0.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect()
    }
}

/// Product of at most eight elementary integer matrices (row additions,
/// row swaps and row negations), so `|det| = 1` holds exactly.
pub fn random_unimodular<R: Rng + ?Sized>(n: usize, rng: &mut R) -> IntMatrix {
    let mut a = IntMatrix::identity(n);
    let factors = rng.random_range(1..=8);
    for _ in 0..factors {
        let mut e = IntMatrix::identity(n);
        let kind = if n == 1 { 2 } else { rng.random_range(0..3) };
        match kind {
            0 => {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                e.0[i][j] = if rng.random_bool(0.5) { 1 } else { -1 };
            }
            1 => {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                e.0.swap(i, j);
            }
            _ => {
                let i = rng.random_range(0..n);
                e.0[i][i] = -1;
            }
        }
        a = e.mul(&a);
    }
    a
}

/// `bᵀ(A − I) mod 2`; zero exactly when `A` preserves `{x : b·x even}`.
pub fn mod2_defect(a: &IntMatrix, bits: &[u8]) -> Vec<u8> {
    let b: Vec<i64> = bits.iter().map(|&x| x as i64).collect();
    a.left_apply(&b)
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).rem_euclid(2) as u8)
        .collect()
}
