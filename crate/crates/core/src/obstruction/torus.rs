use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bundles::{coordinate_loop, holonomy_sign, torus_line, TransportOptions};
use crate::error::{Error, Result};
use crate::lattice::{mod2_defect, random_unimodular, IntMatrix};
use crate::lifts::torus_line_lift;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusCriterionResult {
    pub matrix: IntMatrix,
    pub bits: Vec<u8>,
    /// `bᵀA ≡ bᵀ (mod 2)`.
    pub fast_verdict: bool,
    /// `A g ∈ S_b` for every listed generator `g` of `S_b`.
    pub oracle_verdict: bool,
}

impl TorusCriterionResult {
    pub fn agrees(&self) -> bool {
        self.fast_verdict == self.oracle_verdict
    }
}

fn validate(a: &IntMatrix, bits: &[u8]) -> Result<()> {
    if bits.len() != a.dim() || bits.iter().any(|&b| b > 1) || bits.iter().all(|&b| b == 0) {
        return Err(Error::BadParams(format!(
            "b = {bits:?} must be a nonzero bit vector of length {}",
            a.dim()
        )));
    }
    let det = a.det();
    if det.abs() != 1 {
        return Err(Error::BadParams(format!("det A = {det}, expected ±1")));
    }
    Ok(())
}

/// Generators of `S_b = {x ∈ ℤⁿ : b·x even}`: `eᵢ` for `bᵢ = 0`, `2e_{i₀}`
/// for the first `i₀` with `b_{i₀} = 1`, and `eᵢ + eⱼ` for pairs `i < j`
/// with `bᵢ = bⱼ = 1`.
pub fn subgroup_generators(bits: &[u8]) -> Vec<Vec<i64>> {
    let n = bits.len();
    let unit = |i: usize, k: i64| {
        let mut e = vec![0i64; n];
        e[i] = k;
        e
    };
    let ones: Vec<usize> = (0..n).filter(|&i| bits[i] == 1).collect();
    let mut gens: Vec<Vec<i64>> = (0..n).filter(|&i| bits[i] == 0).map(|i| unit(i, 1)).collect();
    if let Some(&i0) = ones.first() {
        gens.push(unit(i0, 2));
    }
    for (k, &i) in ones.iter().enumerate() {
        for &j in &ones[k + 1..] {
            let mut g = unit(i, 1);
            g[j] = 1;
            gens.push(g);
        }
    }
    gens
}

fn in_subgroup(bits: &[u8], x: &[i64]) -> bool {
    bits.iter().zip(x).map(|(&b, &v)| b as i64 * v).sum::<i64>().rem_euclid(2) == 0
}

/// Liftability of `φ_A` to `L_b`, decided twice: by the mod-2 identity and
/// by pushing the generators of `S_b` through `A`.
pub fn torus_criterion(a: &IntMatrix, bits: &[u8]) -> Result<TorusCriterionResult> {
    validate(a, bits)?;
    let fast_verdict = mod2_defect(a, bits).iter().all(|&d| d == 0);
    let oracle_verdict = subgroup_generators(bits).iter().all(|g| in_subgroup(bits, &a.apply(g)));
    Ok(TorusCriterionResult {
        matrix: a.clone(),
        bits: bits.to_vec(),
        fast_verdict,
        oracle_verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub n: usize,
    pub bits: Vec<u8>,
    pub matrix: IntMatrix,
    pub fast_verdict: bool,
    pub oracle_verdict: bool,
    /// `torus_line_lift` built a lift (rather than refusing).
    pub lift_constructed: bool,
}

/// All nonzero bit vectors of length `n` in increasing binary order.
pub fn nonzero_bit_vectors(n: usize) -> Vec<Vec<u8>> {
    (1u32..(1 << n)).map(|m| (0..n).map(|i| ((m >> i) & 1) as u8).collect()).collect()
}

/// For every nonzero `b ∈ {0,1}ⁿ`, `per_b` seeded unimodular matrices.
pub fn torus_sweep(n: usize, per_b: usize, seed: u64) -> Result<Vec<SweepRecord>> {
    let mut out = Vec::new();
    for (k, bits) in nonzero_bit_vectors(n).into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((n as u64) << 32) | k as u64);
        for _ in 0..per_b {
            let a = random_unimodular(n, &mut rng);
            let res = torus_criterion(&a, &bits)?;
            let lift_constructed = match torus_line_lift(&a, &bits) {
                Ok(_) => true,
                Err(Error::CriterionFails { .. }) => false,
                Err(e) => return Err(e),
            };
            out.push(SweepRecord {
                n,
                bits: bits.clone(),
                matrix: a,
                fast_verdict: res.fast_verdict,
                oracle_verdict: res.oracle_verdict,
                lift_constructed,
            });
        }
    }
    Ok(out)
}

/// Holonomy signs of `L_b` around the coordinate loops of `Tⁿ`.
pub fn w1_profile(bits: &[u8], steps: usize) -> Result<Vec<i8>> {
    let n = bits.len();
    if n > 4 {
        return Err(Error::BadParams(format!("w1 profile supports n ≤ 4, got {n}")));
    }
    let bundle = torus_line(bits)?;
    let opts = TransportOptions::with_steps(steps);
    (0..n).map(|i| holonomy_sign(&bundle, &coordinate_loop(n, i), &opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let a = IntMatrix(vec![vec![1, 1], vec![0, 1]]);
        let r = torus_criterion(&a, &[1, 0]).unwrap();
        assert!(!r.fast_verdict && !r.oracle_verdict);
        let r = torus_criterion(&a, &[0, 1]).unwrap();
        assert!(r.fast_verdict && r.oracle_verdict);
        for bits in nonzero_bit_vectors(3) {
            assert!(torus_criterion(&IntMatrix::identity(3), &bits).unwrap().fast_verdict);
        }
    }

    #[test]
    fn bad_params() {
        assert!(torus_criterion(&IntMatrix(vec![vec![2, 0], vec![0, 1]]), &[1, 0]).is_err());
        assert!(torus_criterion(&IntMatrix::identity(2), &[0, 0]).is_err());
        assert!(torus_criterion(&IntMatrix::identity(2), &[1]).is_err());
    }

    #[test]
    fn generators_span_the_even_sublattice() {
        // Walk from 0 by ± generators inside a box; every even point of the
        // inner box must be reached, and nothing odd.
        use std::collections::{BTreeSet, VecDeque};
        for bits in nonzero_bit_vectors(3) {
            let gens = subgroup_generators(&bits);
            let mut seen = BTreeSet::from([vec![0i64; 3]]);
            let mut queue = VecDeque::from([vec![0i64; 3]]);
            while let Some(p) = queue.pop_front() {
                for g in &gens {
                    for sign in [-1, 1] {
                        let q: Vec<i64> = p.iter().zip(g).map(|(a, b)| a + sign * b).collect();
                        if q.iter().all(|v| v.abs() <= 4) && seen.insert(q.clone()) {
                            queue.push_back(q);
                        }
                    }
                }
            }
            assert!(seen.iter().all(|p| in_subgroup(&bits, p)));
            for x in -2..=2 {
                for y in -2..=2 {
                    for z in -2..=2 {
                        let p = vec![x, y, z];
                        assert_eq!(seen.contains(&p), in_subgroup(&bits, &p), "{bits:?} {p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn sweep_agrees() {
        let recs = torus_sweep(2, 20, 42).unwrap();
        assert_eq!(recs.len(), 60);
        assert!(recs.iter().all(|r| r.fast_verdict == r.oracle_verdict && r.fast_verdict == r.lift_constructed));
        assert!(recs.iter().any(|r| !r.fast_verdict));
        assert!(recs.iter().any(|r| r.fast_verdict));
    }

    #[test]
    fn w1_examples() {
        assert_eq!(w1_profile(&[1, 0], 256).unwrap(), vec![-1, 1]);
        assert_eq!(w1_profile(&[1, 1], 256).unwrap(), vec![-1, -1]);
    }
}
