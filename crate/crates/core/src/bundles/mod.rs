//! Vector bundles presented as smooth fields of orthogonal projectors
//! `Q(x)` on a fixed ambient fiber space `ℝᴺ`.
//!
//! The fiber over `x` is the image of `Q(x)`, the metric is the restriction
//! of the ambient Euclidean product, and the connection is the projection
//! connection `∇ = Q ∘ d`. Complex bundles live in the realified picture:
//! `ℂᴺ` is `ℝ²ᴺ` with the interleaved layout of [`crate::numkernel`] and the
//! complex structure on a fiber is the ambient `J` restricted to it.

mod transport;

pub use transport::{coordinate_loop, holonomy_sign, transport, transport_columns, TransportOptions};

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::manifolds::{gaussian_vector, ManifoldModel, Point, SmoothMap};
use crate::numkernel::{ambient_complex_structure, max_abs, projector_basis, symmetry_defect, unflatten, Matrix, Projector, Vector};

pub type ProjectorFn = Arc<dyn Fn(&Point) -> Matrix + Send + Sync>;
/// Directional derivative `dQ_x[ξ]`.
pub type ProjectorDerivativeFn = Arc<dyn Fn(&Point, &Point) -> Matrix + Send + Sync>;

#[derive(Clone)]
pub struct BundleModel {
    pub descriptor: String,
    pub base: ManifoldModel,
    pub ambient_fiber_dim: usize,
    pub real_rank: usize,
    projector: ProjectorFn,
    derivative: Option<ProjectorDerivativeFn>,
    complex: bool,
}

impl std::fmt::Debug for BundleModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "BundleModel({} over {}, N = {}, r = {})",
            self.descriptor, self.base, self.ambient_fiber_dim, self.real_rank
        )
    }
}

/// A vector in the fiber over `base_point`, stored in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberVector {
    pub base_point: Point,
    pub ambient: Vector,
}

impl BundleModel {
    pub fn new(
        descriptor: impl Into<String>,
        base: ManifoldModel,
        ambient_fiber_dim: usize,
        real_rank: usize,
        projector: impl Fn(&Point) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        BundleModel {
            descriptor: descriptor.into(),
            base,
            ambient_fiber_dim,
            real_rank,
            projector: Arc::new(projector),
            derivative: None,
            complex: false,
        }
    }

    pub fn with_derivative(mut self, derivative: impl Fn(&Point, &Point) -> Matrix + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    /// Marks the bundle complex; the ambient dimension must be even and
    /// every `Q(x)` must commute with the ambient `J`.
    pub fn with_complex_structure(mut self) -> Self {
        assert!(self.ambient_fiber_dim % 2 == 0, "complex bundles need an even ambient dimension");
        self.complex = true;
        self
    }

    pub fn projector(&self, x: &Point) -> Matrix {
        (self.projector)(x)
    }

    pub fn projector_checked(&self, x: &Point) -> Result<Projector> {
        Projector::new(self.projector(x))
    }

    pub fn projector_derivative(&self, x: &Point, xi: &Point) -> Option<Matrix> {
        self.derivative.as_ref().map(|d| d(x, xi))
    }

    pub fn has_exact_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn is_complex(&self) -> bool {
        self.complex
    }

    /// Ambient `J` (multiplication by `i`), if the bundle is complex.
    pub fn ambient_j(&self) -> Option<Matrix> {
        self.complex.then(|| ambient_complex_structure(self.ambient_fiber_dim / 2))
    }

    /// `J(x) = J Q(x)`, the complex structure on the fiber over `x`.
    pub fn complex_structure(&self, x: &Point) -> Option<Matrix> {
        self.ambient_j().map(|j| j * self.projector(x))
    }

    /// Orthonormal basis of the fiber, one column per real dimension.
    pub fn fiber_basis(&self, x: &Point) -> Matrix {
        projector_basis(&self.projector(x), self.real_rank)
    }

    pub fn fiber_vector(&self, x: &Point, ambient: Vector) -> Result<FiberVector> {
        let q = self.projector(x);
        let residual = (&q * &ambient - &ambient).norm();
        if residual > 1e-8 {
            return Err(Error::NotInFiber(residual));
        }
        Ok(FiberVector {
            base_point: x.clone(),
            ambient,
        })
    }

    /// Random unit vector in the fiber over `x`.
    pub fn random_fiber_vector<R: Rng + ?Sized>(&self, x: &Point, rng: &mut R) -> Vector {
        let b = self.fiber_basis(x);
        let c = gaussian_vector(rng, self.real_rank);
        let v = b * c;
        let norm = v.norm();
        v / norm
    }

    /// Largest violation of the bundle invariants over seeded base points:
    /// projector identities, trace, and (for complex bundles) `JQ = QJ`.
    pub fn invariant_residual(&self, samples: usize, seed: u64) -> f64 {
        let mut worst: f64 = 0.0;
        let j = self.ambient_j();
        for s in 0..samples as u64 {
            let x = self.base.random_point(seed.wrapping_add(s));
            let q = self.projector(&x);
            worst = worst
                .max(max_abs(&(&q * &q - &q)))
                .max(symmetry_defect(&q))
                .max((q.trace() - self.real_rank as f64).abs());
            if let Some(j) = &j {
                worst = worst.max(max_abs(&(j * &q - &q * j)));
                let jx = j * &q;
                worst = worst.max(max_abs(&(&jx * &jx + &q)));
            }
        }
        worst
    }
}

/// `γᵏ(ℝⁿ)` over `G_k(ℝⁿ)`: `Q(P) = P`.
pub fn tautological_real(k: usize, n: usize) -> BundleModel {
    BundleModel::new(
        format!("tautological_real({k},{n})"),
        ManifoldModel::GrassmannReal { k, n },
        n,
        k,
        move |x| unflatten(x.as_slice(), n),
    )
    .with_derivative(move |_, xi| unflatten(xi.as_slice(), n))
}

/// `γ¹(ℂⁿ⁺¹)` over `CPⁿ`: `Q` is the (realified) rank-one projector.
pub fn tautological_complex(n: usize) -> BundleModel {
    let side = 2 * (n + 1);
    BundleModel::new(
        format!("tautological_complex({n})"),
        ManifoldModel::ComplexProjective(n),
        side,
        2,
        move |x| unflatten(x.as_slice(), side),
    )
    .with_derivative(move |_, xi| unflatten(xi.as_slice(), side))
    .with_complex_structure()
}

/// `f*W` with `Q(x) = Q_W(f(x))`.
pub fn pullback(f: &SmoothMap, w: &BundleModel) -> Result<BundleModel> {
    if f.target != w.base {
        return Err(Error::BadParams(format!(
            "cannot pull back a bundle over {} along a map into {}",
            w.base, f.target
        )));
    }
    let map = f.clone();
    let wq = w.projector.clone();
    let mut b = BundleModel::new(
        format!("pullback({},{})", f.name, w.descriptor),
        f.source.clone(),
        w.ambient_fiber_dim,
        w.real_rank,
        move |x| wq(&map.apply(x)),
    );
    b.complex = w.complex;
    Ok(b)
}

/// `L_b` over `Tⁿ`: `Q(x) = u uᵀ` with `u(x) = (cos πb·x, sin πb·x)`.
pub fn torus_line(bits: &[u8]) -> Result<BundleModel> {
    if bits.is_empty() || bits.iter().all(|&b| b == 0) || bits.iter().any(|&b| b > 1) {
        return Err(Error::BadParams(format!("b = {bits:?} must be a nonzero bit vector")));
    }
    let n = bits.len();
    let b: Vector = Vector::from_iterator(n, bits.iter().map(|&x| x as f64));
    let b2 = b.clone();
    let label: String = bits.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    Ok(BundleModel::new(format!("torus_line({label})"), ManifoldModel::Torus(n), 2, 1, move |x| {
        let u = torus_line_section(&b, x);
        &u * u.transpose()
    })
    .with_derivative(move |x, xi| {
        let phase = std::f64::consts::PI * b2.dot(x);
        let rate = std::f64::consts::PI * b2.dot(xi);
        let u = Vector::from_vec(vec![phase.cos(), phase.sin()]);
        let du = Vector::from_vec(vec![-phase.sin() * rate, phase.cos() * rate]);
        &du * u.transpose() + &u * du.transpose()
    }))
}

/// `u(x) = (cos πb·x, sin πb·x)`, evaluated on the given representative.
pub fn torus_line_section(bits: &Vector, x: &Point) -> Vector {
    let phase = std::f64::consts::PI * bits.dot(x);
    Vector::from_vec(vec![phase.cos(), phase.sin()])
}

/// `TSⁿ` with `Q(x) = I − x xᵀ`.
pub fn tangent_sphere(n: usize) -> BundleModel {
    let dim = n + 1;
    BundleModel::new(format!("tangent_sphere({n})"), ManifoldModel::Sphere(n), dim, n, move |x| {
        Matrix::identity(dim, dim) - x * x.transpose()
    })
    .with_derivative(|x, xi| -(xi * x.transpose() + x * xi.transpose()))
}

/// `M × ℝʳ`.
pub fn trivial(base: ManifoldModel, rank: usize) -> BundleModel {
    BundleModel::new(format!("trivial({base},{rank})"), base, rank, rank, move |_| {
        Matrix::identity(rank, rank)
    })
    .with_derivative(move |_, _| Matrix::zeros(rank, rank))
}

/// `M × ℂʳ` as a complex bundle.
pub fn trivial_complex(base: ManifoldModel, complex_rank: usize) -> BundleModel {
    let mut b = trivial(base, 2 * complex_rank);
    b.descriptor = format!("trivial_complex({},{complex_rank})", b.base);
    b.with_complex_structure()
}

/// Orthogonal complement of `W` inside `M × ℝᴺ`: `Q(x) = I − Q_W(x)`.
pub fn complement(w: &BundleModel) -> BundleModel {
    let n = w.ambient_fiber_dim;
    let wq = w.projector.clone();
    let mut b = BundleModel::new(
        format!("complement({})", w.descriptor),
        w.base.clone(),
        n,
        n - w.real_rank,
        move |x| Matrix::identity(n, n) - wq(x),
    );
    if let Some(d) = w.derivative.clone() {
        b = b.with_derivative(move |x, xi| -d(x, xi));
    }
    b.complex = w.complex;
    b
}

/// `pr₁*V₁ ⊕ pr₂*V₂` over `M₁ × M₂`, with block-diagonal projector.
pub fn direct_sum(v1: &BundleModel, v2: &BundleModel) -> BundleModel {
    let base = ManifoldModel::product(v1.base.clone(), v2.base.clone());
    let split_at = v1.base.ambient_dim();
    let (n1, n2) = (v1.ambient_fiber_dim, v2.ambient_fiber_dim);
    let (q1, q2) = (v1.projector.clone(), v2.projector.clone());
    let split = move |x: &Point| {
        (
            x.rows(0, split_at).clone_owned(),
            x.rows(split_at, x.len() - split_at).clone_owned(),
        )
    };
    let block = move |a: Matrix, b: Matrix| {
        let mut m = Matrix::zeros(n1 + n2, n1 + n2);
        m.view_mut((0, 0), (n1, n1)).copy_from(&a);
        m.view_mut((n1, n1), (n2, n2)).copy_from(&b);
        m
    };
    let mut b = BundleModel::new(
        format!("direct_sum({},{})", v1.descriptor, v2.descriptor),
        base,
        n1 + n2,
        v1.real_rank + v2.real_rank,
        move |x| {
            let (a, c) = split(x);
            block(q1(&a), q2(&c))
        },
    );
    if let (Some(d1), Some(d2)) = (v1.derivative.clone(), v2.derivative.clone()) {
        b = b.with_derivative(move |x, xi| {
            let (a, c) = split(x);
            let (ea, ec) = split(xi);
            block(d1(&a, &ea), d2(&c, &ec))
        });
    }
    b.complex = v1.complex && v2.complex;
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{power_map_cp1, sphere_to_cp1_diffeo};

    fn all_models() -> Vec<BundleModel> {
        let f2 = power_map_cp1(2).after(&sphere_to_cp1_diffeo().as_map());
        vec![
            tautological_real(1, 2),
            tautological_real(2, 4),
            tautological_complex(1),
            tautological_complex(2),
            pullback(&f2, &tautological_complex(1)).unwrap(),
            torus_line(&[1, 0]).unwrap(),
            torus_line(&[1, 1, 1]).unwrap(),
            tangent_sphere(2),
            trivial(ManifoldModel::Sphere(2), 3),
            trivial_complex(ManifoldModel::Sphere(2), 1),
            complement(&tautological_real(1, 3)),
            direct_sum(&tautological_real(1, 2), &pullback(&f2, &tautological_complex(1)).unwrap()),
        ]
    }

    #[test]
    fn projector_identities_hold_on_samples() {
        for b in all_models() {
            assert!(b.invariant_residual(50, 1) <= 1e-8, "{}", b.descriptor);
        }
    }

    #[test]
    fn exact_derivatives_match_finite_differences() {
        for b in all_models().into_iter().filter(|b| b.has_exact_derivative()) {
            let x = b.base.random_point(9);
            let xi = b.base.tangent_project(&x, &b.base.random_point(10));
            let fd = (b.projector(&(&x + &xi * 1e-6)) - b.projector(&(&x - &xi * 1e-6))) / 2e-6;
            let exact = b.projector_derivative(&x, &xi).unwrap();
            assert!(max_abs(&(fd - exact)) < 1e-7, "{}", b.descriptor);
        }
    }

    #[test]
    fn pullback_fibers_are_bitwise_pullbacks() {
        let w = tautological_complex(1);
        let f3 = power_map_cp1(3).after(&sphere_to_cp1_diffeo().as_map());
        let p = pullback(&f3, &w).unwrap();
        assert!(p.is_complex());
        for seed in 0..20 {
            let x = p.base.random_point(seed);
            assert_eq!(p.projector(&x), w.projector(&f3.apply(&x)));
        }
    }

    #[test]
    fn pullback_rejects_mismatched_target() {
        let f = power_map_cp1(2);
        assert!(pullback(&f, &tangent_sphere(2)).is_err());
    }

    #[test]
    fn fiber_vectors_are_validated() {
        let b = tangent_sphere(2);
        let x = Point::from_vec(vec![0.0, 0.0, 1.0]);
        assert!(b.fiber_vector(&x, Vector::from_vec(vec![1.0, 0.0, 0.0])).is_ok());
        assert!(matches!(
            b.fiber_vector(&x, Vector::from_vec(vec![0.0, 0.0, 1.0])),
            Err(Error::NotInFiber(_))
        ));
    }

    #[test]
    fn torus_line_rejects_zero_bits() {
        assert!(torus_line(&[0, 0]).is_err());
        assert!(torus_line(&[]).is_err());
        assert!(torus_line(&[2]).is_err());
    }
}
