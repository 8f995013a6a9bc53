//! C ABI over `bundlelift`.
//!
//! Lifts are passed around as opaque `BlLift` handles created by the
//! `bl_lift_*` constructors and released with `bl_lift_free`. Every fallible
//! function returns a `BlStatus`; on failure `bl_last_error_message` holds a
//! description for the calling thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bundlelift::cli::{run_scenario, ScenarioConfig};
use bundlelift::lattice::IntMatrix;
use bundlelift::lifts::{self, check_lift, Lift};
use bundlelift::manifolds::Point;
use bundlelift::numkernel::Matrix;
use bundlelift::obstruction::{lattice_chern_number, torus_criterion};
use bundlelift::Error;

/// Result codes shared by all functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownName = 3,
    /// The construction is refused because its precondition fails (for
    /// example the torus criterion).
    NotLiftable = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque lift handle.
pub struct BlLift(Lift);

/// Residuals from `bl_lift_check`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BlLiftReport {
    pub samples: usize,
    pub tolerance: f64,
    pub base_residual: f64,
    pub fiber_residual: f64,
    pub linearity_residual: f64,
    pub min_singular_value: f64,
    pub isometry_residual: f64,
    /// NaN when the bundle has no complex structure.
    pub complex_linearity_residual: f64,
    /// NaN when the bundle has no complex structure.
    pub anti_linearity_residual: f64,
    pub failed_probes: usize,
    pub passes: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BlStatus {
    match e {
        Error::UnknownName(_) | Error::UnknownScenario(_) => BlStatus::UnknownName,
        Error::CriterionFails { .. } | Error::NonInjective { .. } | Error::DegenerateJacobian { .. } => BlStatus::NotLiftable,
        Error::BadParams(_) | Error::DimensionMismatch(_) | Error::BadPlane(..) | Error::ConfigInvalid(_) => {
            BlStatus::InvalidArgument
        }
        _ => BlStatus::Numerical,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (BlStatus, String)>) -> BlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BlStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (BlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (BlStatus, String) {
    (BlStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (BlStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn lift_ref<'a>(p: *const BlLift, what: &str) -> Result<&'a Lift, (BlStatus, String)> {
    p.as_ref().map(|l| &l.0).ok_or_else(|| null(what))
}

unsafe fn emit_lift(out: *mut *mut BlLift, lift: Lift) -> Result<(), (BlStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(BlLift(lift)));
    Ok(())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (BlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (BlStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Lift of `P ↦ APAᵀ` to the tautological bundle over `Gr_k(ℝⁿ)`. `a` is
/// an orthogonal `n × n` matrix in row-major order.
///
/// # Safety
/// `a` must point to `n * n` doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bl_lift_grassmann_orthogonal(a: *const f64, n: usize, k: usize, out: *mut *mut BlLift) -> BlStatus {
    guard(|| {
        let data = slice(a, n * n, "a")?;
        let m = Matrix::from_row_slice(n, n, data);
        emit_lift(out, lifts::grassmann_orthogonal_lift(&m, k).map_err(lib_err)?)
    })
}

/// Entrywise conjugation on the tautological line bundle over `CPⁿ`.
///
/// # Safety
/// `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bl_lift_cpn_conjugation(n: usize, out: *mut *mut BlLift) -> BlStatus {
    guard(|| {
        if n == 0 {
            return Err((BlStatus::InvalidArgument, "n must be at least 1".into()));
        }
        emit_lift(out, lifts::cpn_conjugation_lift(n))
    })
}

/// Lift of `φ_A` to the line bundle `L_b` over `Tⁿ`. `a` is an `n × n`
/// integer matrix in row-major order and `bits` holds `n` zeros and ones.
/// Returns `NotLiftable` when the mod-2 criterion fails.
///
/// # Safety
/// `a` must point to `n * n` values, `bits` to `n` values, `out` to
/// writable storage.
#[no_mangle]
pub unsafe extern "C" fn bl_lift_torus_line(a: *const i64, bits: *const u8, n: usize, out: *mut *mut BlLift) -> BlStatus {
    guard(|| {
        let rows = slice(a, n * n, "a")?.chunks(n.max(1)).map(|r| r.to_vec()).collect();
        let m = IntMatrix::from_rows(rows).map_err(lib_err)?;
        let b = slice(bits, n, "bits")?;
        emit_lift(out, lifts::torus_line_lift(&m, b).map_err(lib_err)?)
    })
}

/// Lift of one of the generators `"a"`, `"r"`, `"s"` of diffeomorphisms of
/// `S¹ × S²`, with `steps` transport steps for the composed `a`-lift.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_lift_s1xs2_generator(name: *const c_char, n: u32, steps: usize, out: *mut *mut BlLift) -> BlStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        emit_lift(out, lifts::s1xs2_generator_lift(name, n, steps).map_err(lib_err)?)
    })
}

/// `outer ∘ inner`.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_lift_compose(outer: *const BlLift, inner: *const BlLift, out: *mut *mut BlLift) -> BlStatus {
    guard(|| {
        let (o, i) = (lift_ref(outer, "outer")?, lift_ref(inner, "inner")?);
        emit_lift(out, lifts::compose(o, i).map_err(lib_err)?)
    })
}

/// # Safety
/// `lift` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_lift_invert(lift: *const BlLift, out: *mut *mut BlLift) -> BlStatus {
    guard(|| emit_lift(out, lifts::invert(lift_ref(lift, "lift")?)))
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `lift` must come from a `bl_lift_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn bl_lift_free(lift: *mut BlLift) {
    if !lift.is_null() {
        drop(Box::from_raw(lift));
    }
}

/// Real rank of the bundle and ambient dimension of base points.
///
/// # Safety
/// `lift` must be live; `rank` and `base_dim` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn bl_lift_dims(lift: *const BlLift, rank: *mut usize, base_dim: *mut usize) -> BlStatus {
    guard(|| {
        let l = lift_ref(lift, "lift")?;
        if !rank.is_null() {
            *rank = l.bundle.real_rank;
        }
        if !base_dim.is_null() {
            *base_dim = l.bundle.base.ambient_dim();
        }
        Ok(())
    })
}

/// Seeded verification of a lift.
///
/// # Safety
/// `lift` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_lift_check(lift: *const BlLift, samples: usize, seed: u64, out: *mut BlLiftReport) -> BlStatus {
    guard(|| {
        let l = lift_ref(lift, "lift")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if samples == 0 {
            return Err((BlStatus::InvalidArgument, "samples must be at least 1".into()));
        }
        let r = check_lift(l, samples, seed);
        *out = BlLiftReport {
            samples: r.samples,
            tolerance: r.tolerance,
            base_residual: r.base_residual,
            fiber_residual: r.fiber_residual,
            linearity_residual: r.linearity_residual,
            min_singular_value: r.min_singular_value,
            isometry_residual: r.isometry_residual,
            complex_linearity_residual: r.complex_linearity_residual.unwrap_or(f64::NAN),
            anti_linearity_residual: r.anti_linearity_residual.unwrap_or(f64::NAN),
            failed_probes: r.failed_probes,
            passes: r.passes(),
        };
        Ok(())
    })
}

/// Fiber matrix at the base point `x` in orthonormal fiber bases, written
/// row-major into `out` (`rank * rank` entries).
///
/// # Safety
/// `x` must point to `x_len` doubles and `out` to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bl_lift_fiber_matrix(
    lift: *const BlLift,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
    out_len: usize,
) -> BlStatus {
    guard(|| {
        let l = lift_ref(lift, "lift")?;
        let dim = l.bundle.base.ambient_dim();
        if x_len != dim {
            return Err((BlStatus::InvalidArgument, format!("base points have {dim} coordinates, got {x_len}")));
        }
        let p = Point::from_column_slice(slice(x, x_len, "x")?);
        let r = l.bundle.real_rank;
        if out_len < r * r {
            return Err((BlStatus::BufferTooSmall, format!("need {} entries, got {out_len}", r * r)));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let m = l.fiber_matrix(&p).map_err(lib_err)?.matrix;
        let dst = std::slice::from_raw_parts_mut(out, r * r);
        for i in 0..r {
            for j in 0..r {
                dst[i * r + j] = m[(i, j)];
            }
        }
        Ok(())
    })
}

/// First Chern number of the pullback of the tautological line along
/// `[z₀, z₁] ↦ [z₀ⁿ, z₁ⁿ]` over `S²` (`n = 0` gives the trivial line).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_sphere_power_chern(n: u32, mesh_level: usize, out: *mut i64) -> BlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let bundle = if n == 0 {
            bundlelift::bundles::trivial_complex(bundlelift::manifolds::ManifoldModel::Sphere(2), 1)
        } else {
            lifts::sphere_power_bundle(n)
        };
        *out = lattice_chern_number(&bundle, mesh_level).map_err(lib_err)?.value;
        Ok(())
    })
}

/// Both verdicts of the torus liftability criterion.
///
/// # Safety
/// `a` must point to `n * n` values, `bits` to `n`; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn bl_torus_criterion(
    a: *const i64,
    bits: *const u8,
    n: usize,
    fast: *mut bool,
    oracle: *mut bool,
) -> BlStatus {
    guard(|| {
        if fast.is_null() || oracle.is_null() {
            return Err(null("fast/oracle"));
        }
        let rows = slice(a, n * n, "a")?.chunks(n.max(1)).map(|r| r.to_vec()).collect();
        let m = IntMatrix::from_rows(rows).map_err(lib_err)?;
        let res = torus_criterion(&m, slice(bits, n, "bits")?).map_err(lib_err)?;
        *fast = res.fast_verdict;
        *oracle = res.oracle_verdict;
        Ok(())
    })
}

/// Runs a named scenario with default parameters and the given seed and
/// returns its JSON report (without wall time) in `*out_json`, to be
/// released with `bl_string_free`. `*overall` receives the pass flag.
///
/// # Safety
/// `name` must be NUL-terminated; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn bl_run_scenario_json(
    name: *const c_char,
    seed: u64,
    out_json: *mut *mut c_char,
    overall: *mut bool,
) -> BlStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let mut cfg = ScenarioConfig::new(name);
        cfg.seed = seed;
        let (mut report, _) = run_scenario(&cfg).map_err(lib_err)?;
        report.wall_time_s = None;
        let text = serde_json::to_string(&report).map_err(|e| (BlStatus::Numerical, e.to_string()))?;
        if !overall.is_null() {
            *overall = report.overall;
        }
        *out_json = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn bl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
