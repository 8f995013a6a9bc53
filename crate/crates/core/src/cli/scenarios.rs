use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Recorder, ScenarioConfig, Table};
use crate::bundles::{
    pullback, tangent_sphere, tautological_complex, tautological_real, trivial, trivial_complex, BundleModel,
};
use crate::error::{Error, Result};
use crate::gluing::{cocycle_compat_check, local_data_from_lift, rp1_frames, synthetic_data, LocalLiftDatum, PatchField};
use crate::lattice::IntMatrix;
use crate::lifts::{
    ambient_projection_lift, check_lift_with, compose, cpn_conjugation_lift, differential_lift, fiberwise_complex_correction,
    frame_lift_view, grassmann_orthogonal_lift, invert, lift_from_homotopy, metrize, polar_factors,
    pullback_conjugation_lift, s1xs2_generator_lift, sphere_power_bundle, torus_line_lift, torus_representative_image,
    Lift, LiftReport, ProjectionTarget,
};
use crate::manifolds::{
    constant_homotopy, cpn_phase_homotopy, degree_raw, named_diffeo, power_map_sphere, rotation_homotopy, Diffeo,
    DiffeoParams, ManifoldModel, Point,
};
use crate::numkernel::{max_abs, min_singular_value, op_norm, plane_rotation, Matrix};
use crate::obstruction::{lattice_chern_number, plaquette_phases, pullback_invariance_report, torus_sweep, w1_profile};
use crate::tolerance::{COMPOSED, MIN_SINGULAR};

pub struct ScenarioSpec {
    pub name: &'static str,
    pub summary: &'static str,
    pub(super) run: fn(&ScenarioConfig, &mut Recorder) -> Result<()>,
}

pub const SCENARIOS: &[ScenarioSpec] = &[
    ScenarioSpec {
        name: "homotopy_lift_sphere",
        summary: "lifts of rotation homotopies by parallel transport, with convergence order",
        run: homotopy_lift_sphere,
    },
    ScenarioSpec {
        name: "metrize_random",
        summary: "polar metrization of seeded non-isometric lifts",
        run: metrize_random,
    },
    ScenarioSpec {
        name: "frame_view",
        summary: "isometric lifts acting on orthonormal frames",
        run: frame_view,
    },
    ScenarioSpec {
        name: "tangent_isometry",
        summary: "differentials of sphere diffeomorphisms made isometric",
        run: tangent_isometry,
    },
    ScenarioSpec {
        name: "ambient_projection",
        summary: "lifts by projecting onto the target fiber, and the non-injective case",
        run: ambient_projection,
    },
    ScenarioSpec {
        name: "grassmann_action",
        summary: "orthogonal actions on tautological bundles over Grassmannians",
        run: grassmann_action,
    },
    ScenarioSpec {
        name: "cpn_conjugation",
        summary: "conjugation on CP^n: anti-linear lift, Chern obstruction, fiberwise correction",
        run: cpn_conjugation,
    },
    ScenarioSpec {
        name: "sphere_pullbacks",
        summary: "degrees of f_n and Chern numbers of f_n pullbacks over S^2",
        run: sphere_pullbacks,
    },
    ScenarioSpec {
        name: "torus_sweep",
        summary: "mod-2 criterion vs subgroup oracle for line bundles on tori, holonomy profiles",
        run: torus_sweep_scenario,
    },
    ScenarioSpec {
        name: "s1xs2_generators",
        summary: "lifts of the generators a, r, s on S^1 x S^2",
        run: s1xs2_generators,
    },
    ScenarioSpec {
        name: "gluing_demo",
        summary: "cocycle compatibility of local lift data",
        run: gluing_demo,
    },
];

pub fn scenario_names() -> Vec<&'static str> {
    SCENARIOS.iter().map(|s| s.name).collect()
}

fn rng_for(cfg: &ScenarioConfig, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let qr = gaussian_matrix(rng, n, n).qr();
    let (q, r) = (qr.q(), qr.r());
    let signs = Matrix::from_diagonal(&r.diagonal().map(|d| if d < 0.0 { -1.0 } else { 1.0 }));
    q * signs
}

fn rows_of(a: &Matrix) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

fn points(model: &ManifoldModel, cfg: &ScenarioConfig, stream: u64, count: usize) -> Vec<Point> {
    let mut rng = rng_for(cfg, stream);
    (0..count).map(|_| model.random_point_with(&mut rng)).collect()
}

/// Records the basic `check_lift` verdicts under `prefix`.
fn lift_checks(rec: &mut Recorder, prefix: &str, lift: &Lift, cfg: &ScenarioConfig) -> LiftReport {
    let r = check_lift_with(lift, cfg.samples, cfg.seed, &cfg.tolerances);
    rec.at_most(format!("{prefix}.base"), r.base_residual, r.tolerance);
    rec.at_most(format!("{prefix}.fiber"), r.fiber_residual, r.tolerance);
    rec.at_most(format!("{prefix}.linearity"), r.linearity_residual, r.tolerance);
    rec.at_least(format!("{prefix}.min_singular_value"), r.min_singular_value, MIN_SINGULAR);
    rec.equal(format!("{prefix}.failed_probes"), r.failed_probes as i64, 0);
    r
}

/// Largest `‖M(x) − I‖` of the fiber matrices over `xs`.
fn distance_to_identity(lift: &Lift, xs: &[Point]) -> Result<f64> {
    let r = lift.bundle.real_rank;
    let mut worst: f64 = 0.0;
    for x in xs {
        let m = lift.fiber_matrix(x)?.matrix;
        worst = worst.max(op_norm(&(m - Matrix::identity(r, r))));
    }
    Ok(worst)
}

fn fiber_matrix_distance(a: &Lift, b: &Lift, xs: &[Point]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in xs {
        let (ma, mb) = (a.fiber_matrix(x)?, b.fiber_matrix(x)?);
        worst = worst.max(op_norm(&(ma.matrix - mb.matrix)));
    }
    Ok(worst)
}

/// Transport along `t ↦ e^{tG} x` has the closed form
/// `e^{G} exp([G, Q₀] − G)` applied to the starting fiber vectors.
fn rotation_transport_error(bundle: &BundleModel, lift: &Lift, generator: &Matrix, xs: &[Point]) -> Result<f64> {
    let end = generator.clone().exp();
    let mut worst: f64 = 0.0;
    for x in xs {
        let q0 = bundle.projector(x);
        let basis = bundle.fiber_basis(x);
        let (_, got) = lift.apply_columns(x, &basis)?;
        let exact = &end * (generator * &q0 - &q0 * generator - generator).exp() * &basis;
        worst = worst.max((got - exact).norm());
    }
    Ok(worst)
}

fn plane_generator(dim: usize, a: usize, b: usize, angle: f64) -> Matrix {
    let mut g = Matrix::zeros(dim, dim);
    g[(b, a)] = angle;
    g[(a, b)] = -angle;
    g
}

/// Homotopy lifting on `TS²` and `γ¹(ℂ²)`; the order check compares the
/// transport error against the closed form at `steps` and `4·steps`.
fn homotopy_lift_sphere(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<()> {
    let steps = cfg.transport_steps;
    let s2 = ManifoldModel::Sphere(2);
    let tangent = Arc::new(tangent_sphere(2));
    let xs = points(&s2, cfg, 1, 20);

    let constant = lift_from_homotopy(tangent.clone(), &constant_homotopy(s2.clone()), steps)?;
    rec.at_most("constant.identity", distance_to_identity(&constant, &xs)?, cfg.tolerances.exact);

    let quarter = rotation_homotopy(&s2, (0, 1), FRAC_PI_2)?;
    let l = lift_from_homotopy(tangent.clone(), &quarter, steps)?;
    let r = lift_checks(rec, "tangent", &l, cfg);
    rec.at_most("tangent.isometry", r.isometry_residual, r.tolerance);

    let taut = Arc::new(tautological_complex(1));
    let phase = cpn_phase_homotopy(1, 0, 2.0 * PI / 3.0)?;
    let lc = lift_from_homotopy(taut.clone(), &phase, steps)?;
    let r = lift_checks(rec, "tautological", &lc, cfg);
    rec.at_most("tautological.isometry", r.isometry_residual, r.tolerance);
    rec.at_most(
        "tautological.complex_linearity",
        r.complex_linearity_residual.unwrap_or(f64::NAN),
        r.tolerance,
    );

    let cases = [
        ("tangent", tangent.clone(), quarter, plane_generator(3, 0, 1, FRAC_PI_2)),
        ("tautological", taut.clone(), phase, plane_generator(4, 0, 1, 2.0 * PI / 3.0)),
    ];
    for (name, bundle, h, generator) in cases {
        let probe = points(&bundle.base, cfg, 2, 10);
        let coarse = lift_from_homotopy(bundle.clone(), &h, steps)?;
        let fine = lift_from_homotopy(bundle.clone(), &h, 4 * steps)?;
        let e1 = rotation_transport_error(&bundle, &coarse, &generator, &probe)?;
        let e4 = rotation_transport_error(&bundle, &fine, &generator, &probe)?;
        rec.at_most(format!("order.{name}.error"), e1, cfg.tolerances.transport);
        rec.at_least(format!("order.{name}.improvement"), e1 / e4, 10.0);
        rec.detail(&format!("order_{name}"), serde_json::json!({"steps": [steps, 4 * steps], "error": [e1, e4]}));
    }

    // h_V: composing two homotopy lifts covers the summed rotation.
    let (t1, t2) = (0.4, 0.7);
    let l1 = lift_from_homotopy(tangent.clone(), &rotation_homotopy(&s2, (0, 1), t1)?, steps)?;
    let l2 = lift_from_homotopy(tangent.clone(), &rotation_homotopy(&s2, (0, 1), t2)?, steps)?;
    let c = compose(&l1, &l2)?;
    let target = plane_rotation(3, 0, 1, t1 + t2);
    let base = xs.iter().map(|x| (c.base_map.apply(x) - &target * x).norm()).fold(0.0, f64::max);
    rec.at_most("compose.base", base, COMPOSED);
    lift_checks(rec, "compose", &c, cfg);
    let back = compose(&c, &invert(&c))?;
    rec.at_most("compose.inverse_identity", distance_to_identity(&back, &xs)?, COMPOSED);
    Ok(())
}

fn stretch_diffeo(d: [f64; 3]) -> Diffeo {
    Diffeo::new(
        format!("stretch{d:?}"),
        ManifoldModel::Sphere(2),
        move |x| Point::from_vec(vec![d[0] * x[0], d[1] * x[1], d[2] * x[2]]).normalize(),
        move |x| Point::from_vec(vec![x[0] / d[0], x[1] / d[1], x[2] / d[2]]).normalize(),
    )
}

fn metrize_random(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<()> {
    let s2 = ManifoldModel::Sphere(2);
    let trivial3 = Arc::new(trivial(s2.clone(), 3));
    let xs = points(&s2, cfg, 1, 10);
    let mut rng = rng_for(cfg, 2);
    let (mut input_iso, mut iso, mut fact, mut fixed, mut base): (f64, f64, f64, f64, f64) = (f64::INFINITY, 0.0, 0.0, 0.0, 0.0);
    for i in 0..20 {
        let lift = if i % 2 == 0 {
            let mut a = Matrix::identity(3, 3) + gaussian_matrix(&mut rng, 3, 3) * 0.5;
            while min_singular_value(&a) < 0.1 {
                a = Matrix::identity(3, 3) + gaussian_matrix(&mut rng, 3, 3) * 0.5;
            }
            Lift::vertical_ambient(trivial3.clone(), a, format!("random_vertical_{i}"))?
        } else {
            let d = [rng.random_range(0.5..2.0), rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)];
            differential_lift(&stretch_diffeo(d))?
        };
        input_iso = input_iso.min(check_lift_with(&lift, cfg.samples, cfg.seed, &cfg.tolerances).isometry_residual);
        let m = metrize(&lift);
        iso = iso.max(check_lift_with(&m, cfg.samples, cfg.seed, &cfg.tolerances).isometry_residual);
        for x in &xs {
            fact = fact.max(polar_factors(&lift, x)?.factorization_residual);
            base = base.max((m.base_map.apply(x) - lift.base_map.apply(x)).norm());
        }
        fixed = fixed.max(fiber_matrix_distance(&metrize(&m), &m, &xs)?);
    }
    rec.at_least("input.non_isometric", input_iso, 1e-3);
    rec.at_most("metrized.isometry", iso, COMPOSED);
    rec.at_most("polar.factorization", fact, COMPOSED);
    rec.at_most("metrize.fixed_point", fixed, COMPOSED);
    rec.at_most("metrize.base_unchanged", base, cfg.tolerances.exact);

    let rot = random_orthogonal(&mut rng, 3);
    let scaled = Lift::vertical_ambient(trivial3, &rot * 2.0, "conformal")?;
    let m = metrize(&scaled);
    let mut worst: f64 = 0.0;
    for x in &xs {
        let fm = m.fiber_matrix(x)?;
        let expected = fm.target_basis.transpose() * &rot * &fm.source_basis;
        worst = worst.max(op_norm(&(fm.matrix - expected)));
    }
    rec.at_most("conformal.scale_removed", worst, COMPOSED);
    Ok(())
}

fn frame_view(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<()> {
    let mut rng = rng_for(cfg, 3);
    let a = random_orthogonal(&mut rng, 4);
    let lift = grassmann_orthogonal_lift(&a, 2)?;
    let bundle = lift.bundle.clone();
    let xs = points(&bundle.base, cfg, 1, 20);
    let (mut gram, mut equiv, mut unchanged): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let id = Lift::identity(bundle.clone());
    for x in &xs {
        let frame = bundle.fiber_basis(x);
        let out = frame_lift_view(&lift, x, &frame)?;
        gram = gram.max(max_abs(&(out.transpose() * &out - Matrix::identity(2, 2))));
        let g = plane_rotation(2, 0, 1, rng.random_range(-PI..PI));
        let rotated = frame_lift_view(&lift, x, &(&frame * &g))?;
        equiv = equiv.max(max_abs(&(rotated - out * &g)));
        unchanged = unchanged.max(max_abs(&(frame_lift_view(&id, x, &frame)? - &frame)));
    }
    rec.at_most("grassmann.gram", gram, cfg.tolerances.exact);
    rec.at_most("grassmann.equivariance", equiv, COMPOSED);
    rec.at_most("identity.unchanged", unchanged, cfg.tolerances.exact);

    let x = &xs[0];
    let frame = bundle.fiber_basis(x);
    let doubled = Lift::vertical_ambient(bundle.clone(), Matrix::identity(4, 4) * 2.0, "doubling")?;
    rec.holds(
        "rejects.non_isometric",
        matches!(frame_lift_view(&doubled, x, &frame), Err(Error::NotIsometric(_))),
    );
    rec.holds(
        "rejects.non_orthonormal",
        matches!(frame_lift_view(&lift, x, &(&frame * 1.5)), Err(Error::NotOrthonormal(_))),
    );
    Ok(())
}

/// Smallest round-off floor of a central difference with step `1e-6`.
const DIFFERENTIAL_FLOOR: f64 = 1e-9;

fn tangent_isometry(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<()> {
    let s2 = ManifoldModel::Sphere(2);
    let xs = points(&s2, cfg, 1, 20);
    let id = differential_lift(&Diffeo::identity(s2.clone()))?;
    rec.at_most("identity.identity", distance_to_identity(&id, &xs)?, DIFFERENTIAL_FLOOR);

    let mut rng = rng_for(cfg, 4);
    let r = random_orthogonal(&mut rng, 3);
    let rot = named_diffeo(
        &s2,
        "sphere_linear",
        &DiffeoParams {
            matrix: Some(rows_of(&r)),
            ..Default::default()
        },
    )?;
    let l = differential_lift(&rot)?;
    let rep = lift_checks(rec, "rotation", &l, cfg);
    rec.at_most("rotation.isometry", rep.isometry_residual, DIFFERENTIAL_FLOOR);

    let sigma = named_diffeo(&s2, "sigma", &DiffeoParams::default())?;
    let ls = differential_lift(&sigma)?;
    lift_checks(rec, "sigma", &ls, cfg);
    let ms = check_lift_with(&metrize(&ls), cfg.samples, cfg.seed, &cfg.tolerances);
    rec.at_most("sigma.metrized.isometry", ms.isometry_residual, COMPOSED);

    let stretch = differential_lift(&stretch_diffeo([1.0, 1.0, 2.0]))?;
    let rep = lift_checks(rec, "stretch", &stretch, cfg);
    rec.at_least("stretch.non_isometric", rep.isometry_residual, 1e-2);
    let m = metrize(&stretch);
    let mr = lift_checks(rec, "stretch.metrized", &m, cfg);
    rec.at_most("stretch.metrized.isometry", mr.isometry_residual, COMPOSED);
    Ok(())
}

fn ambient_projection(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<()> {
    let b = Arc::new(tautological_real(1, 2));
    let id = ambient_projection_lift(b.clone(), &Diffeo::identity(b.base.clone()), ProjectionTarget::Fiber)?;
    let xs = points(&b.base, cfg, 1, 20);
    rec.at_most("identity.identity", distance_to_identity(&id, &xs)?, cfg.tolerances.exact);

    let small = named_diffeo(
        &b.base,
        "grassmann_action",
        &DiffeoParams {
            matrix: Some(rows_of(&plane_rotation(2, 0, 1, 0.1))),
            ..Default::default()
        },
    )?;
    let l = ambient_projection_lift(b.clone(), &small, ProjectionTarget::Fiber)?;
    lift_checks(rec, "small_rotation", &l, cfg);

    let inv = named_diffeo(&b.base, "grassmann_involution", &DiffeoParams::default())?;
    match ambient_projection_lift(b.clone(), &inv, ProjectionTarget::Fiber) {
        Err(Error::NonInjective { singular_value, .. }) => {
            rec.holds("involution.non_injective", true);
            rec.detail("involution_singular_value", singular_value);
        }
        _ => rec.holds("involution.non_injective", false),
    }

    // The complement variant is injective for the involution but its image
    // lies outside the tautological fiber.
    let c = ambient_projection_lift(b.clone(), &inv, ProjectionTarget::Complement)?;
    let r = check_lift_with(&c, cfg.samples, cfg.seed, &cfg.tolerances);
    rec.at_least("complement.leaves_fiber", r.fiber_residual, 0.5);
    Ok(())
}

fn grassmann_action(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<()> {
    let id = grassmann_orthogonal_lift(&Matrix::identity(3, 3), 1)?;
    let xs = points(&id.bundle.base, cfg, 1, 20);
    rec.at_most("identity.identity", distance_to_identity(&id, &xs)?, cfg.tolerances.exact);

    let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
    let refl = grassmann_orthogonal_lift(&d, 1)?;
    let r = lift_checks(rec, "rp1_reflection", &refl, cfg);
    rec.at_most("rp1_reflection.isometry", r.isometry_residual, cfg.tolerances.exact);

    let mut rng = rng_for(cfg, 5);
    let a = random_orthogonal(&mut rng, 4);
    let l = grassmann_orthogonal_lift(&a, 2)?;
    let r = lift_checks(rec, "gr2r4", &l, cfg);
    rec.at_most("gr2r4.isometry", r.isometry_residual, cfg.tolerances.exact);

    rec.holds(
        "rejects.non_orthogonal",
        matches!(grassmann_orthogonal_lift(&(&a * 1.1), 2), Err(Error::BadParams(_))),
    );
    Ok(())
}

fn phase_table(phases: &[f64]) -> Table {
    let mut t = Table::new(&["face", "phase"]);
    for (i, p) in phases.iter().enumerate() {
        t.rows.push(vec![i.to_string(), format!("{p:e}")]);
    }
    t
}

fn cpn_conjugation(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<()> {
    let taut = tautological_complex(1);
    let conj = named_diffeo(&taut.base, "cpn_conjugation", &DiffeoParams::default())?;
    let report = pullback_invariance_report(&conj, &taut, cfg.mesh_level)?;
    rec.equal("obstruction.c1", report.c1, -1);
    rec.equal("obstruction.c1_pullback", report.c1_pullback, 1);
    rec.holds("obstruction.flagged", report.lift_obstructed);
    rec.detail("obstruction", &report);

    for n in [1, 2] {
        let l = cpn_conjugation_lift(n);
        let r = lift_checks(rec, &format!("lift{n}"), &l, cfg);
        rec.at_most(format!("lift{n}.anti_linearity"), r.anti_linearity_residual.unwrap_or(f64::NAN), cfg.tolerances.exact);
        rec.at_least(format!("lift{n}.complex_linearity_defect"), r.complex_linearity_residual.unwrap_or(f64::NAN), 1.0);
    }

    let l = cpn_conjugation_lift(1);
    let xs = points(&l.bundle.base, cfg, 1, 20);
    let (mut conj_res, mut comm, mut minus_j): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for x in &xs {
        let c = fiberwise_complex_correction(&l, x)?;
        conj_res = conj_res.max(c.conjugation_residual);
        comm = comm.max(c.commutation_residual);
        minus_j = minus_j.max(max_abs(&(&c.k + &c.j_x)));
    }
    rec.at_most("correction.conjugation", conj_res, COMPOSED);
    rec.at_most("correction.commutation", comm, COMPOSED);
    rec.at_most("correction.k_is_minus_j", minus_j, COMPOSED);

    // A vertical ℝ-linear automorphism close to the identity.
    let mut rng = rng_for(cfg, 6);
    let g = gaussian_matrix(&mut rng, 4, 4);
    let a = Matrix::identity(4, 4) + &g * (0.2 / op_norm(&g));
    let vertical = Lift::vertical_ambient(Arc::new(tautological_complex(1)), a, "random_real_vertical")?;
    let mut comm: f64 = 0.0;
    for x in &xs {
        comm = comm.max(fiberwise_complex_correction(&vertical, x)?.commutation_residual);
    }
    rec.at_most("correction.vertical.commutation", comm, COMPOSED);

    let phases = plaquette_phases(&taut, cfg.mesh_level)?;
    rec.detail("phase_sum_over_2pi", phases.iter().sum::<f64>() / (2.0 * PI));
    rec.table = Some(phase_table(&phases));
    Ok(())
}

fn sphere_pullbacks(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<()> {
    let s2 = ManifoldModel::Sphere(2);
    let sigma = named_diffeo(&s2, "sigma", &DiffeoParams::default())?;
    let f2 = power_map_sphere(2);
    let f3 = power_map_sphere(3);
    let f2f2 = f2.after(&f2);
    let maps: Vec<(&str, Box<dyn Fn(&Point) -> Point>, i64)> = vec![
        ("id", Box::new(|x: &Point| x.clone()), 1),
        ("sigma", Box::new(move |x: &Point| sigma.apply(x)), -1),
        ("f2", Box::new({
            let f = f2.clone();
            move |x: &Point| f.apply(x)
        }), 2),
        ("f3", Box::new(move |x: &Point| f3.apply(x)), 3),
        ("f2_f2", Box::new(move |x: &Point| f2f2.apply(x)), 4),
    ];
    let mut degrees = serde_json::Map::new();
    for (name, f, expected) in &maps {
        let raws: Vec<f64> = [cfg.mesh_level, cfg.mesh_level + 1].iter().map(|&l| degree_raw(f.as_ref(), l)).collect();
        for (raw, level) in raws.iter().zip([cfg.mesh_level, cfg.mesh_level + 1]) {
            rec.equal(format!("degree.{name}.level{level}"), raw.round() as i64, *expected);
            rec.at_most(format!("degree.{name}.level{level}.quantization"), (raw - raw.round()).abs(), 0.05);
        }
        degrees.insert(name.to_string(), serde_json::json!(raws[0].round() as i64));
    }
    rec.detail("degrees", degrees);

    let bundles: Vec<(&str, BundleModel, i64)> = vec![
        ("trivial", trivial_complex(s2.clone(), 1), 0),
        ("tautological", tautological_complex(1), -1),
        ("f2", sphere_power_bundle(2), -2),
        ("f3", sphere_power_bundle(3), -3),
    ];
    let mut chern = serde_json::Map::new();
    for (name, b, expected) in &bundles {
        let c = lattice_chern_number(b, cfg.mesh_level)?;
        rec.equal(format!("chern.{name}"), c.value, *expected);
        rec.holds(format!("chern.{name}.stable"), c.stable);
        chern.insert(name.to_string(), serde_json::json!(c.value));
    }
    rec.detail("chern", chern);

    // c₁(f*L) = deg(f)·c₁(L) for L over S².
    let line = sphere_power_bundle(1);
    let c_line = lattice_chern_number(&line, cfg.mesh_level)?.value;
    let sigma = named_diffeo(&s2, "sigma", &DiffeoParams::default())?;
    let pulled: Vec<(&str, BundleModel, i64)> = vec![
        ("id", pullback(&Diffeo::identity(s2.clone()).as_map(), &line)?, 1),
        ("sigma", pullback(&sigma.as_map(), &line)?, -1),
        ("f2", pullback(&f2, &line)?, 2),
        ("f3", pullback(&power_map_sphere(3), &line)?, 3),
    ];
    for (name, b, deg) in &pulled {
        let c = lattice_chern_number(b, cfg.mesh_level)?.value;
        rec.equal(format!("naturality.{name}"), c, deg * c_line);
    }

    let l = pullback_conjugation_lift(2);
    let r = lift_checks(rec, "pullback_conjugation2", &l, cfg);
    rec.at_most(
        "pullback_conjugation2.anti_linearity",
        r.anti_linearity_residual.unwrap_or(f64::NAN),
        cfg.tolerances.exact,
    );
    let mut seam = points(&s2, cfg, 1, 10);
    seam.push(Point::from_vec(vec![0.0, 0.0, 1.0]));
    seam.push(Point::from_vec(vec![1e-4, 0.0, 1.0]).normalize());
    let square = compose(&l, &l)?;
    rec.at_most("pullback_conjugation2.involution", distance_to_identity(&square, &seam)?, cfg.tolerances.exact);

    rec.table = Some(phase_table(&plaquette_phases(&sphere_power_bundle(2), cfg.mesh_level)?));
    Ok(())
}

fn torus_sweep_scenario(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<()> {
    let dims: Vec<usize> = cfg.n.map(|n| vec![n]).unwrap_or_else(|| vec![1, 2, 3]);
    let mut table = Table::new(&["n", "bits", "matrix", "fast_verdict", "oracle_verdict", "lift_constructed"]);
    let probe_samples = cfg.samples.min(16);
    for &n in &dims {
        let recs = torus_sweep(n, 20, cfg.seed)?;
        let agree = recs.iter().filter(|r| r.fast_verdict == r.oracle_verdict).count();
        let constructed = recs.iter().filter(|r| r.fast_verdict == r.lift_constructed).count();
        rec.equal(format!("sweep{n}.records"), recs.len() as i64, 20 * ((1i64 << n) - 1));
        rec.equal(format!("sweep{n}.criterion_agreement"), agree as i64, recs.len() as i64);
        rec.equal(format!("sweep{n}.construction_agreement"), constructed as i64, recs.len() as i64);
        let mut worst: f64 = 0.0;
        let mut failures = 0usize;
        for r in recs.iter().filter(|r| r.lift_constructed) {
            let l = torus_line_lift(&r.matrix, &r.bits)?;
            let report = check_lift_with(&l, probe_samples, cfg.seed, &cfg.tolerances);
            worst = worst.max(report.worst_residual());
            failures += usize::from(!report.passes());
        }
        rec.equal(format!("sweep{n}.constructed_lifts_fail"), failures as i64, 0);
        rec.detail(
            &format!("sweep{n}"),
            serde_json::json!({
                "records": recs.len(),
                "liftable": recs.iter().filter(|r| r.fast_verdict).count(),
                "worst_lift_residual": worst,
            }),
        );
        for r in &recs {
            table.rows.push(vec![
                n.to_string(),
                r.bits.iter().map(|b| b.to_string()).collect::<String>(),
                serde_json::to_string(&r.matrix.0).expect("integers"),
                r.fast_verdict.to_string(),
                r.oracle_verdict.to_string(),
                r.lift_constructed.to_string(),
            ]);
        }
        if n <= 3 {
            let mut profiles = serde_json::Map::new();
            for bits in crate::obstruction::nonzero_bit_vectors(n) {
                let got = w1_profile(&bits, cfg.transport_steps)?;
                let expected: Vec<i8> = bits.iter().map(|&b| if b == 1 { -1 } else { 1 }).collect();
                let key: String = bits.iter().map(|b| b.to_string()).collect();
                rec.holds(format!("w1.{key}"), got == expected);
                profiles.insert(key, serde_json::json!(got));
            }
            rec.detail(&format!("w1_profiles{n}"), profiles);
        }
    }

    if dims.contains(&2) {
        let a = IntMatrix(vec![vec![1, 1], vec![0, 1]]);
        match torus_line_lift(&a, &[1, 0]) {
            Err(Error::CriterionFails {
                witness_point,
                witness_shift,
                ..
            }) => {
                let (v0, v1) = torus_representative_image(&a, &[1, 0], &witness_point, &witness_shift);
                rec.at_most("example.refused_witness_sign", (&v0 + &v1).norm(), cfg.tolerances.exact);
            }
            _ => rec.holds("example.refused_witness_sign", false),
        }
        let l = torus_line_lift(&a, &[0, 1])?;
        lift_checks(rec, "example.liftable", &l, cfg);
    }
    rec.table = Some(table);
    Ok(())
}

fn s1xs2_generators(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<()> {
    let powers: Vec<u32> = cfg.n.map(|n| vec![n as u32]).unwrap_or_else(|| vec![1, 2]);
    for &n in &powers {
        for name in ["a", "r", "s"] {
            let l = s1xs2_generator_lift(name, n, cfg.transport_steps)?;
            let prefix = format!("{name}{n}");
            let r = lift_checks(rec, &prefix, &l, cfg);
            rec.at_most(format!("{prefix}.isometry"), r.isometry_residual, r.tolerance);
            let xs = points(&l.bundle.base, cfg, 7, 10);
            if name == "s" {
                let trip = xs
                    .iter()
                    .map(|x| (l.base_map.apply(&l.base_map.apply(x)) - x).norm())
                    .fold(0.0, f64::max);
                rec.at_most(format!("{prefix}.base_involution"), trip, cfg.tolerances.exact);
            }
            if name == "r" {
                let s2 = ManifoldModel::Sphere(2);
                let slice: Vec<Point> = points(&s2, cfg, 8, 10)
                    .iter()
                    .map(|z| ManifoldModel::join(&Point::from_vec(vec![1.0, 0.0, 0.0, 0.0]), z))
                    .collect();
                rec.at_most(format!("{prefix}.identity_at_zero_angle"), distance_to_identity(&l, &slice)?, cfg.tolerances.exact);
            }
        }
    }
    Ok(())
}

fn gluing_demo(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<()> {
    let s2 = ManifoldModel::Sphere(2);
    let phi = named_diffeo(&s2, "antipodal", &DiffeoParams::default())?;
    let samples = cfg.samples.min(100);
    let (d1, d2, t) = synthetic_data(&s2, &phi, 3, samples, cfg.seed, None);
    rec.at_most("synthetic.orthogonality", d1.alpha.orthogonality_defect(), COMPOSED);
    let r = cocycle_compat_check(&d1, &d2, &t, &phi)?;
    rec.at_most("synthetic.compatible", r.max_residual, 1e-12);
    rec.holds("synthetic.verdict", r.compatible);

    let (d1, d2, t) = synthetic_data(&s2, &phi, 3, samples, cfg.seed, Some(0.1));
    let r = cocycle_compat_check(&d1, &d2, &t, &phi)?;
    rec.at_most("perturbed.residual_near_0.1", (r.max_residual - 0.1).abs(), 0.01);
    rec.holds("perturbed.incompatible", !r.compatible);
    rec.detail("perturbed_residual", r.max_residual);

    let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
    let lift = grassmann_orthogonal_lift(&d, 1)?;
    let (f1, f2) = rp1_frames();
    let pts = points(&lift.bundle.base, cfg, 9, samples);
    let (d1, d2, t) = local_data_from_lift(&lift, &f1, &f2, &pts)?;
    let r = cocycle_compat_check(&d1, &d2, &t, &lift.base_map)?;
    rec.at_most("rp1_reflection.compatible", r.max_residual, COMPOSED);
    rec.detail("rp1_overlap_samples", r.overlap_samples);

    let north = PatchField::new(vec![Point::from_vec(vec![0.0, 0.0, 1.0])], |x| x[2] > 0.0, |_| Matrix::identity(3, 3));
    let (d1, _, _) = synthetic_data(&s2, &phi, 3, 5, cfg.seed, None);
    let d2 = LocalLiftDatum {
        patch_id: "north".into(),
        alpha: north.clone(),
    };
    let t = crate::gluing::TransitionDatum { alpha: north };
    rec.holds(
        "rejects.non_invariant_patch",
        matches!(cocycle_compat_check(&d1, &d2, &t, &phi), Err(Error::PatchNotInvariant(_))),
    );
    Ok(())
}
