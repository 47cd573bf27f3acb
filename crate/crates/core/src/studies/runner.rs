use nalgebra::{Matrix2, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::config::{StudyConfig, StudyKind};
use super::fit::{fit_order, richardson, OrderFit};
use super::report::{Check, Extrapolation, NamedFit, ReportRow, Series, StudyReport};
use crate::error::{Error, Result};
use crate::geometry::{make_builtin_patch, SurfacePatch, SurfaceQuadrature, ThicknessPair, TransversalRule};
use crate::kinematics::{
    bending_expansion_residual, build_isometry, stretching_expansion_residual, IsometryField, StrainField,
};
use crate::limit2d::{eval_i, eval_j};
use crate::loads::{
    eval_j_h, example_maximizer_set, linear_action, moment_matrix, procrustes, random_rotation, LoadField,
};
use crate::material::{isotropic_q2_closed_form, reduce_q2, Material, MaterialSpec, QuadForm3};
use crate::recovery3d::{averaged_diagnostics, build_recovery, energy_scale, eval_shell_energy};

/// Limit values below this are compared by absolute rather than relative gap.
const TINY_LIMIT: f64 = 1e-14;

/// Runs a validated study. Module errors abort the run and are recorded in
/// the report (status `error`) rather than returned.
pub fn run_study(cfg: &StudyConfig) -> StudyReport {
    let report = StudyReport::new(&cfg.name, cfg.kind);
    if let Err(e) = cfg.validate() {
        return report.abort(&e);
    }
    match cfg.kind {
        StudyKind::GammaLimit => gamma_limit(cfg, report),
        StudyKind::ExpansionOrder => expansion_order(cfg, report),
        StudyKind::Q2Check => q2_check(cfg, report),
        StudyKind::LoadAlign => load_align(cfg, report),
    }
    .finish()
}

/// Everything the per-`h` pipelines share.
struct Setup {
    patch: SurfacePatch,
    thick: ThicknessPair,
    material: Material,
    iso: IsometryField,
    strain: StrainField,
    squad: SurfaceQuadrature,
    trule: TransversalRule,
}

fn setup(cfg: &StudyConfig) -> Result<Setup> {
    let patch = make_builtin_patch(&cfg.patch)?;
    let squad = SurfaceQuadrature::new(&patch, cfg.quadrature.surface);
    let trule = TransversalRule::new(cfg.quadrature.transversal);
    let thick = cfg.thickness.build();
    let material = Material::from_spec(&cfg.material)?;
    let iso = build_isometry(&patch, cfg.fields.v.build(&patch)?, &squad, cfg.tolerances.isometry)?;
    let strain = StrainField::from_generator(&patch, cfg.fields.w.build(&patch)?);
    Ok(Setup {
        patch,
        thick,
        material,
        iso,
        strain,
        squad,
        trule,
    })
}

fn e_h(cfg: &StudyConfig, h: f64) -> f64 {
    energy_scale(h, cfg.energy.kappa, cfg.energy.alpha)
}

fn gap(value: f64, limit: f64) -> f64 {
    if limit.abs() < TINY_LIMIT {
        (value - limit).abs()
    } else {
        (value - limit).abs() / limit.abs()
    }
}

/// Evaluates `f` for every `h` in parallel. On the first failing `h` (in
/// schedule order) the rows before it are kept, an error row is appended
/// and the error is returned alongside.
fn per_h<T, F>(cfg: &StudyConfig, f: F) -> (Vec<(ReportRow, T)>, Option<Error>)
where
    T: Send,
    F: Fn(f64) -> Result<(ReportRow, T)> + Sync,
{
    let results: Vec<Result<(ReportRow, T)>> = cfg.schedule.h.par_iter().map(|&h| f(h)).collect();
    let mut rows = Vec::with_capacity(results.len());
    for (res, &h) in results.into_iter().zip(&cfg.schedule.h) {
        match res {
            Ok(r) => rows.push(r),
            Err(e) => {
                let err = Error::Study { h, source: Box::new(e) };
                return (rows, Some(err));
            }
        }
    }
    (rows, None)
}

fn push_error_row(report: &mut StudyReport, cfg: &StudyConfig, err: &Error) {
    if let Error::Study { h, .. } = err {
        report.rows.push(ReportRow::failed(*h, e_h(cfg, *h)));
    }
}

fn gap_checks(cfg: &StudyConfig, report: &mut StudyReport, limit: f64) {
    let tol = &cfg.tolerances;
    let n = report.rows.len();
    let last = report.rows[n - 1];
    let prev = report.rows[n - 2];
    let (Some(v1), Some(v2)) = (prev.normalized, last.normalized) else {
        return;
    };
    let order = cfg.extrapolation.order;
    let value = richardson(prev.h, v1, last.h, v2, order);
    let ex = Extrapolation {
        value,
        rel_gap: gap(value, limit),
        order,
    };
    report.extrapolated = Some(ex);
    let gaps: Vec<(f64, f64)> = report.rows.iter().filter_map(|r| r.rel_gap.map(|g| (r.h, g))).collect();
    if let Ok(fit) = fit_order(&gaps, tol.exact_floor) {
        report.fits.push(NamedFit { name: "gap".into(), fit });
    }
    report
        .checks
        .push(Check::at_most("gap_smallest_h", last.rel_gap.unwrap_or(f64::NAN), tol.gap_smallest_h));
    report.checks.push(Check::at_most("gap_extrapolated", ex.rel_gap, tol.gap_extrapolated));
}

fn gamma_limit(cfg: &StudyConfig, mut report: StudyReport) -> StudyReport {
    let s = match setup(cfg) {
        Ok(s) => s,
        Err(e) => return report.abort(&e),
    };
    let kappa = cfg.energy.kappa;
    let limit = match eval_i(&s.patch, &s.thick, &s.material, &s.iso, &s.strain, kappa, &s.squad) {
        Ok(b) => b.total,
        Err(e) => return report.abort(&e),
    };
    report.limit = Some(limit);
    let (rows, err) = per_h(cfg, |h| {
        let e = e_h(cfg, h);
        let rec = build_recovery(&s.patch, &s.material, &s.iso, &s.strain, &s.thick, h, e, kappa)?;
        let energy = eval_shell_energy(&rec, &s.material, &s.squad, &s.trule)?;
        let diag = averaged_diagnostics(&rec, &s.strain, &s.squad, &s.trule)?;
        let mut row = ReportRow::new(h, e);
        row.energy = Some(energy.energy);
        row.normalized = Some(energy.normalized);
        row.limit = Some(limit);
        row.rel_gap = Some(gap(energy.normalized, limit));
        Ok((row, diag))
    });
    let (l2, strain): (Vec<f64>, Vec<f64>) = rows.iter().map(|(_, d)| (d.displacement_l2, d.strain_max)).unzip();
    report.rows = rows.into_iter().map(|(r, _)| r).collect();
    if let Some(e) = err {
        push_error_row(&mut report, cfg, &e);
        return report.abort(&e);
    }
    gap_checks(cfg, &mut report, limit);

    let hs = &cfg.schedule.h;
    let floor = cfg.tolerances.exact_floor;
    let l2_decreasing = l2.windows(2).all(|w| w[1] < w[0] || w[1] <= floor);
    report.checks.push(Check::holds("averaged_displacement_decreasing", l2_decreasing));
    if let Ok(fit) = fit_order(&hs.iter().copied().zip(l2.iter().copied()).collect::<Vec<_>>(), floor) {
        report.checks.push(Check::at_least("averaged_displacement_order", fit.slope, cfg.tolerances.averaged_order));
        report.fits.push(NamedFit {
            name: "averaged_displacement".into(),
            fit,
        });
    }
    let strain_floor = cfg.tolerances.averaged_strain_floor;
    let strain_decreasing = strain.windows(2).all(|w| w[1] < w[0] || w[1] <= strain_floor);
    report.checks.push(Check::holds("averaged_strain_decreasing", strain_decreasing));
    report.series.push(Series {
        name: "averaged_displacement_l2".into(),
        values: l2,
    });
    report.series.push(Series {
        name: "averaged_strain_max".into(),
        values: strain,
    });
    report
}

fn expansion_order(cfg: &StudyConfig, mut report: StudyReport) -> StudyReport {
    let s = match setup(cfg) {
        Ok(s) => s,
        Err(e) => return report.abort(&e),
    };
    let w = s.strain.generator().expect("built from a generator").clone();
    let (rows, err) = per_h(cfg, |h| {
        let mut row = ReportRow::new(h, e_h(cfg, h));
        row.residual_stretch = Some(stretching_expansion_residual(&s.iso, w.as_ref(), &s.thick, h, &s.squad));
        row.residual_bend = Some(bending_expansion_residual(&s.iso, w.as_ref(), &s.thick, h, &s.squad)?);
        Ok((row, ()))
    });
    report.rows = rows.into_iter().map(|(r, _)| r).collect();
    if let Some(e) = err {
        push_error_row(&mut report, cfg, &e);
        return report.abort(&e);
    }
    let tol = &cfg.tolerances;
    let fit = |pick: fn(&ReportRow) -> Option<f64>| -> Result<OrderFit> {
        let pairs: Vec<(f64, f64)> = report.rows.iter().map(|r| (r.h, pick(r).unwrap_or(f64::NAN))).collect();
        fit_order(&pairs, tol.exact_floor)
    };
    let fits = [
        ("stretching", fit(|r| r.residual_stretch), tol.stretch_slope),
        ("bending", fit(|r| r.residual_bend), tol.bend_slope),
    ];
    for (name, res, min_slope) in fits {
        match res {
            Ok(f) => {
                report.checks.push(Check::at_least(format!("{name}_order"), f.slope, min_slope));
                report.checks.push(Check::at_least(format!("{name}_r_squared"), f.r_squared, tol.min_r_squared));
                report.fits.push(NamedFit { name: name.into(), fit: f });
            }
            Err(e) => return report.abort(&e),
        }
    }
    report
}

/// `Q3(F + c⊗n + n⊗c)` minimized over `c` by cyclic coordinate descent
/// with exact line searches.
pub fn brute_force_q2(q3: &QuadForm3, f: &Matrix3<f64>, n: &Vector3<f64>) -> f64 {
    let g = |c: &Vector3<f64>| q3.apply(&(f + c * n.transpose() + n * c.transpose()));
    let mut c = Vector3::zeros();
    let mut value = g(&c);
    for _ in 0..10_000 {
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = 1.0;
            let (g0, gp, gm) = (g(&c), g(&(c + e)), g(&(c - e)));
            let curvature = 0.5 * (gp + gm) - g0;
            if curvature > 0.0 {
                c[i] -= 0.25 * (gp - gm) / curvature;
            }
        }
        let next = g(&c);
        let done = value - next <= 1e-16 * value.abs().max(1e-300);
        value = next;
        if done {
            break;
        }
    }
    value
}

fn q2_check(cfg: &StudyConfig, mut report: StudyReport) -> StudyReport {
    let material = match Material::from_spec(&cfg.material) {
        Ok(m) => m,
        Err(e) => return report.abort(&e),
    };
    let q3 = material.q3();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sampling.seed);
    let mut worst_closed = 0.0f64;
    let mut worst_brute = 0.0f64;
    for _ in 0..cfg.sampling.q2_samples {
        let n = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
        let f_tan = Matrix2::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let q2 = match reduce_q2(&q3, &n) {
            Ok(q) => q,
            Err(e) => return report.abort(&e),
        };
        let value = q2.apply_tangential(&f_tan);
        let scale = value.abs().max(1.0);
        let brute = brute_force_q2(&q3, &q2.frame.embed(&f_tan), &n);
        worst_brute = worst_brute.max((brute - value).abs() / scale);
        if let MaterialSpec::Isotropic { mu, lambda } = cfg.material {
            let closed = isotropic_q2_closed_form(mu, lambda, &f_tan);
            worst_closed = worst_closed.max((closed - value).abs() / closed.abs().max(f64::MIN_POSITIVE));
        }
    }
    let tol = &cfg.tolerances;
    report.checks.push(Check::at_most("q2_brute_force", worst_brute, tol.q2_brute_force));
    if matches!(cfg.material, MaterialSpec::Isotropic { .. }) {
        report.checks.push(Check::at_most("q2_closed_form", worst_closed, tol.q2_closed_form));
    }
    report
}

/// Largest sampled `Σ Qᵢⱼ Mᵢⱼ` over random rotations, minus the Procrustes
/// value, relative to `max(|value|, 1)`.
fn sampled_excess(m: &Matrix3<f64>, samples: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let best = procrustes(m, 1e-10)?.value;
    let mut sampled = f64::NEG_INFINITY;
    for _ in 0..samples {
        sampled = sampled.max(linear_action(&random_rotation(rng), m));
    }
    Ok((sampled - best) / best.abs().max(1.0))
}

fn load_align(cfg: &StudyConfig, mut report: StudyReport) -> StudyReport {
    match load_align_inner(cfg, &mut report) {
        Ok(()) => report,
        Err(e) => {
            push_error_row(&mut report, cfg, &e);
            report.abort(&e)
        }
    }
}

fn load_align_inner(cfg: &StudyConfig, report: &mut StudyReport) -> Result<()> {
    let s = setup(cfg)?;
    let spec = cfg.load.as_ref().ok_or_else(|| Error::validation("load", "missing"))?;
    let load: LoadField = spec.build(&s.patch)?;
    let tol = &cfg.tolerances;
    let kappa = cfg.energy.kappa;

    let defect = load.compatibility_defect(&s.thick, &s.squad);
    report.checks.push(Check::at_most("compatibility", defect, tol.compatibility));

    // the recovery sequence is not rotated, so the limit is taken at Q̄ = Id
    let id = Matrix3::identity();
    let limit_moment = match example_maximizer_set(&s.patch, &load, &s.thick, &s.squad) {
        Ok(set) => {
            report.maximizer_kind = Some(set.kind);
            let at_id = linear_action(&id, &set.moment_matrix.transpose());
            report.checks.push(Check::at_most(
                "identity_maximizes",
                set.max_value - at_id,
                tol.action * set.max_value.abs().max(1.0),
            ));
            Some(set.moment_matrix)
        }
        Err(Error::UnsupportedCase(_)) => None,
        Err(e) => return Err(e),
    };
    let limit = eval_j(&s.patch, &s.thick, &s.material, &s.iso, &s.strain, kappa, load.f.as_ref(), &id, 0.0, &s.squad)?.total;
    report.limit = Some(limit);

    let (rows, err) = per_h(cfg, |h| {
        let e = e_h(cfg, h);
        let rec = build_recovery(&s.patch, &s.material, &s.iso, &s.strain, &s.thick, h, e, kappa)?;
        let j = eval_j_h(&rec, &s.material, &load, &s.squad, &s.trule)?;
        let mut row = ReportRow::new(h, e);
        row.energy = Some(j.total);
        row.normalized = Some(j.total / e);
        row.limit = Some(limit);
        row.rel_gap = Some(gap(j.total / e, limit));
        Ok((row, ()))
    });
    report.rows = rows.into_iter().map(|(r, _)| r).collect();
    if let Some(e) = err {
        return Err(e);
    }
    gap_checks(cfg, report, limit);

    let smallest = *cfg.schedule.h.last().expect("validated schedule");
    let scenario_moment = match limit_moment {
        Some(m) => m,
        None => moment_matrix(&s.patch, &load, &s.thick, smallest, e_h(cfg, smallest), &s.squad, &s.trule)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sampling.seed);
    let mut worst = sampled_excess(&scenario_moment.transpose(), cfg.sampling.rotations, &mut rng)?;
    for _ in 0..cfg.sampling.matrices {
        let m = Matrix3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        worst = worst.max(sampled_excess(&m, cfg.sampling.rotations, &mut rng)?);
    }
    report.checks.push(Check::at_most("procrustes_beats_sampling", worst, tol.action));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::studies::config::dyadic;
    use crate::studies::report::StudyStatus;

    #[test]
    fn brute_force_matches_reduction() {
        let q3 = QuadForm3::isotropic(1.0, 1.0);
        let n = Vector3::new(0.3, -0.2, 0.9).normalize();
        let f = Matrix2::new(0.4, -0.3, 0.1, 0.8);
        let q2 = reduce_q2(&q3, &n).unwrap();
        let brute = brute_force_q2(&q3, &crate::material::frame_from_normal(&n).embed(&f), &n);
        assert!((brute - q2.apply_tangential(&f)).abs() < 1e-12);
    }

    #[test]
    fn q2_check_passes_with_anisotropic_q3() {
        let mut cfg = StudyConfig::with_kind(StudyKind::Q2Check);
        let a = nalgebra::Matrix6::<f64>::from_fn(|i, j| ((i * 5 + j * 2) as f64 * 0.37).cos() * 0.3);
        let m = a * a.transpose() + nalgebra::Matrix6::identity();
        cfg.material = MaterialSpec::Q3 {
            matrix: QuadForm3::new(m).unwrap().upper_triangle(),
        };
        cfg.sampling.q2_samples = 30;
        let r = run_study(&cfg);
        assert_eq!(r.status, StudyStatus::Pass, "{:?}", r.checks);
        assert!(r.check("q2_closed_form").is_none());
    }

    #[test]
    fn non_isometry_aborts_with_node() {
        let mut cfg = StudyConfig::with_kind(StudyKind::GammaLimit);
        cfg.patch = crate::geometry::PatchSpec::SphereCap {
            radius: 1.0,
            polar_angle: 1.0,
        };
        let r = run_study(&cfg);
        assert_eq!(r.status, StudyStatus::Error);
        let msg = r.error.unwrap();
        assert!(msg.contains("not an infinitesimal isometry") && msg.contains("node"), "{msg}");
    }

    #[test]
    fn failing_h_is_recorded() {
        let mut cfg = StudyConfig::with_kind(StudyKind::GammaLimit);
        cfg.material = MaterialSpec::Q3 {
            matrix: QuadForm3::isotropic(1.0, 1.0).upper_triangle(),
        };
        cfg.fields.w = crate::fields::FieldSpec::Zero;
        cfg.schedule.h = dyadic(2, 5);
        let r = run_study(&cfg);
        assert_eq!(r.status, StudyStatus::Error);
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].h, 0.25);
        assert!(r.error.unwrap().contains("h = 0.25"));
    }
}
