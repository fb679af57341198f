//! One function per subcommand. Each returns the payload, diagnostics and
//! failed assertions; exit codes are assigned by the caller.

use ahlab_core::bubble::{
    bubble_pde_residual, bubble_rayleigh, cn_check, geometric_alphas, lemma_u_rate, sample_radii,
};
use ahlab_core::curvature::curvature_pack;
use ahlab_core::diagnostic::Diagnostic;
use ahlab_core::error::Error;
use ahlab_core::gray_hervella::{classify_with, sign_crosscheck};
use ahlab_core::j_variation::{
    critical_point_test, dy_formula_with, finite_diff_dy, project_deformation, random_raw_field,
};
use ahlab_core::manifest::{ManifoldKind, Manifest};
use ahlab_core::manifold::ChartedManifold;
use ahlab_core::yamabe::{
    minimize_qj_geometry, residual_conformal_laws, DiscreteGeometry, MinimizeOptions,
};
use ahlab_core::field::FieldExpr;
use serde_json::json;

use crate::{load_manifest, BubbleCheck, Command, Failure, JvaryMode, Outcome};

/// Relative tolerance for the Rayleigh-quotient check.
pub const RAYLEIGH_TOL: f64 = 1e-3;
/// Slope tolerance for the rate fits.
pub const RATE_TOL: f64 = 0.1;
pub const CN_TOL: f64 = 1e-6;
pub const PDE_TOL: f64 = 1e-10;

pub fn dispatch(cmd: &Command) -> Result<Outcome, Failure> {
    match cmd {
        Command::Curvature { manifest, points } => curvature(&load_manifest(manifest)?, *points),
        Command::Classify {
            manifest,
            points,
            tol,
            quadrature_resolution,
        } => classify(&load_manifest(manifest)?, *points, *tol, *quadrature_resolution),
        Command::ConformalCheck { manifest, points, tol } => {
            conformal_check(&load_manifest(manifest)?, *points, *tol)
        }
        Command::Yamabe {
            manifest,
            resolution,
            max_iter,
            tol,
            backend,
        } => {
            let opts = MinimizeOptions {
                resolution: *resolution,
                max_iter: *max_iter,
                tol: *tol,
                backend: (*backend).into(),
                compute_lambda1: true,
            };
            yamabe(&load_manifest(manifest)?, &opts)
        }
        Command::Bubble { n, check } => bubble(*n, *check),
        Command::Jvary {
            manifest,
            seed,
            h,
            resolution,
            mode,
        } => jvary(&load_manifest(manifest)?, *seed, *h, *resolution, *mode),
        Command::Suite { only } => crate::suite::run_suite(only),
    }
}

fn outcome(manifest: &Manifest, results: serde_json::Value) -> Outcome {
    Outcome {
        manifest: Some(manifest.clone()),
        seed: manifest.seed.unwrap_or(0),
        results,
        ..Default::default()
    }
}

fn build(manifest: &Manifest) -> Result<ChartedManifold, Failure> {
    manifest.build().map_err(Failure::from)
}

pub fn curvature(manifest: &Manifest, points: usize) -> Result<Outcome, Failure> {
    let m = build(manifest)?;
    let mut summaries = Vec::with_capacity(points);
    let mut failures = Vec::new();
    for x in m.sample_points(points) {
        let inv = m.check_invariants(&x)?;
        if !inv.passes(ahlab_core::manifold::COMPATIBILITY_TOL) {
            failures.push(format!("structure invariants fail at {x:?}: {inv:?}"));
        }
        summaries.push(curvature_pack(&m, &x)?.summary()?);
    }
    let mut o = outcome(manifest, json!({ "label": m.label, "points": summaries }));
    o.failures = failures;
    Ok(o)
}

pub fn classify(manifest: &Manifest, points: usize, tol: f64, quadrature_resolution: usize) -> Result<Outcome, Failure> {
    let m = build(manifest)?;
    let report = classify_with(&m, points, tol, quadrature_resolution)?;
    let diagnostics = match sign_crosscheck(&report, &m) {
        Ok(d) => d,
        Err(Error::UnsupportedQuadrature(msg)) => vec![Diagnostic::info(msg)],
        Err(e) => return Err(e.into()),
    };
    let mut o = outcome(manifest, serde_json::to_value(&report).expect("report serializes"));
    o.diagnostics = diagnostics;
    Ok(o)
}

pub fn conformal_check(manifest: &Manifest, points: usize, tol: f64) -> Result<Outcome, Failure> {
    if manifest.kind != ManifoldKind::Conformal {
        return Err(Failure::Usage(
            "conformal-check needs a \"conformal\" manifest (its base and factor are checked)".into(),
        ));
    }
    let base = manifest
        .base
        .as_ref()
        .ok_or_else(|| Failure::Usage("conformal manifest needs a \"base\"".into()))?
        .build()?;
    let factor = FieldExpr::trig(manifest.factor.clone().unwrap_or_default());
    let mut rows = Vec::with_capacity(points);
    let mut worst = [0.0f64; 3];
    for x in base.sample_points(points) {
        let r = residual_conformal_laws(&base, &factor, &x)?;
        worst[0] = worst[0].max(r.scalar);
        worst[1] = worst[1].max(r.star_scalar);
        worst[2] = worst[2].max(r.s_j);
        rows.push(json!({ "point": x, "residuals": r }));
    }
    let mut o = outcome(
        manifest,
        json!({
            "label": base.label,
            "tol": tol,
            "max_residuals": { "scalar": worst[0], "star_scalar": worst[1], "s_j": worst[2] },
            "points": rows,
        }),
    );
    for (name, v) in ["scalar", "star_scalar", "s_j"].iter().zip(worst) {
        if !(v <= tol) {
            o.failures.push(format!("{name} law residual {v:e} > {tol:e}"));
        }
    }
    Ok(o)
}

pub fn yamabe(manifest: &Manifest, opts: &MinimizeOptions) -> Result<Outcome, Failure> {
    let m = build(manifest)?;
    let geom = DiscreteGeometry::new(&m, opts.resolution, opts.backend)?;
    let run = minimize_qj_geometry(&geom, opts, None)?;
    let mut o = outcome(manifest, serde_json::to_value(&run).expect("run serializes"));
    if run.final_value > run.bound + 1e-6 {
        o.failures.push(format!("final value {} exceeds the bound {}", run.final_value, run.bound));
    }
    if run.max_increase() > 1e-12 {
        o.failures.push(format!("history increased by {:e}", run.max_increase()));
    }
    if !run.converged {
        o.diagnostics.push(Diagnostic::warn(format!("not converged: {}", run.stop_reason)));
    }
    if run.clamp_count > 0 {
        o.diagnostics
            .push(Diagnostic::info(format!("{} node updates clamped to the positivity floor", run.clamp_count)));
    }
    Ok(o)
}

pub fn bubble(n: usize, check: BubbleCheck) -> Result<Outcome, Failure> {
    let mut o = Outcome::default();
    match check {
        BubbleCheck::Pde => {
            let radii = sample_radii(100, 10.0);
            let mut rows = Vec::new();
            for alpha in [0.1, 1.0] {
                let r = bubble_pde_residual(n, alpha, &radii)?;
                let sign = r.winning_sign(PDE_TOL);
                if sign.is_none() {
                    o.failures.push(format!("alpha={alpha}: no single sign convention holds ({r:?})"));
                }
                rows.push(json!({ "alpha": alpha, "residuals": r, "winning_sign": sign }));
            }
            o.results = json!({ "n": n, "tol": PDE_TOL, "runs": rows });
        }
        BubbleCheck::Rayleigh => {
            let r = bubble_rayleigh(n, 1e4, 1e-6, &[1.0, 0.1])?;
            if r.relative_error() > RAYLEIGH_TOL {
                o.failures.push(format!("relative error {:e} > {RAYLEIGH_TOL:e}", r.relative_error()));
            }
            o.results = json!({ "report": r, "relative_error": r.relative_error(), "alpha_spread": r.alpha_spread() });
        }
        BubbleCheck::Rates => {
            let mut rows = Vec::new();
            for k in [0, 2, 3] {
                let r = lemma_u_rate(n, k, &geometric_alphas(1e-4, 0.1, 5), 1.0)?;
                if (r.slope - r.predicted).abs() > RATE_TOL {
                    o.failures.push(format!("k={k}: slope {} vs predicted {}", r.slope, r.predicted));
                }
                rows.push(r);
            }
            o.results = json!({ "n": n, "fits": rows });
        }
        BubbleCheck::Cn => {
            let c = cn_check(n)?;
            if !(c.relative_difference <= CN_TOL) || c.quadrature <= 0.0 || c.closed_form <= 0.0 {
                o.failures.push(format!("c({n}) check failed: {c:?}"));
            }
            o.results = serde_json::to_value(c).expect("serializes");
        }
    }
    Ok(o)
}

pub fn jvary(manifest: &Manifest, seed: u64, h: f64, resolution: usize, mode: JvaryMode) -> Result<Outcome, Failure> {
    let m = build(manifest)?;
    let mut o = outcome(manifest, json!({}));
    o.seed = seed;
    let mut results = serde_json::Map::new();
    if mode == JvaryMode::Critical {
        let (norm, critical) = critical_point_test(&m, 20)?;
        results.insert("critical".into(), json!({ "max_skew_norm": norm, "critical": critical }));
        o.results = results.into();
        return Ok(o);
    }
    let k = project_deformation(random_raw_field(m.dim, seed, 1.0), &m)?;
    let opts = MinimizeOptions {
        resolution,
        compute_lambda1: false,
        ..MinimizeOptions::default()
    };
    let geom = DiscreteGeometry::new(&m, resolution, opts.backend)?;
    let run = minimize_qj_geometry(&geom, &opts, None)?;
    if !run.converged {
        o.diagnostics.push(Diagnostic::warn(format!("base minimizer not converged: {}", run.stop_reason)));
    }
    let mut formula = None;
    if matches!(mode, JvaryMode::Formula | JvaryMode::Both) {
        let f = dy_formula_with(&geom, &k, &run)?;
        formula = Some(f.value);
        results.insert("formula".into(), serde_json::to_value(&f).expect("serializes"));
    }
    if matches!(mode, JvaryMode::Fd | JvaryMode::Both) {
        let fd = finite_diff_dy(&k, &opts, h, Some(&run.minimizer))?;
        if let Some(f) = formula {
            let rel = (f - fd.value).abs() / fd.value.abs().max(f.abs());
            results.insert("relative_difference".into(), json!(rel));
        }
        results.insert("finite_difference".into(), serde_json::to_value(&fd).expect("serializes"));
    }
    o.results = results.into();
    Ok(o)
}
