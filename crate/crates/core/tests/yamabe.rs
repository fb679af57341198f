use ahlab_core::field::{FieldExpr, TrigTerm};
use ahlab_core::manifold::*;
use ahlab_core::special::yamabe_bound;
use ahlab_core::yamabe::*;

fn trig(terms: &[([i32; 6], f64, f64)]) -> FieldExpr {
    FieldExpr::trig(
        terms
            .iter()
            .map(|(f, c, s)| TrigTerm { freq: f.to_vec(), cos: *c, sin: *s })
            .collect(),
    )
}

fn positive_trig() -> FieldExpr {
    trig(&[([0; 6], 1.0, 0.0), ([1, 0, 0, 1, 0, 0], 0.2, 0.1), ([0, 0, 1, 0, 0, 0], 0.0, 0.15)])
}

/// `−(1/√g) ∂_i(√g g^{ij} ∂_j u)` with nested fourth-order central differences.
fn divergence_form_laplacian(m: &ChartedManifold, u: &FieldExpr, x: &[f64]) -> f64 {
    const H: f64 = 1e-2;
    let n = m.dim;
    let d4 = |f: &dyn Fn(&[f64]) -> f64, y: &[f64], i: usize| {
        let at = |s: f64| {
            let mut z = y.to_vec();
            z[i] += s * H;
            f(&z)
        };
        (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * H)
    };
    let volume = |y: &[f64]| ahlab_core::linalg::determinant(&m.fields(y, 0).unwrap().g_values(), n).sqrt();
    let mut total = 0.0;
    for i in 0..n {
        let flux = |y: &[f64]| {
            let g = m.fields(y, 0).unwrap().g_values();
            let gi = ahlab_core::linalg::inverse(&g, n).unwrap();
            let du: f64 = (0..n).map(|j| gi[i * n + j] * d4(&|z: &[f64]| u.value_at(z), y, j)).sum();
            volume(y) * du
        };
        total += d4(&flux, x, i);
    }
    -total / volume(x)
}

#[test]
fn laplacian_examples() {
    let flat = make_flat_torus(6).unwrap();
    let x = [0.7, 0.1, 0.0, 2.0, 1.0, 0.4];
    let c = FieldExpr::cos_bump(6, 0, 0.0, 1.0);
    assert!((laplacian(&flat, &c, &x).unwrap() - x[0].cos()).abs() <= 1e-14);
    let m = make_compatible_torus(6, 3, 0.1).unwrap();
    assert!(laplacian(&m, &FieldExpr::Const(2.0), &x).unwrap().abs() <= 1e-14);
}

#[test]
fn laplacian_matches_divergence_form_stencil() {
    let m = make_compatible_torus(6, 3, 0.1).unwrap();
    let u = positive_trig();
    for x in m.sample_points(4) {
        let exact = laplacian(&m, &u, &x).unwrap();
        let fd = divergence_form_laplacian(&m, &u, &x);
        assert!((exact - fd).abs() <= 1e-5, "{exact} vs {fd}");
    }
}

#[test]
fn conformal_law_examples() {
    let m = make_compatible_torus(6, 4, 0.1).unwrap();
    let x = m.sample_points(1).remove(0);
    let r = residual_conformal_laws(&m, &FieldExpr::one(), &x).unwrap();
    assert!(r.scalar <= 1e-12 && r.star_scalar <= 1e-12 && r.s_j <= 1e-12);
    let s6 = make_cayley_s6();
    let bump = FieldExpr::one().plus(FieldExpr::Coord(1).times(FieldExpr::Coord(2)).scaled(0.1));
    for x in s6.sample_points(5) {
        assert!(residual_conformal_laws(&s6, &bump, &x).unwrap().s_j <= 1e-6);
    }
}

#[test]
fn functional_on_constants() {
    let flat = make_flat_torus(6).unwrap();
    let one = DiscreteField::constant(6, 4, 3.0);
    assert!(qj_functional(&flat, &one, Backend::Spectral).unwrap().abs() <= 1e-14);
    assert!(q_functional(&flat, &one, Backend::Fd4).unwrap().abs() <= 1e-14);
    let zero = DiscreteField::constant(6, 4, 0.0);
    assert!(qj_functional(&flat, &zero, Backend::Spectral).is_err());
}

#[test]
fn functional_is_conformally_covariant() {
    let base = make_compatible_torus(6, 5, 0.05).unwrap();
    let w = trig(&[([0; 6], 1.0, 0.0), ([0, 1, 0, 0, 0, 0], 0.1, 0.0)]);
    let v = trig(&[([0; 6], 1.0, 0.0), ([0, 0, 0, 0, 1, 0], 0.0, 0.2)]);
    let res = 6;
    let tilde = make_conformal(&base, w.clone()).unwrap();
    let lhs = qj_functional(&tilde, &DiscreteField::from_expr(6, res, &v), Backend::Spectral).unwrap();
    let rhs = qj_functional(&base, &DiscreteField::from_expr(6, res, &w.times(v)), Backend::Spectral).unwrap();
    assert!((lhs - rhs).abs() <= 1e-6 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
}

#[test]
fn flat_torus_minimizer_is_constant() {
    let m = make_flat_torus(6).unwrap();
    let opts = MinimizeOptions { resolution: 4, max_iter: 100, tol: 1e-8, backend: Backend::Spectral, compute_lambda1: true };
    let start = DiscreteField::from_expr(6, 4, &positive_trig());
    let geom = DiscreteGeometry::new(&m, 4, Backend::Spectral).unwrap();
    let run = minimize_qj_geometry(&geom, &opts, Some(&start)).unwrap();
    assert!(run.final_value.abs() <= 1e-6);
    assert!((run.minimizer.max() - run.minimizer.min()) / run.minimizer.max() <= 1e-3);
    assert!(run.lambda1.unwrap().abs() <= 1e-10);
}

#[test]
fn run_invariants() {
    let m = make_compatible_torus(6, 11, 0.1).unwrap();
    for backend in [Backend::Spectral, Backend::Fd4] {
        let opts = MinimizeOptions { resolution: 4, max_iter: 300, tol: 1e-7, backend, compute_lambda1: false };
        let run = minimize_qj(&m, &opts).unwrap();
        assert!(run.max_increase() <= 1e-12);
        assert!(run.final_value <= yamabe_bound(6) + 1e-6);
        assert!((run.minimizer_norm_p - 1.0).abs() <= 1e-10);
        assert!(run.minimizer.min() > 0.0);
        assert!(run.converged, "{}", run.stop_reason);
    }
}

#[test]
fn eigenvalue_sign_follows_the_invariant() {
    for m in [make_compatible_torus(6, 12, 0.1).unwrap(), make_almost_kahler_torus(6, 12, 0.1).unwrap()] {
        let opts = MinimizeOptions { resolution: 4, max_iter: 500, tol: 1e-6, backend: Backend::Spectral, compute_lambda1: true };
        let run = minimize_qj(&m, &opts).unwrap();
        let lambda = run.lambda1.unwrap();
        assert_eq!(lambda.signum(), run.final_value.signum(), "{lambda} vs {}", run.final_value);
    }
}

#[test]
fn kw_operator_examples() {
    let m = make_compatible_torus(6, 2, 0.1).unwrap();
    let geom = DiscreteGeometry::new(&m, 4, Backend::Spectral).unwrap();
    let one = DiscreteField::constant(6, 4, 1.0);
    let zero = kw_operator(&geom, &one, 2.0, 4.0, &DiscreteField::constant(6, 4, 0.0)).unwrap();
    assert!(zero.values.iter().all(|v| v.abs() <= 1e-12));
    let c = kw_operator(&geom, &one, 2.0, 4.0, &DiscreteField::constant(6, 4, -1.5)).unwrap();
    assert!(c.values.iter().all(|v| (v + 1.5).abs() <= 1e-12));
}

#[test]
fn kw_operator_matches_pointwise_pipeline() {
    // band-limited geometry: every flux is a trig polynomial the grid resolves
    let m = make_conformal(&make_flat_torus(6).unwrap(), FieldExpr::cos_bump(6, 0, 1.0, 0.2)).unwrap();
    let res = 8;
    let geom = DiscreteGeometry::new(&m, res, Backend::Spectral).unwrap();
    let u = trig(&[([0; 6], 1.0, 0.0), ([0, 1, 0, 0, 0, 0], 0.2, 0.0)]);
    let ud = DiscreteField::from_expr(6, res, &u);
    let k = DiscreteField { dim: 6, resolution: res, values: geom.s_j() };
    let t = kw_operator(&geom, &ud, 2.0, 4.0, &k).unwrap();
    let grid = ud.grid();
    for idx in (0..grid.len()).step_by(9973) {
        let x = grid.point(idx);
        let ux = u.value_at(&x);
        let s = ahlab_core::curvature::curvature_pack(&m, &x).unwrap().s_j;
        let expect = (4.0 * laplacian(&m, &u, &x).unwrap() + s * ux) / (ux * ux);
        assert!((t.values[idx] - expect).abs() <= 1e-6, "{} vs {expect}", t.values[idx]);
    }
}

#[test]
fn prescribable_examples() {
    assert!(prescribable(&[-1.0; 8], -1));
    assert!(prescribable(&[0.0; 8], 0));
    assert!(!prescribable(&[-3.0; 8], 1));
}
