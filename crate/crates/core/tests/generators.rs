use ahlab_core::curvature::curvature_pack;
use ahlab_core::field::FieldExpr;
use ahlab_core::linalg::max_abs;
use ahlab_core::manifold::*;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn flat_torus_has_no_curvature() {
    let m = make_flat_torus(6).unwrap();
    for x in m.sample_points(100) {
        assert!(m.check_invariants(&x).unwrap().passes(COMPATIBILITY_TOL));
        let p = curvature_pack(&m, &x).unwrap();
        assert_eq!(max_abs(&p.riem), 0.0);
        assert_eq!(p.s_j, 0.0);
    }
}

#[test]
fn compatible_tori_are_hermitian() {
    for seed in 0..4 {
        let m = make_compatible_torus(6, seed, 0.1).unwrap();
        for x in m.sample_points(10) {
            let inv = m.check_invariants(&x).unwrap();
            assert!(inv.compatibility_residual <= 1e-12, "{inv:?}");
            assert_eq!(max_abs(&curvature_pack(&m, &x).unwrap().nijenhuis), 0.0);
        }
    }
}

#[test]
fn zero_amplitude_is_flat() {
    let x = vec![0.3, 1.1, -0.4, 2.0, 0.7, 5.0];
    for m in [make_compatible_torus(6, 9, 0.0).unwrap(), make_almost_kahler_torus(6, 9, 0.0).unwrap()] {
        let p = curvature_pack(&m, &x).unwrap();
        assert!(max_abs(&p.riem) <= 1e-14);
        assert!(max_abs(&p.nabla_omega) <= 1e-14);
    }
}

#[test]
fn almost_kahler_tori() {
    for seed in 0..3 {
        let m = make_almost_kahler_torus(6, seed, 0.1).unwrap();
        let mut nijenhuis_seen = 0.0f64;
        for x in m.sample_points(20) {
            let p = curvature_pack(&m, &x).unwrap();
            assert!(max_abs(&p.d_omega) <= 1e-12, "dω = {}", max_abs(&p.d_omega));
            assert!(p.s_j <= 1e-8, "S_J = {}", p.s_j);
            nijenhuis_seen = nijenhuis_seen.max(p.nijenhuis_norm());
        }
        assert!(nijenhuis_seen > 0.0);
    }
}

#[test]
fn cayley_sphere_structure() {
    let m = make_cayley_s6();
    for x in m.sample_points(50) {
        let inv = m.check_invariants(&x).unwrap();
        assert!(inv.passes(1e-10), "{inv:?}");
        let p = curvature_pack(&m, &x).unwrap();
        assert!((p.scalar - 30.0).abs() <= 1e-8);
        assert!((p.s_j - 24.0).abs() <= 1e-8);
    }
}

#[test]
fn trivial_conformal_factor_changes_nothing() {
    let base = make_compatible_torus(6, 2, 0.1).unwrap();
    let same = make_conformal(&base, FieldExpr::one()).unwrap();
    let x = vec![0.5; 6];
    let (a, b) = (curvature_pack(&base, &x).unwrap(), curvature_pack(&same, &x).unwrap());
    assert!(close(&a.riem, &b.riem, 1e-13));
    assert!((a.s_j - b.s_j).abs() <= 1e-13);
}

#[test]
fn conformal_factor_enters_linearly_in_dimension_six() {
    assert_eq!(conformal_exponent(6), 1.0);
    let u = FieldExpr::cos_bump(6, 2, 1.0, 0.3);
    let base = make_compatible_torus(6, 2, 0.1).unwrap();
    let m = make_conformal(&base, u.clone()).unwrap();
    let x = vec![0.2, 0.9, 1.7, 0.0, 3.0, 4.1];
    let scaled: Vec<f64> = base.fields(&x, 0).unwrap().g_values().iter().map(|g| g * u.value_at(&x)).collect();
    assert!(close(&m.fields(&x, 0).unwrap().g_values(), &scaled, 1e-14));
}

#[test]
fn conformally_flat_key_equation() {
    // S_J = 0 on the base, so S̃_J u² = 4Δu
    let u = FieldExpr::cos_bump(6, 0, 1.0, 0.2);
    let flat = make_flat_torus(6).unwrap();
    let m = make_conformal(&flat, u.clone()).unwrap();
    for x in m.sample_points(20) {
        let s = curvature_pack(&m, &x).unwrap().s_j;
        let lap = ahlab_core::yamabe::laplacian(&flat, &u, &x).unwrap();
        let ux = u.value_at(&x);
        assert!((s * ux * ux - 4.0 * lap).abs() <= 1e-8);
    }
}

#[test]
fn identity_and_translation_pullbacks() {
    let base = make_almost_kahler_torus(6, 4, 0.1).unwrap();
    let shift = [0.3, -0.2, 0.1, 0.5, 0.0, 1.0];
    let id = make_pullback(&base, vec![DiffeoStage::identity(6)]).unwrap();
    let moved = make_pullback(&base, vec![DiffeoStage::translation(&shift)]).unwrap();
    for x in base.sample_points(5) {
        let p = curvature_pack(&base, &x).unwrap();
        assert!((curvature_pack(&id, &x).unwrap().s_j - p.s_j).abs() <= 1e-12);
        let y: Vec<f64> = x.iter().zip(shift).map(|(a, b)| a - b).collect();
        let q = curvature_pack(&moved, &y).unwrap();
        assert!((q.s_j - p.s_j).abs() <= 1e-10);
        assert!((q.scalar - p.scalar).abs() <= 1e-10);
    }
}

#[test]
fn shear_pullback_transports_s_j() {
    let base = make_compatible_torus(6, 8, 0.1).unwrap();
    let stages = make_shear_diffeo(6, 3, 0.1).unwrap();
    let m = make_pullback(&base, stages.clone()).unwrap();
    for x in m.sample_points(20) {
        let lhs = curvature_pack(&m, &x).unwrap().s_j;
        let rhs = curvature_pack(&base, &apply_stages(&stages, &x)).unwrap().s_j;
        assert!((lhs - rhs).abs() <= 1e-7);
    }
}

#[test]
fn conformal_factors_compose() {
    let base = make_almost_kahler_torus(6, 2, 0.1).unwrap();
    let u = FieldExpr::cos_bump(6, 1, 1.0, 0.2);
    let v = FieldExpr::cos_bump(6, 4, 1.0, -0.15);
    let nested = make_conformal(&make_conformal(&base, u.clone()).unwrap(), v.clone()).unwrap();
    let direct = make_conformal(&base, u.times(v)).unwrap();
    for x in base.sample_points(5) {
        let (a, b) = (curvature_pack(&nested, &x).unwrap(), curvature_pack(&direct, &x).unwrap());
        assert!(close(&a.riem, &b.riem, 1e-10));
        assert!((a.s_j - b.s_j).abs() <= 1e-10 && (a.star_scalar - b.star_scalar).abs() <= 1e-10);
    }
}
