use ahlab_core::curvature::curvature_pack;
use ahlab_core::j_variation::*;
use ahlab_core::manifold::*;
use ahlab_core::yamabe::{Backend, DiscreteGeometry, MinimizeOptions, minimize_qj_geometry};

fn deformation(m: &ChartedManifold, seed: u64) -> CompatibleDeformation {
    project_deformation(random_raw_field(m.dim, seed, 1.0), m).unwrap()
}

#[test]
fn projected_fields_satisfy_both_constraints() {
    for m in [make_compatible_torus(6, 1, 0.1).unwrap(), make_cayley_s6(), make_almost_kahler_torus(6, 1, 0.1).unwrap()] {
        let k = deformation(&m, 3);
        for x in m.sample_points(20) {
            assert!(k.residuals(&x).unwrap().max() <= 1e-12);
        }
        // a field already satisfying the constraints is fixed
        let x = m.sample_points(1).remove(0);
        let a = k.at(&x).unwrap();
        let frozen = a.iter().map(|&v| ahlab_core::field::FieldExpr::Const(v)).collect();
        let b = project_deformation(frozen, &m).unwrap().at(&x).unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() <= 1e-12));
    }
}

#[test]
fn rho_identity_examples() {
    let flat = make_flat_torus(6).unwrap();
    let r = rho_decomposition_residual(&flat, &[0.1; 6]).unwrap();
    assert_eq!((r.residual, r.lhs_max), (0.0, 0.0));
    let s6 = make_cayley_s6();
    for x in s6.sample_points(10) {
        let r = rho_decomposition_residual(&s6, &x).unwrap();
        assert!(r.residual <= 1e-8 && r.lhs_max <= 1e-8);
    }
    let m = make_compatible_torus(6, 2, 0.1).unwrap();
    let mut largest: f64 = 0.0;
    for x in m.sample_points(20) {
        let r = rho_decomposition_residual(&m, &x).unwrap();
        assert!(r.residual <= 1e-8 && r.decomposition_residual <= 1e-10);
        largest = largest.max(r.lhs_max);
    }
    assert!(largest > 1e-4);
}

#[test]
fn j_paths_stay_compatible() {
    let m = make_almost_kahler_torus(6, 5, 0.1).unwrap();
    let path = JPath::new(deformation(&m, 9));
    for x in m.sample_points(5) {
        for t in [0.1, -0.1, 0.01, -0.01] {
            let r = path.residuals(t, &x).unwrap();
            assert!(r.j_squared <= 1e-10 && r.compatibility <= 1e-10, "{r:?}");
        }
        assert!(path.derivative_residual(&x, 1e-5).unwrap() <= 1e-6);
    }
}

#[test]
fn s_j_rate_matches_difference_quotient() {
    for m in [make_compatible_torus(6, 4, 0.1).unwrap(), make_cayley_s6()] {
        let k = deformation(&m, 21);
        let path = JPath::new(k.clone());
        let (plus, minus) = (path.manifold_at(1e-4), path.manifold_at(-1e-4));
        for x in m.sample_points(5) {
            let fd = (curvature_pack(&plus, &x).unwrap().s_j - curvature_pack(&minus, &x).unwrap().s_j) / 2e-4;
            let rate = s_j_rate(&k, &x).unwrap();
            assert!((fd - rate).abs() <= 1e-6 * rate.abs().max(1.0), "{fd} vs {rate}");
            let p = flat_pairing(&k, &x).unwrap();
            assert!(p.pairing_defect <= 1e-12 && p.antisymmetry <= 1e-12 && p.j_relation <= 1e-12);
        }
    }
}

#[test]
fn critical_point_examples() {
    assert_eq!(critical_point_test(&make_flat_torus(6).unwrap(), 10).unwrap(), (0.0, true));
    let (s6, critical) = critical_point_test(&make_cayley_s6(), 10).unwrap();
    assert!(s6 <= 1e-8 && critical);
    let (skew, critical) = critical_point_test(&make_compatible_torus(6, 0, 0.1).unwrap(), 10).unwrap();
    assert!(skew > 1e-4 && !critical);
}

fn opts(tol: f64) -> MinimizeOptions {
    MinimizeOptions { resolution: 4, max_iter: 1000, tol, backend: Backend::Spectral, compute_lambda1: false }
}

#[test]
fn formula_vanishes_on_the_flat_torus() {
    let m = make_flat_torus(6).unwrap();
    let (f, _) = dy_formula(&deformation(&m, 1), &opts(1e-6)).unwrap();
    assert_eq!(f.value, 0.0);
}

#[test]
fn formula_agrees_with_finite_differences() {
    let m = make_compatible_torus(6, 0, 0.05).unwrap();
    let k = deformation(&m, 100);
    let o = opts(1e-9);
    let geom = DiscreteGeometry::new(&m, o.resolution, o.backend).unwrap();
    let run = minimize_qj_geometry(&geom, &o, None).unwrap();
    assert!(run.converged);
    let formula = dy_formula_with(&geom, &k, &run).unwrap().value;
    let fds: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| finite_diff_dy(&k, &o, h, Some(&run.minimizer)).unwrap().value)
        .collect();
    assert!((formula - fds[1]).abs() <= 0.15 * formula.abs(), "{formula} vs {}", fds[1]);
    assert!((fds[1] - fds[2]).abs() < (fds[0] - fds[1]).abs(), "{fds:?}");
}
