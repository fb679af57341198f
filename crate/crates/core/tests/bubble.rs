use ahlab_core::bubble::*;
use ahlab_core::special::{sphere_volume, sphere_yamabe};

#[test]
fn exactly_one_sign_solves_the_pde() {
    let radii = sample_radii(100, 10.0);
    let mut signs = Vec::new();
    for n in [3usize, 4, 6, 8, 10] {
        for alpha in [0.05, 1.0, 7.0] {
            let r = bubble_pde_residual(n, alpha, &radii).unwrap();
            let s = r.winning_sign(1e-10);
            assert!(s.is_some(), "n={n} α={alpha}: {r:?}");
            signs.push(s);
        }
    }
    assert!(signs.iter().all(|s| *s == signs[0]));
    assert_eq!(signs[0], Some(-1));
}

#[test]
fn scaling_symmetry() {
    let n = 6;
    let weight = (n as f64 - 2.0) / 2.0;
    let (a, lam) = (0.7, 3.0);
    let (u, v) = (BubbleProfile::new(n, a).unwrap(), BubbleProfile::new(n, lam * a).unwrap());
    for r in [0.1, 0.5, 2.0, 9.0] {
        let ratio = v.value(lam * r) / u.value(r);
        assert!((ratio - lam.powf(-weight)).abs() <= 1e-14);
        let lr = v.laplacian(lam * r) / u.laplacian(r);
        assert!((lr - lam.powf(-weight - 2.0)).abs() <= 1e-12);
    }
}

#[test]
fn jet_derivative_matches_closed_form() {
    let u = BubbleProfile::new(8, 0.3).unwrap();
    for r in [0.01, 0.2, 1.0, 5.0] {
        let j = u.radial_jet(r);
        assert!((j.value() - u.value(r)).abs() <= 1e-14 * u.value(r));
        assert!((j.d1(0) - u.radial_derivative(r)).abs() <= 1e-12 * u.radial_derivative(r).abs());
    }
}

#[test]
fn invalid_profiles() {
    assert!(BubbleProfile::new(2, 1.0).is_err());
    assert!(BubbleProfile::new(6, 0.0).is_err());
    assert!(bubble_rayleigh(4, 1e4, 1e-6, &[1.0]).is_err());
}

#[test]
fn rayleigh_quotient_is_the_sphere_constant() {
    let omega6 = sphere_volume(6);
    assert!((omega6 - 16.0 * std::f64::consts::PI.powi(3) / 15.0).abs() <= 1e-12);
    assert!((sphere_yamabe(6) - 30.0 * omega6.powf(1.0 / 3.0)).abs() <= 1e-12);
    assert!((sphere_yamabe(8) - 56.0 * sphere_volume(8).powf(0.25)).abs() <= 1e-12);
    for n in [6usize, 8] {
        let r = bubble_rayleigh(n, 1e4, 1e-6, &[1.0, 0.1]).unwrap();
        assert!(r.relative_error() <= 1e-3);
        assert!(r.alpha_spread() <= 1e-8);
    }
}

#[test]
fn integral_rates() {
    let alphas = geometric_alphas(1e-4, 0.1, 5);
    for (n, k, regime) in [(6, 0, RateRegime::Power), (6, 3, RateRegime::Saturated), (8, 2, RateRegime::Power)] {
        let r = lemma_u_rate(n, k, &alphas, 1.0).unwrap();
        assert_eq!(r.regime, regime);
        assert!((r.slope - r.predicted).abs() <= 0.1, "n={n} k={k}: {}", r.slope);
    }
    let log = lemma_u_rate(6, 2, &alphas, 1.0).unwrap();
    assert_eq!(log.regime, RateRegime::Logarithmic);
    assert!((3.8..=4.0).contains(&log.slope));
    assert!(log.local_slopes_monotone());
}

#[test]
fn cn_quadrature_matches_closed_form() {
    assert!((cn_closed_form(6).unwrap() - 8.0 / 12.0).abs() <= 1e-15);
    for n in [6usize, 8, 10, 12] {
        let c = cn_check(n).unwrap();
        assert!(c.relative_difference <= 1e-6);
        assert!(c.quadrature > 0.0 && c.closed_form > 0.0);
    }
    assert!(cn_closed_form(7).is_err());
    assert!(cn_closed_form(4).is_err());
}
