//! Jet arithmetic against central finite differences on random composite
//! expressions.

use ahlab_core::field::{FieldExpr, TrigTerm};
use ahlab_core::sampling::seeded_rng;
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, RngSeed};
use rand::Rng;

const N: usize = 3;
const STEP: f64 = 1e-5;

fn random_leaf<R: Rng>(rng: &mut R) -> FieldExpr {
    match rng.gen_range(0..3) {
        0 => FieldExpr::Coord(rng.gen_range(0..N)),
        1 => FieldExpr::trig(vec![TrigTerm {
            freq: (0..N).map(|_| rng.gen_range(-2..=2)).collect(),
            cos: rng.gen_range(-1.0..1.0),
            sin: rng.gen_range(-1.0..1.0),
        }]),
        _ => FieldExpr::Const(rng.gen_range(-2.0..2.0)),
    }
}

/// Random expression tree; every division and fractional power acts on
/// something bounded away from zero.
fn random_expr<R: Rng>(rng: &mut R, depth: u32) -> FieldExpr {
    if depth == 0 {
        return random_leaf(rng);
    }
    let a = random_expr(rng, depth - 1);
    let sin = |e: FieldExpr| FieldExpr::Sin(Box::new(e));
    let positive = |e: FieldExpr| FieldExpr::Const(2.5).plus(FieldExpr::Sin(Box::new(e)));
    match rng.gen_range(0..7) {
        0 => a.plus(random_expr(rng, depth - 1)),
        1 => a.times(random_expr(rng, depth - 1)),
        2 => a.over(positive(random_expr(rng, depth - 1))),
        3 => positive(a).powf(rng.gen_range(-1.5..1.5)),
        4 => FieldExpr::Exp(Box::new(sin(a).scaled(0.5))),
        5 => FieldExpr::Cos(Box::new(a)),
        _ => positive(a).sqrt(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 100,
        failure_persistence: None,
        rng_seed: RngSeed::Fixed(20_251_019),
        .. ProptestConfig::default()
    })]

    #[test]
    fn gradient_and_hessian_match_central_differences(
        seed in any::<u64>(),
        x in proptest::collection::vec(-3.0f64..3.0, N),
    ) {
        let f = random_expr(&mut seeded_rng(seed), 3);
        let jet = f.eval_at(&x, 2);
        prop_assert!((jet.value() - f.value_at(&x)).abs() <= 1e-12 * jet.value().abs().max(1.0));
        for i in 0..N {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += STEP;
            xm[i] -= STEP;
            let fd = (f.value_at(&xp) - f.value_at(&xm)) / (2.0 * STEP);
            prop_assert!(rel(jet.d1(i), fd) <= 1e-6, "d{} {} vs {}", i, jet.d1(i), fd);
            // second derivatives from differences of exact gradients
            let (gp, gm) = (f.eval_at(&xp, 1), f.eval_at(&xm, 1));
            for j in 0..N {
                let fd2 = (gp.d1(j) - gm.d1(j)) / (2.0 * STEP);
                prop_assert!(rel(jet.d2(i, j), fd2) <= 1e-6, "d{}{} {} vs {}", i, j, jet.d2(i, j), fd2);
            }
        }
    }

    #[test]
    fn symbolic_derivative_agrees_with_jet(
        seed in any::<u64>(),
        x in proptest::collection::vec(-3.0f64..3.0, N),
    ) {
        let f = random_expr(&mut seeded_rng(seed), 2);
        let jet = f.eval_at(&x, 2);
        for i in 0..N {
            let di = f.derivative(i).eval_at(&x, 1);
            prop_assert!(rel(di.value(), jet.d1(i)) <= 1e-10);
            for j in 0..N {
                prop_assert!(rel(di.d1(j), jet.d2(i, j)) <= 1e-10);
            }
        }
    }
}
