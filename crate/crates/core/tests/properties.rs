use proptest::prelude::*;

use kolmo_core::coupling::{iterated_fiber_bounds, iterated_fiber_bounds_recursive, k2};
use kolmo_core::field::{parse_field, FieldRef};
use kolmo_core::gamma::{check_key_lemma, gamma, gamma_z};
use kolmo_core::generator::{GammaParams, GeneratorSpec};
use kolmo_core::geometry::Geometry;
use kolmo_core::report::{Relation, Verdict, VerdictRule};
use kolmo_core::semigroup::{semigroup_apply, wang_harnack_constant, FlatKernel};

fn poly(c: &[f64], gen: &GeneratorSpec) -> FieldRef {
    let args: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
    parse_field(&format!("poly({})", args.join(", ")), gen.layout()).unwrap()
}

fn tangent(g: Geometry, x: &[f64], c: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; x.len()];
    for (e, a) in g.frame(x).iter().zip(c) {
        for (vi, ei) in v.iter_mut().zip(e) {
            *vi += a * ei;
        }
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flat_gamma_is_half_sigma_sq_grad_p(
        c in prop::collection::vec(-2.0..2.0f64, 6),
        p in -2.0..2.0f64,
        xi in -2.0..2.0f64,
        sigma in 0.2..2.0f64,
    ) {
        let gen = GeneratorSpec::flat_kolmogorov(1, sigma);
        let f = poly(&c, &gen);
        let fp = c[1] + 2.0 * c[3] * p + c[4] * xi;
        let fx = c[2] + c[4] * p + 2.0 * c[5] * xi;
        let g = gamma(&gen, &*f, &*f, &[p, xi]).unwrap();
        let gz = gamma_z(&gen, &*f, &*f, &[p, xi]).unwrap();
        prop_assert!((g - 0.5 * sigma * sigma * fp * fp).abs() <= 1e-9 * (1.0 + g.abs()));
        prop_assert!((gz - fx * fx).abs() <= 1e-9 * (1.0 + gz.abs()));
    }

    #[test]
    fn key_lemma_never_violated(
        c in prop::collection::vec(-2.0..2.0f64, 6),
        p in -2.0..2.0f64,
        xi in -2.0..2.0f64,
        alpha in -2.0..2.0f64,
        beta in 0.0..2.0f64,
    ) {
        let gen = GeneratorSpec::flat_kolmogorov(1, 1.0);
        let f = poly(&c, &gen);
        let r = check_key_lemma(&gen, &*f, GammaParams::new(alpha, beta).unwrap(), &[p, xi]).unwrap();
        prop_assert_ne!(r.verdict, Verdict::Violated, "{:?}", r);
    }

    #[test]
    fn sphere_exp_log_round_trip(a in -1.5..1.5f64, b in -1.5..1.5f64, seed in 0..4usize) {
        let g = Geometry::Sphere(2);
        let starts = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.6, 0.0, 0.8], [0.0, -0.28, 0.96]];
        let x = starts[seed].to_vec();
        let v = tangent(g, &x, &[a, b]);
        let y = g.exp(&x, &v).unwrap();
        prop_assert!(g.constraint_residual(&y) < 1e-12);
        let w = g.log(&x, &y).unwrap();
        for (u, v) in w.iter().zip(&v) {
            prop_assert!((u - v).abs() < 1e-9);
        }
        prop_assert!((g.dist(&x, &y).unwrap() - (a * a + b * b).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn hyperboloid_transport_is_isometric(a in -1.0..1.0f64, b in -1.0..1.0f64, u in -2.0..2.0f64, w in -2.0..2.0f64) {
        let g = Geometry::Hyperboloid(2);
        let x = g.origin();
        let y = g.exp(&x, &tangent(g, &x, &[a, b])).unwrap();
        let v = tangent(g, &x, &[u, w]);
        let tv = g.transport(&x, &y, &v).unwrap();
        prop_assert!((g.tangent_norm(&y, &tv) - g.tangent_norm(&x, &v)).abs() < 1e-9 * (1.0 + u.abs() + w.abs()));
    }

    #[test]
    fn iterated_constants_match_recursion(k in -2.0..2.0f64, c in 0.1..3.0f64, t in 0.01..3.0f64) {
        let a = iterated_fiber_bounds(4, k, c, t);
        let b = iterated_fiber_bounds_recursive(4, k, c, t);
        prop_assert!((a[0] - k2(k, c, t)).abs() <= 1e-12 * (1.0 + a[0]));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1e-300));
        }
        // K_r is increasing in t
        let later = iterated_fiber_bounds(4, k, c, t * 1.1);
        prop_assert!(a.iter().zip(&later).all(|(x, y)| y > x));
    }

    #[test]
    fn verdict_is_monotone_in_uncertainty(lhs in -5.0..5.0f64, rhs in -5.0..5.0f64, se in 0.0..2.0f64, extra in 0.0..2.0f64) {
        let rule = VerdictRule::default();
        let wide = rule.decide(Relation::Le, lhs, rhs, se + extra, 0.0);
        let narrow = rule.decide(Relation::Le, lhs, rhs, se, 0.0);
        // more uncertainty can only move a row toward inconclusive
        if wide == Verdict::Violated {
            prop_assert_eq!(narrow, Verdict::Violated);
        }
        if narrow == Verdict::Verified {
            prop_assert_ne!(wide, Verdict::Violated);
        }
        // a satisfied inequality is never violated
        if lhs <= rhs {
            prop_assert_ne!(narrow, Verdict::Violated);
        }
    }

    #[test]
    fn wang_harnack_constant_at_least_one(
        t in 0.1..3.0f64,
        alpha in 1.1..4.0f64,
        x in prop::collection::vec(-1.0..1.0f64, 4),
    ) {
        let c = wang_harnack_constant(1.0, t, alpha, &x[..2], &x[2..]).unwrap();
        prop_assert!(c >= 1.0);
        let same = wang_harnack_constant(1.0, t, alpha, &x[..2], &x[..2]).unwrap();
        prop_assert!((same - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_second_moments(p in -2.0..2.0f64, xi in -2.0..2.0f64, t in 0.1..4.0f64) {
        // (P_t u^2)(p, xi) = p^2 + t and (P_t v^2) = (xi + t p)^2 + t^3 / 3
        let gen = GeneratorSpec::flat_kolmogorov(1, 1.0);
        let k = FlatKernel::new(1, 1.0, t).unwrap();
        let uu = semigroup_apply(&k, &*poly(&[0.0, 0.0, 0.0, 1.0], &gen), &[p, xi]).unwrap();
        let vv = semigroup_apply(&k, &*poly(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0], &gen), &[p, xi]).unwrap();
        prop_assert!((uu - (p * p + t)).abs() < 1e-10 * (1.0 + uu));
        let e = (xi + t * p).powi(2) + t.powi(3) / 3.0;
        prop_assert!((vv - e).abs() < 1e-10 * (1.0 + e));
    }
}
