//! Monte Carlo estimators against the quadrature semigroup.

use kolmo_core::field::parse_field;
use kolmo_core::generator::GeneratorSpec;
use kolmo_core::semigroup::{semigroup_apply, semigroup_grad, FlatKernel};
use kolmo_core::sim::{mc_gradient, mc_gradient_any_noise, mc_semigroup, DirectionSet, SimConfig};

const FIELDS: [&str; 4] = ["gauss-bump(0, 1)", "tanh-p", "poly(0, 1, 1, 0.5, -0.3, 0.2)", "positive-bump(0, 1, 0.1)"];
const POINTS: [[f64; 2]; 3] = [[0.0, 0.0], [0.5, -0.3], [-1.0, 0.8]];

#[test]
fn semigroup_values_agree() {
    let gen = GeneratorSpec::flat_kolmogorov(1, 1.0);
    for t in [0.5, 1.0] {
        let kernel = FlatKernel::new(1, 1.0, t).unwrap();
        let cfg = SimConfig::with_dt(t, 1e-2, 20_000, 3);
        for id in FIELDS {
            let f = parse_field(id, gen.layout()).unwrap();
            for x in &POINTS {
                let exact = semigroup_apply(&kernel, &*f, x).unwrap();
                let mc = mc_semigroup(&gen, &*f, x, &cfg).unwrap();
                assert!(
                    (mc.value - exact).abs() <= 4.0 * mc.se + 1e-3 * (1.0 + exact.abs()),
                    "{id} {x:?} t={t}: {} +- {} vs {exact}",
                    mc.value,
                    mc.se
                );
            }
        }
    }
}

#[test]
fn gradients_agree() {
    let gen = GeneratorSpec::flat_kolmogorov(1, 1.0);
    let t = 1.0;
    let kernel = FlatKernel::new(1, 1.0, t).unwrap();
    let cfg = SimConfig::with_dt(t, 1e-2, 20_000, 4);
    let h = 1e-2;
    for id in FIELDS {
        let f = parse_field(id, gen.layout()).unwrap();
        for x in &POINTS {
            let (gp, gx) = semigroup_grad(&kernel, &*f, x).unwrap();
            let mc = mc_gradient(&gen, &*f, x, DirectionSet::All, h, &cfg).unwrap();
            for (k, exact) in [gp[0], gx[0]].into_iter().enumerate() {
                let (v, se) = (mc.components[k], mc.component_se[k]);
                assert!(
                    (v - exact).abs() <= 4.0 * se + 1e-3 * (1.0 + exact.abs()),
                    "{id} {x:?} component {k}: {v} +- {se} vs {exact}"
                );
            }
        }
    }
}

#[test]
fn common_noise_reduces_gradient_variance() {
    let h = 1e-2;
    let cases = [
        (GeneratorSpec::flat_kolmogorov(1, 1.0), vec![0.3, -0.2]),
        (GeneratorSpec::sphere_lift(2, 1.0), vec![1.0, 0.0, 0.0, 0.1, 0.0, -0.1]),
    ];
    for (gen, x) in cases {
        let f = parse_field("gauss-bump(0, 1)", gen.layout()).unwrap();
        let mut cfg = SimConfig::with_dt(0.5, 1e-2, 4000, 9);
        let with = mc_gradient(&gen, &*f, &x, DirectionSet::Base, h, &cfg).unwrap();
        cfg.crn = false;
        let without = mc_gradient_any_noise(&gen, &*f, &x, DirectionSet::Base, h, &cfg).unwrap();
        let ratio = (without.norm.se / with.norm.se).powi(2);
        assert!(ratio >= 10.0, "{}: variance ratio {ratio}", gen.geometry);
    }
}
