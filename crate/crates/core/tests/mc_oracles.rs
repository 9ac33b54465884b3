//! Monte Carlo moments against closed forms.

use kolmo_core::generator::GeneratorSpec;
use kolmo_core::geometry::Geometry;
use kolmo_core::sim::{mc_collect, SimConfig};
use kolmo_core::stats::Samples;

fn moments(gen: &GeneratorSpec, x0: &[f64], t: f64, dt: f64, n: usize, k: usize, f: impl Fn(&[f64], &mut [f64]) + Sync + Send) -> Samples {
    let cfg = SimConfig::with_dt(t, dt, n, 11);
    mc_collect(gen, &[x0.to_vec()], &[t], &cfg, k, |st, out| f(&st[0][0], out)).unwrap()
}

fn start(gen: &GeneratorSpec) -> Vec<f64> {
    let mut z = vec![0.0; gen.layout().total()];
    let o = gen.geometry.origin();
    z[..o.len()].copy_from_slice(&o);
    z
}

fn within(s: &Samples, j: usize, exact: f64, extra: f64) {
    let (m, se) = (s.mean(j), s.se(j));
    assert!((m - exact).abs() <= 4.0 * se + extra, "column {j}: {m} +- {se} vs {exact}");
}

#[test]
fn flat_kolmogorov_covariance() {
    // B_t, int_0^t B_s ds: Var = t, t^3/3, Cov = t^2/2
    let gen = GeneratorSpec::flat_kolmogorov(1, 1.0);
    let t = 1.5;
    let s = moments(&gen, &[0.0, 0.0], t, 1e-2, 20_000, 3, |z, o| {
        o[0] = z[0] * z[0];
        o[1] = z[1] * z[1];
        o[2] = z[0] * z[1];
    });
    within(&s, 0, t, 0.0);
    // trapezoidal accumulation is exact in law up to O(dt^2) for this integrand
    within(&s, 1, t.powi(3) / 3.0, 1e-3);
    within(&s, 2, t * t / 2.0, 1e-3);
}

#[test]
fn iterated_second_level_variance() {
    // level 2 is int_0^t int_0^s B_u du ds, variance t^5/20
    let gen = GeneratorSpec::iterated_flat(1, 1.0, 2);
    let t = 1.0;
    let s = moments(&gen, &[0.0, 0.0, 0.0], t, 1e-2, 20_000, 1, |z, o| o[0] = z[2] * z[2]);
    within(&s, 0, t.powi(5) / 20.0, 1e-3);
}

#[test]
fn sphere_mean_decays_like_first_eigenvalue() {
    // generator (1/2) Delta on S^2: E<x0, B_t> = exp(-t)
    let gen = GeneratorSpec::sphere_lift(2, 1.0);
    let x0 = start(&gen);
    let t = 0.7;
    let s = moments(&gen, &x0, t, 1e-3, 10_000, 1, |z, o| o[0] = z[0]);
    within(&s, 0, (-t).exp(), 5e-3);
}

#[test]
fn sphere_path_stays_on_sphere() {
    let gen = GeneratorSpec::sphere_lift(3, 1.0);
    let x0 = start(&gen);
    let s = moments(&gen, &x0, 1.0, 1e-2, 200, 1, |z, o| o[0] = Geometry::Sphere(3).constraint_residual(&z[..4]));
    assert!(s.means()[0] < 1e-12);
}

#[test]
fn heisenberg_levy_area_variance() {
    // horizontal coordinates are Brownian; z is the Levy area with E z^2 = t^2 / 4
    let gen = GeneratorSpec::heisenberg(1.0);
    let t = 1.0;
    let x0 = start(&gen);
    let s = moments(&gen, &x0, t, 1e-3, 20_000, 3, |z, o| {
        o[0] = z[0] * z[0];
        o[1] = z[2];
        o[2] = z[2] * z[2];
    });
    within(&s, 0, t, 0.0);
    within(&s, 1, 0.0, 0.0);
    within(&s, 2, t * t / 4.0, 2e-3);
}

#[test]
fn heisenberg_fiber_integrates_horizontal_path() {
    // lift (x, y, 0): fiber is (int x, int y, 0), variance t^3/3 in each of the first two
    let gen = GeneratorSpec::heisenberg(1.0);
    let x0 = start(&gen);
    let s = moments(&gen, &x0, 1.0, 1e-2, 20_000, 2, |z, o| {
        o[0] = z[3] * z[3];
        o[1] = z[5].abs();
    });
    within(&s, 0, 1.0 / 3.0, 1e-3);
    assert_eq!(s.mean(1), 0.0);
}

#[test]
fn hyperboloid_radial_drift() {
    // (1/2) Delta cosh r = cosh r on H^2, so E cosh r_t = e^t
    let gen = GeneratorSpec::relativistic(2, 1.0);
    let x0 = start(&gen);
    let t = 0.5;
    let s = moments(&gen, &x0, t, 1e-3, 10_000, 1, |z, o| o[0] = z[0]);
    within(&s, 0, t.exp(), 1e-2);
}
