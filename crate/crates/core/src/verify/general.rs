//! Pointwise key-lemma and curvature-dimension suites on a flat base, and
//! the general gradient and Poincare bounds by quadrature.

use crate::error::{Error, Result};
use crate::field::{flat_gradient, FieldRef};
use crate::gamma::{check_cd_condition, check_key_lemma, CdFlavor};
use crate::generator::{GammaParams, GeneratorSpec, Lift};
use crate::report::{Provenance, Row};
use crate::semigroup::FlatKernel;

use super::common::{random_points, slack, Needs, Sink};
use super::RunConfig;

/// Default library of the pointwise suites.
pub(crate) const CD_LIBRARY: [&str; 7] = [
    "linear-xi",
    "linear-p",
    "tanh-p",
    "gauss-bump(0, 1)",
    "positive-bump(0, 1, 0.1)",
    "poly(0, 1, 1, 0.5, -0.3, 0.2)",
    "poly(0, 0, 0, 0, 1)",
];

const ALPHAS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];
const BETAS: [f64; 3] = [0.0, 1.0, 2.0];
const TIMES: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
const POINTS: [(f64, f64); 5] = [(0.0, 0.0), (0.5, -0.3), (-1.0, 0.8), (1.2, 1.0), (-0.4, -1.1)];

/// Radius of the random point cloud.
pub(crate) const CLOUD_RADIUS: f64 = 2.0;

/// Coefficient `C_sigma / (C_sigma - 2 rho)` of the vertical term; needs
/// `C_sigma > 2 rho`.
pub fn general_coefficient(c_sigma: f64, rho: f64) -> Result<f64> {
    if !(c_sigma > 2.0 * rho) {
        return Err(Error::HypothesisViolated(format!(
            "need C_sigma > 2 rho, got C_sigma = {c_sigma}, rho = {rho}"
        )));
    }
    Ok(c_sigma / (c_sigma - 2.0 * rho))
}

pub(crate) fn run(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    cfg.generator_or_reject(&["d", "c_sigma", "rho"])?;
    let d = cfg.generator.d.unwrap_or(1);
    let c = cfg.generator.c_sigma.unwrap_or(1.0);
    let rho = cfg.generator.rho.unwrap_or(0.0);
    if !(c >= 0.0 && c.is_finite() && rho.is_finite()) {
        return Err(Error::Config("c_sigma must be nonnegative and rho finite".into()));
    }
    let kappa = general_coefficient(c, rho)?;
    if rho > 0.0 {
        return Err(Error::HypothesisViolated(format!(
            "the flat base has zero curvature, so rho = {rho} > 0 is not a valid lower bound"
        )));
    }
    let lift = if c == 1.0 { Lift::Inclusion } else { Lift::Scaled { scale: c } };
    let general = GeneratorSpec::general_flat(d, lift, c, rho);
    let flat = GeneratorSpec::flat_kolmogorov(d, 1.0);
    let fields = cfg.fields_or(&CD_LIBRARY, &general)?;
    let cloud = match &cfg.points {
        Some(_) => cfg.points_or(Vec::new(), &general)?,
        None => random_points(&general, cfg.random_points.unwrap_or(100), CLOUD_RADIUS, cfg.seed),
    };

    for f in &fields {
        for x in &cloud {
            for &alpha in &ALPHAS {
                for &beta in &BETAS {
                    let r = GammaParams::new(alpha, beta).and_then(|p| check_key_lemma(&flat, &**f, p, x));
                    sink.take(format!("key-lemma {} x={x:?}", f.id()), r.map(|r| vec![r]));
                }
            }
            let r = check_cd_condition(&general, &**f, x, CdFlavor::General);
            sink.take(format!("cd-general {} x={x:?}", f.id()), r);
        }
    }

    let points = match &cfg.points {
        Some(p) => p.clone(),
        None => POINTS
            .iter()
            .map(|&(p, xi)| [vec![p; d], vec![xi; d]].concat())
            .collect(),
    };
    let rule = cfg.rule();
    for &t in &cfg.times_or(&TIMES) {
        let kernel = match FlatKernel::new(d, std::f64::consts::SQRT_2, t) {
            Ok(k) => k.with_execution(cfg.exec),
            Err(e) => {
                sink.error(format!("kernel t={t}"), &e);
                continue;
            }
        };
        for f in &fields {
            if !sink.admit("general-gradient", &**f, Needs::Lipschitz) {
                sink.skip("general-poincare", &f.id(), "needs a globally Lipschitz field");
                continue;
            }
            for x in &points {
                match gradient_rows(&kernel, f, x, c, rho, kappa) {
                    Ok(rows) => rows.into_iter().for_each(|r| sink.push(r.finish(&rule))),
                    Err(e) => sink.error(format!("general-gradient {} x={x:?} t={t}", f.id()), &e),
                }
            }
        }
    }
    Ok(())
}

/// Both bounds at one point from a single two-order quadrature pass. The
/// lifted state is `(p_t, xi + c int p)`; the kernel runs the unit lift from
/// `(p, 0)` and the integrand rescales.
fn gradient_rows(kernel: &FlatKernel, f: &FieldRef, x: &[f64], c: f64, rho: f64, kappa: f64) -> Result<Vec<Row>> {
    let d = kernel.d;
    let t = kernel.t;
    let start: Vec<f64> = [&x[..d], &vec![0.0; d][..]].concat();
    let xi0 = &x[d..2 * d];
    let k = 4 + 2 * d;
    let integrand = |y: &[f64], out: &mut [f64]| {
        let mut z = y.to_vec();
        for a in 0..d {
            z[d + a] = xi0[a] + c * y[d + a];
        }
        let v = f.eval(&z);
        let g = flat_gradient(&**f, &z);
        out[0] = v;
        out[1] = v * v;
        out[2] = g[..d].iter().map(|a| a * a).sum();
        out[3] = g[d..].iter().map(|a| a * a).sum();
        out[4..4 + 2 * d].copy_from_slice(&g);
    };
    let (hi, lo) = kernel.expect_pair(&start, k, integrand)?;
    let rate = c - 2.0 * rho;
    let sides = |m: &[f64]| {
        // grad_p P_t f = E[f_p] + c t E[f_xi], grad_xi P_t f = E[f_xi]
        let gp: f64 = (0..d).map(|a| (m[4 + a] + c * t * m[4 + d + a]).powi(2)).sum();
        let gx: f64 = (0..d).map(|a| m[4 + d + a].powi(2)).sum();
        let energy = m[2] + kappa * m[3];
        [
            (gp + kappa * gx, (rate * t).exp() * energy),
            (m[1] - m[0] * m[0], 2.0 * (rate * t).exp_m1() / rate * energy),
        ]
    };
    let (a, b) = (sides(&hi), sides(&lo));
    let prov = Provenance {
        quad_order: Some(kernel.order()),
        normalization: Some("laplacian".into()),
        ..Provenance::method("quadrature")
    };
    Ok(["general-gradient", "general-poincare"]
        .iter()
        .zip(a.iter().zip(&b))
        .map(|(id, (&(l1, r1), &(l0, r0)))| {
            Row::new(id, &f.id(), x, l1, r1)
                .t(t)
                .se((l1 - l0).abs(), (r1 - r0).abs(), ((r1 - l1) - (r0 - l0)).abs())
                .slack(slack(r1))
                .provenance(prov.clone())
                .note(format!("c_sigma={c}, rho={rho}, kappa={kappa}"))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{run_suite, Scenario};

    #[test]
    fn coefficient_examples() {
        assert_eq!(general_coefficient(3.0, 1.0).unwrap(), 3.0);
        assert_eq!(general_coefficient(1.0, 0.0).unwrap(), 1.0);
        assert!(matches!(general_coefficient(2.0, 1.0), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn refuses_hypothesis_violation() {
        let mut cfg = RunConfig::new(Scenario::GeneralCd);
        cfg.generator.c_sigma = Some(1.0);
        cfg.generator.rho = Some(0.75);
        assert!(matches!(run_suite(&cfg), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn small_suite_has_no_violation() {
        let mut cfg = RunConfig::new(Scenario::GeneralCd);
        cfg.random_points = Some(5);
        cfg.times = Some(vec![0.5, 2.0]);
        let b = run_suite(&cfg).unwrap();
        assert!(b.errors.is_empty(), "{:?}", b.errors);
        assert_eq!(b.violations(), 0);
        for id in ["key-lemma", "cd-general", "cd-general-z", "general-gradient", "general-poincare"] {
            assert!(b.reports.iter().any(|r| r.inequality == id), "{id}");
        }
        let constant = {
            let mut c = cfg.clone();
            c.fields = Some(vec!["const(1.5)".into()]);
            run_suite(&c).unwrap()
        };
        for r in constant.reports.iter().filter(|r| r.inequality.starts_with("general-")) {
            assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_lift_bound_holds() {
        let mut cfg = RunConfig::new(Scenario::GeneralCd);
        cfg.generator.c_sigma = Some(2.0);
        cfg.generator.rho = Some(-0.5);
        cfg.random_points = Some(3);
        cfg.times = Some(vec![1.0]);
        let b = run_suite(&cfg).unwrap();
        assert!(b.errors.is_empty(), "{:?}", b.errors);
        assert_eq!(b.violations(), 0);
    }
}
