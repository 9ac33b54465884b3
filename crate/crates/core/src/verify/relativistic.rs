//! Relativistic diffusion on the hyperboloid: pointwise curvature-dimension
//! suite and the Monte Carlo gradient and Poincare bounds.

use crate::error::{Error, Result};
use crate::gamma::{check_cd_condition, gamma, gamma_z, CdFlavor};
use crate::generator::GeneratorSpec;
use crate::geometry::Geometry;
use crate::report::Row;
use crate::sim::DirectionSet;

use super::common::{mc_provenance, mc_sides, random_points, sim_config, slack, sq_sum, GradRun, Needs, Sink};
use super::general::{CD_LIBRARY, CLOUD_RADIUS};
use super::RunConfig;

const MC_LIBRARY: [&str; 3] = ["linear-xi", "tanh-p", "gauss-bump(0, 1)"];
const TIMES: [f64; 2] = [1e-3, 0.5];

pub(crate) fn run(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    cfg.generator_or_reject(&["d", "sigma"])?;
    let d = cfg.generator.d.unwrap_or(2);
    if d < 2 {
        return Err(Error::Config("the relativistic scenario needs d >= 2".into()));
    }
    let sigma = cfg.generator.sigma.unwrap_or(1.0);
    let gen = GeneratorSpec::relativistic(d, sigma);
    let geom = gen.geometry;

    let cd_fields = cfg.fields_or(&CD_LIBRARY, &gen)?;
    let cloud = match &cfg.points {
        Some(_) => cfg.points_or(Vec::new(), &gen)?,
        None => random_points(&gen, cfg.random_points.unwrap_or(100), CLOUD_RADIUS, cfg.seed),
    };
    for f in &cd_fields {
        for x in &cloud {
            let r = check_cd_condition(&gen, &**f, x, CdFlavor::Relativistic);
            sink.take(format!("cd-relativistic {} x={x:?}", f.id()), r);
        }
    }

    let fields = cfg.fields_or(&MC_LIBRARY, &gen)?;
    let fields: Vec<_> = fields
        .into_iter()
        .filter(|f| sink.admit("rel-gradient", &**f, Needs::Lipschitz))
        .collect();
    let points = match &cfg.points {
        Some(p) => p.clone(),
        None => default_points(geom),
    };
    let times = cfg.times_or(&TIMES);
    let sim = cfg.sim_or(10_000, 1e-3);
    let s2 = gen.effective_sigma().powi(2);
    let ds2 = d as f64 * s2;
    let rule = cfg.rule();
    let t_max = times.iter().copied().fold(0.0, f64::max);
    for (i, x) in points.iter().enumerate() {
        let mut simcfg = sim_config(&sim, t_max, cfg.seed, cfg.exec);
        simcfg.stream = i as u64;
        let run = GradRun::new(&gen, x, DirectionSet::All, &sim, &times, &fields, 4, simcfg, |f, _, z, o| {
            let v = f.eval(z);
            o[0] = v;
            o[1] = v * v;
            o[2] = gamma(&gen, f, f, z).unwrap_or(f64::NAN);
            o[3] = gamma_z(&gen, f, f, z).unwrap_or(f64::NAN);
        });
        let run = match run {
            Ok(r) => r,
            Err(e) => {
                sink.error(format!("relativistic mc x={x:?}"), &e);
                continue;
            }
        };
        let prov = mc_provenance(&run.cfg, Some(sim.fd_step), gen.normalization.label());
        let fd = run.fd();
        let (base, fiber) = (run.base(), run.fiber());
        for (ti, &t) in times.iter().enumerate() {
            let e = (ds2 * t).exp();
            for (fj, f) in fields.iter().enumerate() {
                let cols = run.cols(ti, fj);
                let g = |m: &[f64]| 0.5 * s2 * sq_sum(m, base.clone());
                let gz = |m: &[f64]| sq_sum(m, fiber.clone());
                let rows: [(&str, Box<dyn Fn(&[f64]) -> f64 + '_>, Box<dyn Fn(&[f64]) -> f64 + '_>); 4] = [
                    (
                        "rel-gradient",
                        Box::new(|m| 2.0 * ds2 * g(m) + gz(m)),
                        Box::new(move |m| e * (2.0 * ds2 * m[2] + m[3])),
                    ),
                    (
                        "rel-gradient-gamma",
                        Box::new(g),
                        Box::new(move |m| e * m[2] + (e - 1.0) / (2.0 * ds2) * m[3]),
                    ),
                    ("rel-gradient-z", Box::new(gz), Box::new(|m| m[3])),
                    (
                        "rel-poincare",
                        Box::new(|m| m[1] - m[0] * m[0]),
                        Box::new(move |m| (e - 1.0) / (ds2 * ds2) * (2.0 * ds2 * m[2] + m[3])),
                    ),
                ];
                for (id, lhs, rhs) in rows {
                    let (l, r, le, re, te) = mc_sides(&run.samples, &cols, &fd, lhs, rhs);
                    sink.push(
                        Row::new(id, &f.id(), x, l, r)
                            .t(t)
                            .se(le, re, te)
                            .slack(slack(r))
                            .provenance(prov.clone())
                            .finish(&rule),
                    );
                }
            }
        }
    }
    Ok(())
}

/// `(e0, 0)` and a point at distance about 0.58 with a nonzero fiber.
fn default_points(geom: Geometry) -> Vec<Vec<f64>> {
    let o = geom.origin();
    let n = o.len();
    let mut v = vec![0.0; n];
    v[1] = 0.5;
    if n > 2 {
        v[2] = 0.3;
    }
    let far = geom.exp_unchecked(&o, &v);
    let fiber: Vec<f64> = (0..n).map(|i| [0.2, -0.1, 0.3][i % 3]).collect();
    vec![[o.clone(), vec![0.0; n]].concat(), [far, fiber].concat()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;
    use crate::verify::{run_suite, Scenario, SimSettings};

    #[test]
    fn constant_field_gives_zero_sides() {
        let mut cfg = RunConfig::new(Scenario::Relativistic);
        cfg.fields = Some(vec!["const(2)".into()]);
        cfg.random_points = Some(3);
        cfg.sim = Some(SimSettings::new(200, 1e-2));
        cfg.times = Some(vec![0.1]);
        let b = run_suite(&cfg).unwrap();
        assert!(b.errors.is_empty(), "{:?}", b.errors);
        for r in b.reports.iter().filter(|r| r.inequality.starts_with("rel-")) {
            assert!(r.lhs.abs() < 1e-9 && r.rhs.abs() < 1e-9, "{r:?}");
            assert_eq!(r.verdict, Verdict::Verified);
        }
    }

    #[test]
    fn xi_field_gradient_bound_has_positive_margin() {
        let mut cfg = RunConfig::new(Scenario::Relativistic);
        cfg.fields = Some(vec!["linear-xi".into()]);
        cfg.random_points = Some(2);
        cfg.points = None;
        cfg.sim = Some(SimSettings::new(2000, 1e-2));
        cfg.times = Some(vec![0.5]);
        let b = run_suite(&cfg).unwrap();
        let rows: Vec<_> = b.reports.iter().filter(|r| r.inequality == "rel-gradient").collect();
        assert_eq!(rows.len(), 2);
        for r in rows {
            assert_eq!(r.verdict, Verdict::Verified, "{r:?}");
            assert!(r.margin > 0.0);
        }
    }
}
