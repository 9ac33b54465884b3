//! Iterated flat diffusion: gradient bound with the iterated fiber
//! constants, by quadrature and by Monte Carlo, and the constant tables.

use crate::coupling::{iterated_fiber_bounds, iterated_fiber_bounds_recursive};
use crate::error::Result;
use crate::field::{flat_gradient, FieldRef};
use crate::generator::GeneratorSpec;
use crate::report::{FiberBoundTable, Provenance, Row};
use crate::semigroup::FlatKernel;
use crate::sim::DirectionSet;

use super::common::{mc_provenance, mc_sides, sim_config, slack, sq_sum, GradRun, Needs, Sink};
use super::flat::FLAT_LIBRARY;
use super::RunConfig;

const TIMES: [f64; 3] = [0.5, 1.0, 2.0];
const MC_TIMES: [f64; 2] = [0.5, 1.0];
const POINTS: [(f64, f64, f64); 3] = [(0.0, 0.0, 0.0), (0.5, -0.3, 0.4), (-1.0, 0.8, -0.6)];
const TABLE_LEVELS: usize = 4;
const TABLE_K: [f64; 3] = [0.0, 2.0, -1.0];

pub(crate) fn run(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    cfg.generator_or_reject(&["d", "sigma", "levels"])?;
    let d = cfg.generator.d.unwrap_or(1);
    let sigma = cfg.generator.sigma.unwrap_or(1.0);
    let n = cfg.generator.levels.unwrap_or(2);
    let gen = GeneratorSpec::iterated_flat(d, sigma, n);
    let fields: Vec<FieldRef> = cfg
        .fields_or(&FLAT_LIBRARY, &gen)?
        .into_iter()
        .filter(|f| sink.admit("iterated-gradient", &**f, Needs::Lipschitz))
        .collect();
    let default_points = POINTS
        .iter()
        .map(|&(p, a, b)| {
            let levels = [p, a, b];
            (0..=n).flat_map(|r| vec![levels[r % 3]; d]).collect()
        })
        .collect();
    let points = cfg.points_or(default_points, &gen)?;
    let qs = cfg.q_or();
    let rule = cfg.rule();
    let times = cfg.times_or(&TIMES);

    for &t in &times {
        for &k in &TABLE_K {
            let values = iterated_fiber_bounds(TABLE_LEVELS.max(n), k, 1.0, t);
            let recursive = iterated_fiber_bounds_recursive(TABLE_LEVELS.max(n), k, 1.0, t);
            let max_rel_diff = values
                .iter()
                .zip(&recursive)
                .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            sink.bundle.fiber_bounds.push(FiberBoundTable {
                k,
                c_sigma: 1.0,
                t,
                values,
                recursive,
                max_rel_diff,
            });
        }
    }

    // flat base: K = 0 and the inclusion lift has C_sigma = 1
    for &t in &times {
        let coeff = iterated_fiber_bounds(n, 0.0, 1.0, t);
        let kernel = match FlatKernel::iterated(d, sigma, t, n) {
            Ok(k) => k.with_execution(cfg.exec),
            Err(e) => {
                sink.error(format!("iterated kernel t={t}"), &e);
                continue;
            }
        };
        let prov = Provenance {
            quad_order: Some(kernel.order()),
            ..Provenance::method("quadrature")
        };
        let dim = kernel.dim();
        for f in &fields {
            for x in &points {
                let res = kernel.expect_pair(x, dim + qs.len(), |y, out| {
                    let g = flat_gradient(&**f, y);
                    out[..dim].copy_from_slice(&g);
                    let inner = composite(&g, d, &coeff);
                    for (o, q) in out[dim..].iter_mut().zip(&qs) {
                        *o = inner.powf(*q);
                    }
                });
                let (hi, lo) = match res {
                    Ok(v) => v,
                    Err(e) => {
                        sink.error(format!("iterated-gradient {} x={x:?} t={t}", f.id()), &e);
                        continue;
                    }
                };
                let gh = kernel.pull_back(&hi[..dim])[..d].iter().map(|a| a * a).sum::<f64>().sqrt();
                let gl = kernel.pull_back(&lo[..dim])[..d].iter().map(|a| a * a).sum::<f64>().sqrt();
                for (qi, &q) in qs.iter().enumerate() {
                    let (l1, l0) = (gh.powf(q), gl.powf(q));
                    let (r1, r0) = (hi[dim + qi], lo[dim + qi]);
                    sink.push(
                        Row::new("iterated-gradient", &f.id(), x, l1, r1)
                            .t(t)
                            .q(q)
                            .se((l1 - l0).abs(), (r1 - r0).abs(), ((r1 - l1) - (r0 - l0)).abs())
                            .slack(slack(r1))
                            .provenance(prov.clone())
                            .finish(&rule),
                    );
                }
            }
        }
    }

    let sim = cfg.sim_or(100_000, 1e-3);
    let mc_times: Vec<f64> = match &cfg.times {
        Some(t) => t.clone(),
        None => MC_TIMES.to_vec(),
    };
    let t_max = mc_times.iter().copied().fold(0.0, f64::max);
    let coeffs: Vec<Vec<f64>> = mc_times.iter().map(|&t| iterated_fiber_bounds(n, 0.0, 1.0, t)).collect();
    for (i, x) in points.iter().enumerate() {
        let mut simcfg = sim_config(&sim, t_max, cfg.seed, cfg.exec);
        simcfg.stream = i as u64;
        let run = GradRun::new(&gen, x, DirectionSet::Base, &sim, &mc_times, &fields, qs.len(), simcfg, |f, t, z, o| {
            let ti = mc_times.iter().position(|s| *s == t).unwrap_or(0);
            let inner = composite(&flat_gradient(f, z), d, &coeffs[ti]);
            for (oq, q) in o.iter_mut().zip(&qs) {
                *oq = inner.powf(*q);
            }
        });
        let run = match run {
            Ok(r) => r,
            Err(e) => {
                sink.error(format!("iterated-gradient mc x={x:?}"), &e);
                continue;
            }
        };
        let prov = mc_provenance(&run.cfg, Some(sim.fd_step), gen.normalization.label());
        let fd = run.fd();
        let base = run.base();
        for (ti, &t) in mc_times.iter().enumerate() {
            for (fj, f) in fields.iter().enumerate() {
                let cols = run.cols(ti, fj);
                for (qi, &q) in qs.iter().enumerate() {
                    let (l, r, le, re, te) =
                        mc_sides(&run.samples, &cols, &fd, |m| sq_sum(m, base.clone()).powf(q / 2.0), |m| m[qi]);
                    sink.push(
                        Row::new("iterated-gradient", &f.id(), x, l, r)
                            .t(t)
                            .q(q)
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

/// `|grad_p f| + sum_r K_r |grad_{xi_r} f|`.
fn composite(g: &[f64], d: usize, coeff: &[f64]) -> f64 {
    let norm = |r: usize| g[r * d..(r + 1) * d].iter().map(|a| a * a).sum::<f64>().sqrt();
    norm(0) + coeff.iter().enumerate().map(|(r, c)| c * norm(r + 1)).sum::<f64>()
}
