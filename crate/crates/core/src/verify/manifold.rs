//! Coupling scenario: contraction and fiber bounds of the parallel coupling,
//! the coupling gradient bound by Monte Carlo on the manifold and by
//! quadrature on the flat space.

use crate::coupling::{base_bound, contraction_study, k2, CouplingKind};
use crate::error::{Error, Result};
use crate::field::{flat_gradient, FieldRef};
use crate::generator::GeneratorSpec;
use crate::geometry::Geometry;
use crate::report::{Provenance, Row};
use crate::semigroup::FlatKernel;
use crate::sim::{DirectionSet, SimConfig};

use super::common::{coord_grad_norm, frame_grad_norm, mc_provenance, mc_sides, sim_config, slack, sq_sum, GradRun, Needs, Sink};
use super::flat::FLAT_LIBRARY;
use super::RunConfig;

const DISPLAY: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
const GRADIENT_TIMES: [f64; 2] = [0.5, 1.0];
const MC_LIBRARY: [&str; 3] = ["linear-xi", "tanh-p", "gauss-bump(0, 1)"];
const FLAT_TIMES: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
const FLAT_POINTS: [[f64; 2]; 5] = [[0.0, 0.0], [0.5, -0.3], [-1.0, 0.8], [1.2, 1.0], [-0.4, -1.1]];
const INITIAL_DISTANCE: f64 = 0.5;

/// Paths of the flat synchronous control run (the bound is pathwise exact).
const CONTROL_PATHS: usize = 1000;

/// Lifted generator for a coupling run; the geometric curvature bound is
/// only the contraction rate of the unit-speed Brownian motion.
pub(crate) fn coupling_generator(geometry: Geometry) -> Result<GeneratorSpec> {
    match geometry {
        Geometry::Sphere(d) => Ok(GeneratorSpec::sphere_lift(d, 1.0)),
        Geometry::Euclidean(d) => Ok(GeneratorSpec::flat_kolmogorov(d, 1.0)),
        g => Err(Error::Config(format!(
            "coupling runs need a sphere or a Euclidean base with a Lipschitz lift, got {g}"
        ))),
    }
}

pub(crate) fn kind_for(geometry: Geometry) -> CouplingKind {
    match geometry {
        Geometry::Euclidean(_) => CouplingKind::Synchronous,
        _ => CouplingKind::Parallel,
    }
}

/// Base points at distance `dist` along the first frame direction.
pub(crate) fn default_pair(geometry: Geometry, dist: f64) -> (Vec<f64>, Vec<f64>) {
    let o = geometry.origin();
    let e = &geometry.frame(&o)[0];
    let v: Vec<f64> = e.iter().map(|c| dist * c).collect();
    let p2 = geometry.exp_unchecked(&o, &v);
    (o, p2)
}

pub(crate) fn run(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    cfg.generator_or_reject(&["geometry", "sigma"])?;
    if cfg.generator.sigma.is_some_and(|s| s != 1.0) {
        return Err(Error::Config("coupling runs use unit-speed Brownian motion (sigma = 1)".into()));
    }
    let geometry = cfg.generator.geometry.unwrap_or(Geometry::Sphere(2));
    let gen = coupling_generator(geometry)?;
    let bd = geometry.ambient_dim();
    let (p, p2) = match (&cfg.points, &cfg.partner_points) {
        (Some(a), Some(b)) => {
            super::check_point(&gen, &a[0])?;
            super::check_point(&gen, &b[0])?;
            (a[0][..bd].to_vec(), b[0][..bd].to_vec())
        }
        _ => default_pair(geometry, INITIAL_DISTANCE),
    };
    let display = cfg.times_or(&DISPLAY);
    let t_max = display.iter().copied().fold(0.0, f64::max);
    let sim = cfg.sim_or(10_000, 1e-3);
    let simcfg = sim_config(&sim, t_max, cfg.seed, cfg.exec);
    match contraction_study(&gen, kind_for(geometry), sim.increment_law, &p, &p2, &simcfg, &display) {
        Ok(r) => sink.bundle.contraction.push(r),
        Err(e) => sink.error(format!("contraction {geometry}"), &e),
    }
    if !matches!(geometry, Geometry::Euclidean(_)) {
        let flat = GeneratorSpec::flat_kolmogorov(2, 1.0);
        let (q, q2) = default_pair(flat.geometry, INITIAL_DISTANCE);
        let mut c = SimConfig { n_paths: sim.n_paths.min(CONTROL_PATHS), ..simcfg.clone() };
        c.stream = 1;
        match contraction_study(&flat, CouplingKind::Synchronous, sim.increment_law, &q, &q2, &c, &display) {
            Ok(r) => sink.bundle.contraction.push(r),
            Err(e) => sink.error("contraction euclidean control", &e),
        }
    }

    gradient_mc(cfg, sink, &gen, &sim)?;
    gradient_flat(cfg, sink)
}

fn gradient_mc(cfg: &RunConfig, sink: &mut Sink, gen: &GeneratorSpec, sim: &super::SimSettings) -> Result<()> {
    let geometry = gen.geometry;
    let k = gen.ricci().unwrap_or(0.0);
    let fields: Vec<FieldRef> = cfg
        .fields_or(&MC_LIBRARY, gen)?
        .into_iter()
        .filter(|f| sink.admit("coupling-gradient", &**f, Needs::Lipschitz))
        .collect();
    let qs = cfg.q_or();
    let nq = qs.len();
    let times = GRADIENT_TIMES;
    let points = match &cfg.points {
        Some(p) => p.clone(),
        None => {
            let layout = gen.layout();
            let nf = layout.total() - layout.base_dim;
            let (a, b) = default_pair(geometry, 0.7);
            let fiber: Vec<f64> = (0..nf).map(|i| [0.3, -0.2, 0.1][i % 3]).collect();
            vec![[a, vec![0.0; nf]].concat(), [b, fiber].concat()]
        }
    };
    let bd = geometry.ambient_dim();
    let rule = cfg.rule();
    for (i, x) in points.iter().enumerate() {
        let mut simcfg = sim_config(sim, 1.0, cfg.seed, cfg.exec);
        simcfg.stream = 10 + i as u64;
        let run = GradRun::new(gen, x, DirectionSet::Base, sim, &times, &fields, nq, simcfg, |f, t, z, o| {
            let a = frame_grad_norm(geometry, f, z);
            let b = coord_grad_norm(f, z, bd..z.len());
            let inner = base_bound(k, t) * a + k2(k, gen.c_sigma, t) * b;
            for (oq, q) in o.iter_mut().zip(&qs) {
                *oq = inner.powf(*q);
            }
        });
        let run = match run {
            Ok(r) => r,
            Err(e) => {
                sink.error(format!("coupling-gradient x={x:?}"), &e);
                continue;
            }
        };
        let prov = mc_provenance(&run.cfg, Some(sim.fd_step), gen.normalization.label());
        let fd = run.fd();
        let base = run.base();
        for (ti, &t) in times.iter().enumerate() {
            for (fj, f) in fields.iter().enumerate() {
                let cols = run.cols(ti, fj);
                for (qi, &q) in qs.iter().enumerate() {
                    let (l, r, le, re, te) =
                        mc_sides(&run.samples, &cols, &fd, |m| sq_sum(m, base.clone()).powf(q / 2.0), |m| m[qi]);
                    sink.push(
                        Row::new("coupling-gradient", &f.id(), x, l, r)
                            .t(t)
                            .q(q)
                            .se(le, re, te)
                            .slack(slack(r))
                            .provenance(prov.clone())
                            .note(format!("{geometry}, K={k}"))
                            .finish(&rule),
                    );
                }
            }
        }
    }
    Ok(())
}

/// Flat `L^q` version by quadrature: `|grad_p P_t f|^q <= P_t((|grad_p f| + t |grad_xi f|)^q)`.
fn gradient_flat(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let gen = GeneratorSpec::flat_kolmogorov(1, 1.0);
    let fields: Vec<FieldRef> = cfg
        .fields_or(&FLAT_LIBRARY, &gen)?
        .into_iter()
        .filter(|f| sink.admit("coupling-gradient", &**f, Needs::Lipschitz))
        .collect();
    let qs = cfg.q_or();
    let rule = cfg.rule();
    for &t in &FLAT_TIMES {
        let kernel = FlatKernel::new(1, 1.0, t)?.with_execution(cfg.exec);
        let prov = Provenance {
            quad_order: Some(kernel.order()),
            ..Provenance::method("quadrature")
        };
        for f in &fields {
            for x in &FLAT_POINTS {
                let res = kernel.expect_pair(x, 2 + qs.len(), |y, out| {
                    let g = flat_gradient(&**f, y);
                    out[..2].copy_from_slice(&g);
                    let inner = g[0].abs() + t * g[1].abs();
                    for (o, q) in out[2..].iter_mut().zip(&qs) {
                        *o = inner.powf(*q);
                    }
                });
                let (hi, lo) = match res {
                    Ok(v) => v,
                    Err(e) => {
                        sink.error(format!("coupling-gradient flat {} x={x:?}", f.id()), &e);
                        continue;
                    }
                };
                let (gh, gl) = (kernel.pull_back(&hi[..2])[0].abs(), kernel.pull_back(&lo[..2])[0].abs());
                for (qi, &q) in qs.iter().enumerate() {
                    let (l1, l0) = (gh.powf(q), gl.powf(q));
                    let (r1, r0) = (hi[2 + qi], lo[2 + qi]);
                    sink.push(
                        Row::new("coupling-gradient", &f.id(), x, l1, r1)
                            .t(t)
                            .q(q)
                            .se((l1 - l0).abs(), (r1 - r0).abs(), ((r1 - l1) - (r0 - l0)).abs())
                            .slack(slack(r1))
                            .provenance(prov.clone())
                            .note("euclidean-1, K=0")
                            .finish(&rule),
                    );
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;
    use crate::verify::{run_suite, Scenario, SimSettings};

    #[test]
    fn linear_xi_flat_rows_are_sharp_at_q2() {
        let mut cfg = RunConfig::new(Scenario::ManifoldCoupling);
        cfg.generator.geometry = Some(Geometry::Euclidean(1));
        cfg.fields = Some(vec!["linear-xi".into()]);
        cfg.sim = Some(SimSettings::new(200, 1e-2));
        let b = run_suite(&cfg).unwrap();
        assert!(b.errors.is_empty(), "{:?}", b.errors);
        let sharp: Vec<_> = b
            .reports
            .iter()
            .filter(|r| r.q == Some(2.0) && r.provenance.method == "quadrature")
            .collect();
        assert!(!sharp.is_empty());
        for r in sharp {
            assert_eq!(r.verdict, Verdict::Verified);
            assert!((r.lhs - r.rhs).abs() <= 1e-10 * (1.0 + r.rhs), "{r:?}");
        }
        assert_eq!(b.contraction.len(), 1);
        assert!(b.contraction[0].epsilon_dt < 1e-12);
    }

    #[test]
    fn heisenberg_is_refused() {
        let mut cfg = RunConfig::new(Scenario::ManifoldCoupling);
        cfg.generator.geometry = Some(Geometry::Heisenberg);
        assert!(matches!(run_suite(&cfg), Err(Error::Config(_))));
    }
}
