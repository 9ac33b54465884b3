//! Heisenberg group with the lift `(x, y, 0)`: horizontal gradient bound
//! with an unknown constant, reported as the empirical ratio `K^`.

use crate::error::Result;
use crate::field::FieldRef;
use crate::generator::GeneratorSpec;
use crate::geometry::Geometry;
use crate::report::{HeisenbergRow, HeisenbergSummary, Row};
use crate::sim::DirectionSet;

use super::common::{coord_grad_norm, frame_grad_norm, mc_provenance, mc_sides, sim_config, slack, sq_sum, GradRun, Needs, Sink};
use super::RunConfig;

const LIBRARY: [&str; 6] = ["linear-p", "coord(1)", "tanh-p", "gauss-bump(0, 1)", "linear-xi", "coord(4)"];
const TIMES: [f64; 4] = [0.01, 0.1, 0.5, 1.0];
const POINTS: [[f64; 6]; 3] = [
    [0.3, -0.2, 0.1, 0.0, 0.0, 0.0],
    [-0.5, 0.4, 0.3, 0.2, -0.1, 0.3],
    [1.0, 0.5, -0.4, -0.3, 0.2, 0.0],
];

/// Rows whose right side is below this carry no information about `K`.
const DEGENERATE: f64 = 1e-12;

pub(crate) fn run(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    cfg.generator_or_reject(&["sigma"])?;
    let gen = GeneratorSpec::heisenberg(cfg.generator.sigma.unwrap_or(1.0));
    let c_sigma = gen.c_sigma;
    let fields: Vec<FieldRef> = cfg
        .fields_or(&LIBRARY, &gen)?
        .into_iter()
        .filter(|f| sink.admit("heisenberg-gradient", &**f, Needs::Lipschitz))
        .collect();
    let points = cfg.points_or(POINTS.iter().map(|p| p.to_vec()).collect(), &gen)?;
    let times = cfg.times_or(&TIMES);
    let qs = cfg.q_or();
    let k_cap = cfg.k_cap.unwrap_or(3.0);
    let sim = cfg.sim_or(10_000, 1e-3);
    let rule = cfg.rule();
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let small_t = times.iter().copied().fold(f64::INFINITY, f64::min);
    let mut summary = HeisenbergSummary {
        k_cap,
        family_max: 0.0,
        reference_lower_bound: std::f64::consts::SQRT_2,
        small_t,
        small_t_max_deviation: 0.0,
        rows: Vec::new(),
    };
    for (i, x) in points.iter().enumerate() {
        let mut simcfg = sim_config(&sim, t_max, cfg.seed, cfg.exec);
        simcfg.stream = i as u64;
        let run = GradRun::new(&gen, x, DirectionSet::Base, &sim, &times, &fields, qs.len(), simcfg, |f, t, z, o| {
            let inner = frame_grad_norm(Geometry::Heisenberg, f, z) + c_sigma * t * coord_grad_norm(f, z, 3..z.len());
            for (oq, q) in o.iter_mut().zip(&qs) {
                *oq = inner.powf(*q);
            }
        });
        let run = match run {
            Ok(r) => r,
            Err(e) => {
                sink.error(format!("heisenberg x={x:?}"), &e);
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
                    let lhs = |m: &[f64]| sq_sum(m, base.clone()).powf(q / 2.0);
                    let cap = k_cap.powf(q);
                    let (l, r, le, re, te) = mc_sides(&run.samples, &cols, &fd, lhs, |m| cap * m[qi]);
                    if r / cap <= DEGENERATE {
                        sink.skip(
                            "heisenberg-gradient",
                            &format!("{} x={x:?} t={t} q={q}", f.id()),
                            "degenerate: right side vanishes (0/0 ratio)",
                        );
                        continue;
                    }
                    let ratio = |m: &[f64]| (lhs(m) / m[qi]).powf(1.0 / q);
                    let (k_hat, _, k_hat_se, _, _) = mc_sides(&run.samples, &cols, &fd, ratio, |_| 0.0);
                    sink.push(
                        Row::new("heisenberg-gradient", &f.id(), x, l, r)
                            .t(t)
                            .q(q)
                            .se(le, re, te)
                            .slack(slack(r))
                            .provenance(prov.clone())
                            .note(format!("k_cap={k_cap}, k_hat={k_hat:.6}"))
                            .finish(&rule),
                    );
                    summary.family_max = summary.family_max.max(k_hat);
                    if t == small_t {
                        summary.small_t_max_deviation = summary.small_t_max_deviation.max((k_hat - 1.0).abs());
                    }
                    summary.rows.push(HeisenbergRow {
                        field: f.id(),
                        point: x.clone(),
                        t,
                        q,
                        k_hat,
                        k_hat_se,
                    });
                }
            }
        }
    }
    sink.bundle.heisenberg = Some(summary);
    Ok(())
}
