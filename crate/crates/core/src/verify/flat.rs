//! Flat Kolmogorov suites: the four functional inequalities by exact
//! quadrature and by Monte Carlo, and the sharpness table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{flat_gradient, parse_field};
use crate::generator::GeneratorSpec;
use crate::point::Layout;
use crate::report::{Row, VerdictRule};
use crate::semigroup::{
    reverse_lhs, verify_be_estimate, verify_reverse_logsobolev, verify_reverse_poincare, verify_wang_harnack,
    wang_harnack_constant, FlatKernel,
};
use crate::sim::{mc_collect, DirectionSet};

use super::common::{mc_provenance, mc_sides, sim_config, slack, Needs, Sink, Stencil};
use super::RunConfig;

/// Default field library of the flat suites.
pub const FLAT_LIBRARY: [&str; 7] = [
    "linear-xi",
    "linear-p",
    "tanh-p",
    "gauss-bump(0, 1)",
    "gauss-bump(0.5, 0.7)",
    "positive-bump(0, 1, 0.1)",
    "positive-bump(-0.5, 1.5, 0.2)",
];

const TIMES: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

/// `(p, xi)` pairs, repeated on every axis.
const POINTS: [(f64, f64); 5] = [(0.0, 0.0), (0.5, -0.3), (-1.0, 0.8), (1.2, 1.0), (-0.4, -1.1)];

const PARTNER_SHIFT: (f64, f64) = (0.2, -0.1);

/// Largest Euclidean separation of Wang-Harnack point pairs; the cost grows
/// like `exp(c |x - x'|^2 / t^3)` and overflows beyond.
const MAX_PARTNER_DISTANCE: f64 = 2.0;

struct Setup {
    gen: GeneratorSpec,
    d: usize,
    sigma: f64,
    fields: Vec<crate::field::FieldRef>,
    points: Vec<Vec<f64>>,
    partners: Vec<Vec<f64>>,
    times: Vec<f64>,
    alpha: f64,
}

fn setup(cfg: &RunConfig) -> Result<Setup> {
    cfg.generator_or_reject(&["d", "sigma"])?;
    let d = cfg.generator.d.unwrap_or(1);
    let sigma = cfg.generator.sigma.unwrap_or(1.0);
    let gen = GeneratorSpec::flat_kolmogorov(d, sigma);
    let fields = cfg.fields_or(&FLAT_LIBRARY, &gen)?;
    let default_points = POINTS
        .iter()
        .map(|&(p, xi)| [vec![p; d], vec![xi; d]].concat())
        .collect();
    let points = cfg.points_or(default_points, &gen)?;
    let partners = match &cfg.partner_points {
        Some(v) => v.clone(),
        None => points
            .iter()
            .map(|x| {
                let mut y = x.clone();
                y[..d].iter_mut().for_each(|v| *v += PARTNER_SHIFT.0);
                y[d..].iter_mut().for_each(|v| *v += PARTNER_SHIFT.1);
                y
            })
            .collect(),
    };
    for (x, y) in points.iter().zip(&partners) {
        super::check_point(&gen, y)?;
        let dist = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if dist > MAX_PARTNER_DISTANCE {
            return Err(Error::Config(format!(
                "Wang-Harnack partners must lie within distance {MAX_PARTNER_DISTANCE}, got {dist}"
            )));
        }
    }
    Ok(Setup {
        gen,
        d,
        sigma,
        fields,
        points,
        partners,
        times: cfg.times_or(&TIMES),
        alpha: cfg.alpha.unwrap_or(2.0),
    })
}

pub(crate) fn run_exact(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let s = setup(cfg)?;
    let rule = cfg.rule();
    for &t in &s.times {
        let kernel = match FlatKernel::new(s.d, s.sigma, t) {
            Ok(k) => k.with_execution(cfg.exec),
            Err(e) => {
                sink.error(format!("kernel t={t}"), &e);
                continue;
            }
        };
        for f in &s.fields {
            for (x, x2) in s.points.iter().zip(&s.partners) {
                let ctx = |what: &str| format!("{what} {} x={x:?} t={t}", f.id());
                if sink.admit("be-estimate", &**f, Needs::Lipschitz) {
                    sink.take(ctx("be-estimate"), verify_be_estimate(&kernel, &**f, x, &rule));
                }
                if sink.admit("reverse-poincare", &**f, Needs::Bounded) {
                    let r = verify_reverse_poincare(&kernel, &**f, x, &rule).map(|r| vec![r]);
                    sink.take(ctx("reverse-poincare"), r);
                }
                if sink.admit("reverse-log-sobolev", &**f, Needs::PositiveBounded) {
                    let r = verify_reverse_logsobolev(&kernel, &**f, x, &rule).map(|r| vec![r]);
                    sink.take(ctx("reverse-log-sobolev"), r);
                }
                if sink.admit("wang-harnack", &**f, Needs::NonnegativeBounded) {
                    let r = verify_wang_harnack(&kernel, &**f, s.alpha, x, x2, &rule).map(|r| vec![r]);
                    sink.take(ctx("wang-harnack"), r);
                }
            }
        }
    }
    Ok(())
}

/// Per-(time, field) column block of the Monte Carlo run: `f`, `f^2`,
/// `f ln f`, the two gradient-bound integrands, `f^alpha` at the partner,
/// then the `h` and `2h` difference quotients.
const SCALAR_COLS: usize = 6;

pub(crate) fn run_mc(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let s = setup(cfg)?;
    let sim = cfg.sim_or(100_000, 1e-3);
    if !sim.crn {
        return Err(Error::Config("flat-mc differences need common random numbers (crn = true)".into()));
    }
    let rule = cfg.rule();
    let d = s.d;
    let m = 2 * d;
    let block = SCALAR_COLS + 2 * m;
    let nf = s.fields.len();
    let t_max = s.times.iter().copied().fold(0.0, f64::max);
    let s2 = s.sigma * s.sigma;
    for (i, (x, x2)) in s.points.iter().zip(&s.partners).enumerate() {
        let stencil = Stencil::new(&s.gen, x, sim.fd_step, DirectionSet::All);
        let mut starts = stencil.starts.clone();
        let partner = starts.len();
        starts.push(x2.clone());
        let mut simcfg = sim_config(&sim, t_max, cfg.seed, cfg.exec);
        simcfg.stream = i as u64;
        let k = s.times.len() * nf * block;
        let (times, fields, alpha) = (&s.times, &s.fields, s.alpha);
        let collected = mc_collect(&s.gen, &starts, times, &simcfg, k, |st, out| {
            for (ti, &t) in times.iter().enumerate() {
                for (fj, f) in fields.iter().enumerate() {
                    let o = &mut out[(ti * nf + fj) * block..][..block];
                    let z = &st[0][ti];
                    let v = f.eval(z);
                    let g = flat_gradient(&**f, z);
                    o[0] = v;
                    o[1] = v * v;
                    o[2] = if v > 0.0 { v * v.ln() } else { 0.0 };
                    o[3] = (0..d).map(|a| (g[a] + t * g[d + a]).powi(2)).sum();
                    o[4] = (0..d).map(|a| g[d + a].powi(2)).sum();
                    o[5] = f.eval(&st[partner][ti]).max(0.0).powf(alpha);
                    stencil.differences(&**f, st, ti, &mut o[SCALAR_COLS..]);
                }
            }
        });
        let samples = match collected {
            Ok(v) => v,
            Err(e) => {
                sink.error(format!("flat-mc point {x:?}"), &e);
                continue;
            }
        };
        let prov = mc_provenance(&simcfg, Some(sim.fd_step), s.gen.normalization.label());
        let fd: Vec<(usize, usize)> = (0..m).map(|a| (SCALAR_COLS + a, SCALAR_COLS + m + a)).collect();
        for (ti, &t) in s.times.iter().enumerate() {
            for (fj, f) in s.fields.iter().enumerate() {
                let base = (ti * nf + fj) * block;
                let cols: Vec<usize> = (base..base + block).collect();
                let grad = |mm: &[f64]| mm[SCALAR_COLS..SCALAR_COLS + m].to_vec();
                let row = |id: &str, sides: super::common::Sides| {
                    let (l, r, le, re, te) = sides;
                    Row::new(id, &f.id(), x, l, r)
                        .t(t)
                        .se(le, re, te)
                        .slack(slack(r))
                        .provenance(prov.clone())
                };
                if sink.admit("be-estimate", &**f, Needs::Lipschitz) {
                    let a = mc_sides(&samples, &cols, &fd, |mm| sum_sq(&grad(mm)[..d]), |mm| mm[3]);
                    sink.push(row("be-estimate", a).finish(&rule));
                    let b = mc_sides(&samples, &cols, &fd, |mm| sum_sq(&grad(mm)[d..]), |mm| mm[4]);
                    sink.push(row("be-estimate-xi", b).finish(&rule));
                }
                if sink.admit("reverse-poincare", &**f, Needs::Bounded) {
                    let a = mc_sides(
                        &samples,
                        &cols,
                        &fd,
                        |mm| reverse_lhs(&grad(mm), d, t, 1.0),
                        |mm| (mm[1] - mm[0] * mm[0]) / (s2 * t),
                    );
                    sink.push(row("reverse-poincare", a).finish(&rule));
                }
                if sink.admit("reverse-log-sobolev", &**f, Needs::PositiveBounded) {
                    let a = mc_sides(
                        &samples,
                        &cols,
                        &fd,
                        |mm| reverse_lhs(&grad(mm), d, t, mm[0]),
                        |mm| 2.0 / (s2 * t * mm[0]) * (mm[2] - mm[0] * mm[0].ln()),
                    );
                    sink.push(row("reverse-log-sobolev", a).finish(&rule));
                }
                if sink.admit("wang-harnack", &**f, Needs::NonnegativeBounded) {
                    match wang_harnack_constant(s.sigma, t, alpha, x, x2) {
                        Ok(c) => {
                            let a = mc_sides(&samples, &cols, &[], |mm| mm[0].max(0.0).powf(alpha), |mm| c * mm[5]);
                            sink.push(
                                row("wang-harnack", a)
                                    .point2(x2)
                                    .note(format!("alpha={alpha}, c_alpha={c:.6e}"))
                                    .finish(&rule),
                            );
                        }
                        Err(e) => sink.error(format!("wang-harnack {} x={x:?} t={t}", f.id()), &e),
                    }
                }
            }
        }
    }
    Ok(())
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// One line of the sharpness table for `f(p, xi) = xi` (d = 1, sigma = 1):
/// both `|grad_p P_t f|^2` and the gradient-bound right side equal `t^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub t: f64,
    pub grad_sq: f64,
    pub rhs: f64,
    pub expected: f64,
    /// `max(|grad_sq - t^2|, |rhs - t^2|) / t^2`.
    pub rel_gap: f64,
}

/// Sharpness table of the flat gradient bound at `x = (0, 0)`.
pub fn sharpness(t_grid: &[f64]) -> Result<Vec<SharpnessRow>> {
    super::common::check_grid("time", t_grid)?;
    let f = parse_field("linear-xi", Layout::new(1, 1, 1))?;
    t_grid
        .iter()
        .map(|&t| {
            let kernel = FlatKernel::new(1, 1.0, t)?;
            let rows = verify_be_estimate(&kernel, &*f, &[0.0, 0.0], &VerdictRule::default())?;
            let (grad_sq, rhs) = (rows[0].lhs, rows[0].rhs);
            let expected = t * t;
            Ok(SharpnessRow {
                t,
                grad_sq,
                rhs,
                expected,
                rel_gap: (grad_sq - expected).abs().max((rhs - expected).abs()) / expected,
            })
        })
        .collect()
}
