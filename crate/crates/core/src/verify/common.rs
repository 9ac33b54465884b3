//! Pieces shared by the scenario runners: field resolution, point clouds,
//! Monte Carlo difference stencils and row assembly.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::field::{flat_gradient, parse_field, FieldClasses, FieldRef, ScalarField};
use crate::generator::GeneratorSpec;
use crate::geometry::Geometry;
use crate::point::Layout;
use crate::report::{InequalityReport, Provenance, ReportBundle, RowError, Skipped};
use crate::sim::{difference_starts, path_rng, DirectionSet, SimConfig};
use crate::stats::Samples;

use super::config::SimSettings;

/// Stream reserved for random point clouds, disjoint from path streams.
const POINT_STREAM: u64 = u64::MAX - 1;

pub(crate) fn resolve_fields(ids: &[String], layout: Layout) -> Result<Vec<FieldRef>> {
    ids.iter().map(|id| parse_field(id, layout)).collect()
}

/// Class requirement of an inequality, with the wording used in skip
/// records.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Needs {
    Lipschitz,
    Bounded,
    PositiveBounded,
    NonnegativeBounded,
}

impl Needs {
    pub fn holds(self, c: FieldClasses) -> bool {
        match self {
            Needs::Lipschitz => c.lipschitz,
            Needs::Bounded => c.bounded,
            Needs::PositiveBounded => c.positive && c.bounded,
            Needs::NonnegativeBounded => c.nonnegative && c.bounded,
        }
    }

    fn reason(self) -> &'static str {
        match self {
            Needs::Lipschitz => "needs a globally Lipschitz field",
            Needs::Bounded => "needs a bounded field",
            Needs::PositiveBounded => "needs a bounded field with a positive floor",
            Needs::NonnegativeBounded => "needs a bounded nonnegative field",
        }
    }
}

/// Appends to a bundle; errors and skips are recorded, never raised.
pub(crate) struct Sink<'a> {
    pub bundle: &'a mut ReportBundle,
}

impl Sink<'_> {
    /// Records a skip once per (inequality, field) and returns whether the
    /// field qualifies.
    pub fn admit(&mut self, inequality: &str, f: &dyn ScalarField, needs: Needs) -> bool {
        if needs.holds(f.classes()) {
            return true;
        }
        let field = f.id();
        if !self
            .bundle
            .skipped
            .iter()
            .any(|s| s.inequality == inequality && s.field == field)
        {
            self.bundle.skipped.push(Skipped {
                inequality: inequality.to_string(),
                field,
                reason: needs.reason().to_string(),
            });
        }
        false
    }

    pub fn skip(&mut self, inequality: &str, field: &str, reason: &str) {
        if !self
            .bundle
            .skipped
            .iter()
            .any(|s| s.inequality == inequality && s.field == field)
        {
            self.bundle.skipped.push(Skipped {
                inequality: inequality.to_string(),
                field: field.to_string(),
                reason: reason.to_string(),
            });
        }
    }

    pub fn push(&mut self, r: InequalityReport) {
        self.bundle.reports.push(r);
    }

    pub fn take(&mut self, context: impl Into<String>, r: Result<Vec<InequalityReport>>) {
        match r {
            Ok(v) => self.bundle.reports.extend(v),
            Err(e) => self.error(context, &e),
        }
    }

    pub fn error(&mut self, context: impl Into<String>, e: &Error) {
        self.bundle.errors.push(RowError {
            context: context.into(),
            error: e.to_string(),
        });
    }
}

/// Seeded random points of the generator's state space: base points within
/// intrinsic radius `radius` of the origin (uniform on compact spaces),
/// fiber coordinates standard normal.
pub(crate) fn random_points(gen: &GeneratorSpec, n: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    let layout = gen.layout();
    let geom = gen.geometry;
    let mut rng = path_rng(seed, POINT_STREAM, 0);
    let mut normal = |k: usize| -> Vec<f64> { (0..k).map(|_| StandardNormal.sample(&mut rng)).collect() };
    (0..n)
        .map(|_| {
            let base = match geom {
                Geometry::Euclidean(d) => normal(d),
                Geometry::Heisenberg => normal(3),
                Geometry::Sphere(_) => geom.project(&normal(geom.ambient_dim())),
                Geometry::Hyperboloid(d) => {
                    let dir = normal(d);
                    let u = normal(1)[0].abs().min(3.0) / 3.0;
                    let r = radius * u;
                    let n = dir.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
                    let mut v = vec![0.0];
                    v.extend(dir.iter().map(|a| r * a / n));
                    geom.exp_unchecked(&geom.origin(), &v)
                }
            };
            let mut z = base;
            z.extend(normal(layout.total() - layout.base_dim));
            z
        })
        .collect()
}

/// Norm of the base gradient of `f` at `z` in the geometry's orthonormal
/// (horizontal, on the Heisenberg group) frame; independent of `sigma`.
pub(crate) fn frame_grad_norm(geom: Geometry, f: &dyn ScalarField, z: &[f64]) -> f64 {
    let bd = geom.ambient_dim();
    let g = flat_gradient(f, z);
    geom.frame(&z[..bd])
        .iter()
        .map(|e| e.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean norm of the gradient over the coordinates in `range`.
pub(crate) fn coord_grad_norm(f: &dyn ScalarField, z: &[f64], range: std::ops::Range<usize>) -> f64 {
    let g = flat_gradient(f, z);
    g[range].iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Starting points for centered differences at steps `h` and `2h`:
/// `x` first, then `+-h` pairs per direction, then `+-2h` pairs.
pub(crate) struct Stencil {
    pub starts: Vec<Vec<f64>>,
    pub n_base: usize,
    pub n_fiber: usize,
    pub h: f64,
}

impl Stencil {
    pub fn new(gen: &GeneratorSpec, x: &[f64], h: f64, dirs: DirectionSet) -> Self {
        let (a, n_base, n_fiber) = difference_starts(gen, x, h, dirs);
        let (b, _, _) = difference_starts(gen, x, 2.0 * h, dirs);
        let mut starts = vec![x.to_vec()];
        starts.extend(a);
        starts.extend(b);
        Self {
            starts,
            n_base,
            n_fiber,
            h,
        }
    }

    pub fn dirs(&self) -> usize {
        self.n_base + self.n_fiber
    }

    /// Writes the `h` differences then the `2h` differences of `f` at time
    /// index `ti` (`2 * dirs()` values).
    pub fn differences(&self, f: &dyn ScalarField, states: &[Vec<Vec<f64>>], ti: usize, out: &mut [f64]) {
        let m = self.dirs();
        for k in 0..m {
            let (p, q) = (1 + 2 * k, 2 + 2 * k);
            out[k] = (f.eval(&states[p][ti]) - f.eval(&states[q][ti])) / (2.0 * self.h);
            let (p, q) = (1 + 2 * m + 2 * k, 2 + 2 * m + 2 * k);
            out[m + k] = (f.eval(&states[p][ti]) - f.eval(&states[q][ti])) / (4.0 * self.h);
        }
    }
}

pub(crate) fn sim_config(s: &SimSettings, t_max: f64, seed: u64, exec: crate::par::Execution) -> SimConfig {
    let mut cfg = SimConfig::with_dt(t_max, s.dt, s.n_paths, seed);
    cfg.crn = s.crn;
    cfg.exec = exec;
    cfg
}

/// `(lhs, rhs, lhs_se, rhs_se, total_se)`.
pub(crate) type Sides = (f64, f64, f64, f64, f64);

fn col_means(s: &Samples, cols: &[usize]) -> Vec<f64> {
    let n = s.n() as f64;
    cols.iter()
        .map(|j| (0..s.n()).map(|i| s.row(i)[*j]).sum::<f64>() / n)
        .collect()
}

/// Both sides of a Monte Carlo row from the column means of `cols`, with
/// delta-method standard errors. `fd` lists `(h position, 2h position)`
/// pairs (indices into `cols`) of difference quotients; their Richardson
/// bias estimate `|D_h - D_2h| / 3`, propagated linearly, is added to the
/// errors.
pub(crate) fn mc_sides<L, R>(s: &Samples, cols: &[usize], fd: &[(usize, usize)], lhs: L, rhs: R) -> Sides
where
    L: Fn(&[f64]) -> f64,
    R: Fn(&[f64]) -> f64,
{
    let (l, lse) = s.delta(cols, &lhs);
    let (r, rse) = s.delta(cols, &rhs);
    let (_, dse) = s.delta(cols, |m| rhs(m) - lhs(m));
    let m = col_means(s, cols);
    let slope = |g: &dyn Fn(&[f64]) -> f64, i: usize| {
        let mut w = m.clone();
        let h = 1e-6 * m[i].abs().max(1e-3);
        w[i] = m[i] + h;
        let up = g(&w);
        w[i] = m[i] - h;
        let dn = g(&w);
        (up - dn) / (2.0 * h)
    };
    let mut lb = 0.0;
    let mut db = 0.0;
    for &(a, b) in fd {
        let bias = (m[a] - m[b]).abs() / 3.0;
        lb += slope(&lhs, a).abs() * bias;
        db += slope(&|v: &[f64]| rhs(v) - lhs(v), a).abs() * bias;
    }
    (l, r, lse + lb, rse, dse + db)
}

pub(crate) fn mc_provenance(cfg: &SimConfig, fd_step: Option<f64>, normalization: &str) -> Provenance {
    Provenance {
        seed: Some(cfg.seed),
        stream: Some(cfg.stream),
        dt: Some(cfg.dt()),
        n_paths: Some(cfg.n_paths as u64),
        fd_step,
        normalization: Some(normalization.to_string()),
        ..Provenance::method("monte-carlo")
    }
}

/// Roundoff allowance for Monte Carlo and quadrature rows.
pub(crate) fn slack(rhs: f64) -> f64 {
    1e-8 * (1.0 + rhs.abs())
}

pub(crate) fn check_grid(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("empty {name} grid")));
    }
    if v.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Config(format!("{name} grid entries must be positive and finite")));
    }
    Ok(())
}

/// Monte Carlo run of a difference stencil at one point for a family of
/// fields and times. Column block `(ti, fj)` holds `extra` pointwise columns
/// filled from the state started at `x`, then the `h` and `2h` differences.
pub(crate) struct GradRun {
    pub stencil: Stencil,
    pub samples: Samples,
    pub cfg: SimConfig,
    pub extra: usize,
    nf: usize,
}

impl GradRun {
    #[allow(clippy::too_many_arguments)]
    pub fn new<P>(
        gen: &GeneratorSpec,
        x: &[f64],
        dirs: DirectionSet,
        sim: &SimSettings,
        times: &[f64],
        fields: &[FieldRef],
        extra: usize,
        cfg: SimConfig,
        pointwise: P,
    ) -> Result<Self>
    where
        P: Fn(&dyn ScalarField, f64, &[f64], &mut [f64]) + Sync + Send,
    {
        if !cfg.crn {
            return Err(Error::VarianceUnsafe);
        }
        let stencil = Stencil::new(gen, x, sim.fd_step, dirs);
        let nf = fields.len();
        let block = extra + 2 * stencil.dirs();
        let k = times.len() * nf * block;
        let st = &stencil;
        let samples = crate::sim::mc_collect(gen, &stencil.starts, times, &cfg, k, |states, out| {
            for (ti, &t) in times.iter().enumerate() {
                for (fj, f) in fields.iter().enumerate() {
                    let o = &mut out[(ti * nf + fj) * block..][..block];
                    pointwise(&**f, t, &states[0][ti], &mut o[..extra]);
                    st.differences(&**f, states, ti, &mut o[extra..]);
                }
            }
        })?;
        Ok(Self {
            stencil,
            samples,
            cfg,
            extra,
            nf,
        })
    }

    pub fn block(&self) -> usize {
        self.extra + 2 * self.stencil.dirs()
    }

    pub fn cols(&self, ti: usize, fj: usize) -> Vec<usize> {
        let b = self.block();
        let start = (ti * self.nf + fj) * b;
        (start..start + b).collect()
    }

    /// `(h, 2h)` position pairs inside a block.
    pub fn fd(&self) -> Vec<(usize, usize)> {
        let m = self.stencil.dirs();
        (0..m).map(|a| (self.extra + a, self.extra + m + a)).collect()
    }

    /// Positions of the `h` differences of base directions inside a block.
    pub fn base(&self) -> std::ops::Range<usize> {
        self.extra..self.extra + self.stencil.n_base
    }

    /// Positions of the `h` differences of fiber directions inside a block.
    pub fn fiber(&self) -> std::ops::Range<usize> {
        let s = self.extra + self.stencil.n_base;
        s..s + self.stencil.n_fiber
    }
}

pub(crate) fn sq_sum(m: &[f64], r: std::ops::Range<usize>) -> f64 {
    m[r].iter().map(|a| a * a).sum()
}
