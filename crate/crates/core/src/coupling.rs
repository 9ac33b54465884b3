//! Synchronous and parallel-transport couplings of base diffusions and their
//! lifts, with the contraction and fiber bounds they are measured against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::GeneratorSpec;
use crate::geometry::Geometry;
use crate::par::map_indexed;
use crate::point::norm;
use crate::quadrature::integrate;
use crate::report::{ContractionReport, Verdict};
use crate::sim::{path_rng, SimConfig, Stepper};

/// Base contraction factor `e^{-K t / 2}`.
pub fn base_bound(k: f64, t: f64) -> f64 {
    (-0.5 * k * t).exp()
}

/// `K_1(t) = C_sigma t` for `K = 0`, else `C_sigma (1 - e^{-K t/2}) / (K/2)`.
pub fn k1(k: f64, c_sigma: f64, t: f64) -> f64 {
    if k == 0.0 {
        c_sigma * t
    } else {
        // expm1 keeps small K t accurate
        -c_sigma * (-0.5 * k * t).exp_m1() / (0.5 * k)
    }
}

/// Fiber coefficient of the one-level bound; equal to [`k1`].
pub fn k2(k: f64, c_sigma: f64, t: f64) -> f64 {
    k1(k, c_sigma, t)
}

/// `K_1(t), ..., K_n(t)`: closed form `C_sigma t^r / r!` when `K = 0`,
/// otherwise the integral recursion.
pub fn iterated_fiber_bounds(n: usize, k: f64, c_sigma: f64, t: f64) -> Vec<f64> {
    if k == 0.0 {
        let mut out = Vec::with_capacity(n);
        let mut term = c_sigma;
        for r in 1..=n {
            term *= t / r as f64;
            out.push(term);
        }
        out
    } else {
        iterated_fiber_bounds_recursive(n, k, c_sigma, t)
    }
}

/// `K_r(t) = int_0^t K_{r-1}(s) ds` by nested adaptive Gauss-Kronrod, for
/// any `K` (including 0, as a check on the closed form).
pub fn iterated_fiber_bounds_recursive(n: usize, k: f64, c_sigma: f64, t: f64) -> Vec<f64> {
    fn kr(r: usize, k: f64, c: f64, t: f64) -> f64 {
        if r == 1 {
            k1(k, c, t)
        } else if t == 0.0 {
            0.0
        } else {
            integrate(|s| kr(r - 1, k, c, s), 0.0, t, 1e-14 * (1.0 + t.abs()))
        }
    }
    (1..=n).map(|r| kr(r, k, c_sigma, t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingKind {
    /// Identical increments (Euclidean base).
    Synchronous,
    /// Second increment is the parallel transport of the first along the
    /// connecting minimal geodesic.
    Parallel,
}

/// One coupled pair of lifted paths.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPaths {
    pub times: Vec<f64>,
    pub base_dist: Vec<f64>,
    /// Per step, the Euclidean fiber distance at each level.
    pub fiber_dist: Vec<Vec<f64>>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    /// Set when the pair approached the cut locus; the record stops there.
    pub aborted: bool,
}

fn fiber_distances(st: &Stepper, a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..st.levels)
        .map(|r| {
            let s = st.base_dim + r * st.fiber_dim;
            norm(&a[s..s + st.fiber_dim].iter().zip(&b[s..s + st.fiber_dim]).map(|(u, v)| u - v).collect::<Vec<_>>())
        })
        .collect()
}

/// Drives the pair `(x, y)` for `n_steps`, calling `visit(step, a, b)` after
/// every step (and at step 0). Returns `false` on a cut-locus abort.
fn drive<F: FnMut(usize, &[f64], &[f64])>(
    st: &Stepper,
    kind: CouplingKind,
    law: IncrementLaw,
    x: &[f64],
    y: &[f64],
    n_steps: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
    mut visit: F,
) -> bool {
    let bd = st.base_dim;
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    let mut g = vec![0.0; st.noise_dim()];
    visit(0, &a, &b);
    for k in 1..=n_steps {
        st.draw(rng, &mut g);
        let v = match law {
            IncrementLaw::Gaussian => st.increment(&a[..bd], &g),
            IncrementLaw::PairAdapted => adapted_increment(st, &a[..bd], &b[..bd], &g, rng),
        };
        let w = match kind {
            CouplingKind::Synchronous => v.clone(),
            CouplingKind::Parallel => match st.geometry.transport(&a[..bd], &b[..bd], &v) {
                Ok(w) => w,
                Err(_) => return false,
            },
        };
        st.apply(&mut a, &v);
        st.apply(&mut b, &w);
        visit(k, &a, &b);
    }
    true
}

/// Law of the driving increments of a coupled pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncrementLaw {
    /// Standard Gaussian in the walker's orthonormal frame.
    #[default]
    Gaussian,
    /// Gaussian along the geodesic to the partner, independent random signs
    /// in the perpendicular directions. Same first three moments, so the
    /// same weak order, but the perpendicular energy per step is exact.
    PairAdapted,
}

fn adapted_increment(st: &Stepper, a: &[f64], b: &[f64], g: &[f64], rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    use rand::Rng;
    let geom = st.geometry;
    let Ok(w) = geom.log(a, b) else {
        return st.increment(a, g);
    };
    let n = geom.tangent_norm(a, &w);
    if n == 0.0 {
        return st.increment(a, g);
    }
    let dim = geom.frame_dim();
    let mut basis = vec![w.iter().map(|x| x / n).collect::<Vec<f64>>()];
    for e in geom.frame(a) {
        if basis.len() == dim {
            break;
        }
        let mut u = e;
        for q in &basis {
            let c = geom.inner(a, &u, q);
            u.iter_mut().zip(q).for_each(|(ui, qi)| *ui -= c * qi);
        }
        let m = geom.tangent_norm(a, &u);
        if m > 1e-6 {
            basis.push(u.iter().map(|x| x / m).collect());
        }
    }
    let mut v = vec![0.0; a.len()];
    for (i, q) in basis.iter().enumerate() {
        let c = if i == 0 {
            g[0]
        } else if rng.gen::<bool>() {
            1.0
        } else {
            -1.0
        };
        let s = st.step_scale(i) * c;
        v.iter_mut().zip(q).for_each(|(vk, qk)| *vk += s * qk);
    }
    v
}

fn check_kind(geometry: Geometry, kind: CouplingKind) -> Result<()> {
    match (geometry, kind) {
        (Geometry::Heisenberg, _) => Err(Error::UnsupportedGeometry(
            "Markovian couplings are not provided on the Heisenberg group".into(),
        )),
        (Geometry::Euclidean(_), _) | (_, CouplingKind::Parallel) => Ok(()),
        (g, CouplingKind::Synchronous) => Err(Error::UnsupportedGeometry(format!(
            "synchronous coupling needs a flat base, got {g}"
        ))),
    }
}

/// Records the coupled pair started at the lifted states `x`, `y`.
pub fn coupled_paths(
    gen: &GeneratorSpec,
    kind: CouplingKind,
    x: &[f64],
    y: &[f64],
    cfg: &SimConfig,
    path: usize,
) -> Result<CoupledPaths> {
    cfg.validate()?;
    check_kind(gen.geometry, kind)?;
    let st = Stepper::new(gen, cfg.dt())?;
    let geom = st.geometry;
    let bd = st.base_dim;
    let mut out = CoupledPaths {
        times: Vec::new(),
        base_dist: Vec::new(),
        fiber_dist: Vec::new(),
        first: Vec::new(),
        second: Vec::new(),
        aborted: false,
    };
    let mut rng = path_rng(cfg.seed, cfg.stream, path);
    let ok = drive(&st, kind, IncrementLaw::Gaussian, x, y, cfg.n_steps, &mut rng, |k, a, b| {
        out.times.push(k as f64 * st.dt);
        out.base_dist.push(geom.dist(&a[..bd], &b[..bd]).unwrap_or(f64::NAN));
        out.fiber_dist.push(fiber_distances(&st, a, b));
        out.first = a.to_vec();
        out.second = b.to_vec();
    });
    out.aborted = !ok;
    Ok(out)
}

/// Synchronous coupling on `R^d` from `(p, xi)` and `(p~, xi)`.
pub fn synchronous_coupling_flat(
    gen: &GeneratorSpec,
    p: &[f64],
    p2: &[f64],
    xi: &[f64],
    cfg: &SimConfig,
    path: usize,
) -> Result<CoupledPaths> {
    let x = [p, xi].concat();
    let y = [p2, xi].concat();
    coupled_paths(gen, CouplingKind::Synchronous, &x, &y, cfg, path)
}

/// Parallel-transport coupling from base points `p`, `p~` with zero fibers.
pub fn parallel_coupling(gen: &GeneratorSpec, p: &[f64], p2: &[f64], cfg: &SimConfig, path: usize) -> Result<CoupledPaths> {
    let layout = gen.layout();
    let zeros = vec![0.0; layout.total() - layout.base_dim];
    let x = [p, &zeros].concat();
    let y = [p2, &zeros].concat();
    coupled_paths(gen, CouplingKind::Parallel, &x, &y, cfg, path)
}

/// Largest relative overshoot of the coupled pair over the bound curves,
/// `max_t (ratio(t) / bound(t) - 1)`, for base and first-level fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overshoot {
    pub base: f64,
    pub fiber: f64,
}

/// Pathwise base and fiber ratios against the bounds for one pair, in the
/// form checked by [`contraction_study`].
pub fn coupled_lift_fiber_bound(
    gen: &GeneratorSpec,
    coupled: &CoupledPaths,
) -> Result<Overshoot> {
    let k = ricci_or_err(gen)?;
    let d0 = coupled.base_dist[0];
    let mut o = Overshoot {
        base: f64::NEG_INFINITY,
        fiber: f64::NEG_INFINITY,
    };
    for (i, t) in coupled.times.iter().enumerate() {
        let br = coupled.base_dist[i] / d0;
        o.base = o.base.max(br / base_bound(k, *t) - 1.0);
        if *t > 0.0 {
            let fr = coupled.fiber_dist[i].first().copied().unwrap_or(0.0) / d0;
            o.fiber = o.fiber.max(fr / k2(k, gen.c_sigma, *t) - 1.0);
        }
    }
    Ok(o)
}

fn ricci_or_err(gen: &GeneratorSpec) -> Result<f64> {
    gen.ricci()
        .ok_or_else(|| Error::UnsupportedGeometry(format!("{} has no Ricci lower bound", gen.geometry)))
}

/// Ensemble statistics of one coupling run at one step size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub dt: f64,
    /// Max over paths and steps of `ratio / bound - 1` (base).
    pub base_overshoot: f64,
    pub fiber_overshoot: f64,
    pub abort_fraction: f64,
}

struct Ensemble {
    level: RefinementLevel,
    base_ratio_max: Vec<f64>,
    fiber_ratio_max: Vec<f64>,
    fiber_levels_max: Vec<Vec<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn run_ensemble(
    gen: &GeneratorSpec,
    kind: CouplingKind,
    law: IncrementLaw,
    x: &[f64],
    y: &[f64],
    t: f64,
    dt: f64,
    cfg: &SimConfig,
    display: &[f64],
) -> Result<Ensemble> {
    let k = ricci_or_err(gen)?;
    let st = Stepper::new(gen, dt)?;
    let n_steps = ((t / dt).round() as usize).max(1);
    let geom = st.geometry;
    let bd = st.base_dim;
    let d0 = geom.dist(&x[..bd], &y[..bd])?;
    if !(d0 > 0.0) {
        return Err(Error::InvalidArgument("coupled base points must differ".into()));
    }
    let marks: Vec<usize> = display.iter().map(|s| (s / dt).round() as usize).collect();
    struct PathOut {
        ok: bool,
        base_over: f64,
        fiber_over: f64,
        base_at: Vec<f64>,
        fiber_at: Vec<Vec<f64>>,
    }
    let outs = map_indexed(cfg.exec, cfg.n_paths, |i| {
        let mut rng = path_rng(cfg.seed, cfg.stream, i);
        let mut po = PathOut {
            ok: true,
            base_over: f64::NEG_INFINITY,
            fiber_over: f64::NEG_INFINITY,
            base_at: vec![f64::NAN; marks.len()],
            fiber_at: vec![Vec::new(); marks.len()],
        };
        let ok = drive(&st, kind, law, x, y, n_steps, &mut rng, |s, a, b| {
            let tt = s as f64 * dt;
            let br = geom.dist(&a[..bd], &b[..bd]).unwrap_or(f64::NAN) / d0;
            po.base_over = po.base_over.max(br / base_bound(k, tt) - 1.0);
            let fd = fiber_distances(&st, a, b);
            if s > 0 {
                if let Some(f1) = fd.first() {
                    po.fiber_over = po.fiber_over.max(f1 / d0 / k2(k, gen.c_sigma, tt) - 1.0);
                }
            }
            for (m, mk) in marks.iter().enumerate() {
                if *mk == s {
                    po.base_at[m] = br;
                    po.fiber_at[m] = fd.iter().map(|v| v / d0).collect();
                }
            }
        });
        po.ok = ok;
        po
    });
    let n_ok = outs.iter().filter(|o| o.ok).count();
    let mut e = Ensemble {
        level: RefinementLevel {
            dt,
            base_overshoot: f64::NEG_INFINITY,
            fiber_overshoot: f64::NEG_INFINITY,
            abort_fraction: 1.0 - n_ok as f64 / cfg.n_paths as f64,
        },
        base_ratio_max: vec![f64::NEG_INFINITY; marks.len()],
        fiber_ratio_max: vec![f64::NEG_INFINITY; marks.len()],
        fiber_levels_max: vec![vec![f64::NEG_INFINITY; st.levels]; marks.len()],
    };
    for o in outs.iter().filter(|o| o.ok) {
        e.level.base_overshoot = e.level.base_overshoot.max(o.base_over);
        e.level.fiber_overshoot = e.level.fiber_overshoot.max(o.fiber_over);
        for m in 0..marks.len() {
            e.base_ratio_max[m] = e.base_ratio_max[m].max(o.base_at[m]);
            if let Some(f1) = o.fiber_at[m].first() {
                e.fiber_ratio_max[m] = e.fiber_ratio_max[m].max(*f1);
            }
            for (r, v) in o.fiber_at[m].iter().enumerate() {
                e.fiber_levels_max[m][r] = e.fiber_levels_max[m][r].max(*v);
            }
        }
    }
    Ok(e)
}

/// Discretization margin `eps(dt) = C sqrt(dt)`, with `C` the largest
/// `overshoot / sqrt(dt)` seen on the two coarser refinement levels.
pub fn calibrate_epsilon(coarse: &[(f64, f64)], dt: f64) -> f64 {
    let c = coarse
        .iter()
        .map(|(h, o)| o.max(0.0) / h.sqrt())
        .fold(0.0, f64::max);
    c * dt.sqrt()
}

/// Contraction study from base points `p`, `p~` (zero fibers): runs the
/// coupling at `dt`, `2 dt`, `4 dt`, calibrates `eps_dt` on the two coarse
/// levels and checks the finest level against `bound (1 + eps_dt)`.
pub fn contraction_study(
    gen: &GeneratorSpec,
    kind: CouplingKind,
    law: IncrementLaw,
    p: &[f64],
    p2: &[f64],
    cfg: &SimConfig,
    display: &[f64],
) -> Result<ContractionReport> {
    cfg.validate()?;
    check_kind(gen.geometry, kind)?;
    let k = ricci_or_err(gen)?;
    let layout = gen.layout();
    let zeros = vec![0.0; layout.total() - layout.base_dim];
    let x = [p, &zeros].concat();
    let y = [p2, &zeros].concat();
    let dt = cfg.dt();
    let fine = run_ensemble(gen, kind, law, &x, &y, cfg.t, dt, cfg, display)?;
    let mut levels = vec![fine.level.clone()];
    for m in [2.0, 4.0] {
        levels.push(run_ensemble(gen, kind, law, &x, &y, cfg.t, m * dt, cfg, &[])?.level);
    }
    let eps_base = calibrate_epsilon(&[(levels[1].dt, levels[1].base_overshoot), (levels[2].dt, levels[2].base_overshoot)], dt);
    let eps_fiber = calibrate_epsilon(&[(levels[1].dt, levels[1].fiber_overshoot), (levels[2].dt, levels[2].fiber_overshoot)], dt);
    let exact_flat = matches!(gen.geometry, Geometry::Euclidean(_));
    let judge = |over: f64, eps: f64| {
        let tol = if exact_flat { eps.max(1e-12) } else { eps };
        if fine.level.abort_fraction > 0.01 {
            Verdict::Inconclusive
        } else if over <= tol {
            Verdict::Verified
        } else {
            Verdict::Violated
        }
    };
    let d0 = gen.geometry.dist(p, p2)?;
    Ok(ContractionReport {
        geometry: gen.geometry.id(),
        initial_distance: d0,
        times: display.to_vec(),
        base_ratio_max: fine.base_ratio_max.clone(),
        base_bound: display.iter().map(|t| base_bound(k, *t)).collect(),
        fiber_ratio_max: fine.fiber_ratio_max.clone(),
        fiber_bound: display.iter().map(|t| k2(k, gen.c_sigma, *t)).collect(),
        fiber_levels_max: fine.fiber_levels_max.clone(),
        epsilon_dt: eps_base,
        epsilon_fiber: eps_fiber,
        refinement: levels.clone(),
        increment_law: law,
        dt,
        n_paths: cfg.n_paths as u64,
        abort_fraction: fine.level.abort_fraction,
        verdict: judge(fine.level.base_overshoot, eps_base),
        fiber_verdict: judge(fine.level.fiber_overshoot, eps_fiber),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_constants() {
        assert_eq!(k2(0.0, 1.0, 1.0), 1.0);
        assert!((k2(2.0, 1.0, 1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(k2(2.0, 1.0, 0.0), 0.0);
        let v = iterated_fiber_bounds(3, 0.0, 1.0, 2.0);
        assert_eq!(v, vec![2.0, 2.0, 4.0 / 3.0]);
        assert!(iterated_fiber_bounds(3, -1.0, 1.0, 0.0).iter().all(|v| *v == 0.0));
        let w = iterated_fiber_bounds(2, 2.0, 1.0, 1.0);
        assert!((w[0] - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!((w[1] - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn recursion_matches_closed_form() {
        for t in [0.3, 1.0, 2.5] {
            let a = iterated_fiber_bounds(4, 0.0, 1.3, t);
            let b = iterated_fiber_bounds_recursive(4, 0.0, 1.3, t);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn synchronous_flat_distances() {
        let gen = GeneratorSpec::flat_kolmogorov(1, 1.0);
        let cfg = SimConfig::new(2.0, 200, 1, 3);
        let c = synchronous_coupling_flat(&gen, &[0.0], &[1.0], &[0.5], &cfg, 0).unwrap();
        for (i, t) in c.times.iter().enumerate() {
            assert!((c.base_dist[i] - 1.0).abs() < 1e-12);
            assert!((c.fiber_dist[i][0] - t).abs() < 1e-12);
        }
        assert!((c.fiber_dist.last().unwrap()[0] - 2.0).abs() < 1e-12);
        let same = synchronous_coupling_flat(&gen, &[0.2], &[0.2], &[0.0], &cfg, 0).unwrap();
        assert!(same.base_dist.iter().chain(same.fiber_dist.iter().flatten()).all(|v| *v == 0.0));
    }

    #[test]
    fn parallel_coupling_on_flat_space_is_synchronous() {
        let gen = GeneratorSpec::flat_kolmogorov(2, 1.0);
        let cfg = SimConfig::new(1.0, 100, 1, 3);
        let c = parallel_coupling(&gen, &[0.0, 0.0], &[0.3, 0.4], &cfg, 0).unwrap();
        assert!(c.base_dist.iter().all(|d| (d - 0.5).abs() < 1e-12));
    }

    #[test]
    fn heisenberg_has_no_markov_coupling() {
        let gen = GeneratorSpec::heisenberg(1.0);
        let cfg = SimConfig::new(1.0, 10, 1, 3);
        assert!(parallel_coupling(&gen, &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &cfg, 0).is_err());
    }

    #[test]
    fn pair_adapted_law_removes_radial_noise() {
        let gen = GeneratorSpec::sphere_lift(2, 1.0);
        let cfg = SimConfig::with_dt(0.5, 1e-2, 200, 11);
        let p = [1.0, 0.0, 0.0];
        let q = [0.5f64.cos(), 0.5f64.sin(), 0.0];
        let r = contraction_study(&gen, CouplingKind::Parallel, IncrementLaw::PairAdapted, &p, &q, &cfg, &[0.5]).unwrap();
        let g = contraction_study(&gen, CouplingKind::Parallel, IncrementLaw::Gaussian, &p, &q, &cfg, &[0.5]).unwrap();
        let (a, b) = (r.refinement[0].base_overshoot, g.refinement[0].base_overshoot);
        assert!(a < 1e-3 && 100.0 * a < b, "{a} vs {b}");
        // faster than order one half
        assert!(r.refinement_shrink().unwrap().iter().all(|s| *s > 2.0));
    }
}
