//! Path simulation of base Brownian motions and their Kolmogorov lifts, and
//! Monte Carlo estimators of the lifted semigroup.
//!
//! The base moves by geodesic Euler steps `p -> exp(p, sqrt(dt) sigma sum g_i E_i(p))`
//! in an orthonormal frame (group translation by `(g_1, g_2, 0)` on the
//! Heisenberg group, which realizes the midpoint Levy-area rule); fiber
//! levels accumulate by the trapezoidal rule.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::generator::{GeneratorSpec, Lift};
use crate::geometry::Geometry;
use crate::par::{map_indexed, Execution};
use crate::stats::{Method, Samples, SemigroupEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    /// Common random numbers across starting points.
    #[serde(default = "yes")]
    pub crn: bool,
    #[serde(default)]
    pub exec: Execution,
}

fn yes() -> bool {
    true
}

impl SimConfig {
    pub fn new(t: f64, n_steps: usize, n_paths: usize, seed: u64) -> Self {
        Self {
            t,
            n_steps,
            n_paths,
            seed,
            stream: 0,
            crn: true,
            exec: Execution::default(),
        }
    }

    /// Horizon `t` split into steps of (about) `dt`.
    pub fn with_dt(t: f64, dt: f64, n_paths: usize, seed: u64) -> Self {
        Self::new(t, ((t / dt).round() as usize).max(1), n_paths, seed)
    }

    pub fn dt(&self) -> f64 {
        self.t / self.n_steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) || self.n_steps == 0 || self.n_paths == 0 {
            return Err(Error::Config(format!(
                "simulation needs t > 0, n_steps >= 1, n_paths >= 1 (t={}, n_steps={}, n_paths={})",
                self.t, self.n_steps, self.n_paths
            )));
        }
        Ok(())
    }
}

/// Generator for path `path` of stream `stream`: the key is `(seed, stream)`
/// and the ChaCha stream id is the path index, so every path is addressable
/// without coordination between workers.
pub fn path_rng(seed: u64, stream: u64, path: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path as u64);
    rng
}

/// One-step map of a (possibly lifted) base diffusion.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub geometry: Geometry,
    pub dt: f64,
    /// `sqrt(dt) * scale` per frame direction.
    step_scale: Vec<f64>,
    lift: Option<Lift>,
    pub levels: usize,
    pub base_dim: usize,
    pub fiber_dim: usize,
}

impl Stepper {
    pub fn new(gen: &GeneratorSpec, dt: f64) -> Result<Self> {
        gen.validate()?;
        let geometry = gen.geometry;
        let fd = geometry.frame_dim();
        let scales = match &gen.vector_fields {
            None => vec![gen.effective_sigma(); fd],
            Some(vf) => {
                // Only constant coordinate fields V_i = c_i d/dp_i can be
                // simulated as a scaled Brownian motion.
                let ok = vf.drift.as_ref().map_or(true, |f| {
                    f.matrix.iter().all(|a| *a == 0.0) && f.offset.iter().all(|a| *a == 0.0)
                }) && vf.fields.len() == fd
                    && vf.fields.iter().enumerate().all(|(i, f)| {
                        f.matrix.iter().all(|a| *a == 0.0)
                            && f.offset.iter().enumerate().all(|(k, a)| k == i || *a == 0.0)
                    });
                if !ok {
                    return Err(Error::UnsupportedGeometry(
                        "simulation supports constant coordinate vector fields only".into(),
                    ));
                }
                vf.fields
                    .iter()
                    .enumerate()
                    .map(|(i, f)| std::f64::consts::SQRT_2 * f.offset[i].abs())
                    .collect()
            }
        };
        Ok(Self {
            geometry,
            dt,
            step_scale: scales.iter().map(|s| s * dt.sqrt()).collect(),
            lift: Some(gen.lift.clone()),
            levels: gen.levels,
            base_dim: geometry.ambient_dim(),
            fiber_dim: gen.lift.out_dim(geometry),
        })
    }

    /// Base motion only, with diffusion scale `sigma`.
    pub fn base_only(geometry: Geometry, sigma: f64, dt: f64) -> Self {
        Self {
            geometry,
            dt,
            step_scale: vec![sigma * dt.sqrt(); geometry.frame_dim()],
            lift: None,
            levels: 0,
            base_dim: geometry.ambient_dim(),
            fiber_dim: 0,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.base_dim + self.levels * self.fiber_dim
    }

    /// `sqrt(dt) * scale` of frame direction `i`.
    pub fn step_scale(&self, i: usize) -> f64 {
        self.step_scale[i]
    }

    /// Sphere increments project an ambient Gaussian, so they draw one
    /// normal per ambient coordinate.
    pub fn noise_dim(&self) -> usize {
        match self.geometry {
            Geometry::Sphere(_) => self.base_dim,
            _ => self.step_scale.len(),
        }
    }

    /// Affine in the state: the scheme then commutes with shifts of the
    /// starting point under common noise.
    fn is_affine(&self) -> bool {
        matches!(self.geometry, Geometry::Euclidean(_))
            && matches!(
                self.lift,
                None | Some(Lift::Inclusion) | Some(Lift::Scaled { .. }) | Some(Lift::Constant { .. })
            )
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng, g: &mut [f64]) {
        for v in g.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
    }

    /// Ambient tangent increment at base point `p` for standard normals `g`.
    pub fn increment(&self, p: &[f64], g: &[f64]) -> Vec<f64> {
        match self.geometry {
            Geometry::Euclidean(_) => g.iter().zip(&self.step_scale).map(|(a, s)| a * s).collect(),
            // (I - p p^T) g is a standard Gaussian on the tangent space and,
            // unlike any global frame, smooth in p.
            Geometry::Sphere(_) => {
                let s = self.step_scale[0];
                let c: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
                p.iter().zip(g).map(|(a, b)| s * (b - c * a)).collect()
            }
            _ => {
                let frame = self.geometry.frame(p);
                let mut v = vec![0.0; p.len()];
                for ((e, a), s) in frame.iter().zip(g).zip(&self.step_scale) {
                    for (vk, ek) in v.iter_mut().zip(e) {
                        *vk += a * s * ek;
                    }
                }
                v
            }
        }
    }

    /// Moves the base of `z` by the tangent increment `v` and updates the
    /// fiber levels.
    pub fn apply(&self, z: &mut [f64], v: &[f64]) {
        self.apply_with(z, v, &mut Scratch::new(self));
    }

    fn apply_with(&self, z: &mut [f64], v: &[f64], s: &mut Scratch) {
        if let Some(c) = self.coordinatewise() {
            self.apply_coordinatewise(z, v, c);
            return;
        }
        let bd = self.base_dim;
        s.old_base.copy_from_slice(&z[..bd]);
        match self.geometry {
            Geometry::Euclidean(_) => z[..bd].iter_mut().zip(v).for_each(|(a, b)| *a += b),
            g => z[..bd].copy_from_slice(&g.exp_unchecked(&s.old_base, v)),
        }
        if self.levels == 0 {
            return;
        }
        let lift = self.lift.as_ref().expect("lifted stepper");
        lift.value_into(&s.old_base, &mut s.lower_old);
        lift.value_into(&z[..bd], &mut s.lower_new);
        let h = 0.5 * self.dt;
        let fd = self.fiber_dim;
        for r in 0..self.levels {
            let start = bd + r * fd;
            let level = &mut z[start..start + fd];
            s.prev.copy_from_slice(level);
            for j in 0..fd {
                level[j] += h * (s.lower_old[j] + s.lower_new[j]);
            }
            s.lower_new.copy_from_slice(level);
            std::mem::swap(&mut s.lower_old, &mut s.prev);
        }
    }

    /// Flat base with a lift acting coordinate by coordinate: each axis and
    /// its fiber levels evolve independently.
    fn coordinatewise(&self) -> Option<fn(f64, f64) -> f64> {
        if !matches!(self.geometry, Geometry::Euclidean(_)) || self.levels == 0 {
            return None;
        }
        match self.lift {
            Some(Lift::Inclusion) => Some(|_, p| p),
            Some(Lift::Scaled { .. }) => Some(|c, p| c * p),
            Some(Lift::Sine) => Some(|_, p| p.sin()),
            _ => None,
        }
    }

    fn apply_coordinatewise(&self, z: &mut [f64], v: &[f64], c: fn(f64, f64) -> f64) {
        let scale = match self.lift {
            Some(Lift::Scaled { scale }) => scale,
            _ => 1.0,
        };
        let (bd, h) = (self.base_dim, 0.5 * self.dt);
        for j in 0..bd {
            let old = z[j];
            z[j] += v[j];
            let (mut lo, mut ln) = (c(scale, old), c(scale, z[j]));
            for r in 0..self.levels {
                let k = bd + r * bd + j;
                let prev = z[k];
                z[k] += h * (lo + ln);
                lo = prev;
                ln = z[k];
            }
        }
    }

    pub fn step(&self, z: &mut [f64], rng: &mut ChaCha8Rng, g: &mut [f64]) {
        self.step_with(z, rng, g, &mut Scratch::new(self));
    }

    fn step_with(&self, z: &mut [f64], rng: &mut ChaCha8Rng, g: &mut [f64], s: &mut Scratch) {
        self.draw(rng, g);
        match self.geometry {
            Geometry::Euclidean(_) => {
                let mut v = std::mem::take(&mut s.v);
                v.iter_mut()
                    .zip(g.iter().zip(&self.step_scale))
                    .for_each(|(vi, (a, sc))| *vi = a * sc);
                self.apply_with(z, &v, s);
                s.v = v;
            }
            _ => {
                let v = self.increment(&z[..self.base_dim], g);
                self.apply_with(z, &v, s);
            }
        }
    }

    /// Runs `n` steps from `z` and returns the states after `marks[k]` steps
    /// (marks need not be sorted; a mark of 0 returns the start).
    pub fn run_marked(&self, z0: &[f64], marks: &[usize], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); marks.len()];
        let last = marks.iter().copied().max().unwrap_or(0);
        let mut z = z0.to_vec();
        let mut g = vec![0.0; self.noise_dim()];
        let mut scratch = Scratch::new(self);
        for (k, m) in marks.iter().enumerate() {
            if *m == 0 {
                out[k] = z.clone();
            }
        }
        for s in 1..=last {
            self.step_with(&mut z, rng, &mut g, &mut scratch);
            for (k, m) in marks.iter().enumerate() {
                if *m == s {
                    out[k] = z.clone();
                }
            }
        }
        out
    }

    /// Same as [`run_marked`](Self::run_marked) with zero noise.
    fn run_deterministic(&self, z0: &[f64], marks: &[usize]) -> Vec<Vec<f64>> {
        let last = marks.iter().copied().max().unwrap_or(0);
        let mut z = z0.to_vec();
        let zero = vec![0.0; self.base_dim];
        let mut out = vec![Vec::new(); marks.len()];
        for s in 0..=last {
            if s > 0 {
                self.apply(&mut z, &zero);
            }
            for (k, m) in marks.iter().enumerate() {
                if *m == s {
                    out[k] = z.clone();
                }
            }
        }
        out
    }
}

/// Reusable buffers for one stepping loop.
struct Scratch {
    v: Vec<f64>,
    old_base: Vec<f64>,
    lower_old: Vec<f64>,
    lower_new: Vec<f64>,
    prev: Vec<f64>,
}

impl Scratch {
    fn new(st: &Stepper) -> Self {
        Self {
            v: vec![0.0; st.base_dim],
            old_base: vec![0.0; st.base_dim],
            lower_old: vec![0.0; st.fiber_dim],
            lower_new: vec![0.0; st.fiber_dim],
            prev: vec![0.0; st.fiber_dim],
        }
    }
}

/// Recorded trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Path {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("non-empty path")
    }

    /// Columnar CSV: `step,t,z0,z1,...`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let dim = self.states.first().map_or(0, |s| s.len());
        let mut header = vec!["step".to_string(), "t".to_string()];
        header.extend((0..dim).map(|i| format!("z{i}")));
        wr.write_record(&header)?;
        for (k, (t, s)) in self.times.iter().zip(&self.states).enumerate() {
            let mut rec = vec![k.to_string(), format!("{t}")];
            rec.extend(s.iter().map(|v| format!("{v}")));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn record(stepper: &Stepper, z0: &[f64], cfg: &SimConfig, path: usize) -> Path {
    let mut rng = path_rng(cfg.seed, cfg.stream, path);
    let mut z = z0.to_vec();
    let mut g = vec![0.0; stepper.noise_dim()];
    let mut times = vec![0.0];
    let mut states = vec![z.clone()];
    for k in 1..=cfg.n_steps {
        stepper.step(&mut z, &mut rng, &mut g);
        times.push(k as f64 * stepper.dt);
        states.push(z.clone());
    }
    Path { times, states }
}

fn check_on(geometry: Geometry, p: &[f64]) -> Result<()> {
    if p.len() != geometry.ambient_dim() {
        return Err(Error::InvalidArgument(format!(
            "{} point needs {} coordinates, got {}",
            geometry,
            geometry.ambient_dim(),
            p.len()
        )));
    }
    let r = geometry.constraint_residual(p);
    if r > 1e-8 {
        return Err(Error::InvalidArgument(format!("point is off {geometry} (residual {r:e})")));
    }
    Ok(())
}

/// Brownian path on `geometry` with generator `(sigma^2/2) Delta`.
pub fn simulate_bm(geometry: Geometry, sigma: f64, x0: &[f64], cfg: &SimConfig, path: usize) -> Result<Path> {
    cfg.validate()?;
    check_on(geometry, x0)?;
    Ok(record(&Stepper::base_only(geometry, sigma, cfg.dt()), x0, cfg, path))
}

/// Lifted path from the flat state `x0 = (p, xi_1, ..., xi_n)`.
pub fn simulate_lift(gen: &GeneratorSpec, x0: &[f64], cfg: &SimConfig, path: usize) -> Result<Path> {
    cfg.validate()?;
    let st = Stepper::new(gen, cfg.dt())?;
    check_state(&st, x0)?;
    Ok(record(&st, x0, cfg, path))
}

/// Heisenberg Brownian motion `p0 * (B_1, B_2, Levy area)` with generator
/// `(1/2)(X^2 + Y^2)`.
pub fn simulate_heisenberg_bm(p0: &[f64], cfg: &SimConfig, path: usize) -> Result<Path> {
    simulate_bm(Geometry::Heisenberg, 1.0, p0, cfg, path)
}

fn check_state(st: &Stepper, x: &[f64]) -> Result<()> {
    if x.len() != st.state_dim() {
        return Err(Error::InvalidArgument(format!(
            "state needs {} coordinates, got {}",
            st.state_dim(),
            x.len()
        )));
    }
    check_on(st.geometry, &x[..st.base_dim])
}

fn marks_for(times: &[f64], dt: f64) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            let m = (t / dt).round();
            if t < 0.0 || (m * dt - t).abs() > 1e-9 * t.max(1.0) {
                Err(Error::Config(format!("time {t} is not a multiple of dt = {dt}")))
            } else {
                Ok(m as usize)
            }
        })
        .collect()
}

/// Simulates every start in `starts` to every time in `times` (multiples of
/// `cfg.dt()`) and reduces each path to `k` numbers with `per_path`, which
/// receives `states[start][time]`. Under common random numbers all starts of
/// a path see the same noise.
pub fn mc_collect<F>(
    gen: &GeneratorSpec,
    starts: &[Vec<f64>],
    times: &[f64],
    cfg: &SimConfig,
    k: usize,
    per_path: F,
) -> Result<Samples>
where
    F: Fn(&[Vec<Vec<f64>>], &mut [f64]) + Sync + Send,
{
    cfg.validate()?;
    let st = Stepper::new(gen, cfg.dt())?;
    for s in starts {
        check_state(&st, s)?;
    }
    let marks = marks_for(times, st.dt)?;
    let affine = cfg.crn && st.is_affine();
    // z(x, noise) = z(x, 0) + z(0, noise) - z(0, 0) for affine schemes.
    let zero = vec![0.0; st.state_dim()];
    let det: Vec<Vec<Vec<f64>>> = if affine {
        starts.iter().map(|s| st.run_deterministic(s, &marks)).collect()
    } else {
        Vec::new()
    };
    let det0 = if affine { st.run_deterministic(&zero, &marks) } else { Vec::new() };
    let rows = map_indexed(cfg.exec, cfg.n_paths, |i| {
        let states: Vec<Vec<Vec<f64>>> = if affine {
            let noise = st.run_marked(&zero, &marks, &mut path_rng(cfg.seed, cfg.stream, i));
            det.iter()
                .map(|d| {
                    d.iter()
                        .zip(&noise)
                        .zip(&det0)
                        .map(|((a, b), c)| a.iter().zip(b).zip(c).map(|((a, b), c)| a + (b - c)).collect())
                        .collect()
                })
                .collect()
        } else {
            starts
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    let stream = if cfg.crn {
                        cfg.stream
                    } else {
                        cfg.stream.wrapping_add((j as u64 + 1) << 32)
                    };
                    st.run_marked(s, &marks, &mut path_rng(cfg.seed, stream, i))
                })
                .collect()
        };
        let mut out = vec![0.0; k];
        per_path(&states, &mut out);
        out
    });
    Ok(Samples::from_rows(k, rows))
}

/// Monte Carlo `P_t f (x)` at `t = cfg.t`.
pub fn mc_semigroup(gen: &GeneratorSpec, f: &dyn ScalarField, x: &[f64], cfg: &SimConfig) -> Result<SemigroupEstimate> {
    let s = mc_collect(gen, &[x.to_vec()], &[cfg.t], cfg, 1, |st, out| out[0] = f.eval(&st[0][0]))?;
    Ok(SemigroupEstimate {
        value: s.mean(0),
        se: s.se(0),
        n: s.n(),
        method: Method::MonteCarlo,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionSet {
    /// Orthonormal base frame (horizontal frame on the Heisenberg group).
    Base,
    /// Fiber coordinates.
    Fiber,
    All,
}

/// Perturbed starting points for centered differences of `x -> P_t f(x)`:
/// returns `(starts, n_base, n_fiber)` with `starts[2k]`, `starts[2k+1]` the
/// `+h`, `-h` points of direction `k`.
pub fn difference_starts(gen: &GeneratorSpec, x: &[f64], h: f64, dirs: DirectionSet) -> (Vec<Vec<f64>>, usize, usize) {
    let geom = gen.geometry;
    let bd = geom.ambient_dim();
    let mut starts = Vec::new();
    let mut nb = 0;
    if dirs != DirectionSet::Fiber {
        for e in geom.frame(&x[..bd]) {
            for sgn in [1.0, -1.0] {
                let v: Vec<f64> = e.iter().map(|c| sgn * h * c).collect();
                let mut z = x.to_vec();
                z[..bd].copy_from_slice(&geom.exp_unchecked(&x[..bd], &v));
                starts.push(z);
            }
            nb += 1;
        }
    }
    let mut nf = 0;
    if dirs != DirectionSet::Base {
        for j in bd..x.len() {
            for sgn in [1.0, -1.0] {
                let mut z = x.to_vec();
                z[j] += sgn * h;
                starts.push(z);
            }
            nf += 1;
        }
    }
    (starts, nb, nf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub components: Vec<f64>,
    pub component_se: Vec<f64>,
    pub n_base: usize,
    pub norm: SemigroupEstimate,
}

/// Centered-difference gradient of `x -> P_t f(x)` along `dirs`; requires
/// common random numbers.
pub fn mc_gradient(
    gen: &GeneratorSpec,
    f: &dyn ScalarField,
    x: &[f64],
    dirs: DirectionSet,
    h: f64,
    cfg: &SimConfig,
) -> Result<GradientEstimate> {
    if !cfg.crn {
        return Err(Error::VarianceUnsafe);
    }
    mc_gradient_any_noise(gen, f, x, dirs, h, cfg)
}

/// [`mc_gradient`] without the common-noise guard; used to measure what the
/// guard protects against.
pub fn mc_gradient_any_noise(
    gen: &GeneratorSpec,
    f: &dyn ScalarField,
    x: &[f64],
    dirs: DirectionSet,
    h: f64,
    cfg: &SimConfig,
) -> Result<GradientEstimate> {
    let (starts, nb, nf) = difference_starts(gen, x, h, dirs);
    let m = nb + nf;
    let s = mc_collect(gen, &starts, &[cfg.t], cfg, m, |st, out| {
        for (k, o) in out.iter_mut().enumerate() {
            *o = (f.eval(&st[2 * k][0]) - f.eval(&st[2 * k + 1][0])) / (2.0 * h);
        }
    })?;
    let components = s.means();
    let component_se = (0..m).map(|k| s.se(k)).collect();
    let nrm = components.iter().map(|c| c * c).sum::<f64>().sqrt();
    let se = if nrm > 0.0 {
        let c: Vec<f64> = components.iter().map(|g| g / nrm).collect();
        s.linear(&c).1
    } else {
        (0..m).map(|k| s.se(k).powi(2)).sum::<f64>().sqrt()
    };
    Ok(GradientEstimate {
        components,
        component_se,
        n_base: nb,
        norm: SemigroupEstimate {
            value: nrm,
            se,
            n: s.n(),
            method: Method::MonteCarlo,
        },
    })
}

/// Norm of the Monte Carlo gradient along `dirs`.
pub fn mc_gradient_norm(
    gen: &GeneratorSpec,
    f: &dyn ScalarField,
    x: &[f64],
    dirs: DirectionSet,
    h: f64,
    cfg: &SimConfig,
) -> Result<SemigroupEstimate> {
    Ok(mc_gradient(gen, f, x, dirs, h, cfg)?.norm)
}
