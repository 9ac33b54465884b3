//! Pointwise Gamma-calculus: the generator, carre du champ operators and
//! their iterates, plus the pointwise curvature checks built on them.
//!
//! Base derivatives are taken along curves that stay on the base space:
//! geodesics through the point for Riemannian bases, group translates for
//! the Heisenberg group, and second-order flow approximations for explicit
//! affine vector fields. Summing second derivatives along geodesics in an
//! orthonormal frame gives the Laplace-Beltrami operator without
//! Christoffel symbols.

use crate::error::{Error, Result};
use crate::field::{FieldClasses, FnField, ScalarField, Smoothness};
use crate::generator::{GammaParams, GeneratorSpec};
use crate::geometry::{minkowski, Geometry};
use crate::point::{dot, norm};
use crate::report::{InequalityReport, Provenance, Row, VerdictRule};

/// Below this polar radius the hyperboloid Laplacian is evaluated in ambient
/// coordinates instead of the polar chart.
pub const POLAR_CUTOFF: f64 = 1e-3;

/// Inner finite-difference step `h_L` at `z`.
pub fn step_inner(z: &[f64]) -> f64 {
    1e-4 * norm(z).max(1.0)
}

/// Outer finite-difference step `h_2` at `z` (for the iterated forms).
pub fn step_outer(z: &[f64]) -> f64 {
    1e-3 * norm(z).max(1.0)
}

/// Verdict slack for pointwise checks.
pub fn tol_fd(exact: bool, lhs: f64, rhs: f64) -> f64 {
    let c = if exact { 1e-4 } else { 1e-2 };
    c * (1.0 + lhs.abs() + rhs.abs())
}

#[derive(Debug, Clone, Copy)]
enum Step {
    /// Use exact callbacks when the field has them, else `h_L(z)`.
    Inner,
    /// Finite differences with `h_2(z)`.
    Outer,
}

impl Step {
    fn h(self, z: &[f64]) -> f64 {
        match self {
            Step::Inner => step_inner(z),
            Step::Outer => step_outer(z),
        }
    }
}

/// One base direction: a tangent vector and the curve used to move along it.
#[derive(Debug, Clone)]
struct Dir {
    v: Vec<f64>,
    /// Second-order correction of the curve, `c(s) = p + s v + s^2/2 acc`
    /// (only used for explicit vector fields).
    acc: Option<Vec<f64>>,
}

struct Ctx<'a> {
    gen: &'a GeneratorSpec,
    base_dim: usize,
    fiber_dim: usize,
    levels: usize,
}

impl<'a> Ctx<'a> {
    fn new(gen: &'a GeneratorSpec) -> Self {
        let l = gen.layout();
        Self {
            gen,
            base_dim: l.base_dim,
            fiber_dim: l.fiber_dim,
            levels: l.levels,
        }
    }

    fn check_point(&self, z: &[f64]) -> Result<()> {
        let want = self.base_dim + self.fiber_dim * self.levels;
        if z.len() != want {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, generator expects {want}",
                z.len()
            )));
        }
        let r = self.gen.geometry.constraint_residual(&z[..self.base_dim]);
        if r > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "base point is off {} (residual {r:e})",
                self.gen.geometry
            )));
        }
        Ok(())
    }

    /// Diffusion directions (scaled so that `Gamma = sum (D_i f)^2`) and the
    /// first-order drift direction of the diffusion part, if any.
    fn dirs(&self, p: &[f64]) -> (Vec<Dir>, Option<Dir>) {
        if let Some(vf) = &self.gen.vector_fields {
            let mk = |f: &crate::generator::AffineField| {
                let v = f.value(p);
                let acc = f.apply_linear(&v);
                Dir { v, acc: Some(acc) }
            };
            return (vf.fields.iter().map(mk).collect(), vf.drift.as_ref().map(mk));
        }
        let c = self.gen.effective_sigma() / std::f64::consts::SQRT_2;
        let frame = match self.gen.geometry {
            Geometry::Heisenberg => {
                let f = crate::geometry::heisenberg_frame(p, self.gen.frame);
                vec![f[0].clone(), f[1].clone()]
            }
            g => g.frame(p),
        };
        let dirs = frame
            .into_iter()
            .map(|e| Dir {
                v: e.iter().map(|x| c * x).collect(),
                acc: None,
            })
            .collect();
        (dirs, None)
    }

    /// Point reached from `z` by moving the base a parameter `s` along `d`.
    fn move_base(&self, z: &[f64], d: &Dir, s: f64) -> Vec<f64> {
        let p = &z[..self.base_dim];
        let moved = match (&d.acc, self.gen.geometry) {
            (Some(acc), _) => p
                .iter()
                .zip(&d.v)
                .zip(acc)
                .map(|((pi, vi), ai)| pi + s * vi + 0.5 * s * s * ai)
                .collect(),
            (None, Geometry::Heisenberg) => {
                // Horizontal frame vectors are left translates of (a, b, 0).
                crate::geometry::heis_mul(p, &[s * d.v[0], s * d.v[1], 0.0])
            }
            (None, g) => {
                let v: Vec<f64> = d.v.iter().map(|x| s * x).collect();
                g.exp_unchecked(p, &v)
            }
        };
        let mut out = z.to_vec();
        out[..self.base_dim].copy_from_slice(&moved);
        out
    }

    /// Acceleration of the curve along `d` at `s = 0`.
    fn curve_acc(&self, p: &[f64], d: &Dir) -> Vec<f64> {
        if let Some(a) = &d.acc {
            return a.clone();
        }
        match self.gen.geometry {
            Geometry::Sphere(_) => {
                let n2 = dot(&d.v, &d.v);
                p.iter().map(|x| -n2 * x).collect()
            }
            Geometry::Hyperboloid(_) => {
                let n2 = -minkowski(&d.v, &d.v);
                p.iter().map(|x| n2 * x).collect()
            }
            _ => vec![0.0; p.len()],
        }
    }

    /// Fiber drift vector `(0, sigma(p), xi^(1), ..., xi^(n-1))`.
    fn drift_vector(&self, z: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; z.len()];
        let p = &z[..self.base_dim];
        let s = self.gen.lift.value(p);
        w[self.base_dim..self.base_dim + self.fiber_dim].copy_from_slice(&s);
        for r in 2..=self.levels {
            let dst = self.base_dim + (r - 1) * self.fiber_dim;
            let src = self.base_dim + (r - 2) * self.fiber_dim;
            for j in 0..self.fiber_dim {
                w[dst + j] = z[src + j];
            }
        }
        w
    }
}

fn exact_grad(f: &dyn ScalarField, z: &[f64], step: Step) -> Option<Vec<f64>> {
    match step {
        Step::Inner => f.gradient(z),
        Step::Outer => None,
    }
}

fn exact_hess(f: &dyn ScalarField, z: &[f64], step: Step) -> Option<Vec<f64>> {
    match step {
        Step::Inner => f.hessian(z),
        Step::Outer => None,
    }
}

fn bilinear(h: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for i in 0..n {
        if u[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            s += u[i] * h[i * n + j] * v[j];
        }
    }
    s
}

/// Pads a base-space vector with zeros over the fiber coordinates.
fn pad(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    out[..v.len()].copy_from_slice(v);
    out
}

/// Base directional derivatives `D_i f(z)`.
fn base_derivs(ctx: &Ctx, f: &dyn ScalarField, z: &[f64], step: Step) -> Vec<f64> {
    let (dirs, _) = ctx.dirs(&z[..ctx.base_dim]);
    if let Some(g) = exact_grad(f, z, step) {
        return dirs.iter().map(|d| dot(&g[..ctx.base_dim], &d.v)).collect();
    }
    let h = step.h(z);
    dirs.iter()
        .map(|d| (f.eval(&ctx.move_base(z, d, h)) - f.eval(&ctx.move_base(z, d, -h))) / (2.0 * h))
        .collect()
}

/// Partial derivatives over every fiber coordinate.
fn fiber_derivs(ctx: &Ctx, f: &dyn ScalarField, z: &[f64], step: Step) -> Vec<f64> {
    if let Some(g) = exact_grad(f, z, step) {
        return g[ctx.base_dim..].to_vec();
    }
    let h = step.h(z);
    let mut a = z.to_vec();
    (ctx.base_dim..z.len())
        .map(|i| {
            let orig = a[i];
            a[i] = orig + h;
            let fp = f.eval(&a);
            a[i] = orig - h;
            let fm = f.eval(&a);
            a[i] = orig;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Hyperboloid Laplace-Beltrami operator in polar coordinates around `e0`:
/// `f_rr + (d-1) coth(r) f_r + sinh(r)^-2 Delta_S f`.
pub fn hyperboloid_laplacian_polar(f: &dyn ScalarField, z: &[f64], d: usize) -> Result<f64> {
    polar_laplacian(f, z, d, Step::Inner)
}

fn polar_laplacian(f: &dyn ScalarField, z: &[f64], d: usize, step: Step) -> Result<f64> {
    let n = d + 1;
    let p = &z[..n];
    let sr = norm(&p[1..]);
    let r = sr.asinh();
    if r < POLAR_CUTOFF {
        return Err(Error::SingularChart(r));
    }
    let omega: Vec<f64> = p[1..].iter().map(|x| x / sr).collect();
    // orthonormal complement of omega in R^d
    let tangents = sphere_complement(&omega);
    let (ch, sh) = (r.cosh(), r.sinh());
    let at = |r: f64, om: &[f64]| {
        let mut w = z.to_vec();
        w[0] = r.cosh();
        for k in 0..d {
            w[1 + k] = r.sinh() * om[k];
        }
        w
    };
    let coth = ch / sh;
    if let (Some(g), Some(hs)) = (exact_grad(f, z, step), exact_hess(f, z, step)) {
        let m = z.len();
        let mut tvec = vec![0.0; m];
        tvec[0] = sh;
        for k in 0..d {
            tvec[1 + k] = ch * omega[k];
        }
        let g_dot = |v: &[f64]| dot(&g[..n], &v[..n]);
        let fr = g_dot(&tvec);
        let frr = bilinear(&hs, &tvec, &tvec) + g_dot(&pad(p, m));
        let mut ang = 0.0;
        for tau in &tangents {
            let mut u = vec![0.0; m];
            u[1..=d].copy_from_slice(tau);
            ang += bilinear(&hs, &u, &u);
        }
        let mut w = vec![0.0; m];
        w[1..=d].copy_from_slice(&omega);
        ang -= (d as f64 - 1.0) / sh * g_dot(&w);
        return Ok(frr + (d as f64 - 1.0) * coth * fr + ang);
    }
    let h = step.h(z);
    let f0 = f.eval(z);
    let fp = f.eval(&at(r + h, &omega));
    let fm = f.eval(&at(r - h, &omega));
    let fr = (fp - fm) / (2.0 * h);
    let frr = (fp - 2.0 * f0 + fm) / (h * h);
    let ha = (h / sh).min(1e-2);
    let mut ang = 0.0;
    for tau in &tangents {
        let rot = |s: f64| -> Vec<f64> {
            omega
                .iter()
                .zip(tau)
                .map(|(o, t)| s.cos() * o + s.sin() * t)
                .collect()
        };
        let gp = f.eval(&at(r, &rot(ha)));
        let gm = f.eval(&at(r, &rot(-ha)));
        ang += (gp - 2.0 * f0 + gm) / (ha * ha);
    }
    Ok(frr + (d as f64 - 1.0) * coth * fr + ang / (sh * sh))
}

/// Orthonormal basis of the complement of the unit vector `w`.
fn sphere_complement(w: &[f64]) -> Vec<Vec<f64>> {
    let d = w.len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|a, b| w[*a].abs().partial_cmp(&w[*b].abs()).unwrap());
    for &k in &order {
        if basis.len() + 1 == d {
            break;
        }
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        let c = dot(&e, w);
        for i in 0..d {
            e[i] -= c * w[i];
        }
        for b in &basis {
            let c = dot(&e, b);
            for i in 0..d {
                e[i] -= c * b[i];
            }
        }
        let n = norm(&e);
        if n > 1e-8 {
            basis.push(e.iter().map(|x| x / n).collect());
        }
    }
    basis
}

/// Second-order part of the generator (without the fiber drift).
fn diffusion_part(ctx: &Ctx, f: &dyn ScalarField, z: &[f64], step: Step) -> Result<f64> {
    let p = &z[..ctx.base_dim];
    if let (Geometry::Hyperboloid(d), None) = (ctx.gen.geometry, &ctx.gen.vector_fields) {
        let r = norm(&p[1..]).asinh();
        if r >= POLAR_CUTOFF {
            let c2 = 0.5 * ctx.gen.effective_sigma().powi(2);
            return Ok(c2 * polar_laplacian(f, z, d, step)?);
        }
    }
    let (dirs, drift) = ctx.dirs(p);
    let m = z.len();
    if let (Some(g), Some(hs)) = (exact_grad(f, z, step), exact_hess(f, z, step)) {
        let mut s = 0.0;
        for d in &dirs {
            let v = pad(&d.v, m);
            let a = pad(&ctx.curve_acc(p, d), m);
            s += bilinear(&hs, &v, &v) + dot(&g, &a);
        }
        if let Some(d0) = &drift {
            s += dot(&g[..ctx.base_dim], &d0.v);
        }
        return Ok(s);
    }
    let h = step.h(z);
    let f0 = f.eval(z);
    let mut s = 0.0;
    for d in &dirs {
        let fp = f.eval(&ctx.move_base(z, d, h));
        let fm = f.eval(&ctx.move_base(z, d, -h));
        s += (fp - 2.0 * f0 + fm) / (h * h);
    }
    if let Some(d0) = &drift {
        s += (f.eval(&ctx.move_base(z, d0, h)) - f.eval(&ctx.move_base(z, d0, -h))) / (2.0 * h);
    }
    Ok(s)
}

fn drift_part(ctx: &Ctx, f: &dyn ScalarField, z: &[f64], step: Step) -> f64 {
    let w = ctx.drift_vector(z);
    if let Some(g) = exact_grad(f, z, step) {
        return dot(&g, &w);
    }
    let wn = norm(&w);
    if wn == 0.0 {
        return 0.0;
    }
    let h = step.h(z) / wn.max(1.0);
    let zp: Vec<f64> = z.iter().zip(&w).map(|(a, b)| a + h * b).collect();
    let zm: Vec<f64> = z.iter().zip(&w).map(|(a, b)| a - h * b).collect();
    (f.eval(&zp) - f.eval(&zm)) / (2.0 * h)
}

fn generator_with(ctx: &Ctx, f: &dyn ScalarField, z: &[f64], step: Step) -> Result<f64> {
    Ok(diffusion_part(ctx, f, z, step)? + drift_part(ctx, f, z, step))
}

fn require(f: &dyn ScalarField, needed: Smoothness) -> Result<()> {
    if f.smoothness() < needed {
        return Err(Error::InsufficientSmoothness {
            needed: needed.order(),
            found: f.smoothness().to_string(),
        });
    }
    Ok(())
}

/// `(L f)(x)`.
pub fn apply_generator(gen: &GeneratorSpec, f: &dyn ScalarField, x: &[f64]) -> Result<f64> {
    require(f, Smoothness::C2)?;
    let ctx = Ctx::new(gen);
    ctx.check_point(x)?;
    generator_with(&ctx, f, x, Step::Inner)
}

/// Horizontal/base gradient components of `f` along the generator's
/// diffusion directions.
pub fn base_gradient(gen: &GeneratorSpec, f: &dyn ScalarField, x: &[f64]) -> Result<Vec<f64>> {
    let ctx = Ctx::new(gen);
    ctx.check_point(x)?;
    Ok(base_derivs(&ctx, f, x, Step::Inner))
}

/// Fiber gradient over all levels.
pub fn fiber_gradient(gen: &GeneratorSpec, f: &dyn ScalarField, x: &[f64]) -> Result<Vec<f64>> {
    let ctx = Ctx::new(gen);
    ctx.check_point(x)?;
    Ok(fiber_derivs(&ctx, f, x, Step::Inner))
}

fn gamma_with(ctx: &Ctx, f: &dyn ScalarField, g: &dyn ScalarField, z: &[f64], sf: Step, sg: Step) -> f64 {
    let a = base_derivs(ctx, f, z, sf);
    let b = base_derivs(ctx, g, z, sg);
    dot(&a, &b)
}

fn gamma_z_with(ctx: &Ctx, f: &dyn ScalarField, g: &dyn ScalarField, z: &[f64], sf: Step, sg: Step) -> f64 {
    dot(&fiber_derivs(ctx, f, z, sf), &fiber_derivs(ctx, g, z, sg))
}

/// `Gamma(f, g)(x)`: `(sigma^2/2) <grad_p f, grad_p g>`, or `sum (V_i f)(V_i g)`
/// for explicit vector fields.
pub fn gamma(gen: &GeneratorSpec, f: &dyn ScalarField, g: &dyn ScalarField, x: &[f64]) -> Result<f64> {
    require(f, Smoothness::C1)?;
    require(g, Smoothness::C1)?;
    let ctx = Ctx::new(gen);
    ctx.check_point(x)?;
    Ok(gamma_with(&ctx, f, g, x, Step::Inner, Step::Inner))
}

/// `Gamma^Z(f, g)(x) = <grad_xi f, grad_xi g>` over every fiber level.
pub fn gamma_z(gen: &GeneratorSpec, f: &dyn ScalarField, g: &dyn ScalarField, x: &[f64]) -> Result<f64> {
    require(f, Smoothness::C1)?;
    require(g, Smoothness::C1)?;
    let ctx = Ctx::new(gen);
    ctx.check_point(x)?;
    Ok(gamma_z_with(&ctx, f, g, x, Step::Inner, Step::Inner))
}

fn flat_ctx(gen: &GeneratorSpec) -> Result<Ctx<'_>> {
    let Geometry::Euclidean(d) = gen.geometry else {
        return Err(Error::UnsupportedGeometry(format!(
            "the twisted form is defined on flat products only, got {}",
            gen.geometry
        )));
    };
    let ctx = Ctx::new(gen);
    if ctx.fiber_dim != d {
        return Err(Error::UnsupportedGeometry(
            "the twisted form needs fiber dimension equal to the base dimension".into(),
        ));
    }
    Ok(ctx)
}

/// Plain coordinate gradients `(grad_p, grad_xi^(1))` on a flat product.
fn flat_grads(ctx: &Ctx, f: &dyn ScalarField, z: &[f64], step: Step) -> (Vec<f64>, Vec<f64>) {
    let d = ctx.base_dim;
    if let Some(g) = exact_grad(f, z, step) {
        return (g[..d].to_vec(), g[d..2 * d].to_vec());
    }
    let h = step.h(z);
    let mut a = z.to_vec();
    let mut part = |i: usize| {
        let orig = a[i];
        a[i] = orig + h;
        let fp = f.eval(&a);
        a[i] = orig - h;
        let fm = f.eval(&a);
        a[i] = orig;
        (fp - fm) / (2.0 * h)
    };
    let gp: Vec<f64> = (0..d).map(&mut part).collect();
    let gx: Vec<f64> = (d..2 * d).map(&mut part).collect();
    (gp, gx)
}

fn gamma_ab_with(
    ctx: &Ctx,
    f: &dyn ScalarField,
    g: &dyn ScalarField,
    params: GammaParams,
    z: &[f64],
    sf: Step,
    sg: Step,
) -> f64 {
    let (fp, fx) = flat_grads(ctx, f, z, sf);
    let (gp, gx) = flat_grads(ctx, g, z, sg);
    let a = params.alpha;
    dot(&fp, &gp) - a * dot(&fp, &gx) - a * dot(&fx, &gp)
        + (a * a + params.beta) * dot(&fx, &gx)
}

/// Twisted form `Gamma^{alpha,beta}(f, g)(x)` on a flat product.
pub fn gamma_ab(
    gen: &GeneratorSpec,
    f: &dyn ScalarField,
    g: &dyn ScalarField,
    params: GammaParams,
    x: &[f64],
) -> Result<f64> {
    let ctx = flat_ctx(gen)?;
    ctx.check_point(x)?;
    GammaParams::new(params.alpha, params.beta)?;
    Ok(gamma_ab_with(&ctx, f, g, params, x, Step::Inner, Step::Inner))
}

fn composite<'a, F>(label: &str, func: F) -> FnField<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'a,
{
    FnField {
        label: label.to_string(),
        func,
        classes: FieldClasses::default(),
    }
}

/// `Gamma_2^{alpha,beta}(f)(x) = 1/2 L Gamma^{alpha,beta}(f) - Gamma^{alpha,beta}(f, Lf)`.
pub fn gamma2_ab(gen: &GeneratorSpec, f: &dyn ScalarField, params: GammaParams, x: &[f64]) -> Result<f64> {
    require(f, Smoothness::C4)?;
    let ctx = flat_ctx(gen)?;
    ctx.check_point(x)?;
    GammaParams::new(params.alpha, params.beta)?;
    let gf = composite("gamma-ab", |z: &[f64]| {
        gamma_ab_with(&ctx, f, f, params, z, Step::Inner, Step::Inner)
    });
    let lf = composite("Lf", |z: &[f64]| {
        generator_with(&ctx, f, z, Step::Inner).unwrap_or(f64::NAN)
    });
    let a = generator_with(&ctx, &gf, x, Step::Outer)?;
    let b = gamma_ab_with(&ctx, f, &lf, params, x, Step::Inner, Step::Outer);
    Ok(0.5 * a - b)
}

/// `Gamma_2(f)(x) = 1/2 L Gamma(f) - Gamma(f, Lf)`.
pub fn gamma2(gen: &GeneratorSpec, f: &dyn ScalarField, x: &[f64]) -> Result<f64> {
    require(f, Smoothness::C4)?;
    let ctx = Ctx::new(gen);
    ctx.check_point(x)?;
    let gf = composite("gamma", |z: &[f64]| {
        gamma_with(&ctx, f, f, z, Step::Inner, Step::Inner)
    });
    let lf = composite("Lf", |z: &[f64]| {
        generator_with(&ctx, f, z, Step::Inner).unwrap_or(f64::NAN)
    });
    let a = generator_with(&ctx, &gf, x, Step::Outer)?;
    let b = gamma_with(&ctx, f, &lf, x, Step::Inner, Step::Outer);
    Ok(0.5 * a - b)
}

/// `Gamma_2^Z(f)(x) = 1/2 L Gamma^Z(f) - Gamma^Z(f, Lf)`.
pub fn gamma2_z(gen: &GeneratorSpec, f: &dyn ScalarField, x: &[f64]) -> Result<f64> {
    require(f, Smoothness::C4)?;
    let ctx = Ctx::new(gen);
    ctx.check_point(x)?;
    let gf = composite("gamma-z", |z: &[f64]| {
        gamma_z_with(&ctx, f, f, z, Step::Inner, Step::Inner)
    });
    let lf = composite("Lf", |z: &[f64]| {
        generator_with(&ctx, f, z, Step::Inner).unwrap_or(f64::NAN)
    });
    let a = generator_with(&ctx, &gf, x, Step::Outer)?;
    let b = gamma_z_with(&ctx, f, &lf, x, Step::Inner, Step::Outer);
    Ok(0.5 * a - b)
}

fn pointwise_provenance(f: &dyn ScalarField, x: &[f64]) -> Provenance {
    let mut p = Provenance::method(if f.has_exact_derivatives() {
        "pointwise-exact-inner"
    } else {
        "pointwise-fd"
    });
    p.fd_step = Some(step_outer(x));
    p
}

/// Checks `Gamma_2^{alpha,beta}(f) >= alpha |grad_xi f|^2 - <grad_xi f, grad_p f>`.
pub fn check_key_lemma(
    gen: &GeneratorSpec,
    f: &dyn ScalarField,
    params: GammaParams,
    x: &[f64],
) -> Result<InequalityReport> {
    let lhs = gamma2_ab(gen, f, params, x)?;
    let ctx = flat_ctx(gen)?;
    let (gp, gx) = flat_grads(&ctx, f, x, Step::Inner);
    let rhs = params.alpha * dot(&gx, &gx) - dot(&gx, &gp);
    let slack = tol_fd(f.has_exact_derivatives(), lhs, rhs);
    Ok(Row::new("key-lemma", &f.id(), x, lhs, rhs)
        .ge()
        .slack(slack)
        .provenance(pointwise_provenance(f, x))
        .note(format!("alpha={}, beta={}", params.alpha, params.beta))
        .finish(&VerdictRule::default()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdFlavor {
    /// `Gamma_2 >= -(d/2) sigma^2 Gamma - Gamma^Z / 4` on the hyperboloid.
    Relativistic,
    /// `Gamma_2 >= (rho - C/2) Gamma - (C/2) Gamma^Z`.
    General,
}

/// Checks the curvature-dimension inequality of the given flavour and
/// `Gamma_2^Z >= 0`; returns one report per inequality.
pub fn check_cd_condition(
    gen: &GeneratorSpec,
    f: &dyn ScalarField,
    x: &[f64],
    flavor: CdFlavor,
) -> Result<Vec<InequalityReport>> {
    let ctx = Ctx::new(gen);
    ctx.check_point(x)?;
    let g2 = gamma2(gen, f, x)?;
    let gz2 = gamma2_z(gen, f, x)?;
    let gm = gamma_with(&ctx, f, f, x, Step::Inner, Step::Inner);
    let gz = gamma_z_with(&ctx, f, f, x, Step::Inner, Step::Inner);
    let (id, rhs) = match flavor {
        CdFlavor::Relativistic => {
            let Geometry::Hyperboloid(d) = gen.geometry else {
                return Err(Error::UnsupportedGeometry(
                    "relativistic curvature-dimension check needs a hyperboloid".into(),
                ));
            };
            let s2 = gen.effective_sigma().powi(2);
            ("cd-relativistic", -(d as f64) / 2.0 * s2 * gm - 0.25 * gz)
        }
        CdFlavor::General => {
            let rho = gen.rho.ok_or_else(|| {
                Error::InvalidArgument("general curvature-dimension check needs rho".into())
            })?;
            let c = gen.c_sigma;
            ("cd-general", (rho - c / 2.0) * gm - c / 2.0 * gz)
        }
    };
    let exact = f.has_exact_derivatives();
    let rule = VerdictRule::default();
    let prov = pointwise_provenance(f, x);
    let main = Row::new(id, &f.id(), x, g2, rhs)
        .ge()
        .slack(tol_fd(exact, g2, rhs))
        .provenance(prov.clone())
        .finish(&rule);
    let z = Row::new(&format!("{id}-z"), &f.id(), x, gz2, 0.0)
        .ge()
        .slack(tol_fd(exact, gz2, 0.0))
        .provenance(prov)
        .finish(&rule);
    Ok(vec![main, z])
}

/// Exact value of the twisted iterate for comparison in tests and studies:
/// `alpha |grad_xi f|^2 - <grad_xi f, grad_p f> + (s^2/2) sum (f_pp - alpha f_pxi)^2
/// + (s^2/2) beta sum f_pxi^2` for flat fields with exact Hessians.
pub fn gamma2_ab_closed_form(
    gen: &GeneratorSpec,
    f: &dyn ScalarField,
    params: GammaParams,
    x: &[f64],
) -> Result<f64> {
    let ctx = flat_ctx(gen)?;
    let d = ctx.base_dim;
    let m = x.len();
    let g = f
        .gradient(x)
        .ok_or_else(|| Error::InvalidArgument("closed form needs exact derivatives".into()))?;
    let h = f
        .hessian(x)
        .ok_or_else(|| Error::InvalidArgument("closed form needs exact derivatives".into()))?;
    let s2 = gen.effective_sigma().powi(2);
    let (a, b) = (params.alpha, params.beta);
    let mut out = 0.0;
    for i in 0..d {
        out += a * g[d + i] * g[d + i] - g[d + i] * g[i];
        for j in 0..d {
            let pp = h[i * m + j];
            let px = h[i * m + d + j];
            out += 0.5 * s2 * (pp - a * px).powi(2) + 0.5 * s2 * b * px * px;
        }
    }
    Ok(out)
}
