//! Exact heat semigroup of the flat (iterated) Kolmogorov diffusion and the
//! functional inequalities checked against it.
//!
//! Started at `x = (p, xi_1, ..., xi_n)`, the state `(p + B_t, I_1, ..., I_n)`
//! is Gaussian: level `r` has mean `sum_{j <= r} x_j t^(r-j) / (r-j)!` and on
//! each axis `Cov(I_a, I_b) = sigma^2 t^(a+b+1) / ((a+b+1) a! b!)`, with
//! `I_0 = B_t`. Axes are independent, so the covariance is block diagonal
//! and its Cholesky factor is lower triangular in the flat coordinate order.

use crate::error::{Error, Result};
use crate::field::{flat_gradient, ScalarField};
use crate::par::Execution;
use crate::quadrature::{cholesky, GaussianRule};
use crate::report::{InequalityReport, Provenance, Row, VerdictRule};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Default Gauss-Hermite order for a `dim`-dimensional tensor rule.
pub fn default_order(dim: usize) -> usize {
    match dim {
        0..=2 => 40,
        // the iterated kernels are strongly anisotropic; bump fields need
        // many nodes per axis before two orders agree
        3 => 64,
        4 => 24,
        5 | 6 => 12,
        _ => (1e7f64.powf(1.0 / dim as f64).floor() as usize).max(2),
    }
}

#[derive(Debug, Clone)]
pub struct FlatKernel {
    pub d: usize,
    pub sigma: f64,
    pub t: f64,
    pub levels: usize,
    pub exec: Execution,
    hi: GaussianRule,
    lo: GaussianRule,
    chol: Vec<f64>,
}

impl FlatKernel {
    pub fn new(d: usize, sigma: f64, t: f64) -> Result<Self> {
        Self::iterated(d, sigma, t, 1)
    }

    /// Kernel of `(B_t, I_1, ..., I_levels)` on `R^d x (R^d)^levels`.
    pub fn iterated(d: usize, sigma: f64, t: f64, levels: usize) -> Result<Self> {
        let dim = d * (levels + 1);
        Self::with_order(d, sigma, t, levels, default_order(dim))
    }

    pub fn with_order(d: usize, sigma: f64, t: f64, levels: usize, order: usize) -> Result<Self> {
        if d == 0 || levels == 0 {
            return Err(Error::InvalidArgument("kernel needs d >= 1 and levels >= 1".into()));
        }
        if !(sigma > 0.0) || !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("kernel needs sigma > 0, t >= 0 (sigma={sigma}, t={t})")));
        }
        let dim = d * (levels + 1);
        let hi = GaussianRule::new(order, dim)?;
        let lo = GaussianRule::new((3 * order / 4).max(1), dim)?;
        let mut k = Self {
            d,
            sigma,
            t,
            levels,
            exec: Execution::default(),
            hi,
            lo,
            chol: vec![0.0; dim * dim],
        };
        if t > 0.0 {
            let n = levels + 1;
            let ax = cholesky(&k.axis_covariance(), n)?;
            for i in 0..d {
                for a in 0..n {
                    for b in 0..=a {
                        k.chol[(a * d + i) * dim + b * d + i] = ax[a * n + b];
                    }
                }
            }
        }
        Ok(k)
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn dim(&self) -> usize {
        self.d * (self.levels + 1)
    }

    pub fn order(&self) -> usize {
        self.hi.rule.order()
    }

    pub fn node_count(&self) -> usize {
        self.hi.node_count()
    }

    /// Per-axis covariance of `(B_t, I_1, ..., I_n)`, row-major.
    pub fn axis_covariance(&self) -> Vec<f64> {
        let n = self.levels + 1;
        let s2 = self.sigma * self.sigma;
        let mut c = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let e = a + b + 1;
                c[a * n + b] = s2 * self.t.powi(e as i32) / (e as f64 * factorial(a) * factorial(b));
            }
        }
        c
    }

    /// `d mean_r / d x_j = t^(r-j) / (r-j)!` for `j <= r`.
    fn mean_coeff(&self, r: usize, j: usize) -> f64 {
        if j > r {
            0.0
        } else {
            self.t.powi((r - j) as i32) / factorial(r - j)
        }
    }

    pub fn mean(&self, x: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut m = vec![0.0; self.dim()];
        for r in 0..=self.levels {
            for i in 0..d {
                m[r * d + i] = (0..=r).map(|j| self.mean_coeff(r, j) * x[j * d + i]).sum();
            }
        }
        m
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, kernel expects {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Expectations of `k` functionals of the state at time `t` started at `x`.
    pub fn expect<G>(&self, x: &[f64], k: usize, g: G) -> Result<Vec<f64>>
    where
        G: Fn(&[f64], &mut [f64]) + Sync + Send,
    {
        self.check(x)?;
        Ok(self.hi.expect(self.exec, &self.mean(x), &self.chol, k, g))
    }

    /// Like [`expect`](Self::expect) but also evaluated with a rule of order
    /// `3m/4`; returns `(high, low)`.
    pub fn expect_pair<G>(&self, x: &[f64], k: usize, g: G) -> Result<(Vec<f64>, Vec<f64>)>
    where
        G: Fn(&[f64], &mut [f64]) + Sync + Send,
    {
        self.check(x)?;
        let m = self.mean(x);
        let a = self.hi.expect(self.exec, &m, &self.chol, k, &g);
        let b = self.lo.expect(self.exec, &m, &self.chol, k, &g);
        Ok((a, b))
    }

    /// Maps integrand gradients `E[grad f]` to `grad_x P_t f` through the
    /// affine dependence of the mean on `x`.
    pub fn pull_back(&self, eg: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut out = vec![0.0; self.dim()];
        for j in 0..=self.levels {
            for i in 0..d {
                out[j * d + i] = (j..=self.levels).map(|r| self.mean_coeff(r, j) * eg[r * d + i]).sum();
            }
        }
        out
    }
}

/// `P_t f (x)`.
pub fn semigroup_apply(kernel: &FlatKernel, f: &dyn ScalarField, x: &[f64]) -> Result<f64> {
    Ok(kernel.expect(x, 1, |y, out| out[0] = f.eval(y))?[0])
}

/// Gradient of `x -> P_t f (x)` over all coordinates, by differentiating
/// under the integral.
pub fn semigroup_grad_full(kernel: &FlatKernel, f: &dyn ScalarField, x: &[f64]) -> Result<Vec<f64>> {
    let eg = kernel.expect(x, kernel.dim(), |y, out| out.copy_from_slice(&flat_gradient(f, y)))?;
    Ok(kernel.pull_back(&eg))
}

/// `(grad_p P_t f, grad_xi P_t f)` for the one-level kernel.
pub fn semigroup_grad(kernel: &FlatKernel, f: &dyn ScalarField, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = semigroup_grad_full(kernel, f, x)?;
    let d = kernel.d;
    Ok((g[..d].to_vec(), g[d..2 * d].to_vec()))
}

/// Wang-Harnack cost `C_alpha(t, x, x')` on the one-level flat space.
pub fn wang_harnack_constant(sigma: f64, t: f64, alpha: f64, x: &[f64], x2: &[f64]) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let d = x.len() / 2;
    let s2 = sigma * sigma;
    let mut a = 0.0;
    let mut b = 0.0;
    for i in 0..d {
        let dp = x2[i] - x[i];
        let dxi = x2[d + i] - x[d + i];
        a += (0.5 * t * dp + dxi).powi(2);
        b += dp * dp;
    }
    Ok((alpha / (alpha - 1.0) * (6.0 / (s2 * t.powi(3)) * a + b / (2.0 * s2 * t))).exp())
}

/// Moments needed by the four inequality checks, from one quadrature pass.
#[derive(Debug, Clone, Copy, Default)]
struct Moments<'a> {
    pf: f64,
    pf2: f64,
    pflogf: f64,
    be_p: f64,
    be_xi: f64,
    grad: &'a [f64],
}

const SCALARS: usize = 5;

fn moments_integrand(f: &dyn ScalarField, d: usize, t: f64, y: &[f64], out: &mut [f64]) {
    let v = f.eval(y);
    let g = flat_gradient(f, y);
    out[0] = v;
    out[1] = v * v;
    out[2] = if v > 0.0 { v * v.ln() } else { 0.0 };
    let mut bp = 0.0;
    let mut bx = 0.0;
    for i in 0..d {
        let gp = g[i] + t * g[d + i];
        bp += gp * gp;
        bx += g[d + i] * g[d + i];
    }
    out[3] = bp;
    out[4] = bx;
    out[SCALARS..SCALARS + 2 * d].copy_from_slice(&g[..2 * d]);
}

fn unpack<'a>(kernel: &FlatKernel, raw: &'a [f64], grad: &'a mut Vec<f64>) -> Moments<'a> {
    *grad = kernel.pull_back(&raw[SCALARS..]);
    Moments {
        pf: raw[0],
        pf2: raw[1],
        pflogf: raw[2],
        be_p: raw[3],
        be_xi: raw[4],
        grad: grad.as_slice(),
    }
}

type Sides = (f64, f64, f64, f64, f64);

/// Runs both quadrature orders and evaluates each `(lhs, rhs)` pair from
/// `sides` on both; returns `(lhs, rhs, lhs_err, rhs_err, total_err)` per pair.
fn two_orders(
    kernel: &FlatKernel,
    f: &dyn ScalarField,
    x: &[f64],
    sides: impl Fn(&Moments) -> Vec<(f64, f64)>,
) -> Result<Vec<Sides>> {
    one_level(kernel)?;
    let d = kernel.d;
    let t = kernel.t;
    let (hi, lo) = kernel.expect_pair(x, SCALARS + 2 * d, |y, out| moments_integrand(f, d, t, y, out))?;
    let (mut gh, mut gl) = (Vec::new(), Vec::new());
    let a = sides(&unpack(kernel, &hi, &mut gh));
    let b = sides(&unpack(kernel, &lo, &mut gl));
    Ok(a.into_iter()
        .zip(b)
        .map(|((l1, r1), (l0, r0))| (l1, r1, (l1 - l0).abs(), (r1 - r0).abs(), ((r1 - l1) - (r0 - l0)).abs()))
        .collect())
}

fn one_level(kernel: &FlatKernel) -> Result<()> {
    if kernel.levels != 1 {
        return Err(Error::InvalidArgument("inequality checks need the one-level kernel".into()));
    }
    Ok(())
}

fn need_positive_t(kernel: &FlatKernel) -> Result<()> {
    if !(kernel.t > 0.0) {
        return Err(Error::InvalidArgument("reverse inequalities need t > 0".into()));
    }
    Ok(())
}

fn quad_slack(rhs: f64) -> f64 {
    1e-8 * (1.0 + rhs.abs())
}

fn provenance(kernel: &FlatKernel) -> Provenance {
    Provenance {
        quad_order: Some(kernel.order()),
        ..Provenance::method("quadrature")
    }
}

fn row(kernel: &FlatKernel, id: &str, f: &dyn ScalarField, x: &[f64], s: Sides) -> Row {
    let (l, r, le, re, te) = s;
    Row::new(id, &f.id(), x, l, r)
        .t(kernel.t)
        .se(le, re, te)
        .slack(quad_slack(r))
        .provenance(provenance(kernel))
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Gradient bound `|grad_p P_t f|^2 <= sum_i P_t((d_{p_i} f + t d_{xi_i} f)^2)`
/// and its fiber companion `|grad_xi P_t f|^2 <= P_t |grad_xi f|^2`.
pub fn verify_be_estimate(
    kernel: &FlatKernel,
    f: &dyn ScalarField,
    x: &[f64],
    rule: &VerdictRule,
) -> Result<Vec<InequalityReport>> {
    if !f.classes().lipschitz {
        return Err(Error::FieldClass(format!("{} is not globally Lipschitz", f.id())));
    }
    let d = kernel.d;
    let s = two_orders(kernel, f, x, |m| {
        vec![(sum_sq(&m.grad[..d]), m.be_p), (sum_sq(&m.grad[d..]), m.be_xi)]
    })?;
    Ok(vec![
        row(kernel, "be-estimate", f, x, s[0]).finish(rule),
        row(kernel, "be-estimate-xi", f, x, s[1]).finish(rule),
    ])
}

/// `sum_i (d_{p_i} P_t f - (t/2) d_{xi_i} P_t f)^2 + (t^2/12) |grad_xi P_t f|^2
/// <= (P_t f^2 - (P_t f)^2) / (sigma^2 t)`.
pub fn verify_reverse_poincare(
    kernel: &FlatKernel,
    f: &dyn ScalarField,
    x: &[f64],
    rule: &VerdictRule,
) -> Result<InequalityReport> {
    if !f.classes().bounded {
        return Err(Error::FieldClass(format!("{} is not bounded", f.id())));
    }
    need_positive_t(kernel)?;
    let (d, t, s2) = (kernel.d, kernel.t, kernel.sigma * kernel.sigma);
    let s = two_orders(kernel, f, x, |m| {
        vec![(reverse_lhs(m.grad, d, t, 1.0), (m.pf2 - m.pf * m.pf) / (s2 * t))]
    })?;
    Ok(row(kernel, "reverse-poincare", f, x, s[0]).finish(rule))
}

pub(crate) fn reverse_lhs(grad: &[f64], d: usize, t: f64, scale: f64) -> f64 {
    let mut a = 0.0;
    let mut b = 0.0;
    for i in 0..d {
        let gp = grad[i] / scale;
        let gx = grad[d + i] / scale;
        a += (gp - 0.5 * t * gx).powi(2);
        b += gx * gx;
    }
    a + t * t / 12.0 * b
}

/// Same left side for `ln P_t f`, against
/// `2 / (sigma^2 t P_t f) * (P_t(f ln f) - P_t f ln P_t f)`.
pub fn verify_reverse_logsobolev(
    kernel: &FlatKernel,
    f: &dyn ScalarField,
    x: &[f64],
    rule: &VerdictRule,
) -> Result<InequalityReport> {
    let c = f.classes();
    if !(c.positive && c.bounded) {
        return Err(Error::FieldClass(format!("{} is not bounded and strictly positive", f.id())));
    }
    need_positive_t(kernel)?;
    let (d, t, s2) = (kernel.d, kernel.t, kernel.sigma * kernel.sigma);
    let s = two_orders(kernel, f, x, |m| {
        vec![(
            reverse_lhs(m.grad, d, t, m.pf),
            2.0 / (s2 * t * m.pf) * (m.pflogf - m.pf * m.pf.ln()),
        )]
    })?;
    Ok(row(kernel, "reverse-log-sobolev", f, x, s[0]).finish(rule))
}

/// `(P_t f)^alpha (x) <= C_alpha(t, x, x') P_t(f^alpha)(x')`.
pub fn verify_wang_harnack(
    kernel: &FlatKernel,
    f: &dyn ScalarField,
    alpha: f64,
    x: &[f64],
    x2: &[f64],
    rule: &VerdictRule,
) -> Result<InequalityReport> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let c = f.classes();
    if !(c.nonnegative && c.bounded) {
        return Err(Error::FieldClass(format!("{} is not bounded and nonnegative", f.id())));
    }
    one_level(kernel)?;
    need_positive_t(kernel)?;
    let cost = wang_harnack_constant(kernel.sigma, kernel.t, alpha, x, x2)?;
    let g = |y: &[f64], out: &mut [f64]| out[0] = f.eval(y).max(0.0);
    let ga = |y: &[f64], out: &mut [f64]| out[0] = f.eval(y).max(0.0).powf(alpha);
    let (l1, l0) = kernel.expect_pair(x, 1, g)?;
    let (r1, r0) = kernel.expect_pair(x2, 1, ga)?;
    let (lh, ll) = (l1[0].powf(alpha), l0[0].powf(alpha));
    let (rh, rl) = (cost * r1[0], cost * r0[0]);
    let s = (lh, rh, (lh - ll).abs(), (rh - rl).abs(), ((rh - lh) - (rl - ll)).abs());
    Ok(row(kernel, "wang-harnack", f, x, s)
        .point2(x2)
        .note(format!("alpha={alpha}, c_alpha={cost:.6e}"))
        .finish(rule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::parse_field;
    use crate::point::Layout;
    use crate::report::Verdict;

    fn field(id: &str) -> crate::field::FieldRef {
        parse_field(id, Layout::new(1, 1, 1)).unwrap()
    }

    #[test]
    fn linear_and_quadratic_examples() {
        let k = FlatKernel::new(1, 1.0, 2.0).unwrap();
        let xi = field("linear-xi");
        assert!((semigroup_apply(&k, &*xi, &[0.7, -0.3]).unwrap() - (-0.3 + 1.4)).abs() < 1e-13);
        let c = field("const(2.5)");
        assert!((semigroup_apply(&k, &*c, &[0.7, -0.3]).unwrap() - 2.5).abs() < 1e-13);
        let k1 = FlatKernel::new(1, 1.0, 1.0).unwrap();
        let q = field("poly(0, 0, 0, 0, 0, 1)");
        assert!((semigroup_apply(&k1, &*q, &[0.0, 0.0]).unwrap() - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn gradient_examples() {
        let k = FlatKernel::new(1, 1.0, 2.0).unwrap();
        let (gp, gx) = semigroup_grad(&k, &*field("linear-xi"), &[0.4, 1.0]).unwrap();
        assert!((gp[0] - 2.0).abs() < 1e-12 && (gx[0] - 1.0).abs() < 1e-12);
        let (gp, gx) = semigroup_grad(&k, &*field("linear-p"), &[0.4, 1.0]).unwrap();
        assert!((gp[0] - 1.0).abs() < 1e-12 && gx[0].abs() < 1e-12);
        let (gp, gx) = semigroup_grad(&k, &*field("const(3)"), &[0.4, 1.0]).unwrap();
        assert!(gp[0].abs() < 1e-12 && gx[0].abs() < 1e-12);
    }

    #[test]
    fn gradient_commutation_matches_differences() {
        let k = FlatKernel::new(1, 1.0, 0.7).unwrap();
        let x = [0.3, -0.2];
        for id in ["gauss-bump(0, 1)", "tanh-p", "poly(0, 1, -1, 0.5, 0.2, 0.1)"] {
            let f = field(id);
            let g = semigroup_grad_full(&k, &*f, &x).unwrap();
            let h = 1e-4;
            for i in 0..2 {
                let mut a = x;
                let mut b = x;
                a[i] += h;
                b[i] -= h;
                let fd = (semigroup_apply(&k, &*f, &a).unwrap() - semigroup_apply(&k, &*f, &b).unwrap()) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6, "{id} coord {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn covariance_is_positive_definite_with_known_determinant() {
        for t in [0.1, 1.0, 3.0] {
            let k = FlatKernel::new(1, 1.3, t).unwrap();
            let c = k.axis_covariance();
            let det = c[0] * c[3] - c[1] * c[2];
            let s4 = 1.3f64.powi(4);
            assert!((det - s4 * t.powi(4) / 12.0).abs() < 1e-12 * (1.0 + det));
            assert_eq!(c[1], c[2]);
        }
    }

    #[test]
    fn iterated_mean_and_covariance() {
        let k = FlatKernel::iterated(1, 1.0, 2.0, 2).unwrap();
        let m = k.mean(&[1.0, 0.5, -1.0]);
        assert!((m[1] - (0.5 + 2.0)).abs() < 1e-14);
        assert!((m[2] - (-1.0 + 2.0 * 0.5 + 2.0)).abs() < 1e-14);
        let c = k.axis_covariance();
        // Var(I_2(t)) = t^5 / 20
        assert!((c[8] - 32.0 / 20.0).abs() < 1e-14);
    }

    #[test]
    fn zero_time_is_the_identity() {
        let k = FlatKernel::new(1, 1.0, 0.0).unwrap();
        let f = field("gauss-bump(0, 1)");
        let x = [0.3, 0.8];
        assert!((semigroup_apply(&k, &*f, &x).unwrap() - f.eval(&x)).abs() < 1e-14);
    }

    #[test]
    fn semigroup_property_on_polynomials() {
        let f = field("poly(1, 0.5, -0.3, 0.2, 0.1, -0.4, 0.05, 0, 0.02, 0.01)");
        let (t, s) = (0.6, 0.9);
        let ks = std::sync::Arc::new(FlatKernel::new(1, 1.0, s).unwrap());
        let kt = FlatKernel::with_order(1, 1.0, t, 1, 12).unwrap();
        let kts = FlatKernel::new(1, 1.0, t + s).unwrap();
        let inner = {
            let ks = ks.clone();
            let f = f.clone();
            crate::field::FnField {
                label: "ps-f".into(),
                func: move |z: &[f64]| semigroup_apply(&ks, &*f, z).unwrap(),
                classes: Default::default(),
            }
        };
        for x in [[0.0, 0.0], [0.5, -1.0], [-1.2, 0.7]] {
            let a = semigroup_apply(&kt, &inner, &x).unwrap();
            let b = semigroup_apply(&kts, &*f, &x).unwrap();
            assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn be_estimate_is_sharp_on_linear_fiber_field() {
        let f = field("linear-xi");
        for t in [0.5, 1.0, 2.0, 5.0] {
            let k = FlatKernel::new(1, 1.0, t).unwrap();
            let r = verify_be_estimate(&k, &*f, &[0.2, -0.1], &VerdictRule::default()).unwrap();
            assert!(((r[0].lhs - t * t) / (t * t)).abs() < 1e-8);
            assert!(((r[0].rhs - t * t) / (t * t)).abs() < 1e-8);
            assert_eq!(r[0].verdict, Verdict::Verified);
        }
    }

    #[test]
    fn be_estimate_strict_for_bump() {
        let k = FlatKernel::new(1, 1.0, 1.0).unwrap();
        let r = verify_be_estimate(&k, &*field("gauss-bump(0, 1)"), &[0.0, 0.0], &VerdictRule::default()).unwrap();
        assert!(r[0].lhs < r[0].rhs);
        assert_eq!(r[0].verdict, Verdict::Verified);
    }

    #[test]
    fn reverse_inequalities_hold() {
        let rule = VerdictRule::default();
        for t in [0.1, 1.0, 5.0] {
            let k = FlatKernel::new(1, 1.0, t).unwrap();
            for id in ["tanh-p", "gauss-bump(0, 1)"] {
                let r = verify_reverse_poincare(&k, &*field(id), &[0.0, 0.0], &rule).unwrap();
                assert_eq!(r.verdict, Verdict::Verified, "{id} t={t}: {r:?}");
            }
        }
        for t in [0.25, 1.0, 4.0] {
            let k = FlatKernel::new(1, 1.0, t).unwrap();
            let r = verify_reverse_logsobolev(&k, &*field("positive-bump(0, 1, 0.1)"), &[0.0, 0.0], &rule).unwrap();
            assert_eq!(r.verdict, Verdict::Verified, "t={t}: {r:?}");
        }
        let k = FlatKernel::new(1, 1.0, 1.0).unwrap();
        let r = verify_reverse_logsobolev(&k, &*field("const(2)"), &[0.0, 0.0], &rule).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12);
    }

    #[test]
    fn wang_harnack_constant_and_check() {
        let c = wang_harnack_constant(1.0, 1.0, 2.0, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((c / 4.0f64.exp() - 1.0).abs() < 1e-12);
        assert_eq!(wang_harnack_constant(1.0, 1.0, 1.3, &[0.2, 0.1], &[0.2, 0.1]).unwrap(), 1.0);
        assert!(matches!(
            wang_harnack_constant(1.0, 1.0, 1.0, &[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::InvalidAlpha(_))
        ));
        let k = FlatKernel::new(1, 1.0, 1.0).unwrap();
        let f = field("positive-bump(0, 1, 0.1)");
        let rule = VerdictRule::default();
        let r = verify_wang_harnack(&k, &*f, 2.0, &[0.0, 0.0], &[1.0, 0.0], &rule).unwrap();
        assert_eq!(r.verdict, Verdict::Verified);
        let r = verify_wang_harnack(&k, &*f, 2.0, &[0.3, 0.3], &[0.3, 0.3], &rule).unwrap();
        assert_eq!(r.verdict, Verdict::Verified);
        assert!(r.lhs <= r.rhs);
    }

    #[test]
    fn out_of_class_fields_are_refused() {
        let k = FlatKernel::new(1, 1.0, 1.0).unwrap();
        let rule = VerdictRule::default();
        let xi = field("linear-xi");
        assert!(matches!(verify_reverse_poincare(&k, &*xi, &[0.0, 0.0], &rule), Err(Error::FieldClass(_))));
        assert!(matches!(
            verify_reverse_logsobolev(&k, &*field("gauss-bump(0, 1)"), &[0.0, 0.0], &rule),
            Err(Error::FieldClass(_))
        ));
    }

    #[test]
    fn budget_error_for_large_dimension() {
        assert!(matches!(
            FlatKernel::with_order(3, 1.0, 1.0, 1, 40),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(FlatKernel::new(3, 1.0, 1.0).is_ok());
    }
}
