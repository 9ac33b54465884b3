//! Gauss-Hermite rules for Gaussian expectations and adaptive Gauss-Kronrod
//! integration on intervals.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::par::{chunked_sum, Execution};

/// Default cap on tensor-product node counts.
pub const NODE_BUDGET: u128 = 10_000_000;

/// One-dimensional Gauss-Hermite rule for the standard normal law.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Order-`m` rule: integrates polynomials of degree `<= 2m - 1` exactly
    /// against `N(0, 1)`. Nodes come from the Golub-Welsch eigenproblem and
    /// are polished by Newton steps on the normalized Hermite recurrence;
    /// weights use `1 / (m h_{m-1}(x)^2)`.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "Gauss-Hermite order must be positive");
        let mut jac = DMatrix::<f64>::zeros(m, m);
        for k in 1..m {
            let b = (k as f64).sqrt();
            jac[(k - 1, k)] = b;
            jac[(k, k - 1)] = b;
        }
        let mut nodes: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut weights = Vec::with_capacity(m);
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let (hm, hm1) = hermite_pair(m, *x);
                let dx = hm / ((m as f64).sqrt() * hm1);
                if !dx.is_finite() {
                    break;
                }
                *x -= dx;
            }
            let (_, hm1) = hermite_pair(m, *x);
            weights.push(1.0 / (m as f64 * hm1 * hm1));
        }
        // symmetrize
        for i in 0..m / 2 {
            let j = m - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= s);
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

/// `(h_m(x), h_{m-1}(x))` for the orthonormal Hermite polynomials
/// `h_k = He_k / sqrt(k!)`.
fn hermite_pair(m: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..m {
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Tensor Gauss-Hermite rule for `N(mean, L L^T)` in `dim` dimensions.
#[derive(Debug, Clone)]
pub struct GaussianRule {
    pub rule: GaussHermite,
    pub dim: usize,
}

impl GaussianRule {
    pub fn new(order: usize, dim: usize) -> Result<Self> {
        Self::with_budget(order, dim, NODE_BUDGET)
    }

    pub fn with_budget(order: usize, dim: usize, budget: u128) -> Result<Self> {
        let nodes = (order as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
        if nodes > budget {
            return Err(Error::BudgetExceeded { nodes, budget });
        }
        Ok(Self {
            rule: GaussHermite::new(order),
            dim,
        })
    }

    pub fn node_count(&self) -> usize {
        self.rule.order().pow(self.dim as u32)
    }

    /// Expectations of `k` functionals under `N(mean, chol chol^T)`, where
    /// `chol` is lower triangular row-major `dim x dim`. `g(y, out)` adds
    /// nothing itself: it must overwrite `out` with the `k` values at `y`.
    pub fn expect<G>(&self, exec: Execution, mean: &[f64], chol: &[f64], k: usize, g: G) -> Vec<f64>
    where
        G: Fn(&[f64], &mut [f64]) + Sync + Send,
    {
        let dim = self.dim;
        let m = self.rule.order();
        let n = self.node_count();
        chunked_sum(exec, n, 4096, k, |range, acc| {
            let mut idx = vec![0usize; dim];
            let mut u = vec![0.0; dim];
            let mut y = vec![0.0; dim];
            let mut vals = vec![0.0; k];
            for flat in range {
                let mut r = flat;
                let mut w = 1.0;
                for d in 0..dim {
                    idx[d] = r % m;
                    r /= m;
                    u[d] = self.rule.nodes[idx[d]];
                    w *= self.rule.weights[idx[d]];
                }
                for i in 0..dim {
                    let mut s = mean[i];
                    for j in 0..=i {
                        s += chol[i * dim + j] * u[j];
                    }
                    y[i] = s;
                }
                g(&y, &mut vals);
                for (a, v) in acc.iter_mut().zip(&vals) {
                    *a += w * v;
                }
            }
        })
    }
}

/// Lower Cholesky factor (row-major) of a symmetric positive definite matrix.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    let c = m
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("covariance is not positive definite".into()))?;
    let l = c.l();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            out[i * n + j] = l[(i, j)];
        }
    }
    Ok(out)
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule on `[a, b]`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let x = h * GK_X[i];
        let s = f(c - x) + f(c + x);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> f64 {
        let (v, e) = whole;
        if e <= tol || depth >= 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        let l = gk15(f, a, m);
        let r = gk15(f, m, b);
        rec(f, a, m, 0.5 * tol, l, depth + 1) + rec(f, m, b, 0.5 * tol, r, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    let whole = gk15(&f, a, b);
    rec(&f, a, b, tol, whole, 0)
}
