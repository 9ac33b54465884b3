//! Scalar test fields on product spaces.
//!
//! Every field sees the flat coordinate vector of a [`ProductPoint`]
//! (`crate::point::ProductPoint`): base ambient coordinates first, then
//! fiber levels. Library fields carry exact gradients and Hessians; wrappers
//! strip them ([`FdOnly`]) or lower the declared smoothness
//! ([`WithSmoothness`]) so the finite-difference paths can be exercised.
//!
//! Library ids:
//!
//! | id | field |
//! |----|-------|
//! | `linear-xi` | first fiber coordinate |
//! | `linear-p` | first base coordinate |
//! | `coord(i)` | flat coordinate `i` |
//! | `gauss-bump(c, s)` | `exp(-sum (z_i - c)^2 / (2 s^2))` over all coordinates |
//! | `positive-bump(c, s, floor)` | `floor + gauss-bump(c, s)` |
//! | `poly(a0, a1, ...)` | bivariate polynomial in `u = p_1`, `v = xi_1`, graded-lex monomials `1, u, v, u^2, uv, v^2, ...` |
//! | `tanh-p` | `tanh(p_1)` |
//! | `const(c)` | constant |

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Layout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Smoothness {
    C1,
    C2,
    C4,
    CInf,
}

impl Smoothness {
    pub fn order(self) -> u8 {
        match self {
            Smoothness::C1 => 1,
            Smoothness::C2 => 2,
            Smoothness::C4 => 4,
            Smoothness::CInf => u8::MAX,
        }
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Smoothness::C1 => "C1",
            Smoothness::C2 => "C2",
            Smoothness::C4 => "C4",
            Smoothness::CInf => "Cinf",
        };
        f.write_str(s)
    }
}

/// Function classes a field belongs to; verifiers skip out-of-class pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FieldClasses {
    pub bounded: bool,
    pub lipschitz: bool,
    pub bounded_hessian: bool,
    pub nonnegative: bool,
    /// Strictly positive with a uniform floor.
    pub positive: bool,
}

impl FieldClasses {
    fn and(self, o: FieldClasses) -> FieldClasses {
        FieldClasses {
            bounded: self.bounded && o.bounded,
            lipschitz: self.lipschitz && o.lipschitz,
            bounded_hessian: self.bounded_hessian && o.bounded_hessian,
            nonnegative: self.nonnegative && o.nonnegative,
            positive: self.positive && o.positive,
        }
    }
}

pub trait ScalarField: Send + Sync + fmt::Debug {
    fn id(&self) -> String;

    fn eval(&self, z: &[f64]) -> f64;

    /// Exact gradient over all flat coordinates, when available.
    fn gradient(&self, _z: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Exact Hessian, row-major `n x n`, when available.
    fn hessian(&self, _z: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::CInf
    }

    fn classes(&self) -> FieldClasses;

    fn has_exact_derivatives(&self) -> bool {
        false
    }
}

pub type FieldRef = Arc<dyn ScalarField>;

#[derive(Debug, Clone)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn id(&self) -> String {
        format!("const({})", self.0)
    }
    fn eval(&self, _z: &[f64]) -> f64 {
        self.0
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; z.len()])
    }
    fn hessian(&self, z: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; z.len() * z.len()])
    }
    fn classes(&self) -> FieldClasses {
        FieldClasses {
            bounded: true,
            lipschitz: true,
            bounded_hessian: true,
            nonnegative: self.0 >= 0.0,
            positive: self.0 > 0.0,
        }
    }
    fn has_exact_derivatives(&self) -> bool {
        true
    }
}

/// `scale * z[index]`.
#[derive(Debug, Clone)]
pub struct Coordinate {
    pub index: usize,
    pub scale: f64,
    pub label: String,
}

impl ScalarField for Coordinate {
    fn id(&self) -> String {
        self.label.clone()
    }
    fn eval(&self, z: &[f64]) -> f64 {
        self.scale * z[self.index]
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let mut g = vec![0.0; z.len()];
        g[self.index] = self.scale;
        Some(g)
    }
    fn hessian(&self, z: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; z.len() * z.len()])
    }
    fn classes(&self) -> FieldClasses {
        FieldClasses {
            bounded: false,
            lipschitz: true,
            bounded_hessian: true,
            nonnegative: false,
            positive: false,
        }
    }
    fn has_exact_derivatives(&self) -> bool {
        true
    }
}

/// `floor + exp(-|z - c|^2 / (2 s^2))`; `floor = 0` is the plain bump.
#[derive(Debug, Clone)]
pub struct GaussBump {
    pub center: f64,
    pub width: f64,
    pub floor: f64,
}

impl GaussBump {
    fn core(&self, z: &[f64]) -> f64 {
        let s2 = self.width * self.width;
        let r2: f64 = z.iter().map(|v| (v - self.center).powi(2)).sum();
        (-r2 / (2.0 * s2)).exp()
    }
}

impl ScalarField for GaussBump {
    fn id(&self) -> String {
        if self.floor > 0.0 {
            format!(
                "positive-bump({}, {}, {})",
                self.center, self.width, self.floor
            )
        } else {
            format!("gauss-bump({}, {})", self.center, self.width)
        }
    }
    fn eval(&self, z: &[f64]) -> f64 {
        self.floor + self.core(z)
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let s2 = self.width * self.width;
        let e = self.core(z);
        Some(z.iter().map(|v| -(v - self.center) / s2 * e).collect())
    }
    fn hessian(&self, z: &[f64]) -> Option<Vec<f64>> {
        let n = z.len();
        let s2 = self.width * self.width;
        let e = self.core(z);
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let a = (z[i] - self.center) * (z[j] - self.center) / (s2 * s2);
                let d = if i == j { 1.0 / s2 } else { 0.0 };
                h[i * n + j] = (a - d) * e;
            }
        }
        Some(h)
    }
    fn classes(&self) -> FieldClasses {
        FieldClasses {
            bounded: true,
            lipschitz: true,
            bounded_hessian: true,
            nonnegative: self.floor >= 0.0,
            positive: self.floor > 0.0,
        }
    }
    fn has_exact_derivatives(&self) -> bool {
        true
    }
}

/// Bivariate polynomial in `u = z[u_index]`, `v = z[v_index]`.
#[derive(Debug, Clone)]
pub struct Poly {
    pub coeffs: Vec<f64>,
    pub u_index: usize,
    pub v_index: usize,
}

impl Poly {
    /// `(a, b)` exponents of the `k`-th graded-lex monomial.
    fn exponents(k: usize) -> (i32, i32) {
        let mut deg = 0usize;
        let mut start = 0usize;
        while start + deg + 1 <= k {
            start += deg + 1;
            deg += 1;
        }
        let off = k - start;
        ((deg - off) as i32, off as i32)
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, _)| {
                let (a, b) = Self::exponents(k);
                (a + b) as usize
            })
            .max()
            .unwrap_or(0)
    }

    fn pw(x: f64, e: i32) -> f64 {
        if e <= 0 {
            1.0
        } else {
            x.powi(e)
        }
    }

    /// Returns (f, f_u, f_v, f_uu, f_uv, f_vv).
    fn jet(&self, u: f64, v: f64) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let (a, b) = Self::exponents(k);
            let (af, bf) = (a as f64, b as f64);
            out[0] += c * Self::pw(u, a) * Self::pw(v, b);
            if a >= 1 {
                out[1] += c * af * Self::pw(u, a - 1) * Self::pw(v, b);
            }
            if b >= 1 {
                out[2] += c * bf * Self::pw(u, a) * Self::pw(v, b - 1);
            }
            if a >= 2 {
                out[3] += c * af * (af - 1.0) * Self::pw(u, a - 2) * Self::pw(v, b);
            }
            if a >= 1 && b >= 1 {
                out[4] += c * af * bf * Self::pw(u, a - 1) * Self::pw(v, b - 1);
            }
            if b >= 2 {
                out[5] += c * bf * (bf - 1.0) * Self::pw(u, a) * Self::pw(v, b - 2);
            }
        }
        out
    }
}

impl ScalarField for Poly {
    fn id(&self) -> String {
        let c: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        format!("poly({})", c.join(", "))
    }
    fn eval(&self, z: &[f64]) -> f64 {
        self.jet(z[self.u_index], z[self.v_index])[0]
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let j = self.jet(z[self.u_index], z[self.v_index]);
        let mut g = vec![0.0; z.len()];
        g[self.u_index] += j[1];
        g[self.v_index] += j[2];
        Some(g)
    }
    fn hessian(&self, z: &[f64]) -> Option<Vec<f64>> {
        let n = z.len();
        let j = self.jet(z[self.u_index], z[self.v_index]);
        let (u, v) = (self.u_index, self.v_index);
        let mut h = vec![0.0; n * n];
        h[u * n + u] += j[3];
        h[u * n + v] += j[4];
        h[v * n + u] += j[4];
        h[v * n + v] += j[5];
        Some(h)
    }
    fn classes(&self) -> FieldClasses {
        let deg = self.degree();
        FieldClasses {
            bounded: deg == 0,
            lipschitz: deg <= 1,
            bounded_hessian: deg <= 2,
            nonnegative: deg == 0 && self.coeffs.first().copied().unwrap_or(0.0) >= 0.0,
            positive: deg == 0 && self.coeffs.first().copied().unwrap_or(0.0) > 0.0,
        }
    }
    fn has_exact_derivatives(&self) -> bool {
        true
    }
}

/// `tanh(z[index])`.
#[derive(Debug, Clone)]
pub struct TanhCoord {
    pub index: usize,
}

impl ScalarField for TanhCoord {
    fn id(&self) -> String {
        "tanh-p".into()
    }
    fn eval(&self, z: &[f64]) -> f64 {
        z[self.index].tanh()
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let t = z[self.index].tanh();
        let mut g = vec![0.0; z.len()];
        g[self.index] = 1.0 - t * t;
        Some(g)
    }
    fn hessian(&self, z: &[f64]) -> Option<Vec<f64>> {
        let n = z.len();
        let t = z[self.index].tanh();
        let mut h = vec![0.0; n * n];
        h[self.index * n + self.index] = -2.0 * t * (1.0 - t * t);
        Some(h)
    }
    fn classes(&self) -> FieldClasses {
        FieldClasses {
            bounded: true,
            lipschitz: true,
            bounded_hessian: true,
            nonnegative: false,
            positive: false,
        }
    }
    fn has_exact_derivatives(&self) -> bool {
        true
    }
}

/// `constant + sum_i a_i f_i`.
#[derive(Debug, Clone)]
pub struct Combination {
    pub constant: f64,
    pub terms: Vec<(f64, FieldRef)>,
}

impl ScalarField for Combination {
    fn id(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(a, f)| format!("{}*{}", a, f.id()))
            .collect();
        format!("{} + {}", self.constant, parts.join(" + "))
    }
    fn eval(&self, z: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|(a, f)| a * f.eval(z))
                .sum::<f64>()
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let mut g = vec![0.0; z.len()];
        for (a, f) in &self.terms {
            let gf = f.gradient(z)?;
            for (gi, v) in g.iter_mut().zip(gf) {
                *gi += a * v;
            }
        }
        Some(g)
    }
    fn hessian(&self, z: &[f64]) -> Option<Vec<f64>> {
        let mut h = vec![0.0; z.len() * z.len()];
        for (a, f) in &self.terms {
            let hf = f.hessian(z)?;
            for (hi, v) in h.iter_mut().zip(hf) {
                *hi += a * v;
            }
        }
        Some(h)
    }
    fn smoothness(&self) -> Smoothness {
        self.terms
            .iter()
            .map(|(_, f)| f.smoothness())
            .min()
            .unwrap_or(Smoothness::CInf)
    }
    fn classes(&self) -> FieldClasses {
        let mut c = FieldClasses {
            bounded: true,
            lipschitz: true,
            bounded_hessian: true,
            nonnegative: self.constant >= 0.0,
            positive: self.constant > 0.0,
        };
        for (a, f) in &self.terms {
            let mut fc = f.classes();
            if *a < 0.0 {
                fc.nonnegative = false;
                fc.positive = false;
            }
            let positive = c.positive || (fc.positive && *a > 0.0);
            c = c.and(fc);
            c.positive = positive && c.nonnegative;
        }
        c
    }
    fn has_exact_derivatives(&self) -> bool {
        self.terms.iter().all(|(_, f)| f.has_exact_derivatives())
    }
}

/// Hides the exact derivatives of the wrapped field.
#[derive(Debug, Clone)]
pub struct FdOnly(pub FieldRef);

impl ScalarField for FdOnly {
    fn id(&self) -> String {
        format!("fd[{}]", self.0.id())
    }
    fn eval(&self, z: &[f64]) -> f64 {
        self.0.eval(z)
    }
    fn smoothness(&self) -> Smoothness {
        self.0.smoothness()
    }
    fn classes(&self) -> FieldClasses {
        self.0.classes()
    }
}

/// Overrides the declared smoothness of the wrapped field.
#[derive(Debug, Clone)]
pub struct WithSmoothness(pub FieldRef, pub Smoothness);

impl ScalarField for WithSmoothness {
    fn id(&self) -> String {
        format!("{}[{}]", self.0.id(), self.1)
    }
    fn eval(&self, z: &[f64]) -> f64 {
        self.0.eval(z)
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        self.0.gradient(z)
    }
    fn hessian(&self, z: &[f64]) -> Option<Vec<f64>> {
        self.0.hessian(z)
    }
    fn smoothness(&self) -> Smoothness {
        self.1
    }
    fn classes(&self) -> FieldClasses {
        self.0.classes()
    }
    fn has_exact_derivatives(&self) -> bool {
        self.0.has_exact_derivatives()
    }
}

/// Closure-backed field without exact derivatives.
pub struct FnField<F> {
    pub label: String,
    pub func: F,
    pub classes: FieldClasses,
}

impl<F> fmt::Debug for FnField<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnField({})", self.label)
    }
}

impl<F> ScalarField for FnField<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn id(&self) -> String {
        self.label.clone()
    }
    fn eval(&self, z: &[f64]) -> f64 {
        (self.func)(z)
    }
    fn classes(&self) -> FieldClasses {
        self.classes
    }
}

fn parse_args(id: &str, name: &str) -> Result<Option<Vec<f64>>> {
    let Some(rest) = id.strip_prefix(name) else {
        return Ok(None);
    };
    let rest = rest.trim();
    let inner = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::Config(format!("malformed field id `{id}`")))?;
    if inner.trim().is_empty() {
        return Ok(Some(Vec::new()));
    }
    inner
        .split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number `{a}` in field id `{id}`")))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Resolves a library id against a coordinate layout.
pub fn parse_field(id: &str, layout: Layout) -> Result<FieldRef> {
    let id = id.trim();
    let first_fiber = layout.base_dim;
    if layout.fiber_dim == 0 && (id == "linear-xi" || id.starts_with("poly")) {
        return Err(Error::Config(format!("field `{id}` needs a fiber")));
    }
    match id {
        "linear-xi" => {
            return Ok(Arc::new(Coordinate {
                index: first_fiber,
                scale: 1.0,
                label: "linear-xi".into(),
            }))
        }
        "linear-p" => {
            return Ok(Arc::new(Coordinate {
                index: 0,
                scale: 1.0,
                label: "linear-p".into(),
            }))
        }
        "tanh-p" => return Ok(Arc::new(TanhCoord { index: 0 })),
        _ => {}
    }
    if let Some(a) = parse_args(id, "coord")? {
        let [i] = a[..] else {
            return Err(Error::Config(format!("coord takes one index: `{id}`")));
        };
        let index = i as usize;
        if i < 0.0 || i.fract() != 0.0 || index >= layout.total() {
            return Err(Error::Config(format!("coordinate out of range: `{id}`")));
        }
        return Ok(Arc::new(Coordinate {
            index,
            scale: 1.0,
            label: format!("coord({index})"),
        }));
    }
    if let Some(a) = parse_args(id, "gauss-bump")? {
        let [c, s] = a[..] else {
            return Err(Error::Config(format!("gauss-bump takes (c, s): `{id}`")));
        };
        if s <= 0.0 {
            return Err(Error::Config(format!("bump width must be positive: `{id}`")));
        }
        return Ok(Arc::new(GaussBump {
            center: c,
            width: s,
            floor: 0.0,
        }));
    }
    if let Some(a) = parse_args(id, "positive-bump")? {
        let (c, s, floor) = match a[..] {
            [c, s] => (c, s, 0.1),
            [c, s, fl] => (c, s, fl),
            _ => {
                return Err(Error::Config(format!(
                    "positive-bump takes (c, s[, floor]): `{id}`"
                )))
            }
        };
        if s <= 0.0 || floor <= 0.0 {
            return Err(Error::Config(format!(
                "positive-bump needs s > 0 and floor > 0: `{id}`"
            )));
        }
        return Ok(Arc::new(GaussBump {
            center: c,
            width: s,
            floor,
        }));
    }
    if let Some(a) = parse_args(id, "poly")? {
        if a.is_empty() {
            return Err(Error::Config("poly needs coefficients".into()));
        }
        return Ok(Arc::new(Poly {
            coeffs: a,
            u_index: 0,
            v_index: first_fiber,
        }));
    }
    if let Some(a) = parse_args(id, "const")? {
        let [c] = a[..] else {
            return Err(Error::Config(format!("const takes one value: `{id}`")));
        };
        return Ok(Arc::new(Constant(c)));
    }
    Err(Error::Config(format!("unknown field id `{id}`")))
}

/// Gradient over all flat coordinates: exact when the field provides it,
/// otherwise central differences with step `1e-4 * max(1, |z|)`.
pub fn flat_gradient(f: &dyn ScalarField, z: &[f64]) -> Vec<f64> {
    if let Some(g) = f.gradient(z) {
        return g;
    }
    let h = 1e-4 * crate::point::norm(z).max(1.0);
    let mut w = z.to_vec();
    (0..z.len())
        .map(|i| {
            w[i] = z[i] + h;
            let up = f.eval(&w);
            w[i] = z[i] - h;
            let dn = f.eval(&w);
            w[i] = z[i];
            (up - dn) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_grad(f: &dyn ScalarField, z: &[f64], h: f64) -> Vec<f64> {
        (0..z.len())
            .map(|i| {
                let mut a = z.to_vec();
                let mut b = z.to_vec();
                a[i] += h;
                b[i] -= h;
                (f.eval(&a) - f.eval(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn exact_gradients_match_central_differences() {
        let layout = Layout::new(2, 2, 1);
        let ids = [
            "linear-xi",
            "linear-p",
            "gauss-bump(0.3, 1.2)",
            "positive-bump(-0.5, 0.8, 0.1)",
            "poly(1, -2, 0.5, 0.25, 1, -0.75, 0.1, 0.2, -0.3, 0.05)",
            "tanh-p",
            "const(2)",
            "coord(3)",
        ];
        let z = [0.4, -0.7, 1.1, 0.2];
        let h = 1e-4;
        for id in ids {
            let f = parse_field(id, layout).unwrap();
            let g = f.gradient(&z).unwrap();
            let fd = fd_grad(f.as_ref(), &z, h);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() <= 10.0 * h * h, "{id}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn exact_hessians_match_differenced_gradients() {
        let layout = Layout::new(1, 1, 2);
        let z = [0.3, -0.4, 0.9];
        for id in [
            "gauss-bump(0, 1)",
            "poly(0, 0, 0, 1, 2, 3, 1, 1, 1, 1)",
            "tanh-p",
        ] {
            let f = parse_field(id, layout).unwrap();
            let h = f.hessian(&z).unwrap();
            let n = z.len();
            for j in 0..n {
                let mut a = z.to_vec();
                let mut b = z.to_vec();
                a[j] += 1e-5;
                b[j] -= 1e-5;
                let ga = f.gradient(&a).unwrap();
                let gb = f.gradient(&b).unwrap();
                for i in 0..n {
                    let fd = (ga[i] - gb[i]) / 2e-5;
                    assert!((h[i * n + j] - fd).abs() < 1e-7, "{id} H[{i},{j}]");
                }
            }
        }
    }

    #[test]
    fn poly_monomial_order() {
        assert_eq!(Poly::exponents(0), (0, 0));
        assert_eq!(Poly::exponents(1), (1, 0));
        assert_eq!(Poly::exponents(2), (0, 1));
        assert_eq!(Poly::exponents(4), (1, 1));
        assert_eq!(Poly::exponents(5), (0, 2));
        assert_eq!(Poly::exponents(9), (0, 3));
        let f = parse_field("poly(0, 0, 0, 0, 1, 0)", Layout::new(1, 1, 1)).unwrap();
        assert_eq!(f.eval(&[2.0, 3.0]), 6.0);
    }

    #[test]
    fn positive_fields_stay_positive() {
        let f = parse_field("positive-bump(0, 1, 0.1)", Layout::new(1, 1, 1)).unwrap();
        assert!(f.classes().positive);
        for k in 0..200 {
            let x = -50.0 + k as f64 * 0.5;
            assert!(f.eval(&[x, -x]) > 0.0);
        }
        let g = parse_field("gauss-bump(0, 1)", Layout::new(1, 1, 1)).unwrap();
        assert!(!g.classes().positive && g.classes().nonnegative);
    }

    #[test]
    fn rejects_malformed_ids() {
        let l = Layout::new(1, 1, 1);
        assert!(parse_field("gauss-bump(1)", l).is_err());
        assert!(parse_field("gauss-bump(0, -1)", l).is_err());
        assert!(parse_field("nope", l).is_err());
        assert!(parse_field("coord(7)", l).is_err());
        assert!(parse_field("positive-bump(0, 1, 0)", l).is_err());
    }

    #[test]
    fn combination_classes_and_derivatives() {
        let l = Layout::new(1, 1, 1);
        let a = parse_field("gauss-bump(0, 1)", l).unwrap();
        let b = parse_field("linear-xi", l).unwrap();
        let c = Combination {
            constant: 0.5,
            terms: vec![(2.0, a), (-1.0, b)],
        };
        assert!(!c.classes().bounded);
        assert!(c.classes().lipschitz);
        let z = [0.2, 0.1];
        let g = c.gradient(&z).unwrap();
        let fd = fd_grad(&c, &z, 1e-5);
        assert!((g[0] - fd[0]).abs() < 1e-8 && (g[1] - fd[1]).abs() < 1e-8);
    }
}
