//! Generator descriptions: base geometry, diffusion scale, fiber lift map and
//! curvature data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FrameConvention, Geometry};
use crate::point::Layout;

/// Time scale of the base motion: generator `(sigma^2/2) Delta` (`Half`) or
/// `sigma^2 Delta` (`Full`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    Half,
    Full,
}

impl Normalization {
    pub fn label(self) -> &'static str {
        match self {
            Normalization::Half => "half-laplacian",
            Normalization::Full => "laplacian",
        }
    }
}

/// Fiber drift `sigma(p)` feeding the first integral level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Lift {
    /// Ambient coordinates of the base point.
    Inclusion,
    /// `scale * p`.
    Scaled { scale: f64 },
    Constant { value: Vec<f64> },
    /// Componentwise `sin(p_i)`.
    Sine,
    /// `(x, y, 0)` on the Heisenberg group.
    HorizontalXy,
}

impl Lift {
    pub fn out_dim(&self, geometry: Geometry) -> usize {
        match self {
            Lift::Constant { value } => value.len(),
            Lift::HorizontalXy => 3,
            _ => geometry.ambient_dim(),
        }
    }

    pub fn value(&self, p: &[f64]) -> Vec<f64> {
        match self {
            Lift::Inclusion => p.to_vec(),
            Lift::Scaled { scale } => p.iter().map(|v| scale * v).collect(),
            Lift::Constant { value } => value.clone(),
            Lift::Sine => p.iter().map(|v| v.sin()).collect(),
            Lift::HorizontalXy => vec![p[0], p[1], 0.0],
        }
    }

    /// [`value`](Self::value) written into `out` (length `out_dim`).
    pub fn value_into(&self, p: &[f64], out: &mut [f64]) {
        match self {
            Lift::Inclusion => out.copy_from_slice(p),
            Lift::Scaled { scale } => out.iter_mut().zip(p).for_each(|(o, v)| *o = scale * v),
            Lift::Constant { value } => out.copy_from_slice(value),
            Lift::Sine => out.iter_mut().zip(p).for_each(|(o, v)| *o = v.sin()),
            Lift::HorizontalXy => {
                out[0] = p[0];
                out[1] = p[1];
                out[2] = 0.0;
            }
        }
    }

    /// Jacobian with respect to ambient base coordinates, row-major
    /// `out_dim x p.len()`.
    pub fn jacobian(&self, p: &[f64], out_dim: usize) -> Vec<f64> {
        let n = p.len();
        let mut j = vec![0.0; out_dim * n];
        match self {
            Lift::Inclusion => (0..n).for_each(|i| j[i * n + i] = 1.0),
            Lift::Scaled { scale } => (0..n).for_each(|i| j[i * n + i] = *scale),
            Lift::Constant { .. } => {}
            Lift::Sine => (0..n).for_each(|i| j[i * n + i] = p[i].cos()),
            Lift::HorizontalXy => {
                j[0] = 1.0;
                j[n + 1] = 1.0;
            }
        }
        j
    }

    /// Lipschitz constant with respect to the intrinsic base distance, when
    /// one exists.
    pub fn lipschitz(&self, geometry: Geometry) -> Option<f64> {
        match (self, geometry) {
            (Lift::Constant { .. }, _) => Some(0.0),
            (Lift::Inclusion, Geometry::Hyperboloid(_)) => None,
            (Lift::Scaled { .. }, Geometry::Hyperboloid(_)) => None,
            (Lift::Inclusion, Geometry::Heisenberg) => None,
            (Lift::Scaled { .. }, Geometry::Heisenberg) => None,
            (Lift::Inclusion, _) => Some(1.0),
            (Lift::Scaled { scale }, _) => Some(scale.abs()),
            (Lift::Sine, Geometry::Heisenberg) => None,
            (Lift::Sine, _) => Some(1.0),
            (Lift::HorizontalXy, Geometry::Heisenberg) => Some(1.0),
            (Lift::HorizontalXy, _) => None,
        }
    }
}

/// Affine vector field `V(p) = A p + b` on a flat base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineField {
    /// Row-major `d x d`; empty means zero.
    #[serde(default)]
    pub matrix: Vec<f64>,
    pub offset: Vec<f64>,
}

impl AffineField {
    pub fn coordinate(d: usize, i: usize, scale: f64) -> Self {
        let mut offset = vec![0.0; d];
        offset[i] = scale;
        Self {
            matrix: Vec::new(),
            offset,
        }
    }

    pub fn value(&self, p: &[f64]) -> Vec<f64> {
        let d = self.offset.len();
        let mut v = self.offset.clone();
        if !self.matrix.is_empty() {
            for i in 0..d {
                for k in 0..d {
                    v[i] += self.matrix[i * d + k] * p[k];
                }
            }
        }
        v
    }

    /// `A w`.
    pub fn apply_linear(&self, w: &[f64]) -> Vec<f64> {
        let d = self.offset.len();
        if self.matrix.is_empty() {
            return vec![0.0; d];
        }
        (0..d)
            .map(|i| (0..d).map(|k| self.matrix[i * d + k] * w[k]).sum())
            .collect()
    }
}

/// Explicit `L = sum V_i^2 + V_0 + <sigma(p), grad_xi>` on a flat base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorFields {
    pub fields: Vec<AffineField>,
    #[serde(default)]
    pub drift: Option<AffineField>,
}

impl VectorFields {
    /// `V_i = d/dp_i`.
    pub fn coordinate(d: usize) -> Self {
        Self {
            fields: (0..d).map(|i| AffineField::coordinate(d, i, 1.0)).collect(),
            drift: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub geometry: Geometry,
    pub sigma: f64,
    pub lift: Lift,
    #[serde(default = "one")]
    pub levels: usize,
    /// Declared Lipschitz constant of the lift.
    pub c_sigma: f64,
    /// Lower bound `rho` in the curvature-dimension inequality.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub vector_fields: Option<VectorFields>,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub frame: FrameConvention,
}

fn one() -> usize {
    1
}

impl GeneratorSpec {
    /// `<p, grad_xi> + (sigma^2/2) Delta_p` on `R^d x R^d`.
    pub fn flat_kolmogorov(d: usize, sigma: f64) -> Self {
        Self {
            geometry: Geometry::Euclidean(d),
            sigma,
            lift: Lift::Inclusion,
            levels: 1,
            c_sigma: 1.0,
            rho: None,
            vector_fields: None,
            normalization: Normalization::Half,
            frame: FrameConvention::GroupLaw,
        }
    }

    /// Iterated flat diffusion with `levels` integral levels.
    pub fn iterated_flat(d: usize, sigma: f64, levels: usize) -> Self {
        Self {
            levels,
            ..Self::flat_kolmogorov(d, sigma)
        }
    }

    /// Relativistic diffusion on the hyperboloid with Minkowski fiber.
    pub fn relativistic(d: usize, sigma: f64) -> Self {
        Self {
            geometry: Geometry::Hyperboloid(d),
            c_sigma: 0.0,
            ..Self::flat_kolmogorov(d, sigma)
        }
    }

    /// Sphere with the ambient inclusion as lift (`C_sigma = 1`).
    pub fn sphere_lift(d: usize, sigma: f64) -> Self {
        Self {
            geometry: Geometry::Sphere(d),
            rho: None,
            ..Self::flat_kolmogorov(d, sigma)
        }
    }

    /// Heisenberg group with lift `(x, y, 0)`.
    pub fn heisenberg(sigma: f64) -> Self {
        Self {
            geometry: Geometry::Heisenberg,
            lift: Lift::HorizontalXy,
            c_sigma: 1.0,
            ..Self::flat_kolmogorov(3, sigma)
        }
    }

    /// Flat generator written with explicit vector fields `V_i = d/dp_i`.
    pub fn general_flat(d: usize, lift: Lift, c_sigma: f64, rho: f64) -> Self {
        Self {
            geometry: Geometry::Euclidean(d),
            sigma: std::f64::consts::SQRT_2,
            lift,
            levels: 1,
            c_sigma,
            rho: Some(rho),
            vector_fields: Some(VectorFields::coordinate(d)),
            normalization: Normalization::Half,
            frame: FrameConvention::GroupLaw,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.c_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "C_sigma must be nonnegative, got {}",
                self.c_sigma
            )));
        }
        if self.levels == 0 {
            return Err(Error::Config("levels must be >= 1".into()));
        }
        if let Some(vf) = &self.vector_fields {
            let Geometry::Euclidean(d) = self.geometry else {
                return Err(Error::UnsupportedGeometry(
                    "explicit vector fields need a flat base".into(),
                ));
            };
            let dims_ok = vf
                .fields
                .iter()
                .chain(vf.drift.iter())
                .all(|f| f.offset.len() == d && (f.matrix.is_empty() || f.matrix.len() == d * d));
            if !dims_ok {
                return Err(Error::Config("vector field dimension mismatch".into()));
            }
        }
        if let Lift::Constant { value } = &self.lift {
            if value.is_empty() {
                return Err(Error::Config("constant lift needs a value".into()));
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        Layout::new(
            self.geometry.ambient_dim(),
            self.lift.out_dim(self.geometry),
            self.levels,
        )
    }

    /// Diffusion scale after applying the normalization switch.
    pub fn effective_sigma(&self) -> f64 {
        match self.normalization {
            Normalization::Half => self.sigma,
            Normalization::Full => self.sigma * std::f64::consts::SQRT_2,
        }
    }

    /// Curvature lower bound used by the couplings: `rho` when declared,
    /// otherwise the geometry's Ricci lower bound.
    pub fn ricci(&self) -> Option<f64> {
        self.rho.or(self.geometry.ricci_lower_bound())
    }
}

/// Coefficients `(alpha, beta)` of the twisted bilinear form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl GammaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be >= 0, got {beta}")));
        }
        Ok(Self { alpha, beta })
    }
}

/// Closed-form schedule `c0 + c1 s + c2 s^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum Schedule {
    Affine { c0: f64, c1: f64 },
    Quadratic { c0: f64, c1: f64, c2: f64 },
}

impl Schedule {
    pub fn at(&self, s: f64) -> f64 {
        match *self {
            Schedule::Affine { c0, c1 } => c0 + c1 * s,
            Schedule::Quadratic { c0, c1, c2 } => c0 + c1 * s + c2 * s * s,
        }
    }

    fn min_on(&self, t: f64) -> f64 {
        let mut m = self.at(0.0).min(self.at(t));
        if let Schedule::Quadratic { c1, c2, .. } = *self {
            if c2 != 0.0 {
                let s = -c1 / (2.0 * c2);
                if s > 0.0 && s < t {
                    m = m.min(self.at(s));
                }
            }
        }
        m
    }
}

/// Time-dependent `(alpha(s), beta(s))` on `[0, t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledParams {
    pub alpha: Schedule,
    pub beta: Schedule,
    pub horizon: f64,
}

impl ScheduledParams {
    pub fn new(alpha: Schedule, beta: Schedule, horizon: f64) -> Result<Self> {
        if beta.min_on(horizon) < -1e-15 {
            return Err(Error::InvalidArgument(
                "beta schedule must be nonnegative on [0, t]".into(),
            ));
        }
        Ok(Self {
            alpha,
            beta,
            horizon,
        })
    }

    /// `alpha(s) = -s`, `beta = 0`.
    pub fn gradient_bound(t: f64) -> Self {
        Self {
            alpha: Schedule::Affine { c0: 0.0, c1: -1.0 },
            beta: Schedule::Affine { c0: 0.0, c1: 0.0 },
            horizon: t,
        }
    }

    /// `alpha(s) = (t - s)/2`, `beta(s) = (t - s)^2 / 12`.
    pub fn reverse(t: f64) -> Self {
        Self {
            alpha: Schedule::Affine {
                c0: t / 2.0,
                c1: -0.5,
            },
            beta: Schedule::Quadratic {
                c0: t * t / 12.0,
                c1: -t / 6.0,
                c2: 1.0 / 12.0,
            },
            horizon: t,
        }
    }

    pub fn at(&self, s: f64) -> GammaParams {
        GammaParams {
            alpha: self.alpha.at(s),
            beta: self.beta.at(s).max(0.0),
        }
    }
}
