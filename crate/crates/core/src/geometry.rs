//! Geometry kernels: Euclidean space, round spheres, the hyperboloid model of
//! hyperbolic space in Minkowski space, and the 3-D Heisenberg group.
//!
//! Points and tangent vectors are ambient coordinate vectors: `R^d` for
//! Euclidean space, `R^{d+1}` for the sphere and the hyperboloid (coordinate 0
//! is the time-like one), `(x, y, z)` for the Heisenberg group.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{dot, norm};

/// Sphere log-map refuses pairs whose angle exceeds `PI - CUT_LOCUS_GAP`.
pub const CUT_LOCUS_GAP: f64 = 1e-6;

const TANGENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Geometry {
    Euclidean(usize),
    Sphere(usize),
    Hyperboloid(usize),
    Heisenberg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub parallel_transport: bool,
    pub log_map: bool,
    pub sub_riemannian: bool,
}

/// Which sign convention to use for the Heisenberg `Y` field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FrameConvention {
    /// Left translates of the coordinate fields at the identity under the
    /// group law: `Y = d/dy + (x/2) d/dz`.
    #[default]
    GroupLaw,
    /// `Y = d/dy - (x/2) d/dz`; commutes with `X`, kept for comparison only.
    Printed,
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Euclidean(d) => write!(f, "euclidean-{d}"),
            Geometry::Sphere(d) => write!(f, "sphere-{d}"),
            Geometry::Hyperboloid(d) => write!(f, "hyperboloid-{d}"),
            Geometry::Heisenberg => write!(f, "heisenberg"),
        }
    }
}

impl FromStr for Geometry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "heisenberg" {
            return Ok(Geometry::Heisenberg);
        }
        let (name, dim) = s
            .rsplit_once('-')
            .ok_or_else(|| Error::Config(format!("unknown geometry `{s}`")))?;
        let d: usize = dim
            .parse()
            .map_err(|_| Error::Config(format!("bad geometry dimension in `{s}`")))?;
        if d == 0 {
            return Err(Error::Config(format!("geometry dimension must be >= 1: `{s}`")));
        }
        match name {
            "euclidean" => Ok(Geometry::Euclidean(d)),
            "sphere" => Ok(Geometry::Sphere(d)),
            "hyperboloid" => Ok(Geometry::Hyperboloid(d)),
            _ => Err(Error::Config(format!("unknown geometry `{s}`"))),
        }
    }
}

impl TryFrom<String> for Geometry {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Geometry> for String {
    fn from(g: Geometry) -> String {
        g.to_string()
    }
}

/// Minkowski form `q(a, b) = a0 b0 - sum_{i>=1} a_i b_i`.
pub fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] - dot(&a[1..], &b[1..])
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

fn scaled(a: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| a * v).collect()
}

fn lin2(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + b * yi).collect()
}

impl Geometry {
    pub fn id(&self) -> String {
        self.to_string()
    }

    /// Intrinsic (topological) dimension.
    pub fn dim(&self) -> usize {
        match *self {
            Geometry::Euclidean(d) | Geometry::Sphere(d) | Geometry::Hyperboloid(d) => d,
            Geometry::Heisenberg => 3,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            Geometry::Euclidean(d) => d,
            Geometry::Sphere(d) | Geometry::Hyperboloid(d) => d + 1,
            Geometry::Heisenberg => 3,
        }
    }

    /// Number of (horizontal) frame directions driven by noise.
    pub fn frame_dim(&self) -> usize {
        match *self {
            Geometry::Heisenberg => 2,
            g => g.dim(),
        }
    }

    /// Ricci lower bound `K`; `None` for the sub-Riemannian case.
    pub fn ricci_lower_bound(&self) -> Option<f64> {
        match *self {
            Geometry::Euclidean(_) => Some(0.0),
            Geometry::Sphere(d) => Some(d as f64 - 1.0),
            Geometry::Hyperboloid(d) => Some(-(d as f64 - 1.0)),
            Geometry::Heisenberg => None,
        }
    }

    pub fn capabilities(&self) -> Capabilities {
        let riemannian = !matches!(self, Geometry::Heisenberg);
        Capabilities {
            parallel_transport: riemannian,
            log_map: riemannian,
            sub_riemannian: !riemannian,
        }
    }

    /// A canonical base point: origin, north pole `e0`, or the identity.
    pub fn origin(&self) -> Vec<f64> {
        let mut o = vec![0.0; self.ambient_dim()];
        if matches!(self, Geometry::Sphere(_) | Geometry::Hyperboloid(_)) {
            o[0] = 1.0;
        }
        o
    }

    /// Distance of `x` from the constraint set in ambient terms.
    pub fn constraint_residual(&self, x: &[f64]) -> f64 {
        match self {
            Geometry::Sphere(_) => (dot(x, x) - 1.0).abs(),
            Geometry::Hyperboloid(_) => {
                let r = (minkowski(x, x) - 1.0).abs();
                if x[0] <= 0.0 {
                    f64::INFINITY
                } else {
                    r
                }
            }
            _ => 0.0,
        }
    }

    /// Retracts an ambient vector onto the manifold.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Geometry::Sphere(_) => {
                let n = norm(x);
                scaled(1.0 / n, x)
            }
            Geometry::Hyperboloid(_) => {
                let mut y = x.to_vec();
                y[0] = (1.0 + dot(&x[1..], &x[1..])).sqrt();
                y
            }
            _ => x.to_vec(),
        }
    }

    /// Riemannian inner product of tangent vectors at `x` (horizontal metric
    /// for the Heisenberg group).
    pub fn inner(&self, x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        match self {
            Geometry::Hyperboloid(_) => -minkowski(u, v),
            Geometry::Heisenberg => {
                let _ = x;
                u[0] * v[0] + u[1] * v[1]
            }
            _ => dot(u, v),
        }
    }

    pub fn tangent_norm(&self, x: &[f64], v: &[f64]) -> f64 {
        self.inner(x, v, v).max(0.0).sqrt()
    }

    fn tangent_residual(&self, x: &[f64], v: &[f64]) -> f64 {
        match self {
            Geometry::Sphere(_) => dot(x, v).abs() / (1.0 + norm(v)),
            Geometry::Hyperboloid(_) => minkowski(x, v).abs() / (1.0 + norm(v)),
            Geometry::Heisenberg => {
                let expect = 0.5 * (x[0] * v[1] - x[1] * v[0]);
                (v[2] - expect).abs() / (1.0 + norm(v))
            }
            Geometry::Euclidean(_) => 0.0,
        }
    }

    pub fn check_tangent(&self, x: &[f64], v: &[f64]) -> Result<()> {
        let r = self.tangent_residual(x, v);
        if r > TANGENT_TOL {
            Err(Error::NotTangent(r))
        } else {
            Ok(())
        }
    }

    /// Orthogonal projection onto the tangent space at `x` (horizontal
    /// space for the Heisenberg group).
    pub fn project_tangent(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            Geometry::Sphere(_) => axpy(-dot(x, v), x, v),
            Geometry::Hyperboloid(_) => axpy(-minkowski(v, x), x, v),
            Geometry::Heisenberg => {
                let f = heisenberg_frame(x, FrameConvention::GroupLaw);
                lin2(v[0], &f[0], v[1], &f[1])
            }
            Geometry::Euclidean(_) => v.to_vec(),
        }
    }

    /// Orthonormal tangent frame at `x` (ambient vectors).
    ///
    /// Sphere and hyperboloid frames are the images of the coordinate frame
    /// at `e0` under the rotation (resp. boost) in the plane of `e0` and `x`,
    /// so they vary smoothly in `x`.
    pub fn frame(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match *self {
            Geometry::Euclidean(d) => (0..d)
                .map(|i| {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    e
                })
                .collect(),
            Geometry::Sphere(d) => {
                if x[0] > -0.5 {
                    let c = 1.0 + x[0];
                    (1..=d)
                        .map(|i| {
                            let mut e: Vec<f64> = x.iter().map(|xk| -x[i] / c * xk).collect();
                            e[0] -= x[i] / c;
                            e[i] += 1.0;
                            e
                        })
                        .collect()
                } else {
                    // Mirror through the equator to stay away from the
                    // singular point of the rotation frame.
                    let mut m = x.to_vec();
                    m[0] = -m[0];
                    Geometry::Sphere(d)
                        .frame(&m)
                        .into_iter()
                        .map(|mut e| {
                            e[0] = -e[0];
                            e
                        })
                        .collect()
                }
            }
            Geometry::Hyperboloid(d) => {
                let c = 1.0 + x[0];
                (1..=d)
                    .map(|i| {
                        let mut e: Vec<f64> = vec![0.0; d + 1];
                        e[0] = x[i];
                        for k in 1..=d {
                            e[k] = x[i] * x[k] / c;
                        }
                        e[i] += 1.0;
                        e
                    })
                    .collect()
            }
            Geometry::Heisenberg => {
                let f = heisenberg_frame(x, FrameConvention::GroupLaw);
                vec![f[0].clone(), f[1].clone()]
            }
        }
    }

    /// Geodesic exponential map (Heisenberg: `x * (a, b, 0)` for the
    /// horizontal vector `a X + b Y`).
    pub fn exp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_tangent(x, v)?;
        Ok(self.exp_unchecked(x, v))
    }

    pub(crate) fn exp_unchecked(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            Geometry::Euclidean(_) => x.iter().zip(v).map(|(a, b)| a + b).collect(),
            Geometry::Sphere(_) => {
                let n = norm(v);
                if n == 0.0 {
                    return x.to_vec();
                }
                let y = lin2(n.cos(), x, n.sin() / n, v);
                self.project(&y)
            }
            Geometry::Hyperboloid(_) => {
                let n = self.tangent_norm(x, v);
                if n == 0.0 {
                    return x.to_vec();
                }
                let y = lin2(n.cosh(), x, n.sinh() / n, v);
                self.project(&y)
            }
            Geometry::Heisenberg => heis_mul(x, &[v[0], v[1], 0.0]),
        }
    }

    pub fn log(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        match self {
            Geometry::Euclidean(_) => Ok(y.iter().zip(x).map(|(a, b)| a - b).collect()),
            Geometry::Sphere(_) => {
                let theta = self.dist(x, y)?;
                if theta > std::f64::consts::PI - CUT_LOCUS_GAP {
                    return Err(Error::CutLocus(theta));
                }
                let u = axpy(-dot(x, y), x, y);
                let un = norm(&u);
                if un == 0.0 || theta == 0.0 {
                    return Ok(vec![0.0; x.len()]);
                }
                Ok(scaled(theta / un, &u))
            }
            Geometry::Hyperboloid(_) => {
                let d = self.dist(x, y)?;
                let u = axpy(-minkowski(x, y), x, y);
                let un = self.tangent_norm(x, &u);
                if un == 0.0 || d == 0.0 {
                    return Ok(vec![0.0; x.len()]);
                }
                Ok(scaled(d / un, &u))
            }
            Geometry::Heisenberg => Err(Error::UnsupportedGeometry(
                "the Heisenberg group has no log map here".into(),
            )),
        }
    }

    pub fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Geometry::Euclidean(_) => {
                Ok(norm(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>()))
            }
            Geometry::Sphere(_) => {
                let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                Ok(2.0 * norm(&diff).atan2(norm(&sum)))
            }
            Geometry::Hyperboloid(_) => {
                let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                let chord = (-minkowski(&diff, &diff)).max(0.0).sqrt();
                Ok(2.0 * (0.5 * chord).asinh())
            }
            Geometry::Heisenberg => Err(Error::UnsupportedGeometry(
                "Carnot-Caratheodory distance is not provided".into(),
            )),
        }
    }

    /// Parallel transport of `v` from `x` to `y` along the minimal geodesic.
    pub fn transport(&self, x: &[f64], y: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        match self {
            Geometry::Euclidean(_) => Ok(v.to_vec()),
            Geometry::Sphere(_) => {
                let w = self.log(x, y)?;
                let theta = norm(&w);
                if theta == 0.0 {
                    return Ok(v.to_vec());
                }
                let u = scaled(1.0 / theta, &w);
                let a = dot(v, &u);
                let perp = axpy(-a, &u, v);
                let moved = lin2(-theta.sin(), x, theta.cos(), &u);
                Ok(axpy(a, &moved, &perp))
            }
            Geometry::Hyperboloid(_) => {
                let w = self.log(x, y)?;
                let d = self.tangent_norm(x, &w);
                if d == 0.0 {
                    return Ok(v.to_vec());
                }
                let u = scaled(1.0 / d, &w);
                let a = -minkowski(v, &u);
                let perp = axpy(-a, &u, v);
                let moved = lin2(d.sinh(), x, d.cosh(), &u);
                Ok(axpy(a, &moved, &perp))
            }
            Geometry::Heisenberg => Err(Error::UnsupportedGeometry(
                "parallel transport is not defined on the Heisenberg group".into(),
            )),
        }
    }
}

/// Heisenberg group law.
pub fn heis_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[0] + b[0],
        a[1] + b[1],
        a[2] + b[2] + 0.5 * (a[0] * b[1] - b[0] * a[1]),
    ]
}

pub fn heis_inv(a: &[f64]) -> Vec<f64> {
    vec![-a[0], -a[1], -a[2]]
}

/// Left-invariant frame `(X, Y, Z)` at `p` as ambient vectors.
pub fn heisenberg_frame(p: &[f64], convention: FrameConvention) -> [Vec<f64>; 3] {
    let (x, y) = (p[0], p[1]);
    let ysign = match convention {
        FrameConvention::GroupLaw => 1.0,
        FrameConvention::Printed => -1.0,
    };
    [
        vec![1.0, 0.0, -0.5 * y],
        vec![0.0, 1.0, ysign * 0.5 * x],
        vec![0.0, 0.0, 1.0],
    ]
}
