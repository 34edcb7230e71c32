//! Riemannian geometry backends.
//!
//! Every backend implements [`Manifold`]: geodesic distance, exponential and
//! logarithm maps, the Riemannian metric, and the curvature bounds and
//! injectivity radius collected in a [`ManifoldDescriptor`]. Points and
//! tangent vectors share one ambient coordinate type per backend:
//!
//! | backend      | point                                   | tangent at `x`               |
//! |--------------|-----------------------------------------|------------------------------|
//! | [`Euclidean`]  | `Vec<f64>` of length `n`              | any vector                   |
//! | [`Sphere`]     | unit vector in R³                     | orthogonal to `x`            |
//! | [`Hyperbolic`] | `(x, y, z)`, `z > 0`, `z² − x² − y² = 1` | Minkowski-orthogonal to `x` |
//! | [`So3`]        | unit quaternion `(w, x, y, z)`, `w ≥ 0` | orthogonal to `x` in R⁴    |
//!
//! The SO(3) metric is scaled so that the distance between two rotations is
//! the angle of their relative rotation; with that normalization the
//! sectional curvature is `1/4` and the injectivity radius is `π`.

mod euclidean;
mod hyperbolic;
pub(crate) mod sampling;
mod so3;
mod sphere;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use euclidean::Euclidean;
pub use hyperbolic::Hyperbolic;
pub use sampling::{sample_ball, SamplingScheme};
pub use so3::So3;
pub use sphere::Sphere;

/// Distances closer than this to the injectivity radius are treated as cut-locus hits.
pub const CUT_LOCUS_MARGIN: f64 = 1e-9;

/// Below this norm the exp/log maps switch to Taylor expansions.
pub(crate) const SMALL_ANGLE: f64 = 1e-8;

/// Tolerance on tangency when constructing a [`TangentVector`].
pub const TANGENCY_TOLERANCE: f64 = 1e-10;

/// Fixed-point iteration limit for [`frechet_mean`].
pub const FRECHET_MAX_ITERATIONS: usize = 200;

/// Gradient-norm tolerance for [`frechet_mean`].
pub const FRECHET_TOLERANCE: f64 = 1e-12;

/// Ambient coordinates of a point or tangent vector.
pub trait Coords: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    fn as_slice(&self) -> &[f64];
    fn as_mut_slice(&mut self) -> &mut [f64];

    /// A zero vector of the same shape.
    fn zeros_like(&self) -> Self;
}

impl<const N: usize> Coords for [f64; N] {
    fn as_slice(&self) -> &[f64] {
        self
    }

    fn as_mut_slice(&mut self) -> &mut [f64] {
        self
    }

    fn zeros_like(&self) -> Self {
        [0.0; N]
    }
}

impl Coords for Vec<f64> {
    fn as_slice(&self) -> &[f64] {
        self
    }

    fn as_mut_slice(&mut self) -> &mut [f64] {
        self
    }

    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }
}

/// Plain ambient-coordinate arithmetic.
pub mod coords {
    use super::Coords;

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn norm(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    /// `y += alpha * x`
    pub fn axpy<C: Coords>(alpha: f64, x: &C, y: &mut C) {
        for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
            *yi += alpha * xi;
        }
    }

    pub fn scaled<C: Coords>(x: &C, alpha: f64) -> C {
        let mut out = x.clone();
        for v in out.as_mut_slice() {
            *v *= alpha;
        }
        out
    }

    /// `a - b`
    pub fn sub<C: Coords>(a: &C, b: &C) -> C {
        let mut out = a.clone();
        for (o, bi) in out.as_mut_slice().iter_mut().zip(b.as_slice()) {
            *o -= bi;
        }
        out
    }

    pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }
}

/// Which concrete manifold a descriptor or config refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ManifoldKind {
    Euclidean(usize),
    Sphere,
    Hyperbolic,
    So3,
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifoldKind::Euclidean(n) => write!(f, "euclidean:{n}"),
            ManifoldKind::Sphere => f.write_str("sphere"),
            ManifoldKind::Hyperbolic => f.write_str("hyperbolic"),
            ManifoldKind::So3 => f.write_str("so3"),
        }
    }
}

impl FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sphere" => Ok(ManifoldKind::Sphere),
            "hyperbolic" => Ok(ManifoldKind::Hyperbolic),
            "so3" => Ok(ManifoldKind::So3),
            other => {
                let dim = other
                    .strip_prefix("euclidean:")
                    .ok_or_else(|| {
                        Error::usage(format!(
                            "unknown manifold {other:?}; expected \"euclidean:n\", \
                             \"sphere\", \"hyperbolic\" or \"so3\""
                        ))
                    })?
                    .parse::<usize>()
                    .map_err(|e| Error::usage(format!("bad euclidean dimension in {other:?}: {e}")))?;
                if dim == 0 {
                    return Err(Error::usage("euclidean dimension must be at least 1"));
                }
                Ok(ManifoldKind::Euclidean(dim))
            }
        }
    }
}

impl TryFrom<String> for ManifoldKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ManifoldKind> for String {
    fn from(kind: ManifoldKind) -> String {
        kind.to_string()
    }
}

/// Dimension, sectional-curvature bounds `λ ≤ K ≤ μ` and injectivity radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldDescriptor {
    pub kind: ManifoldKind,
    pub dim: usize,
    pub curvature_lower: f64,
    pub curvature_upper: f64,
    /// `f64::INFINITY` for simply connected non-positively curved spaces.
    pub injectivity_radius: f64,
}

impl ManifoldDescriptor {
    pub fn for_kind(kind: ManifoldKind) -> Self {
        match kind {
            ManifoldKind::Euclidean(n) => Euclidean::new(n).descriptor(),
            ManifoldKind::Sphere => Sphere.descriptor(),
            ManifoldKind::Hyperbolic => Hyperbolic.descriptor(),
            ManifoldKind::So3 => So3.descriptor(),
        }
    }

    /// Largest distance accepted by the logarithm map.
    pub fn log_limit(&self) -> f64 {
        self.injectivity_radius - CUT_LOCUS_MARGIN
    }

    pub(crate) fn check_log_distance(&self, distance: f64) -> Result<()> {
        if distance >= self.log_limit() {
            Err(Error::CutLocus { distance, limit: self.injectivity_radius })
        } else {
            Ok(())
        }
    }
}

/// A Riemannian manifold with closed-form geodesic operations.
///
/// Mismatched manifolds cannot be mixed: points carry the backend's own
/// coordinate type, so `distance(a, b)` across backends does not compile.
pub trait Manifold: Clone + fmt::Debug + Send + Sync {
    /// Ambient coordinates, shared by points and tangent vectors.
    type Point: Coords;

    fn descriptor(&self) -> ManifoldDescriptor;

    /// Builds a point from ambient coordinates, projecting small
    /// representation errors back onto the manifold.
    fn point(&self, coords: &[f64]) -> Result<Self::Point>;

    /// A canonical base point (origin, north pole, hyperboloid apex, identity).
    fn origin(&self) -> Self::Point;

    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64;

    fn exp(&self, base: &Self::Point, v: &Self::Point) -> Self::Point;

    /// Tangent vector at `base` pointing along the minimizing geodesic to
    /// `target`, with norm `distance(base, target)`.
    fn log(&self, base: &Self::Point, target: &Self::Point) -> Result<Self::Point>;

    fn inner(&self, base: &Self::Point, u: &Self::Point, v: &Self::Point) -> f64;

    fn norm(&self, base: &Self::Point, v: &Self::Point) -> f64 {
        self.inner(base, v, v).max(0.0).sqrt()
    }

    /// Size of the normal component of `v` at `base` (zero for tangent vectors).
    fn tangency_defect(&self, base: &Self::Point, v: &Self::Point) -> f64;

    /// An orthonormal basis of the tangent space at `base`.
    fn tangent_basis(&self, base: &Self::Point) -> Vec<Self::Point>;

    /// Directional derivative of `y ↦ log_base(y)` at `at` along `w ∈ T_at M`.
    ///
    /// This is `(d exp_base)^{-1}` evaluated at `log_base(at)`, which maps
    /// a velocity at `at` into normal coordinates centred at `base`.
    fn log_differential(&self, base: &Self::Point, at: &Self::Point, w: &Self::Point) -> Self::Point;

    fn zero_tangent(&self, base: &Self::Point) -> Self::Point {
        base.zeros_like()
    }

    /// Validates `vec` as a tangent vector at `base`.
    fn tangent(&self, base: &Self::Point, vec: Self::Point) -> Result<TangentVector<Self::Point>> {
        let defect = self.tangency_defect(base, &vec);
        let scale = coords::norm(vec.as_slice()).max(1.0);
        if defect > TANGENCY_TOLERANCE * scale {
            return Err(Error::Representation(format!(
                "vector is not tangent at the base point (normal component {defect:e})"
            )));
        }
        Ok(TangentVector { base: base.clone(), vec })
    }

    /// Inner product of two checked tangent vectors; they must share a base point.
    fn inner_at(&self, u: &TangentVector<Self::Point>, v: &TangentVector<Self::Point>) -> Result<f64> {
        if u.base != v.base {
            return Err(Error::usage("inner product of tangent vectors at different base points"));
        }
        Ok(self.inner(&u.base, &u.vec, &v.vec))
    }

    /// `log` returning a checked tangent vector.
    fn log_at(&self, base: &Self::Point, target: &Self::Point) -> Result<TangentVector<Self::Point>> {
        Ok(TangentVector { base: base.clone(), vec: self.log(base, target)? })
    }
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector<P> {
    pub base: P,
    pub vec: P,
}

/// Angle at `vertex` of the geodesic triangle `(a, vertex, b)`, in `[0, π]`.
pub fn angle<M: Manifold>(m: &M, vertex: &M::Point, a: &M::Point, b: &M::Point) -> Result<f64> {
    let u = m.log(vertex, a)?;
    let v = m.log(vertex, b)?;
    let nu = m.norm(vertex, &u);
    let nv = m.norm(vertex, &v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::DegenerateAngle("a leg of the angle has zero length".into()));
    }
    let c = m.inner(vertex, &u, &v) / (nu * nv);
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Signed defect of the curvature comparison inequality for the triangle
/// `x, y, z` with the angle taken at `z`, using the backend's own upper
/// curvature bound.
///
/// A nonnegative value certifies the inequality on this instance; on a space
/// of constant curvature equal to the bound the defect is zero.
pub fn cosine_law_defect<M: Manifold>(m: &M, x: &M::Point, y: &M::Point, z: &M::Point) -> Result<f64> {
    cosine_law_defect_with_bound(m, m.descriptor().curvature_upper, x, y, z)
}

/// [`cosine_law_defect`] against an explicit comparison curvature `mu`, which
/// must bound the backend's sectional curvature from above.
///
/// For `mu > 0` the defect is
/// `cos(√μ d_xz)cos(√μ d_yz) + sin(√μ d_xz)sin(√μ d_yz)cos∠xzy − cos(√μ d_xy)`;
/// for `mu ≤ 0` it is `d_xy² − (d_xz² + d_yz² − 2 d_xz d_yz cos∠xzy)`.
pub fn cosine_law_defect_with_bound<M: Manifold>(
    m: &M,
    mu: f64,
    x: &M::Point,
    y: &M::Point,
    z: &M::Point,
) -> Result<f64> {
    let d_xy = m.distance(x, y);
    let d_xz = m.distance(x, z);
    let d_yz = m.distance(y, z);
    for d in [d_xy, d_xz, d_yz] {
        if d <= 1e-12 {
            return Err(Error::DegenerateTriangle(d));
        }
    }
    let cos_angle = angle(m, z, x, y)?.cos();
    if mu > 0.0 {
        let s = mu.sqrt();
        let rhs = (s * d_xz).cos() * (s * d_yz).cos() + (s * d_xz).sin() * (s * d_yz).sin() * cos_angle;
        Ok(rhs - (s * d_xy).cos())
    } else {
        let rhs = d_xz * d_xz + d_yz * d_yz - 2.0 * d_xz * d_yz * cos_angle;
        Ok(d_xy * d_xy - rhs)
    }
}

/// Weighted Fréchet (Karcher) mean by unit-step fixed-point iteration
/// `q ← exp_q(Σ mᵢ log_q xᵢ)`, started at the ensemble member with the
/// smallest weighted sum of squared distances.
pub fn frechet_mean<M: Manifold>(m: &M, points: &[M::Point], masses: &[f64]) -> Result<M::Point> {
    if points.is_empty() || points.len() != masses.len() {
        return Err(Error::usage("frechet_mean needs a nonempty ensemble with one mass per point"));
    }
    let cost = |q: &M::Point| -> f64 {
        points.iter().zip(masses).map(|(x, w)| w * m.distance(q, x).powi(2)).sum()
    };
    let mut q = points
        .iter()
        .map(|p| (cost(p), p))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p.clone())
        .expect("nonempty");

    let mut gradient_norm = f64::INFINITY;
    for _ in 0..FRECHET_MAX_ITERATIONS {
        let mut step = m.zero_tangent(&q);
        for (x, w) in points.iter().zip(masses) {
            coords::axpy(*w, &m.log(&q, x)?, &mut step);
        }
        gradient_norm = m.norm(&q, &step);
        if gradient_norm <= FRECHET_TOLERANCE {
            return Ok(q);
        }
        q = m.exp(&q, &step);
    }
    Err(Error::NonConvergence { iterations: FRECHET_MAX_ITERATIONS, gradient_norm })
}
