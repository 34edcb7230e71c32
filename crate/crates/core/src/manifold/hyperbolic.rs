use super::{Manifold, ManifoldDescriptor, ManifoldKind, SMALL_ANGLE};
use crate::error::{Error, Result};

/// The hyperbolic plane H² in the hyperboloid model
/// `{(x, y, z) : z² − x² − y² = 1, z > 0}` with the Minkowski metric.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Hyperbolic;

/// Minkowski form `⟨a, b⟩ = a₀b₀ + a₁b₁ − a₂b₂`.
pub fn minkowski(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
}

fn on_hyperboloid(x: f64, y: f64) -> [f64; 3] {
    [x, y, (1.0 + x * x + y * y).sqrt()]
}

/// Lorentz boost taking the origin to `a`, applied to `u`; `a` with its
/// spatial part negated gives the inverse.
fn boost(a: &[f64; 3], u: &[f64; 3]) -> [f64; 3] {
    let s = a[0] * u[0] + a[1] * u[1];
    let k = s / (1.0 + a[2]) + u[2];
    [u[0] + a[0] * k, u[1] + a[1] * k, s + a[2] * u[2]]
}

fn unboost(a: &[f64; 3], u: &[f64; 3]) -> [f64; 3] {
    boost(&[-a[0], -a[1], a[2]], u)
}

/// `d / sinh d`, with its small-argument expansion.
fn dist_over_sinh(d: f64) -> f64 {
    if d < SMALL_ANGLE {
        1.0 - d * d / 6.0
    } else {
        d / d.sinh()
    }
}

impl Manifold for Hyperbolic {
    type Point = [f64; 3];

    fn descriptor(&self) -> ManifoldDescriptor {
        ManifoldDescriptor {
            kind: ManifoldKind::Hyperbolic,
            dim: 2,
            curvature_lower: -1.0,
            curvature_upper: -1.0,
            injectivity_radius: f64::INFINITY,
        }
    }

    fn point(&self, c: &[f64]) -> Result<[f64; 3]> {
        let p: [f64; 3] = c.try_into().map_err(|_| {
            Error::Representation(format!("hyperboloid points have 3 coordinates, got {}", c.len()))
        })?;
        let residual = -minkowski(&p, &p) - 1.0;
        if !(p[2] > 0.0) || residual.abs() > 1e-3 * p[2] * p[2] {
            return Err(Error::Representation(format!(
                "point {p:?} is not on the upper sheet z² − x² − y² = 1"
            )));
        }
        Ok(on_hyperboloid(p[0], p[1]))
    }

    fn origin(&self) -> [f64; 3] {
        [0.0, 0.0, 1.0]
    }

    fn distance(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        // ⟨a−b, a−b⟩ = 4 sinh²(d/2), well conditioned for nearby points.
        let diff = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        let q = minkowski(&diff, &diff).max(0.0);
        2.0 * (0.5 * q.sqrt()).asinh()
    }

    // exp and log are evaluated at the origin after a boost: far from it the
    // ambient coordinates of tangent vectors are large and their Minkowski
    // norm loses most of its digits.
    fn exp(&self, base: &[f64; 3], v: &[f64; 3]) -> [f64; 3] {
        let v0 = unboost(base, v);
        let n = v0[0].hypot(v0[1]);
        if n == 0.0 {
            return *base;
        }
        let s = if n < SMALL_ANGLE { 1.0 + n * n / 6.0 } else { n.sinh() / n };
        let p = boost(base, &on_hyperboloid(s * v0[0], s * v0[1]));
        on_hyperboloid(p[0], p[1])
    }

    fn log(&self, base: &[f64; 3], target: &[f64; 3]) -> Result<[f64; 3]> {
        let t0 = unboost(base, target);
        let r = t0[0].hypot(t0[1]);
        if r == 0.0 {
            return Ok([0.0; 3]);
        }
        let f = r.asinh() / r;
        Ok(boost(base, &[f * t0[0], f * t0[1], 0.0]))
    }

    fn inner(&self, _base: &[f64; 3], u: &[f64; 3], v: &[f64; 3]) -> f64 {
        minkowski(u, v)
    }

    fn tangency_defect(&self, base: &[f64; 3], v: &[f64; 3]) -> f64 {
        minkowski(base, v).abs()
    }

    fn tangent_basis(&self, base: &[f64; 3]) -> Vec<[f64; 3]> {
        let mut basis: Vec<[f64; 3]> = Vec::with_capacity(2);
        for axis in 0..2 {
            let mut v = [0.0; 3];
            v[axis] = 1.0;
            // project onto T_base: v + ⟨v, base⟩ base
            let p = minkowski(&v, base);
            for k in 0..3 {
                v[k] += p * base[k];
            }
            for b in &basis {
                let p = minkowski(&v, b);
                for k in 0..3 {
                    v[k] -= p * b[k];
                }
            }
            let n = minkowski(&v, &v).sqrt();
            basis.push([v[0] / n, v[1] / n, v[2] / n]);
        }
        basis
    }

    /// With `log_a(y) = f(d)(y − c a)`, `c = cosh d`, `f = d / sinh d`:
    /// `D = f (w + ⟨a,w⟩ a) − f'(d) ⟨a,w⟩ e`, `e` the unit direction of `y − c a`.
    fn log_differential(&self, base: &[f64; 3], at: &[f64; 3], w: &[f64; 3]) -> [f64; 3] {
        let d = self.distance(base, at);
        let c = -minkowski(base, at);
        let aw = minkowski(base, w);
        let f = dist_over_sinh(d);
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = f * (w[k] + aw * base[k]);
        }
        if d >= SMALL_ANGLE {
            let sh = d.sinh();
            let f_prime = (sh - d * c) / (sh * sh);
            for k in 0..3 {
                let e = (at[k] - c * base[k]) / sh;
                out[k] -= f_prime * aw * e;
            }
        }
        out
    }
}
