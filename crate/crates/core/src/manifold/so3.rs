use super::sphere::{normalized_unit, unit_angle, unit_exp, unit_log, unit_log_differential};
use super::{coords, Manifold, ManifoldDescriptor, ManifoldKind};
use crate::error::{Error, Result};

/// The rotation group SO(3) with the bi-invariant metric normalized so that
/// `d(R₁, R₂)` is the angle of `R₁ᵀR₂`.
///
/// Rotations are unit quaternions `(w, x, y, z)` with `w ≥ 0`. Tangent vectors
/// live in R⁴ orthogonal to the base quaternion; the velocity
/// `q ⊗ (0, ω/2)` corresponds to body angular velocity `ω`, so the metric is
/// four times the ambient dot product.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct So3;

pub type Quaternion = [f64; 4];

impl So3 {
    /// Rotation by `angle` about the unit `axis`.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Quaternion {
        let n = coords::norm(&axis);
        let (s, c) = (0.5 * angle).sin_cos();
        let q = if n == 0.0 {
            [1.0, 0.0, 0.0, 0.0]
        } else {
            [c, s * axis[0] / n, s * axis[1] / n, s * axis[2] / n]
        };
        canonical(q)
    }

    /// Rotation vector `angle · axis` with `angle ∈ [0, π]`.
    pub fn to_rotation_vector(q: &Quaternion) -> [f64; 3] {
        let q = canonical(*q);
        let n = coords::norm(&q[1..]);
        if n == 0.0 {
            return [0.0; 3];
        }
        let angle = 2.0 * n.atan2(q[0]);
        [angle * q[1] / n, angle * q[2] / n, angle * q[3] / n]
    }

    /// Row-major rotation matrix.
    pub fn to_matrix(q: &Quaternion) -> [[f64; 3]; 3] {
        let [w, x, y, z] = *q;
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    }

    /// Hamilton product `a ⊗ b`.
    pub fn multiply(a: &Quaternion, b: &Quaternion) -> Quaternion {
        [
            a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
            a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
            a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
            a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
        ]
    }
}

/// Sign choice `w ≥ 0` (ties on `w = 0` keep the first nonzero imaginary part positive).
fn canonical(q: Quaternion) -> Quaternion {
    let flip = match q.iter().find(|c| **c != 0.0) {
        Some(first) => q[0] < 0.0 || (q[0] == 0.0 && *first < 0.0),
        None => false,
    };
    if flip {
        [-q[0], -q[1], -q[2], -q[3]]
    } else {
        q
    }
}

/// `target` or `-target`, whichever lies in the hemisphere of `base`.
fn aligned(base: &Quaternion, target: &Quaternion) -> (Quaternion, bool) {
    if coords::dot(base, target) < 0.0 {
        ([-target[0], -target[1], -target[2], -target[3]], true)
    } else {
        (*target, false)
    }
}

impl Manifold for So3 {
    type Point = Quaternion;

    fn descriptor(&self) -> ManifoldDescriptor {
        ManifoldDescriptor {
            kind: ManifoldKind::So3,
            dim: 3,
            curvature_lower: 0.25,
            curvature_upper: 0.25,
            injectivity_radius: std::f64::consts::PI,
        }
    }

    fn point(&self, c: &[f64]) -> Result<Quaternion> {
        let q: Quaternion = c
            .try_into()
            .map_err(|_| Error::Representation(format!("quaternions have 4 coordinates, got {}", c.len())))?;
        Ok(canonical(normalized_unit(q)?))
    }

    fn origin(&self) -> Quaternion {
        [1.0, 0.0, 0.0, 0.0]
    }

    fn distance(&self, a: &Quaternion, b: &Quaternion) -> f64 {
        let (b, _) = aligned(a, b);
        2.0 * unit_angle(a, &b)
    }

    fn exp(&self, base: &Quaternion, v: &Quaternion) -> Quaternion {
        canonical(unit_exp(base, v))
    }

    fn log(&self, base: &Quaternion, target: &Quaternion) -> Result<Quaternion> {
        let (target, _) = aligned(base, target);
        self.descriptor().check_log_distance(2.0 * unit_angle(base, &target))?;
        Ok(unit_log(base, &target))
    }

    fn inner(&self, _base: &Quaternion, u: &Quaternion, v: &Quaternion) -> f64 {
        4.0 * coords::dot(u, v)
    }

    fn tangency_defect(&self, base: &Quaternion, v: &Quaternion) -> f64 {
        coords::dot(base, v).abs()
    }

    fn tangent_basis(&self, base: &Quaternion) -> Vec<Quaternion> {
        // q ⊗ (0, e_k / 2): unit angular velocity about each body axis.
        (0..3)
            .map(|k| {
                let mut e = [0.0; 4];
                e[k + 1] = 0.5;
                So3::multiply(base, &e)
            })
            .collect()
    }

    fn log_differential(&self, base: &Quaternion, at: &Quaternion, w: &Quaternion) -> Quaternion {
        let (at, flipped) = aligned(base, at);
        let w = if flipped { [-w[0], -w[1], -w[2], -w[3]] } else { *w };
        unit_log_differential(base, &at, &w)
    }
}
