use super::{coords, Coords, Manifold, ManifoldDescriptor, ManifoldKind, SMALL_ANGLE};
use crate::error::{Error, Result};

/// The unit sphere S² ⊂ R³ with the round metric.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sphere;

impl Manifold for Sphere {
    type Point = [f64; 3];

    fn descriptor(&self) -> ManifoldDescriptor {
        ManifoldDescriptor {
            kind: ManifoldKind::Sphere,
            dim: 2,
            curvature_lower: 1.0,
            curvature_upper: 1.0,
            injectivity_radius: std::f64::consts::PI,
        }
    }

    fn point(&self, c: &[f64]) -> Result<[f64; 3]> {
        let p: [f64; 3] = c
            .try_into()
            .map_err(|_| Error::Representation(format!("sphere points have 3 coordinates, got {}", c.len())))?;
        normalized_unit(p)
    }

    fn origin(&self) -> [f64; 3] {
        [0.0, 0.0, 1.0]
    }

    fn distance(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        unit_angle(a, b)
    }

    fn exp(&self, base: &[f64; 3], v: &[f64; 3]) -> [f64; 3] {
        unit_exp(base, v)
    }

    fn log(&self, base: &[f64; 3], target: &[f64; 3]) -> Result<[f64; 3]> {
        self.descriptor().check_log_distance(unit_angle(base, target))?;
        Ok(unit_log(base, target))
    }

    fn inner(&self, _base: &[f64; 3], u: &[f64; 3], v: &[f64; 3]) -> f64 {
        coords::dot(u, v)
    }

    fn tangency_defect(&self, base: &[f64; 3], v: &[f64; 3]) -> f64 {
        coords::dot(base, v).abs()
    }

    fn tangent_basis(&self, base: &[f64; 3]) -> Vec<[f64; 3]> {
        unit_tangent_basis(base)
    }

    fn log_differential(&self, base: &[f64; 3], at: &[f64; 3], w: &[f64; 3]) -> [f64; 3] {
        unit_log_differential(base, at, w)
    }
}

// Geometry of the unit sphere in R^k, shared with the quaternion model of SO(3).

pub(crate) fn normalized_unit<C: Coords>(mut p: C) -> Result<C> {
    let n = coords::norm(p.as_slice());
    if !n.is_finite() || (n - 1.0).abs() > 1e-3 {
        return Err(Error::Representation(format!("expected a unit vector, got norm {n}")));
    }
    p.as_mut_slice().iter_mut().for_each(|x| *x /= n);
    Ok(p)
}

pub(crate) fn renormalize<C: Coords>(p: &mut C) {
    let n = coords::norm(p.as_slice());
    p.as_mut_slice().iter_mut().for_each(|x| *x /= n);
}

/// Great-circle angle, accurate for both nearby and nearly antipodal points.
pub(crate) fn unit_angle(a: &[f64], b: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

pub(crate) fn unit_exp<C: Coords>(base: &C, v: &C) -> C {
    let theta = coords::norm(v.as_slice());
    if theta == 0.0 {
        return base.clone();
    }
    let (c, sinc) = if theta < SMALL_ANGLE {
        (1.0 - 0.5 * theta * theta, 1.0 - theta * theta / 6.0)
    } else {
        (theta.cos(), theta.sin() / theta)
    };
    let mut out = coords::scaled(base, c);
    coords::axpy(sinc, v, &mut out);
    renormalize(&mut out);
    out
}

/// θ / sin θ, with its small-angle expansion.
fn theta_over_sin(theta: f64, sin: f64) -> f64 {
    if theta < SMALL_ANGLE {
        1.0 + theta * theta / 6.0
    } else {
        theta / sin
    }
}

pub(crate) fn unit_log<C: Coords>(base: &C, target: &C) -> C {
    if base == target {
        return base.zeros_like();
    }
    let c = coords::dot(base.as_slice(), target.as_slice());
    let mut w = target.clone();
    coords::axpy(-c, base, &mut w);
    let sin = coords::norm(w.as_slice());
    if sin == 0.0 {
        return base.zeros_like();
    }
    let theta = unit_angle(base.as_slice(), target.as_slice());
    coords::scaled(&w, theta_over_sin(theta, sin))
}

/// Derivative of `y ↦ log_base(y)` at `at` along `w`.
///
/// With `log_base(y) = f(θ)(y − (base·y) base)`, `f(θ) = θ / sin θ`:
/// `D = f(θ)(w − (base·w) base) − f'(θ)(base·w) e`, where `e` is the unit
/// direction of `y − (base·y) base`.
pub(crate) fn unit_log_differential<C: Coords>(base: &C, at: &C, w: &C) -> C {
    let c = coords::dot(base.as_slice(), at.as_slice());
    let bw = coords::dot(base.as_slice(), w.as_slice());
    let mut e = at.clone();
    coords::axpy(-c, base, &mut e);
    let sin = coords::norm(e.as_slice());
    let theta = unit_angle(base.as_slice(), at.as_slice());

    let mut out = w.clone();
    coords::axpy(-bw, base, &mut out);
    let mut out = coords::scaled(&out, theta_over_sin(theta, sin));
    if theta >= SMALL_ANGLE {
        // f'(θ) = (sin θ − θ cos θ) / sin² θ; it vanishes like θ/3 as θ → 0.
        let f_prime = (sin - theta * c) / (sin * sin);
        coords::axpy(-f_prime * bw / sin, &e, &mut out);
    }
    out
}

/// Orthonormal basis of `base^⊥` by Gram–Schmidt against the coordinate axes.
pub(crate) fn unit_tangent_basis<C: Coords>(base: &C) -> Vec<C> {
    let dim = base.as_slice().len();
    let mut basis: Vec<C> = Vec::with_capacity(dim - 1);
    let mut axes: Vec<usize> = (0..dim).collect();
    // Start from the axes least aligned with `base` for conditioning.
    axes.sort_by(|&i, &j| base.as_slice()[i].abs().total_cmp(&base.as_slice()[j].abs()));
    for axis in axes {
        if basis.len() == dim - 1 {
            break;
        }
        let mut v = base.zeros_like();
        v.as_mut_slice()[axis] = 1.0;
        let proj = coords::dot(base.as_slice(), v.as_slice());
        coords::axpy(-proj, base, &mut v);
        for b in &basis {
            let proj = coords::dot(b.as_slice(), v.as_slice());
            coords::axpy(-proj, b, &mut v);
        }
        let n = coords::norm(v.as_slice());
        if n > 1e-6 {
            basis.push(coords::scaled(&v, 1.0 / n));
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const NORTH: [f64; 3] = [0.0, 0.0, 1.0];

    #[test]
    fn colatitude_one_radian_is_distance_one() {
        let p = [1f64.sin(), 0.0, 1f64.cos()];
        assert_abs_diff_eq!(Sphere.distance(&NORTH, &p), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn distance_to_self_is_zero() {
        let p = Sphere.point(&[0.3, -0.4, 0.866]).unwrap();
        assert_eq!(Sphere.distance(&p, &p), 0.0);
        assert_eq!(Sphere.log(&p, &p).unwrap(), [0.0; 3]);
    }

    #[test]
    fn antipodal_log_is_a_cut_locus_error() {
        let err = Sphere.log(&NORTH, &[0.0, 0.0, -1.0]).unwrap_err();
        assert!(matches!(err, Error::CutLocus { .. }));
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let p = Sphere.point(&[0.6, 0.0, 0.8]).unwrap();
        assert_eq!(Sphere.exp(&p, &[0.0; 3]), p);
    }

    #[test]
    fn rejects_non_unit_input() {
        assert!(Sphere.point(&[0.0, 0.0, 2.0]).is_err());
        assert!(Sphere.point(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn basis_is_orthonormal_and_tangent() {
        let p = Sphere.point(&[0.48, -0.6, 0.64]).unwrap();
        let basis = Sphere.tangent_basis(&p);
        assert_eq!(basis.len(), 2);
        for (i, u) in basis.iter().enumerate() {
            assert!(Sphere.tangency_defect(&p, u) < 1e-15);
            for (j, v) in basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(coords::dot(u, v), expected, epsilon = 1e-15);
            }
        }
    }
}
