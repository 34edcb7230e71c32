use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{coords, Manifold};
use crate::error::{Error, Result};
use crate::potential::radii;

/// How initial particles are drawn around a center point.
///
/// Both schemes pick a geodesic radius uniformly in `(0, radius)` and map a
/// direction in the tangent space at the center through `exp`; neither is
/// volume-uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum SamplingScheme {
    /// Direction from spherical angles drawn uniformly: polar in `(0, π)`
    /// and azimuth in `(0, 2π)` (3-dimensional tangent spaces), azimuth
    /// only in 2D, a random sign in 1D. On SO(3) around the identity this is
    /// a rotation angle `θ ~ U(0, radius)` about an axis with uniformly drawn
    /// polar and azimuthal angles.
    AxisAngle { radius: f64 },
    /// Direction uniform on the unit sphere of the tangent space.
    UniformDirection { radius: f64 },
}

impl SamplingScheme {
    pub fn radius(&self) -> f64 {
        match *self {
            SamplingScheme::AxisAngle { radius } | SamplingScheme::UniformDirection { radius } => radius,
        }
    }
}

/// Draws `n` points within geodesic distance `scheme.radius()` of `center`.
///
/// The draw sequence depends only on `seed`, so repeated calls are
/// bit-identical. The radius must be positive and below `r_w`.
pub fn sample_ball<M: Manifold>(
    m: &M,
    center: &M::Point,
    scheme: SamplingScheme,
    seed: u64,
    n: usize,
) -> Result<Vec<M::Point>> {
    let radius = scheme.radius();
    let r_w = radii(&m.descriptor()).r_w;
    if !(radius > 0.0 && radius < r_w) {
        return Err(Error::usage(format!("sampling radius {radius} must lie in (0, r_w = {r_w})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = m.tangent_basis(center);
    Ok((0..n).map(|_| draw(m, center, &basis, scheme, &mut rng)).collect())
}

/// One point of [`sample_ball`] given the tangent basis at `center`.
pub(crate) fn draw<M: Manifold, R: Rng>(
    m: &M,
    center: &M::Point,
    basis: &[M::Point],
    scheme: SamplingScheme,
    rng: &mut R,
) -> M::Point {
    let r = scheme.radius() * rng.gen::<f64>();
    let dir = match scheme {
        SamplingScheme::AxisAngle { .. } => angular_direction(rng, basis.len()),
        SamplingScheme::UniformDirection { .. } => uniform_direction(rng, basis.len()),
    };
    let mut v = m.zero_tangent(center);
    for (b, c) in basis.iter().zip(&dir) {
        coords::axpy(r * c, b, &mut v);
    }
    m.exp(center, &v)
}

fn angular_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    match dim {
        1 => vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }],
        2 => {
            let phi = 2.0 * PI * rng.gen::<f64>();
            vec![phi.cos(), phi.sin()]
        }
        3 => {
            let polar = PI * rng.gen::<f64>();
            let azimuth = 2.0 * PI * rng.gen::<f64>();
            vec![polar.sin() * azimuth.cos(), polar.sin() * azimuth.sin(), polar.cos()]
        }
        _ => uniform_direction(rng, dim),
    }
}

/// Rejection sampling from the unit ball, then normalization.
pub(crate) fn uniform_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        let n = coords::norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Euclidean, Hyperbolic, So3, Sphere};
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn zero_samples_is_empty() {
        let pts = sample_ball(&So3, &So3.origin(), SamplingScheme::AxisAngle { radius: FRAC_PI_4 }, 1, 0).unwrap();
        assert!(pts.is_empty());
    }

    #[test]
    fn axis_angle_samples_stay_within_quarter_pi_of_identity() {
        let scheme = SamplingScheme::AxisAngle { radius: FRAC_PI_4 };
        let pts = sample_ball(&So3, &So3.origin(), scheme, 7, 2000).unwrap();
        for p in &pts {
            assert!(So3.distance(&So3.origin(), p) < FRAC_PI_4);
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let scheme = SamplingScheme::UniformDirection { radius: 0.5 };
        let c = Sphere.origin();
        let a = sample_ball(&Sphere, &c, scheme, 99, 50).unwrap();
        let b = sample_ball(&Sphere, &c, scheme, 99, 50).unwrap();
        assert_eq!(a, b);
        let other = sample_ball(&Sphere, &c, scheme, 100, 50).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn radius_must_be_below_r_w() {
        let scheme = SamplingScheme::UniformDirection { radius: 1.6 };
        assert!(sample_ball(&Sphere, &Sphere.origin(), scheme, 0, 3).is_err());
        // r_w is infinite in flat and hyperbolic space
        assert!(sample_ball(&Hyperbolic, &Hyperbolic.origin(), scheme, 0, 3).is_ok());
        let e = Euclidean::new(4);
        assert_eq!(sample_ball(&e, &e.origin(), scheme, 0, 3).unwrap().len(), 3);
    }
}
