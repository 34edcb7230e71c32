//! Randomized checks of the geometric identities and inequalities the
//! dynamics rely on.
//!
//! Each suite draws `samples` random instances per backend from a seeded
//! ChaCha stream and records the worst value. A failing instance is kept as
//! a [`Witness`] holding the raw coordinates, which [`replay`] re-evaluates.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::sampling::{draw, uniform_direction};
use crate::manifold::{
    coords, cosine_law_defect, Coords, Euclidean, Hyperbolic, Manifold, ManifoldDescriptor, ManifoldKind,
    SamplingScheme, So3, Sphere,
};
use crate::potential::{c_mu, radii, PotentialSpec};

pub const ROUND_TRIP_TOLERANCE: f64 = 1e-10;
pub const NORM_TOLERANCE: f64 = 1e-12;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const DEFECT_TOLERANCE: f64 = 1e-10;
pub const EQUALITY_TOLERANCE: f64 = 1e-9;

/// Step of the fourth-order central difference in the gradient suite.
pub const GRADIENT_STEP: f64 = 1e-3;

/// Seed used by `verify-geometry` when none is given.
pub const DEFAULT_SEED: u64 = 1;

/// Radius used where `r_w` or `r_c` is infinite.
const FLAT_TRIANGLE_RADIUS: f64 = 2.0;
const FLAT_PAIR_RADIUS: f64 = 3.0;
const FLAT_CONTRACTION_RADIUS: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// `d(exp_x(log_x y), y)`.
    RoundTrip,
    /// `|‖log_x y‖ − d(x, y)|`.
    NormDistance,
    /// Relative error of `d/dt d(exp_x(t w), y)² |₀ = −2⟨log_x y, w⟩`.
    Gradient,
    /// `d(x, z) + d(z, y) − d(x, y)`.
    TriangleInequality,
    /// Curvature comparison defect; nonnegative.
    CosineLaw,
    /// `|defect|` on backends of constant curvature equal to the bound.
    CosineLawEquality,
    /// Pairwise contraction inequality for `g'(θ²) = θ^(β−2)/2`.
    Contraction { beta: f64 },
}

impl Suite {
    /// Error suites pass when the value is small; defect suites when it is
    /// not too negative.
    fn is_error(&self) -> bool {
        matches!(self, Suite::RoundTrip | Suite::NormDistance | Suite::Gradient | Suite::CosineLawEquality)
    }

    fn tolerance(&self) -> f64 {
        match self {
            Suite::RoundTrip => ROUND_TRIP_TOLERANCE,
            Suite::NormDistance => NORM_TOLERANCE,
            Suite::Gradient => GRADIENT_TOLERANCE,
            Suite::CosineLawEquality => EQUALITY_TOLERANCE,
            _ => DEFECT_TOLERANCE,
        }
    }

    fn passes(&self, value: f64) -> bool {
        if self.is_error() {
            value < self.tolerance()
        } else {
            value >= -self.tolerance()
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Suite::RoundTrip => f.write_str("exp/log round trip"),
            Suite::NormDistance => f.write_str("log norm = distance"),
            Suite::Gradient => f.write_str("gradient identity"),
            Suite::TriangleInequality => f.write_str("triangle inequality"),
            Suite::CosineLaw => f.write_str("cosine-law defect"),
            Suite::CosineLawEquality => f.write_str("cosine-law equality"),
            Suite::Contraction { beta } => write!(f, "contraction (beta = {beta})"),
        }
    }
}

/// A failing instance, replayable with [`replay`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub backend: ManifoldKind,
    pub suite: Suite,
    pub sample: usize,
    /// `[x, y]`, `[x, y, w]` (gradient) or `[x, y, z]`.
    pub points: Vec<Vec<f64>>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub backend: ManifoldKind,
    pub suite: Suite,
    pub samples: usize,
    /// Degenerate instances that were redrawn.
    pub skipped: usize,
    /// Largest error or smallest defect.
    pub worst: f64,
    pub failures: usize,
    pub witness: Option<Witness>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub samples: usize,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn failures(&self) -> usize {
        self.suites.iter().map(|s| s.failures).sum()
    }

    pub fn witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.suites.iter().filter_map(|s| s.witness.as_ref())
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:<28} {:>8} {:>14} {:>9}", "backend", "suite", "samples", "worst", "failures")?;
        for s in &self.suites {
            let label = if s.suite.is_error() { "max" } else { "min" };
            writeln!(
                f,
                "{:<12} {:<28} {:>8} {label} {:>10.3e} {:>9}",
                s.backend.to_string(),
                s.suite.to_string(),
                s.samples,
                s.worst,
                s.failures
            )?;
        }
        Ok(())
    }
}

/// The backends covered by [`verify_all`].
pub fn backends() -> [ManifoldKind; 4] {
    [ManifoldKind::Euclidean(3), ManifoldKind::Sphere, ManifoldKind::Hyperbolic, ManifoldKind::So3]
}

/// Runs every suite on every backend in [`backends`].
pub fn verify_all(samples: usize, seed: u64) -> Result<VerifyReport> {
    if samples == 0 {
        return Err(Error::usage("verify needs at least one sample"));
    }
    let mut suites = Vec::new();
    for kind in backends() {
        suites.extend(match kind {
            ManifoldKind::Euclidean(n) => verify_manifold(&Euclidean::new(n), samples, seed)?,
            ManifoldKind::Sphere => verify_manifold(&Sphere, samples, seed)?,
            ManifoldKind::Hyperbolic => verify_manifold(&Hyperbolic, samples, seed)?,
            ManifoldKind::So3 => verify_manifold(&So3, samples, seed)?,
        });
    }
    Ok(VerifyReport { seed, samples, suites })
}

/// Every suite on one backend.
pub fn verify_manifold<M: Manifold>(m: &M, samples: usize, seed: u64) -> Result<Vec<SuiteResult>> {
    let desc = m.descriptor();
    let mut suites = vec![
        Suite::RoundTrip,
        Suite::NormDistance,
        Suite::Gradient,
        Suite::TriangleInequality,
        Suite::CosineLaw,
    ];
    if constant_curvature_comparison(&desc) {
        suites.push(Suite::CosineLawEquality);
    }
    suites.push(Suite::Contraction { beta: 2.0 });
    suites.push(Suite::Contraction { beta: 4.0 });
    suites.into_iter().enumerate().map(|(k, suite)| run_suite(m, suite, samples, seed, k as u64)).collect()
}

/// The comparison law is exact when `λ = μ` and the law used matches: the
/// spherical law for `μ > 0`, the Euclidean one for `μ = 0`.
fn constant_curvature_comparison(desc: &ManifoldDescriptor) -> bool {
    desc.curvature_lower == desc.curvature_upper && desc.curvature_upper >= 0.0
}

fn pair_radius(desc: &ManifoldDescriptor) -> f64 {
    if desc.injectivity_radius.is_finite() {
        0.45 * desc.injectivity_radius
    } else {
        FLAT_PAIR_RADIUS
    }
}

fn triangle_radius(desc: &ManifoldDescriptor) -> f64 {
    let r_w = radii(desc).r_w;
    if r_w.is_finite() {
        0.95 * r_w
    } else {
        FLAT_TRIANGLE_RADIUS
    }
}

/// Support radius for the contraction suite: `r_c / 2`.
pub fn contraction_radius(desc: &ManifoldDescriptor) -> f64 {
    let r_c = radii(desc).r_c;
    if r_c.is_finite() {
        0.5 * r_c
    } else {
        FLAT_CONTRACTION_RADIUS
    }
}

fn backend_index(kind: ManifoldKind) -> u64 {
    match kind {
        ManifoldKind::Euclidean(n) => 16 + n as u64,
        ManifoldKind::Sphere => 1,
        ManifoldKind::Hyperbolic => 2,
        ManifoldKind::So3 => 3,
    }
}

fn run_suite<M: Manifold>(m: &M, suite: Suite, samples: usize, seed: u64, index: u64) -> Result<SuiteResult> {
    let desc = m.descriptor();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(backend_index(desc.kind) * 64 + index);

    let radius = match suite {
        Suite::RoundTrip | Suite::NormDistance | Suite::Gradient => pair_radius(&desc),
        Suite::Contraction { .. } => contraction_radius(&desc),
        _ => triangle_radius(&desc),
    };
    let center_radius = (0.5 * radii(&desc).r_w).min(1.0);
    let origin = m.origin();
    let origin_basis = m.tangent_basis(&origin);

    let mut result = SuiteResult {
        backend: desc.kind,
        suite,
        samples,
        skipped: 0,
        worst: if suite.is_error() { 0.0 } else { f64::INFINITY },
        failures: 0,
        witness: None,
    };
    let mut done = 0;
    while done < samples {
        let center = draw(m, &origin, &origin_basis, SamplingScheme::UniformDirection { radius: center_radius }, &mut rng);
        let basis = m.tangent_basis(&center);
        let scheme = SamplingScheme::UniformDirection { radius };
        let x = draw(m, &center, &basis, scheme, &mut rng);
        let y = draw(m, &center, &basis, scheme, &mut rng);
        let third = if suite == Suite::Gradient {
            unit_tangent(m, &x, &mut rng)
        } else {
            draw(m, &center, &basis, scheme, &mut rng)
        };
        let value = match evaluate(m, suite, &x, &y, &third) {
            Ok(v) => v,
            Err(Error::DegenerateTriangle(_) | Error::DegenerateAngle(_)) => {
                result.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        result.worst = if suite.is_error() { result.worst.max(value) } else { result.worst.min(value) };
        if !suite.passes(value) {
            result.failures += 1;
            if result.witness.is_none() {
                let mut points = vec![x.as_slice().to_vec(), y.as_slice().to_vec()];
                if !matches!(suite, Suite::RoundTrip | Suite::NormDistance) {
                    points.push(third.as_slice().to_vec());
                }
                result.witness = Some(Witness { backend: desc.kind, suite, sample: done, points, value });
            }
        }
        done += 1;
    }
    Ok(result)
}

fn unit_tangent<M: Manifold, R: Rng>(m: &M, x: &M::Point, rng: &mut R) -> M::Point {
    let basis = m.tangent_basis(x);
    let dir = uniform_direction(rng, basis.len());
    let mut w = m.zero_tangent(x);
    for (b, c) in basis.iter().zip(dir) {
        coords::axpy(c, b, &mut w);
    }
    w
}

fn evaluate<M: Manifold>(m: &M, suite: Suite, x: &M::Point, y: &M::Point, z: &M::Point) -> Result<f64> {
    match suite {
        Suite::RoundTrip => Ok(m.distance(&m.exp(x, &m.log(x, y)?), y)),
        Suite::NormDistance => Ok((m.norm(x, &m.log(x, y)?) - m.distance(x, y)).abs()),
        Suite::Gradient => gradient_error(m, x, y, z),
        Suite::TriangleInequality => Ok(m.distance(x, z) + m.distance(z, y) - m.distance(x, y)),
        Suite::CosineLaw => cosine_law_defect(m, x, y, z),
        Suite::CosineLawEquality => Ok(cosine_law_defect(m, x, y, z)?.abs()),
        Suite::Contraction { beta } => contraction_defect(m, &PotentialSpec::power_law(beta)?, x, y, z),
    }
}

/// Fourth-order central difference of `t ↦ d(exp_x(t w), y)²` against
/// `−2⟨log_x y, w⟩`, relative to `max(|exact|, 2 d ‖w‖)`.
fn gradient_error<M: Manifold>(m: &M, x: &M::Point, y: &M::Point, w: &M::Point) -> Result<f64> {
    let h = GRADIENT_STEP;
    let f = |t: f64| m.distance(&m.exp(x, &coords::scaled(w, t)), y).powi(2);
    let fd = (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
    let exact = -2.0 * m.inner(x, &m.log(x, y)?, w);
    let scale = exact.abs().max(2.0 * m.distance(x, y) * m.norm(x, w));
    if scale == 0.0 {
        return Ok(fd.abs());
    }
    Ok((fd - exact).abs() / scale)
}

/// `g'(d_xz²)⟨log_x z, log_x y⟩ + g'(d_yz²)⟨log_y z, log_y x⟩ − (C_μ/2) g'(d_xy²/4) d_xy²`
/// with `C_μ` evaluated at [`contraction_radius`].
pub fn contraction_defect<M: Manifold>(
    m: &M,
    p: &PotentialSpec,
    x: &M::Point,
    y: &M::Point,
    z: &M::Point,
) -> Result<f64> {
    let desc = m.descriptor();
    let r = contraction_radius(&desc);
    if !p.admissible_kc(&desc, r)? {
        return Err(Error::usage("potential is not (Kc)-admissible at the contraction radius"));
    }
    let c = c_mu(&desc, r)?;
    let d_xy = m.distance(x, y);
    if d_xy <= 1e-12 {
        return Err(Error::DegenerateTriangle(d_xy));
    }
    let (d_xz, d_yz) = (m.distance(x, z), m.distance(y, z));
    let lhs = p.g_prime(d_xz * d_xz) * m.inner(x, &m.log(x, z)?, &m.log(x, y)?)
        + p.g_prime(d_yz * d_yz) * m.inner(y, &m.log(y, z)?, &m.log(y, x)?);
    let rhs = 0.5 * c * p.g_prime(d_xy * d_xy / 4.0) * d_xy * d_xy;
    Ok(lhs - rhs)
}

/// Re-evaluates a witness on the named backend.
pub fn replay(w: &Witness) -> Result<f64> {
    match w.backend {
        ManifoldKind::Euclidean(n) => replay_on(&Euclidean::new(n), w),
        ManifoldKind::Sphere => replay_on(&Sphere, w),
        ManifoldKind::Hyperbolic => replay_on(&Hyperbolic, w),
        ManifoldKind::So3 => replay_on(&So3, w),
    }
}

fn replay_on<M: Manifold>(m: &M, w: &Witness) -> Result<f64> {
    if w.points.len() < 2 {
        return Err(Error::usage("a witness needs at least two points"));
    }
    let x = m.point(&w.points[0])?;
    let y = m.point(&w.points[1])?;
    let third = match w.points.get(2) {
        // tangent vectors are not points; rebuild from raw coordinates
        Some(c) if w.suite == Suite::Gradient => {
            let mut v = x.zeros_like();
            if v.as_slice().len() != c.len() {
                return Err(Error::usage("witness tangent vector has the wrong length"));
            }
            v.as_mut_slice().copy_from_slice(c);
            v
        }
        Some(c) => m.point(c)?,
        None => x.clone(),
    };
    evaluate(m, w.suite, &x, &y, &third)
}

/// A backend whose logarithm is scaled by `1 + 1e-3`; used as a negative
/// control for the suites.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptedLog<M>(pub M);

impl<M: Manifold> Manifold for CorruptedLog<M> {
    type Point = M::Point;

    fn descriptor(&self) -> ManifoldDescriptor {
        self.0.descriptor()
    }
    fn point(&self, c: &[f64]) -> Result<M::Point> {
        self.0.point(c)
    }
    fn origin(&self) -> M::Point {
        self.0.origin()
    }
    fn distance(&self, a: &M::Point, b: &M::Point) -> f64 {
        self.0.distance(a, b)
    }
    fn exp(&self, base: &M::Point, v: &M::Point) -> M::Point {
        self.0.exp(base, v)
    }
    fn log(&self, base: &M::Point, target: &M::Point) -> Result<M::Point> {
        Ok(coords::scaled(&self.0.log(base, target)?, 1.0 + 1e-3))
    }
    fn inner(&self, base: &M::Point, u: &M::Point, v: &M::Point) -> f64 {
        self.0.inner(base, u, v)
    }
    fn tangency_defect(&self, base: &M::Point, v: &M::Point) -> f64 {
        self.0.tangency_defect(base, v)
    }
    fn tangent_basis(&self, base: &M::Point) -> Vec<M::Point> {
        self.0.tangent_basis(base)
    }
    fn log_differential(&self, base: &M::Point, at: &M::Point, w: &M::Point) -> M::Point {
        self.0.log_differential(base, at, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_on_a_small_sample() {
        let report = verify_all(500, 3).unwrap();
        assert!(report.passed(), "{report}");
        // 4 backends; equality suite on all but the hyperbolic plane
        assert_eq!(report.suites.len(), 4 * 7 + 3);
    }

    #[test]
    fn corrupted_log_is_caught_with_a_replayable_witness() {
        let results = verify_manifold(&CorruptedLog(Sphere), 200, 9).unwrap();
        let round_trip = results.iter().find(|r| r.suite == Suite::RoundTrip).unwrap();
        assert!(round_trip.failures > 0);
        let w = round_trip.witness.clone().unwrap();
        let json = serde_json::to_string(&w).unwrap();
        let back: Witness = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
        // on the genuine backend the same instance passes
        assert!(replay(&back).unwrap() < ROUND_TRIP_TOLERANCE);
    }

    #[test]
    fn same_seed_same_report() {
        let a = verify_manifold(&So3, 100, 5).unwrap();
        let b = verify_manifold(&So3, 100, 5).unwrap();
        assert_eq!(a, b);
    }
}
