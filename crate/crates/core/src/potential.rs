//! Interaction profiles `K(x, y) = g(d(x, y)²)`.
//!
//! A [`PotentialSpec`] is a parametrized profile `g` together with its
//! derivative `g'`. Profiles are described by parameters rather than closures
//! so that attractiveness and the curvature-dependent monotonicity condition
//! can be decided by grid inspection.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::manifold::ManifoldDescriptor;

/// Number of grid samples used by [`PotentialSpec::classify`] and
/// [`PotentialSpec::admissible_kc`].
pub const CHECK_GRID: usize = 10_000;

/// Grid extent used for classification when the injectivity radius is
/// infinite and no explicit check radius is supplied.
pub const DEFAULT_CHECK_RADIUS: f64 = 10.0;

/// Smoothing width of the hinge used by truncated power laws with `β < 3`.
pub const HINGE_SMOOTHING: f64 = 1e-6;

/// Monotonicity slack for the (Kc) grid check.
pub const KC_TOLERANCE: f64 = 1e-12;

/// Shape of the profile `g`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `g(θ²) = θ^β / β`, so `g'(θ²) = θ^(β−2) / 2`.
    PowerLaw { beta: f64 },
    /// `g(θ²) = a θ²/2 + b θ⁴/4` for `weights = [a, b]`.
    QuadraticPlusQuartic { weights: [f64; 2] },
    /// Power law with a dead zone: `g'(r²) = (r − ζ)₊^(β−2) / 2`.
    ///
    /// For `β < 3` the hinge is smoothed to
    /// `g'(r²) = (r − ζ)₊^(β−1) / (2 ((r − ζ)₊ + ε))` with
    /// `ε = HINGE_SMOOTHING`, keeping `g'` locally Lipschitz.
    TruncatedPowerLaw { beta: f64, zeta: f64 },
    /// Monotone cubic interpolant of user samples of `g'`.
    CustomTable(MonotoneTable),
}

/// A profile and a positive overall scale applied to both `g` and `g'`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub scale: f64,
}

/// Attractiveness class on a given manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttractivenessClass {
    /// `g'(r²) > 0` for all `0 < r < inj(M)`.
    Strong,
    /// `g'(r²) = 0` on `[0, ζ]` and positive beyond, with `ζ < r_w / 2`.
    Weak { zeta: f64 },
    /// `g' ≥ 0` but neither of the above.
    AttractiveOnly,
}

/// Radii bounding the admissible initial support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radii {
    /// Well-posedness radius `min(inj/2, π/(2√μ))`.
    pub r_w: f64,
    /// Rate radius `min(inj/2, π/(4√μ))`.
    pub r_c: f64,
}

/// `r_w` and `r_c` for a manifold; `1/√μ` is read as `+∞` when `μ ≤ 0`.
pub fn radii(m: &ManifoldDescriptor) -> Radii {
    let half_inj = m.injectivity_radius / 2.0;
    let mu = m.curvature_upper;
    let inv_sqrt_mu = if mu > 0.0 { 1.0 / mu.sqrt() } else { f64::INFINITY };
    Radii {
        r_w: half_inj.min(PI / 2.0 * inv_sqrt_mu),
        r_c: half_inj.min(PI / 4.0 * inv_sqrt_mu),
    }
}

/// Contraction constant: `sin(2√μ (r_c − r))` for `μ > 0`, `1` otherwise.
pub fn c_mu(m: &ManifoldDescriptor, r: f64) -> Result<f64> {
    let r_c = radii(m).r_c;
    if !(r > 0.0 && r < r_c) {
        return Err(Error::usage(format!("support radius {r} must lie in (0, r_c = {r_c})")));
    }
    let mu = m.curvature_upper;
    if mu > 0.0 {
        Ok((2.0 * mu.sqrt() * (r_c - r)).sin())
    } else {
        Ok(1.0)
    }
}

impl PotentialSpec {
    pub fn power_law(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(PotentialSpec { kind: PotentialKind::PowerLaw { beta }, scale: 1.0 })
    }

    pub fn quadratic_plus_quartic(weights: [f64; 2]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights[0] + weights[1] <= 0.0 {
            return Err(Error::usage(format!(
                "weights {weights:?} must be nonnegative and not both zero"
            )));
        }
        Ok(PotentialSpec { kind: PotentialKind::QuadraticPlusQuartic { weights }, scale: 1.0 })
    }

    pub fn truncated_power_law(beta: f64, zeta: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(zeta.is_finite() && zeta > 0.0) {
            return Err(Error::usage(format!("dead-zone radius {zeta} must be positive")));
        }
        Ok(PotentialSpec { kind: PotentialKind::TruncatedPowerLaw { beta, zeta }, scale: 1.0 })
    }

    pub fn custom_table(table: MonotoneTable) -> Self {
        PotentialSpec { kind: PotentialKind::CustomTable(table), scale: 1.0 }
    }

    /// The same profile multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::usage(format!("scale {factor} must be positive")));
        }
        Ok(PotentialSpec { kind: self.kind.clone(), scale: self.scale * factor })
    }

    /// Power-law exponent, for kinds that have one.
    pub fn beta(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::PowerLaw { beta } | PotentialKind::TruncatedPowerLaw { beta, .. } => Some(beta),
            _ => None,
        }
    }

    /// `g(s)` for `s = θ² ≥ 0`.
    pub fn g_value(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::usage(format!("g is defined for s ≥ 0, got {s}")));
        }
        let value = match &self.kind {
            PotentialKind::PowerLaw { beta } => s.powf(beta / 2.0) / beta,
            PotentialKind::QuadraticPlusQuartic { weights: [a, b] } => a * s / 2.0 + b * s * s / 4.0,
            PotentialKind::TruncatedPowerLaw { beta, zeta } => truncated_g(*beta, *zeta, s.sqrt()),
            PotentialKind::CustomTable(t) => t.integral(s),
        };
        Ok(self.scale * value)
    }

    /// `g'(s)`. Negative arguments are clamped to zero.
    pub fn g_prime(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        let value = match &self.kind {
            PotentialKind::PowerLaw { beta } => {
                if *beta == 2.0 {
                    0.5
                } else {
                    0.5 * s.powf((beta - 2.0) / 2.0)
                }
            }
            PotentialKind::QuadraticPlusQuartic { weights: [a, b] } => a / 2.0 + b * s / 2.0,
            PotentialKind::TruncatedPowerLaw { beta, zeta } => truncated_g_prime(*beta, *zeta, s.sqrt()),
            PotentialKind::CustomTable(t) => t.eval(s),
        };
        self.scale * value
    }

    /// Radius of the dead zone `{r : g'(r²) = 0}` when it is an initial interval.
    pub fn dead_zone(&self) -> Option<f64> {
        match &self.kind {
            PotentialKind::TruncatedPowerLaw { zeta, .. } => Some(*zeta),
            PotentialKind::CustomTable(t) => t.zero_prefix().map(f64::sqrt),
            _ => None,
        }
    }

    /// Classifies the profile on `m`, sampling `g'` on the grid
    /// `(0, min(inj(M), DEFAULT_CHECK_RADIUS))`.
    pub fn classify(&self, m: &ManifoldDescriptor) -> Result<AttractivenessClass> {
        self.classify_within(m, None)
    }

    /// [`classify`](Self::classify) with the grid limited to `r_check`.
    pub fn classify_within(&self, m: &ManifoldDescriptor, r_check: Option<f64>) -> Result<AttractivenessClass> {
        let limit = if m.injectivity_radius.is_finite() {
            r_check.map_or(m.injectivity_radius, |r| r.min(m.injectivity_radius))
        } else {
            r_check.unwrap_or(DEFAULT_CHECK_RADIUS)
        };
        let grid: Vec<f64> = (0..CHECK_GRID).map(|k| limit * (k as f64 + 0.5) / CHECK_GRID as f64).collect();
        let mut zero_prefix = 0;
        let mut other_zero = false;
        for (k, r) in grid.iter().enumerate() {
            let s = r * r;
            let value = self.g_prime(s);
            if value < 0.0 {
                return Err(Error::NotAttractive { s, value });
            }
            if value == 0.0 {
                if zero_prefix == k {
                    zero_prefix += 1;
                } else {
                    other_zero = true;
                }
            }
        }
        if zero_prefix == 0 && !other_zero {
            return Ok(AttractivenessClass::Strong);
        }
        if other_zero || zero_prefix == CHECK_GRID {
            return Ok(AttractivenessClass::AttractiveOnly);
        }
        let zeta = self.dead_zone().unwrap_or(grid[zero_prefix - 1]);
        let bound = radii(m).r_w / 2.0;
        if zeta >= bound {
            return Err(Error::DeadZoneTooLarge { zeta, bound });
        }
        Ok(AttractivenessClass::Weak { zeta })
    }

    /// Checks the (Kc) monotonicity condition for initial support radius `r`:
    /// `θ ↦ θ g'(θ²) / sin(√μ θ)` (`μ > 0`) or `θ ↦ g'(θ²)` (`μ ≤ 0`) must be
    /// non-decreasing on `(0, min(2 r_c, 8 r))`.
    pub fn admissible_kc(&self, m: &ManifoldDescriptor, r: f64) -> Result<bool> {
        let r_c = radii(m).r_c;
        if !(r > 0.0 && r < r_c) {
            return Err(Error::usage(format!("support radius {r} must lie in (0, r_c = {r_c})")));
        }
        let limit = (2.0 * r_c).min(8.0 * r);
        let mu = m.curvature_upper;
        let profile = |theta: f64| {
            let gp = self.g_prime(theta * theta);
            if mu > 0.0 {
                theta / (mu.sqrt() * theta).sin() * gp
            } else {
                gp
            }
        };
        let mut prev = profile(limit / CHECK_GRID as f64 * 0.5);
        for k in 1..CHECK_GRID {
            let cur = profile(limit * (k as f64 + 0.5) / CHECK_GRID as f64);
            if cur < prev - KC_TOLERANCE * prev.abs().max(1.0) {
                return Ok(false);
            }
            prev = cur;
        }
        Ok(true)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 2.0 {
        Ok(())
    } else {
        Err(Error::usage(format!("power-law exponent β = {beta} must be ≥ 2")))
    }
}

fn truncated_g_prime(beta: f64, zeta: f64, r: f64) -> f64 {
    let x = r - zeta;
    if x <= 0.0 {
        0.0
    } else if beta >= 3.0 {
        0.5 * x.powf(beta - 2.0)
    } else {
        0.5 * x.powf(beta - 1.0) / (x + HINGE_SMOOTHING)
    }
}

/// `g(r²) = ∫_ζ^r g'(ρ²) 2ρ dρ = ∫_0^{r−ζ} (x + ζ) h(x) dx` for the hinge `h`.
fn truncated_g(beta: f64, zeta: f64, r: f64) -> f64 {
    let big_x = r - zeta;
    if big_x <= 0.0 {
        return 0.0;
    }
    let eps = HINGE_SMOOTHING;
    if beta >= 3.0 {
        big_x.powf(beta) / beta + zeta * big_x.powf(beta - 1.0) / (beta - 1.0)
    } else if beta == 2.0 {
        // (x² + ζx)/(x + ε) = x + (ζ − ε) − ε(ζ − ε)/(x + ε)
        0.5 * big_x * big_x + (zeta - eps) * big_x - eps * (zeta - eps) * (big_x / eps).ln_1p()
    } else {
        // x = X u² removes the endpoint singularity of x^(β−1).
        gauss_legendre(0.0, 1.0, 64, |u| {
            let x = big_x * u * u;
            (x + zeta) * x.powf(beta - 1.0) / (x + eps) * 2.0 * big_x * u
        })
    }
}

/// Composite 8-point Gauss–Legendre quadrature.
fn gauss_legendre(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    const NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
    const WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in NODES.iter().zip(WEIGHTS) {
            total += w * (f(mid - 0.5 * h * x) + f(mid + 0.5 * h * x));
        }
    }
    0.5 * h * total
}

/// Shape-preserving (Fritsch–Carlson) cubic Hermite interpolant of samples
/// `(s_k, g'(s_k))`, with `s_0 = 0`. Beyond the last sample `g'` is held
/// constant.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneTable {
    s: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// `g(0)`.
    g0: f64,
}

impl MonotoneTable {
    pub fn new(samples: &[(f64, f64)], g0: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::usage("a g' table needs at least two samples"));
        }
        if samples[0].0 != 0.0 {
            return Err(Error::usage("a g' table must start at s = 0"));
        }
        if samples.iter().any(|(s, v)| !s.is_finite() || !v.is_finite()) || !g0.is_finite() {
            return Err(Error::usage("g' table entries must be finite"));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::usage("g' table abscissae must be strictly increasing"));
        }
        let s: Vec<f64> = samples.iter().map(|p| p.0).collect();
        let values: Vec<f64> = samples.iter().map(|p| p.1).collect();
        let n = s.len();
        let h: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (values[k + 1] - values[k]) / h[k]).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = delta[0];
        slopes[n - 1] = delta[n - 2];
        for k in 1..n - 1 {
            if delta[k - 1] * delta[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                slopes[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        Ok(MonotoneTable { s, values, slopes, g0 })
    }

    fn segment(&self, s: f64) -> usize {
        self.s.partition_point(|x| *x <= s).saturating_sub(1).min(self.s.len() - 2)
    }

    fn eval(&self, s: f64) -> f64 {
        let last = self.s.len() - 1;
        if s >= self.s[last] {
            return self.values[last];
        }
        let k = self.segment(s);
        let h = self.s[k + 1] - self.s[k];
        let t = (s - self.s[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.values[k]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[k]
            + (-2.0 * t3 + 3.0 * t2) * self.values[k + 1]
            + (t3 - t2) * h * self.slopes[k + 1]
    }

    /// `∫_{s_k}^{s_k + t h}` of the Hermite cubic on segment `k`.
    fn partial(&self, k: usize, t: f64) -> f64 {
        let h = self.s[k + 1] - self.s[k];
        let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
        h * ((t - t3 + 0.5 * t4) * self.values[k]
            + (0.5 * t2 - 2.0 * t3 / 3.0 + 0.25 * t4) * h * self.slopes[k]
            + (t3 - 0.5 * t4) * self.values[k + 1]
            + (-t3 / 3.0 + 0.25 * t4) * h * self.slopes[k + 1])
    }

    fn integral(&self, s: f64) -> f64 {
        let last = self.s.len() - 1;
        let upto = s.min(self.s[last]);
        let k = self.segment(upto);
        let mut total = self.g0;
        for j in 0..k {
            total += self.partial(j, 1.0);
        }
        let h = self.s[k + 1] - self.s[k];
        total += self.partial(k, (upto - self.s[k]) / h);
        if s > self.s[last] {
            total += (s - self.s[last]) * self.values[last];
        }
        total
    }

    /// Largest sample abscissa such that `g'` vanishes on `[0, s]`.
    fn zero_prefix(&self) -> Option<f64> {
        let k = self.values.iter().take_while(|v| **v == 0.0).count();
        (1..self.values.len()).contains(&k).then(|| self.s[k - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Euclidean, Hyperbolic, Manifold, So3, Sphere};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn so3() -> ManifoldDescriptor {
        So3.descriptor()
    }

    #[test]
    fn power_law_values() {
        let quad = PotentialSpec::power_law(2.0).unwrap();
        assert_eq!(quad.g_value(4.0).unwrap(), 2.0);
        for s in [0.0, 0.3, 4.0, 100.0] {
            assert_eq!(quad.g_prime(s), 0.5);
        }
        let quartic = PotentialSpec::power_law(4.0).unwrap();
        assert_eq!(quartic.g_value(4.0).unwrap(), 4.0);
        assert_eq!(quartic.g_prime(4.0), 2.0);
        assert!(quad.g_value(-1.0).is_err());
    }

    #[test]
    fn truncated_is_continuous_at_the_dead_zone_edge() {
        for beta in [2.0, 2.5, 3.0, 4.0] {
            let p = PotentialSpec::truncated_power_law(beta, 0.3).unwrap();
            let s = 0.09;
            let below = p.g_value(s - 1e-9).unwrap();
            let above = p.g_value(s + 1e-9).unwrap();
            assert_eq!(below, 0.0);
            assert!(above >= 0.0 && above < 1e-9, "beta {beta}: {above}");
            assert_eq!(p.g_prime(s), 0.0);
            assert_eq!(p.g_prime(0.01), 0.0);
            assert!(p.g_prime(0.1) > 0.0);
        }
    }

    #[test]
    fn radii_per_backend() {
        let so3 = radii(&so3());
        assert_abs_diff_eq!(so3.r_w, PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(so3.r_c, PI / 2.0, epsilon = 1e-15);
        let s2 = radii(&Sphere.descriptor());
        assert_abs_diff_eq!(s2.r_w, PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s2.r_c, PI / 4.0, epsilon = 1e-15);
        for m in [Euclidean::new(3).descriptor(), Hyperbolic.descriptor()] {
            let r = radii(&m);
            assert!(r.r_w.is_infinite() && r.r_c.is_infinite());
        }
    }

    #[test]
    fn contraction_constant() {
        assert_eq!(c_mu(&Hyperbolic.descriptor(), 5.0).unwrap(), 1.0);
        assert_eq!(c_mu(&Euclidean::new(2).descriptor(), 0.1).unwrap(), 1.0);
        assert_abs_diff_eq!(c_mu(&so3(), FRAC_PI_4).unwrap(), FRAC_PI_4.sin(), epsilon = 1e-15);
        assert!(c_mu(&so3(), PI / 2.0 - 1e-9).unwrap() < 1e-8);
        assert!(c_mu(&so3(), PI / 2.0).is_err());
        assert!(c_mu(&so3(), 0.0).is_err());
    }

    #[test]
    fn classification() {
        for beta in [2.0, 3.0, 4.0, 8.0] {
            let p = PotentialSpec::power_law(beta).unwrap();
            assert_eq!(p.classify(&so3()).unwrap(), AttractivenessClass::Strong);
        }
        let weak = PotentialSpec::truncated_power_law(3.0, 0.3).unwrap();
        assert_eq!(weak.classify(&so3()).unwrap(), AttractivenessClass::Weak { zeta: 0.3 });
        // ζ must stay below r_w / 2 = π/4 on SO(3)
        let wide = PotentialSpec::truncated_power_law(3.0, 0.9).unwrap();
        assert!(matches!(wide.classify(&so3()), Err(Error::DeadZoneTooLarge { .. })));
    }

    #[test]
    fn repulsive_table_is_rejected() {
        let table = MonotoneTable::new(&[(0.0, -1.0), (1.0, -1.0)], 0.0).unwrap();
        let p = PotentialSpec::custom_table(table);
        assert!(matches!(p.classify(&so3()), Err(Error::NotAttractive { .. })));
    }

    #[test]
    fn kc_condition() {
        let quad = PotentialSpec::power_law(2.0).unwrap();
        assert!(quad.admissible_kc(&so3(), FRAC_PI_4).unwrap());
        for beta in [2.0, 3.0, 8.0] {
            let p = PotentialSpec::power_law(beta).unwrap();
            assert!(p.admissible_kc(&Euclidean::new(2).descriptor(), 1.0).unwrap());
        }
        let weak = PotentialSpec::truncated_power_law(3.0, 0.3).unwrap();
        assert!(weak.admissible_kc(&Euclidean::new(2).descriptor(), 1.0).unwrap());
        // g' decreasing violates the flat-space condition
        let table = MonotoneTable::new(&[(0.0, 2.0), (1.0, 1.0), (4.0, 0.5)], 0.0).unwrap();
        let dec = PotentialSpec::custom_table(table);
        assert!(!dec.admissible_kc(&Euclidean::new(2).descriptor(), 1.0).unwrap());
        assert!(quad.admissible_kc(&so3(), PI / 2.0).is_err());
    }

    #[test]
    fn table_reproduces_linear_data_exactly() {
        // g'(s) = 1 + s is reproduced by the Hermite cubic; g(s) = s + s²/2.
        let samples: Vec<(f64, f64)> = (0..6).map(|k| (k as f64 * 0.5, 1.0 + k as f64 * 0.5)).collect();
        let p = PotentialSpec::custom_table(MonotoneTable::new(&samples, 0.0).unwrap());
        for s in [0.0, 0.2, 1.3, 2.5] {
            assert_abs_diff_eq!(p.g_prime(s), 1.0 + s, epsilon = 1e-14);
            assert_abs_diff_eq!(p.g_value(s).unwrap(), s + s * s / 2.0, epsilon = 1e-14);
        }
        // constant continuation
        assert_abs_diff_eq!(p.g_prime(10.0), 3.5, epsilon = 1e-14);
        assert_abs_diff_eq!(p.g_value(3.0).unwrap(), 2.5 + 3.125 + 0.5 * 3.5, epsilon = 1e-13);
    }

    #[test]
    fn table_with_zero_prefix_is_weak() {
        let table = MonotoneTable::new(&[(0.0, 0.0), (0.04, 0.0), (0.25, 0.3), (1.0, 1.0)], 0.0).unwrap();
        let p = PotentialSpec::custom_table(table);
        assert_abs_diff_eq!(p.dead_zone().unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(p.classify(&so3()).unwrap(), AttractivenessClass::Weak { zeta: 0.2 });
    }

    #[test]
    fn composite_dominates_its_quadratic_part() {
        let p = PotentialSpec::quadratic_plus_quartic([1.0, 1.0]).unwrap();
        let quad = PotentialSpec::power_law(2.0).unwrap();
        for k in 0..1000 {
            let s = k as f64 * 0.01;
            assert!(p.g_prime(s) >= quad.g_prime(s));
        }
        assert_eq!(p.classify(&so3()).unwrap(), AttractivenessClass::Strong);
    }
}
