//! Functionals of ensembles and trajectories.
//!
//! The per-snapshot quantities are collected in [`TimeSeriesRecord`]s by a
//! [`DiagnosticsRecorder`], which is fed every integrator step so that the
//! energy dissipation identity can be checked with step-level finite
//! differences even when only a few snapshots are kept.

use std::collections::VecDeque;
use std::io::Write;

use serde::Serialize;

use crate::dynamics::{velocity_field, ParticleEnsemble, SimulationConfig, Trajectory};
use crate::error::{Error, Result};
use crate::manifold::{frechet_mean, Manifold};
use crate::potential::{c_mu, radii, AttractivenessClass, PotentialSpec};

/// Panels of the composite Simpson rule used for the rate integral.
pub const RATE_PANELS: usize = 10_000;

/// Lower clamp for the rate integral's upper limit `Δ(t)`.
pub const RATE_LOWER_CLAMP: f64 = 1e-12;

/// CSV header of the time-series output.
pub const CSV_HEADER: [&str; 9] = [
    "t",
    "diameter",
    "energy",
    "dissipation_residual",
    "w2_to_mean",
    "consensus_integral",
    "rate_lhs",
    "rate_rhs",
    "weak_functional",
];

/// Largest pairwise distance with the first maximizing pair `(i, j)`, `i < j`,
/// in lexicographic order. A single particle gives `(0.0, (0, 0))`.
pub fn diameter_with_witness<M: Manifold>(e: &ParticleEnsemble<M>) -> (f64, (usize, usize)) {
    let m = e.manifold();
    let pts = e.points();
    let mut best = (0.0, (0, 0));
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = m.distance(&pts[i], &pts[j]);
            if d > best.0 || (i, j) == (0, 1) {
                best = (d, (i, j));
            }
        }
    }
    best
}

/// `Δ = max_{i<j} d(xᵢ, xⱼ)`.
pub fn diameter<M: Manifold>(e: &ParticleEnsemble<M>) -> f64 {
    diameter_with_witness(e).0
}

fn g(p: &PotentialSpec, s: f64) -> f64 {
    p.g_value(s).expect("squared distances are nonnegative")
}

/// `E = ½ Σᵢ Σⱼ mᵢ mⱼ g(d(xᵢ, xⱼ)²)`, diagonal terms `g(0)` included.
pub fn interaction_energy<M: Manifold>(e: &ParticleEnsemble<M>, p: &PotentialSpec) -> f64 {
    let m = e.manifold();
    let (pts, w) = (e.points(), e.masses());
    let g0 = g(p, 0.0);
    let mut diagonal = 0.0;
    let mut off = 0.0;
    for i in 0..pts.len() {
        diagonal += w[i] * w[i] * g0;
        for j in i + 1..pts.len() {
            let d = m.distance(&pts[i], &pts[j]);
            off += w[i] * w[j] * g(p, d * d);
        }
    }
    0.5 * diagonal + off
}

/// `Σᵢ mᵢ ‖vᵢ‖²`, which equals `−dE/dt` along the flow.
pub fn dissipation_rate<M: Manifold>(e: &ParticleEnsemble<M>, p: &PotentialSpec) -> Result<f64> {
    let m = e.manifold();
    let v = velocity_field(e, p)?;
    Ok(e.points().iter().zip(&v).zip(e.masses()).map(|((x, vi), w)| w * m.inner(x, vi, vi)).sum())
}

/// `|dE/dt + Σᵢ mᵢ ‖vᵢ‖²|` for an externally estimated `dE/dt`.
pub fn dissipation_residual<M: Manifold>(e: &ParticleEnsemble<M>, p: &PotentialSpec, de_dt_estimate: f64) -> Result<f64> {
    Ok((de_dt_estimate + dissipation_rate(e, p)?).abs())
}

/// `W₂(ρ, δ_q) = (Σᵢ mᵢ d(xᵢ, q)²)^½`.
pub fn w2_to_delta<M: Manifold>(e: &ParticleEnsemble<M>, q: &M::Point) -> Result<f64> {
    let m = e.manifold();
    let desc = m.descriptor();
    let mut total = 0.0;
    for (x, w) in e.points().iter().zip(e.masses()) {
        let d = m.distance(x, q);
        desc.check_log_distance(d)?;
        total += w * d * d;
    }
    Ok(total.sqrt())
}

/// [`w2_to_delta`] at the Fréchet mean of the ensemble.
pub fn w2_to_mean<M: Manifold>(e: &ParticleEnsemble<M>) -> Result<f64> {
    let q = frechet_mean(e.manifold(), e.points(), e.masses())?;
    w2_to_delta(e, &q)
}

/// `Σᵢ Σⱼ mᵢ mⱼ d(xᵢ, xⱼ)`.
pub fn consensus_integral<M: Manifold>(e: &ParticleEnsemble<M>) -> f64 {
    let m = e.manifold();
    let (pts, w) = (e.points(), e.masses());
    let mut total = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            total += w[i] * w[j] * m.distance(&pts[i], &pts[j]);
        }
    }
    2.0 * total
}

/// `Σ_{d(xᵢ,xⱼ) > ζ} mᵢ mⱼ (g(d²) − g(0))` over ordered pairs.
pub fn weak_functional<M: Manifold>(e: &ParticleEnsemble<M>, p: &PotentialSpec) -> Result<f64> {
    let zeta = p
        .dead_zone()
        .ok_or_else(|| Error::usage("the weak-attraction functional needs a potential with a dead zone"))?;
    let m = e.manifold();
    let (pts, w) = (e.points(), e.masses());
    let g0 = g(p, 0.0);
    let mut total = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = m.distance(&pts[i], &pts[j]);
            if d > zeta {
                total += w[i] * w[j] * (g(p, d * d) - g0);
            }
        }
    }
    Ok(2.0 * total)
}

/// Value of `∫_{from}^{to} dξ / (ξ g'(ξ²/4))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateIntegral {
    pub value: f64,
    /// `to` was below [`RATE_LOWER_CLAMP`] and was replaced by it.
    pub clamped: bool,
}

/// Composite Simpson rule with [`RATE_PANELS`] panels in `u = ln ξ`, where
/// the integrand becomes `1 / g'(e^{2u}/4)`.
///
/// `to = 0` returns `−∞` (the integral diverges for every profile with
/// `g'(0)` finite).
pub fn rate_integral(p: &PotentialSpec, from: f64, to: f64) -> Result<RateIntegral> {
    if !(from > 0.0 && to >= 0.0) {
        return Err(Error::usage(format!("rate integral limits must be positive, got [{from}, {to}]")));
    }
    if to == 0.0 {
        return Ok(RateIntegral { value: f64::NEG_INFINITY, clamped: false });
    }
    let clamped = to < RATE_LOWER_CLAMP;
    let to = to.max(RATE_LOWER_CLAMP);
    if to == from {
        return Ok(RateIntegral { value: 0.0, clamped });
    }
    let (a, b) = (from.ln(), to.ln());
    let h = (b - a) / RATE_PANELS as f64;
    let f = |u: f64| 1.0 / p.g_prime((2.0 * u).exp() / 4.0);
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in 1..RATE_PANELS {
        let y = f(a + k as f64 * h);
        if k % 2 == 1 {
            odd += y;
        } else {
            even += y;
        }
    }
    let value = h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b));
    Ok(RateIntegral { value, clamped })
}

/// One point of the integral rate inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBoundSample {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub clamped: bool,
}

impl RateBoundSample {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack
    }
}

/// `C_μ` when the rate inequality applies to runs with support radius `r`:
/// strongly attractive, (Kc)-admissible, and `r < r_c`.
pub fn rate_constant<M: Manifold>(m: &M, p: &PotentialSpec, r: f64) -> Result<f64> {
    let desc = m.descriptor();
    if p.classify(&desc)? != AttractivenessClass::Strong {
        return Err(Error::usage("the rate bound needs a strongly attractive potential"));
    }
    let r_c = radii(&desc).r_c;
    if !(r < r_c) {
        return Err(Error::usage(format!("support radius {r} must be below r_c = {r_c} for the rate bound")));
    }
    if !p.admissible_kc(&desc, r)? {
        return Err(Error::usage("the potential violates the (Kc) monotonicity condition"));
    }
    c_mu(&desc, r)
}

/// `(t, ∫_{Δ(0)}^{Δ(t)} dξ/(ξ g'(ξ²/4)), −C_μ t)` at every snapshot.
pub fn rate_bound_check<M: Manifold>(traj: &Trajectory<M>, p: &PotentialSpec) -> Result<Vec<RateBoundSample>> {
    let first = traj.states.first().ok_or_else(|| Error::usage("empty trajectory"))?;
    let c = rate_constant(first.manifold(), p, traj.config.ball_radius_r)?;
    let d0 = diameter(first);
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| rate_sample(p, c, d0, *t, diameter(s)))
        .collect()
}

fn rate_sample(p: &PotentialSpec, c: f64, d0: f64, t: f64, d: f64) -> Result<RateBoundSample> {
    let (lhs, clamped) = if d0 == 0.0 {
        (0.0, false)
    } else {
        let r = rate_integral(p, d0, d)?;
        (r.value, r.clamped)
    };
    Ok(RateBoundSample { t, lhs, rhs: -c * t, clamped })
}

/// One CSV row. Missing diagnostics are `None` and written as empty fields.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub diameter: f64,
    pub energy: f64,
    pub dissipation_residual: Option<f64>,
    pub w2_to_mean: Option<f64>,
    pub consensus_integral: f64,
    pub rate_lhs: Option<f64>,
    pub rate_rhs: Option<f64>,
    pub weak_functional: Option<f64>,
}

/// Worst-case checks accumulated over every integrator step of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    /// `max_k E(t_{k+1}) − E(t_k)`; nonpositive for an energy-decreasing run.
    pub max_energy_increase: f64,
    /// Largest dissipation residual divided by `max(1, |dE/dt|)`.
    pub max_relative_residual: f64,
    /// Largest distance of any particle from the ball center.
    pub max_center_distance: f64,
    /// Largest `lhs − rhs` of the rate inequality over the snapshots.
    pub max_rate_excess: Option<f64>,
    /// Whether the rate integral had to clamp `Δ(t)`.
    pub rate_clamped: bool,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    k: usize,
    dissipation: f64,
    record: Option<usize>,
}

/// Points of the energy stencil around step `j` of a run with `n` steps:
/// five consecutive steps, centred on `j` unless it sits next to an end.
fn stencil(j: usize, n: usize) -> std::ops::RangeInclusive<usize> {
    let width = n.min(4);
    let lo = j.saturating_sub(2).min(n - width);
    lo..=lo + width
}

/// Derivative at `ts[j]` of the polynomial interpolating `(ts, es)`.
fn lagrange_derivative(ts: &[f64], es: &[f64], j: usize) -> f64 {
    let x = ts[j];
    let mut sum = 0.0;
    for m in 0..ts.len() {
        let w = if m == j {
            (0..ts.len()).filter(|&l| l != j).map(|l| 1.0 / (x - ts[l])).sum::<f64>()
        } else {
            let num: f64 = (0..ts.len()).filter(|&l| l != m && l != j).map(|l| x - ts[l]).product();
            let den: f64 = (0..ts.len()).filter(|&l| l != m).map(|l| ts[m] - ts[l]).product();
            num / den
        };
        sum += w * es[m];
    }
    sum
}

/// Streaming diagnostics, fed with every step of
/// [`simulate_observed`](crate::dynamics::simulate_observed).
///
/// Energy is evaluated at every step. `dE/dt` at step `k` is the derivative
/// of the quartic through the energies of five neighbouring steps (centred
/// where possible), so the residual is available at interior steps only.
#[derive(Debug)]
pub struct DiagnosticsRecorder<'a, M: Manifold> {
    p: &'a PotentialSpec,
    cfg: &'a SimulationConfig<M::Point>,
    every_step: bool,
    rate_c: Option<f64>,
    weak: bool,
    d0: Option<f64>,
    times: Vec<f64>,
    energies: Vec<f64>,
    pending: VecDeque<Pending>,
    records: Vec<TimeSeriesRecord>,
    summary: RunSummary,
}

impl<'a, M: Manifold> DiagnosticsRecorder<'a, M> {
    /// With `every_step` the dissipation identity is checked at every
    /// interior step, not only at snapshots.
    pub fn new(m: &M, p: &'a PotentialSpec, cfg: &'a SimulationConfig<M::Point>, every_step: bool) -> Self {
        DiagnosticsRecorder {
            p,
            cfg,
            every_step,
            rate_c: rate_constant(m, p, cfg.ball_radius_r).ok(),
            weak: p.dead_zone().is_some(),
            d0: None,
            times: Vec::new(),
            energies: Vec::new(),
            pending: VecDeque::new(),
            records: Vec::new(),
            summary: RunSummary::default(),
        }
    }

    pub fn observe(&mut self, k: usize, t: f64, e: &ParticleEnsemble<M>) -> Result<()> {
        let energy = interaction_energy(e, self.p);
        self.summary.steps = k;
        self.summary.max_center_distance = self.summary.max_center_distance.max(e.max_distance_from(&self.cfg.center));

        if let Some(&last) = self.energies.last() {
            let increase = energy - last;
            if k == 1 || increase > self.summary.max_energy_increase {
                self.summary.max_energy_increase = increase;
            }
        }
        self.times.push(t);
        self.energies.push(energy);

        let snapshot = self.cfg.is_snapshot(k);
        let interior = k > 0 && k < self.cfg.step_count();
        let dissipation =
            if interior && (snapshot || self.every_step) { Some(dissipation_rate(e, self.p)?) } else { None };
        let record = if snapshot {
            let rec = self.record(t, energy, e)?;
            self.records.push(rec);
            Some(self.records.len() - 1)
        } else {
            None
        };
        if let Some(dissipation) = dissipation {
            self.pending.push_back(Pending { k, dissipation, record });
        }
        self.resolve(k);
        Ok(())
    }

    fn resolve(&mut self, k: usize) {
        let n = self.cfg.step_count();
        while let Some(&p) = self.pending.front() {
            let range = stencil(p.k, n);
            if *range.end() > k {
                break;
            }
            self.pending.pop_front();
            let lo = *range.start();
            let de_dt = lagrange_derivative(&self.times[range.clone()], &self.energies[range], p.k - lo);
            let residual = (de_dt + p.dissipation).abs();
            let relative = residual / de_dt.abs().max(1.0);
            self.summary.max_relative_residual = self.summary.max_relative_residual.max(relative);
            if let Some(idx) = p.record {
                self.records[idx].dissipation_residual = Some(residual);
            }
        }
    }

    fn record(&mut self, t: f64, energy: f64, e: &ParticleEnsemble<M>) -> Result<TimeSeriesRecord> {
        let d = diameter(e);
        let d0 = *self.d0.get_or_insert(d);
        let (rate_lhs, rate_rhs) = match self.rate_c {
            Some(c) => {
                let s = rate_sample(self.p, c, d0, t, d)?;
                self.summary.rate_clamped |= s.clamped;
                let excess = s.lhs - s.rhs;
                self.summary.max_rate_excess = Some(self.summary.max_rate_excess.map_or(excess, |m| m.max(excess)));
                (Some(s.lhs), Some(s.rhs))
            }
            None => (None, None),
        };
        Ok(TimeSeriesRecord {
            t,
            diameter: d,
            energy,
            dissipation_residual: None,
            w2_to_mean: w2_to_mean(e).ok(),
            consensus_integral: consensus_integral(e),
            rate_lhs,
            rate_rhs,
            weak_functional: if self.weak { Some(weak_functional(e, self.p)?) } else { None },
        })
    }

    pub fn records(&self) -> &[TimeSeriesRecord] {
        &self.records
    }

    pub fn finish(self) -> (Vec<TimeSeriesRecord>, RunSummary) {
        (self.records, self.summary)
    }
}

/// Writes records as CSV with the [`CSV_HEADER`] columns and LF line endings.
pub fn write_csv<W: Write>(records: &[TimeSeriesRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    // Debug is the shortest round-trip form and switches to exponent notation
    // for very small or large magnitudes.
    let num = |x: f64| format!("{x:?}");
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in records {
        w.write_record([
            num(r.t),
            num(r.diameter),
            num(r.energy),
            opt(r.dissipation_residual),
            opt(r.w2_to_mean),
            num(r.consensus_integral),
            opt(r.rate_lhs),
            opt(r.rate_rhs),
            opt(r.weak_functional),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Euclidean, So3};
    use approx::assert_abs_diff_eq;

    fn line(xs: &[f64]) -> ParticleEnsemble<Euclidean> {
        let m = Euclidean::new(1);
        ParticleEnsemble::uniform(m, xs.iter().map(|x| vec![*x]).collect()).unwrap()
    }

    #[test]
    fn diameter_cases() {
        assert_eq!(diameter(&line(&[0.4])), 0.0);
        assert_abs_diff_eq!(diameter(&line(&[0.0, 0.7])), 0.7, epsilon = 1e-15);
        let (d, w) = diameter_with_witness(&line(&[0.0, 1.0, -1.0, 1.0]));
        assert_eq!((d, w), (2.0, (1, 2)));
    }

    #[test]
    fn energy_cases() {
        let p = PotentialSpec::power_law(2.0).unwrap();
        assert_abs_diff_eq!(interaction_energy(&line(&[0.0, 1.0]), &p), 0.125, epsilon = 1e-15);
        let shifted = PotentialSpec::quadratic_plus_quartic([1.0, 0.0]).unwrap();
        // g(0) = 0 for both, so coincident points have zero energy
        assert_eq!(interaction_energy(&line(&[0.3, 0.3, 0.3]), &shifted), 0.0);
    }

    #[test]
    fn delta_state_has_zero_functionals() {
        let q = So3::from_axis_angle([0.0, 0.0, 1.0], 0.2);
        let e = ParticleEnsemble::uniform(So3, vec![q; 3]).unwrap();
        let p = PotentialSpec::power_law(3.0).unwrap();
        assert_eq!(consensus_integral(&e), 0.0);
        assert_eq!(w2_to_delta(&e, &q).unwrap(), 0.0);
        assert_eq!(dissipation_residual(&e, &p, 0.0).unwrap(), 0.0);
        assert_eq!(diameter(&e), 0.0);
    }

    #[test]
    fn two_point_values() {
        let e = line(&[-1.0, 1.0]);
        assert_abs_diff_eq!(w2_to_delta(&e, &vec![0.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(consensus_integral(&line(&[0.0, 1.0])), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w2_to_mean(&e).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn weak_functional_cases() {
        let p = PotentialSpec::truncated_power_law(3.0, 0.3).unwrap();
        assert_eq!(weak_functional(&line(&[0.0, 0.25, 0.3]), &p).unwrap(), 0.0);
        let d: f64 = 1.3;
        let expected = 2.0 * 0.25 * (p.g_value(d * d).unwrap() - p.g_value(0.0).unwrap());
        assert_abs_diff_eq!(weak_functional(&line(&[0.0, d]), &p).unwrap(), expected, epsilon = 1e-15);
        // g(1.69) = X³/3 + ζX²/2 with X = 1
        assert_abs_diff_eq!(expected, 0.5 * (1.0 / 3.0 + 0.15), epsilon = 1e-15);
        let strong = PotentialSpec::power_law(2.0).unwrap();
        assert!(weak_functional(&line(&[0.0, 1.0]), &strong).is_err());
    }

    #[test]
    fn quadratic_rate_integral_is_twice_the_log_ratio() {
        let p = PotentialSpec::power_law(2.0).unwrap();
        for (a, b) in [(1.0, 0.5), (1.5, 1e-6), (0.7, 0.7)] {
            let r = rate_integral(&p, a, b).unwrap();
            assert_abs_diff_eq!(r.value, 2.0 * (b / a).ln(), epsilon = 1e-8);
        }
        let r = rate_integral(&p, 1.0, 1e-15).unwrap();
        assert!(r.clamped);
        assert_eq!(rate_integral(&p, 1.0, 0.0).unwrap().value, f64::NEG_INFINITY);
    }

    #[test]
    fn power_rate_integral_matches_antiderivative() {
        // 1/(ξ g'(ξ²/4)) = 2^(β−1) ξ^(1−β)
        for beta in [3.0, 4.0, 8.0] {
            let p = PotentialSpec::power_law(beta).unwrap();
            let (a, b): (f64, f64) = (1.4, 0.05);
            let exact = 2f64.powf(beta - 1.0) * (b.powf(2.0 - beta) - a.powf(2.0 - beta)) / (2.0 - beta);
            let r = rate_integral(&p, a, b).unwrap();
            assert!((r.value - exact).abs() <= 1e-10 * exact.abs(), "beta {beta}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn csv_leaves_missing_fields_empty() {
        let rec = TimeSeriesRecord {
            t: 0.5,
            diameter: 1.0,
            energy: 0.25,
            dissipation_residual: None,
            w2_to_mean: Some(0.5),
            consensus_integral: 0.125,
            rate_lhs: None,
            rate_rhs: None,
            weak_functional: None,
        };
        let mut buf = Vec::new();
        write_csv(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t,diameter,energy,dissipation_residual,w2_to_mean,consensus_integral,rate_lhs,rate_rhs,weak_functional\n\
             0.5,1.0,0.25,,0.5,0.125,,,\n"
        );
    }
}
