//! Decay-rate fits of diameter series and the theoretical rate bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::ManifoldDescriptor;
use crate::potential::{c_mu, PotentialKind, PotentialSpec};

/// Trailing fraction of the run used by default (the last quarter).
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.25;

pub const MIN_WINDOW_SAMPLES: usize = 10;

/// Fits with `r²` below this are flagged as unreliable.
pub const RELIABLE_R_SQUARED: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateModel {
    /// `ln Δ` linear in `t`.
    Exponential,
    /// `ln Δ` linear in `ln t`.
    Power,
}

/// Least-squares line on the trailing window of a diameter series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub model: RateModel,
    pub slope: f64,
    pub intercept: f64,
    /// Time span `(t_start, t_end)` of the samples used.
    pub window: (f64, f64),
    pub r_squared: f64,
    pub samples: usize,
}

impl RateFit {
    pub fn is_reliable(&self) -> bool {
        self.r_squared >= RELIABLE_R_SQUARED
    }
}

/// Semi-log fit `ln Δ ≈ slope · t + intercept`.
pub fn fit_exponential(series: &[(f64, f64)], window_fraction: f64) -> Result<RateFit> {
    fit(series, window_fraction, RateModel::Exponential)
}

/// Log-log fit `ln Δ ≈ slope · ln t + intercept`.
pub fn fit_power(series: &[(f64, f64)], window_fraction: f64) -> Result<RateFit> {
    fit(series, window_fraction, RateModel::Power)
}

fn fit(series: &[(f64, f64)], window_fraction: f64, model: RateModel) -> Result<RateFit> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::usage(format!("window fraction {window_fraction} must lie in (0, 1]")));
    }
    let (Some(first), Some(last)) = (series.first(), series.last()) else {
        return Err(Error::Fit("empty series".into()));
    };
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Fit("sample times must increase strictly".into()));
    }
    let start = last.0 - window_fraction * (last.0 - first.0);
    let window: Vec<(f64, f64)> = series.iter().copied().filter(|(t, _)| *t >= start).collect();
    if window.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::Fit(format!(
            "window holds {} samples, at least {MIN_WINDOW_SAMPLES} are needed",
            window.len()
        )));
    }
    let mut xs = Vec::with_capacity(window.len());
    let mut ys = Vec::with_capacity(window.len());
    for &(t, d) in &window {
        if !(d > 0.0) {
            return Err(Error::Fit(format!(
                "diameter {d} at t = {t} is not positive (consensus reached to machine precision; shrink t_end)"
            )));
        }
        let x = match model {
            RateModel::Exponential => t,
            RateModel::Power if t > 0.0 => t.ln(),
            RateModel::Power => return Err(Error::Fit(format!("log-log fit needs t > 0, got t = {t}"))),
        };
        xs.push(x);
        ys.push(d.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(RateFit {
        model,
        slope,
        intercept,
        window: (window[0].0, window[window.len() - 1].0),
        r_squared,
        samples: window.len(),
    })
}

/// Upper envelope for `Δ(t)` for a power-law potential with
/// `g'(θ²) ≥ α θ^(β−2)`.
///
/// `β = 2`: `Δ(0) e^(−α C_μ t)`.
/// `β > 2`: `Δ(0) (1 + α(β−2)(Δ(0)/2)^(β−2) C_μ t)^(−1/(β−2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePrediction {
    pub model: RateModel,
    pub alpha: f64,
    pub c_mu: f64,
    pub beta: f64,
    pub d0: f64,
}

impl RatePrediction {
    /// `α C_μ` (exponential) or `1/(β−2)` (power): the decay rate guaranteed
    /// by the bound, on the axes of the matching fit.
    pub fn bound_rate(&self) -> f64 {
        match self.model {
            RateModel::Exponential => self.alpha * self.c_mu,
            RateModel::Power => 1.0 / (self.beta - 2.0),
        }
    }

    /// The slope a fit should approach: `−bound_rate()`.
    pub fn exponent(&self) -> f64 {
        -self.bound_rate()
    }

    pub fn envelope(&self, t: f64) -> f64 {
        match self.model {
            RateModel::Exponential => self.d0 * (-self.alpha * self.c_mu * t).exp(),
            RateModel::Power => {
                let q = self.beta - 2.0;
                self.d0 * (1.0 + self.alpha * q * (self.d0 / 2.0).powf(q) * self.c_mu * t).powf(-1.0 / q)
            }
        }
    }
}

/// Rate bound for a power-law potential, with `α = scale / 2` since
/// `g'(θ²) = scale · θ^(β−2) / 2`.
pub fn predicted_rate(p: &PotentialSpec, m: &ManifoldDescriptor, r: f64, d0: f64) -> Result<RatePrediction> {
    let PotentialKind::PowerLaw { beta } = p.kind else {
        return Err(Error::usage("rate predictions are available for power-law potentials only"));
    };
    if !(d0.is_finite() && d0 >= 0.0) {
        return Err(Error::usage(format!("initial diameter {d0} must be nonnegative")));
    }
    let model = if beta == 2.0 { RateModel::Exponential } else { RateModel::Power };
    Ok(RatePrediction { model, alpha: 0.5 * p.scale, c_mu: c_mu(m, r)?, beta, d0 })
}
