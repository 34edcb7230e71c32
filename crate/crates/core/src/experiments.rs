//! Preset experiments: consensus on SO(3) for several power laws, and the
//! weak-attraction demo in the plane.

use std::f64::consts::FRAC_PI_4;

use serde::Serialize;

use crate::analysis::{fit_exponential, fit_power, predicted_rate, RateFit, RatePrediction, DEFAULT_WINDOW_FRACTION};
use crate::diagnostics::{diameter, DiagnosticsRecorder, RunSummary, TimeSeriesRecord};
use crate::dynamics::{simulate_observed, velocity_field, ParticleEnsemble, SimulationConfig};
use crate::error::Result;
use crate::manifold::{sample_ball, Coords, Euclidean, Manifold, SamplingScheme, So3};
use crate::potential::PotentialSpec;

/// Everything recorded along one run.
#[derive(Debug, Clone)]
pub struct RunOutput<M: Manifold> {
    pub records: Vec<TimeSeriesRecord>,
    pub summary: RunSummary,
    pub final_state: ParticleEnsemble<M>,
}

impl<M: Manifold> RunOutput<M> {
    pub fn diameter_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.diameter)).collect()
    }
}

/// Simulates with a [`DiagnosticsRecorder`] attached and calls `on_snapshot`
/// for every recorded state.
pub fn run_with_diagnostics<M, F>(
    e0: &ParticleEnsemble<M>,
    p: &PotentialSpec,
    cfg: &SimulationConfig<M::Point>,
    every_step: bool,
    mut on_snapshot: F,
) -> Result<RunOutput<M>>
where
    M: Manifold,
    F: FnMut(f64, &ParticleEnsemble<M>) -> Result<()>,
{
    let mut recorder = DiagnosticsRecorder::new(e0.manifold(), p, cfg, every_step);
    let final_state = simulate_observed(e0, p, cfg, |k, t, state| {
        recorder.observe(k, t, state)?;
        if cfg.is_snapshot(k) {
            on_snapshot(t, state)?;
        }
        Ok(())
    })?;
    let (records, summary) = recorder.finish();
    Ok(RunOutput { records, summary, final_state })
}

pub const FIGURE1_PARTICLES: usize = 40;
pub const FIGURE1_RADIUS: f64 = FRAC_PI_4;
pub const FIGURE1_SEED: u64 = 1;

/// Step size, horizon and snapshot stride of one consensus run on SO(3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figure1Run {
    pub beta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
}

impl Figure1Run {
    /// Target fitted slope: −1 for both fits of β = 2 (semi-log) and β = 3
    /// (log-log), and `−1/(β−2)` otherwise.
    pub fn expected_slope(&self) -> f64 {
        if self.beta == 2.0 {
            -1.0
        } else {
            -1.0 / (self.beta - 2.0)
        }
    }

    /// `[−1.05, −0.95]` for β = 2, `±0.05` around the expected slope otherwise.
    pub fn band(&self) -> (f64, f64) {
        let s = self.expected_slope();
        (s - 0.05, s + 0.05)
    }

    pub fn config(&self, seed: u64) -> SimulationConfig<[f64; 4]> {
        SimulationConfig::new(self.dt, self.t_end, self.snapshot_stride, So3.origin(), FIGURE1_RADIUS).with_seed(seed)
    }

    pub fn potential(&self) -> PotentialSpec {
        PotentialSpec::power_law(self.beta).expect("preset exponents are valid")
    }
}

/// The four preset runs β ∈ {2, 3, 4, 8}.
pub fn figure1_runs() -> [Figure1Run; 4] {
    [
        Figure1Run { beta: 2.0, dt: 1e-2, t_end: 15.0, snapshot_stride: 1 },
        Figure1Run { beta: 3.0, dt: 2e-2, t_end: 200.0, snapshot_stride: 10 },
        Figure1Run { beta: 4.0, dt: 2e-2, t_end: 200.0, snapshot_stride: 10 },
        Figure1Run { beta: 8.0, dt: 5e-3, t_end: 100.0, snapshot_stride: 20 },
    ]
}

/// `N` rotations with angle `θ ~ U(0, π/4)` about uniformly drawn
/// polar/azimuthal axes, equal masses.
pub fn figure1_ensemble(n: usize, seed: u64) -> Result<ParticleEnsemble<So3>> {
    let scheme = SamplingScheme::AxisAngle { radius: FIGURE1_RADIUS };
    let points = sample_ball(&So3, &So3.origin(), scheme, seed, n)?;
    ParticleEnsemble::uniform(So3, points)
}

#[derive(Debug, Clone)]
pub struct Figure1Result {
    pub run: Figure1Run,
    pub output: RunOutput<So3>,
    pub fit: RateFit,
    pub prediction: RatePrediction,
}

impl Figure1Result {
    pub fn within_band(&self) -> bool {
        let (lo, hi) = self.run.band();
        self.fit.slope >= lo && self.fit.slope <= hi
    }

    /// Largest `Δ(t) − envelope(t)` over the snapshots.
    pub fn max_envelope_excess(&self) -> f64 {
        self.output
            .records
            .iter()
            .map(|r| r.diameter - self.prediction.envelope(r.t))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Runs one preset and fits the trailing quarter: semi-log for β = 2,
/// log-log otherwise.
pub fn run_figure1<F>(run: &Figure1Run, seed: u64, every_step: bool, on_snapshot: F) -> Result<Figure1Result>
where
    F: FnMut(f64, &ParticleEnsemble<So3>) -> Result<()>,
{
    let e0 = figure1_ensemble(FIGURE1_PARTICLES, seed)?;
    let p = run.potential();
    let cfg = run.config(seed);
    let output = run_with_diagnostics(&e0, &p, &cfg, every_step, on_snapshot)?;
    let series = output.diameter_series();
    let fit = if run.beta == 2.0 {
        fit_exponential(&series, DEFAULT_WINDOW_FRACTION)?
    } else {
        fit_power(&series, DEFAULT_WINDOW_FRACTION)?
    };
    let prediction = predicted_rate(&p, &So3.descriptor(), FIGURE1_RADIUS, diameter(&e0))?;
    Ok(Figure1Result { run: *run, output, fit, prediction })
}

pub const WEAK_ZETA: f64 = 0.3;
pub const WEAK_BETA: f64 = 3.0;
pub const WEAK_PARTICLES: usize = 20;
pub const WEAK_RADIUS: f64 = 1.0;
pub const WEAK_SEED: u64 = 7;
pub const WEAK_DT: f64 = 2e-2;
pub const WEAK_T_END: f64 = 200.0;

pub fn weak_potential() -> PotentialSpec {
    PotentialSpec::truncated_power_law(WEAK_BETA, WEAK_ZETA).expect("preset parameters are valid")
}

/// `N` points in the unit disc, drawn with uniform directions and radii.
pub fn weak_ensemble(n: usize, seed: u64) -> Result<ParticleEnsemble<Euclidean>> {
    let m = Euclidean::new(2);
    let scheme = SamplingScheme::UniformDirection { radius: WEAK_RADIUS };
    let points = sample_ball(&m, &m.origin(), scheme, seed, n)?;
    ParticleEnsemble::uniform(m, points)
}

pub fn weak_config(seed: u64) -> SimulationConfig<Vec<f64>> {
    SimulationConfig::new(WEAK_DT, WEAK_T_END, 50, vec![0.0, 0.0], WEAK_RADIUS).with_seed(seed)
}

/// Whether every particle of `e` has exactly zero velocity.
pub fn is_equilibrium<M: Manifold>(e: &ParticleEnsemble<M>, p: &PotentialSpec) -> Result<bool> {
    Ok(velocity_field(e, p)?.iter().all(|v| v.as_slice().iter().all(|c| *c == 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_consistent() {
        for run in figure1_runs() {
            let (lo, hi) = run.band();
            assert!(lo < run.expected_slope() && run.expected_slope() < hi);
            assert!(run.config(1).step_count() > 0);
        }
        let e = figure1_ensemble(FIGURE1_PARTICLES, FIGURE1_SEED).unwrap();
        assert_eq!(e.len(), 40);
        assert!(e.max_distance_from(&So3.origin()) < FIGURE1_RADIUS);
    }

    #[test]
    fn dead_zone_ensembles_are_equilibria() {
        let p = weak_potential();
        let m = Euclidean::new(2);
        let inside = ParticleEnsemble::uniform(m, vec![vec![0.0, 0.0], vec![0.3, 0.0], vec![0.15, 0.2]]).unwrap();
        assert!(is_equilibrium(&inside, &p).unwrap());
        let outside = ParticleEnsemble::uniform(m, vec![vec![0.0, 0.0], vec![0.31, 0.0]]).unwrap();
        assert!(!is_equilibrium(&outside, &p).unwrap());
    }
}
