//! Particle ensembles, the intrinsic velocity field and the RK4 stepper.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::manifold::{coords, Manifold};
use crate::potential::{radii, PotentialKind, PotentialSpec};

pub const DEFAULT_DT: f64 = 1e-2;
pub const DEFAULT_SNAPSHOT_STRIDE: usize = 10;

/// Slack allowed on the invariant ball before a step is rejected.
pub const BALL_TOLERANCE: f64 = 1e-6;

/// Tolerance on `Σ mᵢ = 1`.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Ensembles smaller than this evaluate the velocity field on one thread.
pub const PARALLEL_THRESHOLD: usize = 16;

/// Weighted point cloud `Σ mᵢ δ_{xᵢ}` on a manifold.
///
/// Masses lie in `(0, 1]` and sum to one; all pairwise distances are below
/// the injectivity radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble<M: Manifold> {
    manifold: M,
    points: Vec<M::Point>,
    masses: Vec<f64>,
}

impl<M: Manifold> ParticleEnsemble<M> {
    pub fn new(manifold: M, points: Vec<M::Point>, masses: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::usage("an ensemble needs at least one particle"));
        }
        if points.len() != masses.len() {
            return Err(Error::usage(format!("{} points but {} masses", points.len(), masses.len())));
        }
        if let Some(m) = masses.iter().find(|m| !(**m > 0.0 && **m <= 1.0)) {
            return Err(Error::usage(format!("mass {m} is outside (0, 1]")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::usage(format!("masses sum to {total}, not 1")));
        }
        let e = ParticleEnsemble { manifold, points, masses };
        e.check_pairwise()?;
        Ok(e)
    }

    /// Equal masses `1/N`.
    pub fn uniform(manifold: M, points: Vec<M::Point>) -> Result<Self> {
        let n = points.len().max(1);
        Self::new(manifold, points, vec![1.0 / n as f64; n])
    }

    pub fn manifold(&self) -> &M {
        &self.manifold
    }

    pub fn points(&self) -> &[M::Point] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn with_points(&self, points: Vec<M::Point>) -> Self {
        ParticleEnsemble { manifold: self.manifold.clone(), points, masses: self.masses.clone() }
    }

    fn check_pairwise(&self) -> Result<()> {
        let desc = self.manifold.descriptor();
        if desc.injectivity_radius.is_infinite() {
            return Ok(());
        }
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                desc.check_log_distance(self.manifold.distance(a, b))?;
            }
        }
        Ok(())
    }

    /// Largest distance from `center` to a particle.
    pub fn max_distance_from(&self, center: &M::Point) -> f64 {
        self.points.iter().map(|x| self.manifold.distance(center, x)).fold(0.0, f64::max)
    }
}

/// Step size, horizon and snapshot cadence of a run, plus the reference ball
/// `B̄_r(center)` that must contain the initial support.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig<P> {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub center: P,
    pub ball_radius_r: f64,
    /// Seed used to draw the initial ensemble; recorded for provenance.
    pub seed: u64,
}

impl<P> SimulationConfig<P> {
    pub fn new(dt: f64, t_end: f64, snapshot_stride: usize, center: P, ball_radius_r: f64) -> Self {
        SimulationConfig { dt, t_end, snapshot_stride, center, ball_radius_r, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Number of RK4 steps. When `t_end` is not a multiple of `dt` the last
    /// step is shortened to land on `t_end`.
    pub fn step_count(&self) -> usize {
        if self.t_end == 0.0 {
            return 0;
        }
        let ratio = self.t_end / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
            rounded as usize
        } else {
            ratio.ceil() as usize
        }
    }

    /// Time after `k` steps.
    pub fn time_at(&self, k: usize) -> f64 {
        if k >= self.step_count() {
            self.t_end
        } else {
            k as f64 * self.dt
        }
    }

    /// Whether step `k` is recorded in a [`Trajectory`].
    pub fn is_snapshot(&self, k: usize) -> bool {
        k % self.snapshot_stride == 0 || k == self.step_count()
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::usage(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::usage(format!("t_end = {} must be nonnegative", self.t_end)));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::usage("snapshot_stride must be at least 1"));
        }
        Ok(())
    }
}

/// Snapshots of a run; `times[0] = 0` and times increase strictly.
#[derive(Debug, Clone)]
pub struct Trajectory<M: Manifold> {
    pub times: Vec<f64>,
    pub states: Vec<ParticleEnsemble<M>>,
    pub config: SimulationConfig<M::Point>,
}

/// `vᵢ = Σ_{j≠i} mⱼ · 2 g'(d(xᵢ, xⱼ)²) · log_{xᵢ} xⱼ`, summed in ascending `j`.
pub fn velocity_field<M: Manifold>(e: &ParticleEnsemble<M>, p: &PotentialSpec) -> Result<Vec<M::Point>> {
    field(&e.manifold, &e.points, &e.masses, p)
}

fn field<M: Manifold>(m: &M, points: &[M::Point], masses: &[f64], p: &PotentialSpec) -> Result<Vec<M::Point>> {
    let n = points.len();
    let desc = m.descriptor();
    // 2 g'(d²) is symmetric, so each unordered pair is evaluated once.
    let mut coupling = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = m.distance(&points[i], &points[j]);
            desc.check_log_distance(d)?;
            let c = 2.0 * p.g_prime(d * d);
            coupling[i * n + j] = c;
            coupling[j * n + i] = c;
        }
    }
    let row = |i: usize| -> Result<M::Point> {
        let x = &points[i];
        let mut v = m.zero_tangent(x);
        for j in 0..n {
            let c = coupling[i * n + j];
            if j == i || c == 0.0 {
                continue;
            }
            coords::axpy(masses[j] * c, &m.log(x, &points[j])?, &mut v);
        }
        Ok(v)
    };
    if n >= PARALLEL_THRESHOLD {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    }
}

/// One classical RK4 step carried out in normal coordinates around each
/// particle.
///
/// Stage points are `exp_x(c·dt·k)`; the velocity found at a stage point `y`
/// is pulled back to `T_x M` through the differential of `log_x` at `y`,
/// and the update is `exp_x(dt/6 (k₁ + 2k₂ + 2k₃ + k₄))`. In flat space this
/// is textbook RK4.
pub fn rk4_step<M: Manifold>(e: &ParticleEnsemble<M>, p: &PotentialSpec, dt: f64) -> Result<ParticleEnsemble<M>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::usage(format!("dt = {dt} must be positive")));
    }
    let m = &e.manifold;
    let x = &e.points;
    let stage = |k: &[M::Point], h: f64| -> Vec<M::Point> {
        x.iter().zip(k).map(|(xi, ki)| m.exp(xi, &coords::scaled(ki, h))).collect()
    };
    let pulled = |y: &[M::Point]| -> Result<Vec<M::Point>> {
        let v = field(m, y, &e.masses, p)?;
        Ok(x.iter().zip(y).zip(&v).map(|((xi, yi), vi)| m.log_differential(xi, yi, vi)).collect())
    };

    let k1 = field(m, x, &e.masses, p)?;
    let k2 = pulled(&stage(&k1, dt / 2.0))?;
    let k3 = pulled(&stage(&k2, dt / 2.0))?;
    let k4 = pulled(&stage(&k3, dt))?;

    let next: Vec<M::Point> = (0..x.len())
        .map(|i| {
            let mut incr = k1[i].clone();
            coords::axpy(2.0, &k2[i], &mut incr);
            coords::axpy(2.0, &k3[i], &mut incr);
            coords::axpy(1.0, &k4[i], &mut incr);
            m.exp(&x[i], &coords::scaled(&incr, dt / 6.0))
        })
        .collect();
    let out = e.with_points(next);
    out.check_pairwise()?;
    Ok(out)
}

/// Runs the stepper and calls `observer(k, t_k, state)` for every step
/// `k = 0..=cfg.step_count()`, including the initial state. Returns the
/// final state.
pub fn simulate_observed<M, F>(
    e0: &ParticleEnsemble<M>,
    p: &PotentialSpec,
    cfg: &SimulationConfig<M::Point>,
    mut observer: F,
) -> Result<ParticleEnsemble<M>>
where
    M: Manifold,
    F: FnMut(usize, f64, &ParticleEnsemble<M>) -> Result<()>,
{
    cfg.validate()?;
    let r_w = radii(&e0.manifold.descriptor()).r_w;
    let r = cfg.ball_radius_r;
    if !(r > 0.0 && r < r_w) {
        return Err(Error::usage(format!("ball radius r = {r} must lie in (0, r_w = {r_w})")));
    }
    let spread = e0.max_distance_from(&cfg.center);
    if spread > r + 1e-12 {
        return Err(Error::usage(format!(
            "initial support reaches distance {spread} from the center, outside the ball of radius {r}"
        )));
    }

    let steps = cfg.step_count();
    let mut state = e0.clone();
    observer(0, 0.0, &state)?;
    for k in 1..=steps {
        let t0 = cfg.time_at(k - 1);
        let t1 = cfg.time_at(k);
        state = rk4_step(&state, p, t1 - t0).map_err(|err| match err {
            Error::Usage(_) => err,
            other => Error::Step { time: t0, reason: other.to_string() },
        })?;
        let spread = state.max_distance_from(&cfg.center);
        if spread > r + BALL_TOLERANCE {
            return Err(Error::Step {
                time: t1,
                reason: format!("a particle left the invariant ball (distance {spread} > r = {r})"),
            });
        }
        observer(k, t1, &state)?;
    }
    Ok(state)
}

/// Runs the stepper and keeps every `snapshot_stride`-th state plus the final one.
pub fn simulate<M: Manifold>(
    e0: &ParticleEnsemble<M>,
    p: &PotentialSpec,
    cfg: &SimulationConfig<M::Point>,
) -> Result<Trajectory<M>> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    simulate_observed(e0, p, cfg, |k, t, state| {
        if cfg.is_snapshot(k) {
            times.push(t);
            states.push(state.clone());
        }
        Ok(())
    })?;
    Ok(Trajectory { times, states, config: cfg.clone() })
}

/// Closed-form pair distance for two particles of mass ½ under a power law.
///
/// The distance obeys `d' = −2 g'(d²) d = −c d^(β−1)` with `c` the potential
/// scale, so `d(t) = d₀ e^(−ct)` for `β = 2` and
/// `d(t) = (d₀^(2−β) + (β−2) c t)^(−1/(β−2))` for `β > 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBodyReference {
    pub d0: f64,
    pub beta: f64,
    pub scale: f64,
}

impl TwoBodyReference {
    pub fn new(d0: f64, p: &PotentialSpec) -> Result<Self> {
        let PotentialKind::PowerLaw { beta } = p.kind else {
            return Err(Error::usage("the two-body reference needs a power-law potential"));
        };
        if !(d0.is_finite() && d0 > 0.0) {
            return Err(Error::usage(format!("initial distance {d0} must be positive")));
        }
        Ok(TwoBodyReference { d0, beta, scale: p.scale })
    }

    pub fn distance_at(&self, t: f64) -> f64 {
        if self.beta == 2.0 {
            self.d0 * (-self.scale * t).exp()
        } else {
            let q = self.beta - 2.0;
            (self.d0.powf(-q) + q * self.scale * t).powf(-1.0 / q)
        }
    }
}
